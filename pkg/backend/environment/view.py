"""Re-rooted views of a marked tree.

A view keeps the arena untouched and only moves the distinguished vertex, so
the ray of a view is the parent chain of its current vertex and ρ is re-based
on the fly.
"""
from __future__ import annotations

from dataclasses import dataclass

from gwlab.exceptions import NotAdjacent
from trees.arena import NO_PARENT, TreeArena
from trees.martingales import w_estimate


@dataclass(frozen=True, eq=False)
class EnvView:
    tree: TreeArena
    current: int

    @classmethod
    def of(cls, tree) -> EnvView:
        return cls(tree, tree.root)

    def rho(self, node) -> int:
        """Horocycle coordinate of ``node`` with the current vertex at 0."""
        return self.tree.depth[node] - self.tree.depth[self.current]

    def ray(self) -> list[int]:
        return [self.current, *self.tree.ancestors(self.current)]

    def degree(self, source) -> int:
        return len(self.tree.ensure_children(self.current, source))

    def parent(self, source) -> int:
        return self.tree.parent_of(self.current, source)

    def neighbours(self, source) -> tuple[list[int], int]:
        """(children, parent) of the current vertex, grown on demand."""
        return self.tree.ensure_children(self.current, source), self.parent(source)

    def w(self, n):
        return w_estimate(self.tree, self.current, n)

    def __eq__(self, other):
        return isinstance(other, EnvView) and self.tree is other.tree and self.current == other.current

    def __hash__(self):
        return hash((id(self.tree), self.current))


def shift(env: EnvView, x=None, source=None) -> EnvView:
    """τ_x: move the root to the neighbour ``x``.

    ``x=None`` moves to the parent; an IGW ray is grown with ``source`` when
    the current vertex is still its top.
    """
    tree = env.tree
    if x is None:
        x = tree.parent[env.current] if source is None else env.parent(source)
        if x == NO_PARENT:
            raise NotAdjacent(f'{env.current} has no parent to move to.')
        return EnvView(tree, x)
    kids = tree.children[env.current] or ()
    parent = tree.parent[env.current]
    if x not in kids and (parent == NO_PARENT or x != parent):
        raise NotAdjacent(f'{x} is not adjacent to {env.current}.')
    return EnvView(tree, x)


def generator_apply(env: EnvView, fn, alpha, source) -> float:
    """L_α f at ``env``: rate 1 to every child and λ to the parent, each via an explicit shift."""
    lam = env.tree.dist.bias_rate(alpha)
    kids, parent = env.neighbours(source)
    here = fn(env)
    total = sum(fn(shift(env, x)) - here for x in kids)
    if parent != NO_PARENT:
        total += lam * (fn(shift(env, parent)) - here)
    return total
