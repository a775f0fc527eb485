from __future__ import annotations

import logging

from django.conf import settings
from django.db import models

from gwlab.exceptions import ArenaOverflow, NotFrontier

logger = logging.getLogger(__name__)

NO_PARENT = -1


class MeasureKind(models.TextChoices):
    GW = 'GW', 'Galton-Watson'
    IGW = 'IGW', 'Invariant Galton-Watson'
    SPINE_Q = 'SPINE_Q', 'Spine measure Q'


class TreeArena:
    """Lazily grown rooted tree stored as parallel per-node lists.

    ``children[v]`` is None while ``v`` is on the frontier. ``depth`` is the
    horocycle coordinate: 0 at the root, negative on IGW ancestors. Nodes with
    ``biased`` set draw size-biased offspring counts when expanded.
    """

    def __init__(self, dist, kind=MeasureKind.GW, node_cap=None):
        self.dist = dist
        self.kind = MeasureKind(kind)
        self.node_cap = int(node_cap or settings.GWLAB['ARENA_NODE_CAP'])
        self.parent: list[int] = []
        self.children: list[list[int] | None] = []
        self.depth: list[int] = []
        self.on_ray: list[bool] = []
        self.biased: list[bool] = []
        self.root = self._add(
            NO_PARENT, 0,
            on_ray=self.kind != MeasureKind.GW,
            biased=self.kind == MeasureKind.SPINE_Q,
        )
        self.top = self.root

    def __len__(self):
        return len(self.parent)

    def _add(self, parent, depth, on_ray=False, biased=False) -> int:
        node = len(self.parent)
        if node >= self.node_cap:
            logger.warning('arena hit its cap of %d nodes', self.node_cap)
            raise ArenaOverflow(f'Tree arena exceeded {self.node_cap} nodes.')
        self.parent.append(parent)
        self.children.append(None)
        self.depth.append(depth)
        self.on_ray.append(on_ray)
        self.biased.append(biased)
        return node

    def is_frontier(self, node) -> bool:
        return self.children[node] is None

    @property
    def frontier(self) -> set[int]:
        return {v for v, kids in enumerate(self.children) if kids is None}

    def degree(self, node) -> int:
        return len(self.children[node])

    def expand(self, node, source) -> list[int]:
        if self.children[node] is not None:
            raise NotFrontier(f'Node {node} is already expanded.')
        if self.biased[node]:
            count = self.dist.sample_size_biased(source)
        else:
            count = self.dist.sample(source)
        depth = self.depth[node] + 1
        kids = [self._add(node, depth) for _ in range(count)]
        self.children[node] = kids
        if self.kind == MeasureKind.SPINE_Q and self.on_ray[node]:
            spine = kids[int(source.uniform() * count)]
            self.on_ray[spine] = True
            self.biased[spine] = True
        return kids

    def ensure_children(self, node, source) -> list[int]:
        kids = self.children[node]
        if kids is None:
            kids = self.expand(node, source)
        return kids

    def grow_ancestor(self, source) -> int:
        """Attach a size-biased ancestor above the current top of the ray."""
        if self.kind != MeasureKind.IGW:
            raise NotFrontier('Only IGW trees grow ancestors.')
        old_top = self.top
        count = self.dist.sample_size_biased(source)
        new_top = self._add(NO_PARENT, self.depth[old_top] - 1, on_ray=True, biased=True)
        kids = [old_top]
        kids.extend(self._add(new_top, self.depth[old_top]) for _ in range(count - 1))
        self.children[new_top] = kids
        self.parent[old_top] = new_top
        self.top = new_top
        return new_top

    def parent_of(self, node, source) -> int:
        """Parent of ``node``, growing the ray on demand in IGW trees."""
        parent = self.parent[node]
        if parent == NO_PARENT and self.kind == MeasureKind.IGW:
            parent = self.grow_ancestor(source)
        return parent

    def ancestors(self, node) -> list[int]:
        line = []
        parent = self.parent[node]
        while parent != NO_PARENT:
            line.append(parent)
            parent = self.parent[parent]
        return line

    def spine(self) -> list[int]:
        """Marked spine u*_0, u*_1, ... as far as it has been grown."""
        path = [self.root]
        while True:
            kids = self.children[path[-1]]
            if kids is None:
                return path
            marked = [k for k in kids if self.on_ray[k]]
            if not marked:
                return path
            path.append(marked[0])

    def levels(self, node, depth) -> list[list[int]]:
        """Descendants of ``node`` grouped by relative level 0..depth (expanded part only)."""
        rows = [[node]]
        for _ in range(depth):
            nxt = []
            for v in rows[-1]:
                kids = self.children[v]
                if kids is not None:
                    nxt.extend(kids)
            rows.append(nxt)
        return rows

    def expand_below(self, node, to_depth, source) -> None:
        """Expand every frontier descendant of ``node`` above absolute level ``to_depth``."""
        stack = [node]
        while stack:
            v = stack.pop()
            if self.depth[v] >= to_depth:
                continue
            stack.extend(self.ensure_children(v, source))

    def dump(self) -> str:
        """Line-oriented debug dump: "id parent depth on_ray n_children"."""
        lines = []
        for v in range(len(self.parent)):
            kids = self.children[v]
            lines.append(
                f'{v} {self.parent[v]} {self.depth[v]} {int(self.on_ray[v])} '
                f'{-1 if kids is None else len(kids)}'
            )
        return '\n'.join(lines) + '\n'
