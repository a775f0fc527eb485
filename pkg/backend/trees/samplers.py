"""Eager samplers for the three tree measures."""
from __future__ import annotations

from .arena import MeasureKind, TreeArena


def sample_gw(dist, depth: int, source, node_cap=None) -> TreeArena:
    if depth < 0:
        raise ValueError('depth must be >= 0')
    tree = TreeArena(dist, MeasureKind.GW, node_cap)
    tree.expand_below(tree.root, depth, source)
    return tree


def sample_igw(dist, ancestor_depth: int, subtree_depth: int, source, node_cap=None) -> TreeArena:
    """Root with an ordinary GW subtree plus ``ancestor_depth`` size-biased ray ancestors.

    Every off-ray subtree is expanded down to absolute level ``subtree_depth``.
    """
    if ancestor_depth < 0 or subtree_depth < 0:
        raise ValueError('depths must be >= 0')
    tree = TreeArena(dist, MeasureKind.IGW, node_cap)
    for _ in range(ancestor_depth):
        tree.grow_ancestor(source)
    tree.expand_below(tree.top, subtree_depth, source)
    return tree


def sample_spine_q(dist, depth: int, source, node_cap=None) -> TreeArena:
    if depth < 1:
        raise ValueError('depth must be >= 1')
    tree = TreeArena(dist, MeasureKind.SPINE_Q, node_cap)
    tree.expand_below(tree.root, depth, source)
    return tree
