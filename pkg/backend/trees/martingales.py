"""Normalised population martingales W(v, n) and M_n(v).

Exact ratios on sampled arenas, plus population-process samplers that draw
generation sizes from multinomial counts instead of materialising nodes.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from django.conf import settings

from gwlab.exceptions import InsufficientDepth

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MartingaleEstimate:
    value: float
    depth_used: int


def _count_level(tree, node, n) -> int:
    row = [node]
    for level in range(n):
        nxt = []
        for v in row:
            kids = tree.children[v]
            if kids is None:
                raise InsufficientDepth(
                    f'Node {v} at relative level {level} is unexpanded; need {n} levels.'
                )
            nxt.extend(kids)
        row = nxt
    return len(row)


def w_estimate(tree, v, n) -> MartingaleEstimate:
    """W(v, n) = Z_n(v) / m^n on the sampled tree."""
    m = tree.dist.mean
    return MartingaleEstimate(_count_level(tree, v, n) / m ** n, n)


def w_beyond(tree, v, n, generator, population_cap=None) -> MartingaleEstimate:
    """W(v, n) from the grown part of the arena, with population draws below its frontier.

    A frontier node u at relative level l adds W(u, n - l) / m^l; frontier
    nodes draw ordinary offspring, so ``v`` must not sit above a marked spine.
    """
    m = tree.dist.mean
    total = 0.0
    row = [v]
    for level in range(n):
        nxt = []
        open_nodes = 0
        for u in row:
            kids = tree.children[u]
            if kids is None:
                open_nodes += 1
            else:
                nxt.extend(kids)
        if open_nodes:
            draws = w_samples(tree.dist, n - level, generator, open_nodes, population_cap)
            total += float(draws.values.sum()) / m ** level
        row = nxt
    return MartingaleEstimate(total + len(row) / m ** n, n)


def m_estimate(tree, v, n) -> MartingaleEstimate:
    """M_n(v): progeny of ``v`` at absolute level ``n`` normalised by m^{n-|v|}."""
    gap = n - tree.depth[v]
    if gap < 0:
        raise InsufficientDepth(f'Node {v} lies below level {n}.')
    m = tree.dist.mean
    return MartingaleEstimate(_count_level(tree, v, gap) / m ** gap, n)


@dataclass
class WSamples:
    """Independent W(o, n) draws with the first generation size of each tree."""
    values: np.ndarray
    first: np.ndarray
    half: np.ndarray
    depth_used: np.ndarray

    @property
    def convergence_gap(self) -> float:
        """Mean |W(o, N) - W(o, N/2)|."""
        return float(np.mean(np.abs(self.values - self.half))) if self.values.size else 0.0


def w_samples(dist, n: int, generator, size: int, population_cap=None) -> WSamples:
    """Draw W(o, n) for ``size`` independent GW trees.

    Each generation is a multinomial split of the current population over the
    offspring values. A tree whose population passes ``population_cap`` is
    frozen at that generation.
    """
    cap = population_cap or settings.GWLAB['POPULATION_CAP']
    ks, ps, m = dist.ks, dist.ps, dist.mean
    z = np.ones(size, dtype=np.int64)
    w = np.ones(size)
    first = np.ones(size, dtype=np.int64)
    half = np.ones(size)
    depth_used = np.zeros(size, dtype=np.int64)
    active = np.ones(size, dtype=bool)
    if size == 0:
        return WSamples(w, first, half, depth_used)
    if dist.is_point_mass:
        return WSamples(w, np.full(size, int(ks[0])), half, np.full(size, n))
    for generation in range(1, n + 1):
        if not active.any():
            break
        counts = generator.multinomial(np.where(active, z, 0), ps)
        z_next = counts @ ks
        z = np.where(active, z_next, z)
        w = np.where(active, z / m ** generation, w)
        depth_used = np.where(active, generation, depth_used)
        if generation == 1:
            first = z.copy()
        if generation == n // 2:
            half = w.copy()
        active &= z < cap
    if n == 1:
        half = np.ones(size)
    return WSamples(w, first, half, depth_used)


@dataclass
class RayProfiles:
    """Batch of IGW environments summarised along the ray.

    ``w_ray[:, j]`` approximates W_{-j}; ``ray_degree[:, j-1]`` is the
    size-biased offspring count of v_{-j}; children of the root are stored
    flat with ``child_owner`` pointing at their sample.
    """
    root_degree: np.ndarray
    child_w: np.ndarray
    child_degree: np.ndarray
    child_owner: np.ndarray
    ray_degree: np.ndarray
    w_ray: np.ndarray
    depth: int
    convergence_gap: float

    def __len__(self):
        return self.root_degree.size

    @property
    def w_root(self) -> np.ndarray:
        return self.w_ray[:, 0]


def sample_ray_profiles(dist, j_max: int, depth: int, generator, size: int) -> RayProfiles:
    """IGW ray profiles via m W_{-j} = W_{-j+1} + L_j, L_j the off-ray W sum."""
    m = dist.mean
    root_degree = dist.sample_many(generator, size)
    child_owner = np.repeat(np.arange(size), root_degree)
    children = w_samples(dist, depth - 1, generator, int(root_degree.sum()))
    w_root = np.bincount(child_owner, weights=children.values, minlength=size) / m

    w_ray = np.empty((size, j_max + 1))
    w_ray[:, 0] = w_root
    ray_degree = np.zeros((size, j_max), dtype=np.int64)
    gap = children.convergence_gap
    if j_max:
        ray_degree = dist.sample_size_biased_many(generator, (size, j_max))
        off = (ray_degree - 1).ravel()
        owner = np.repeat(np.arange(size * j_max), off)
        subtrees = w_samples(dist, depth, generator, int(off.sum()))
        off_sum = np.bincount(owner, weights=subtrees.values, minlength=size * j_max).reshape(size, j_max)
        for j in range(1, j_max + 1):
            w_ray[:, j] = (w_ray[:, j - 1] + off_sum[:, j - 1]) / m
        gap = max(gap, subtrees.convergence_gap)
    if gap > 1e-3:
        logger.warning('martingale depth %d leaves mean |W(N)-W(N/2)| = %.2e', depth, gap)
    return RayProfiles(
        root_degree=root_degree,
        child_w=children.values,
        child_degree=children.first,
        child_owner=child_owner,
        ray_degree=ray_degree,
        w_ray=w_ray,
        depth=depth,
        convergence_gap=gap,
    )


def q_progeny(dist, n: int, generator, size: int) -> np.ndarray:
    """M_n(o) under the spine measure Q for ``size`` independent trees."""
    m = dist.mean
    total = np.full(size, m ** -float(n))
    for j in range(n):
        off = dist.sample_size_biased_many(generator, size) - 1
        owner = np.repeat(np.arange(size), off)
        below = w_samples(dist, n - j - 1, generator, int(off.sum()))
        total += np.bincount(owner, weights=below.values, minlength=size) / m ** (j + 1)
    return total
