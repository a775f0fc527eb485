"""Monte Carlo estimators built on the walk engine."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import partial

import numpy as np
from django.conf import settings

from montecarlo.accumulators import EstimateCI, ci, estimate, ratio_ci
from montecarlo.rng import RngStream, stream_label
from montecarlo.runner import collect_replicated, run_replicated
from trees.arena import MeasureKind, TreeArena
from trees.martingales import w_samples
from .engine import Boundary, StopRule, TimeMode, default_buffer, level_regenerations, run

logger = logging.getLogger(__name__)


def _lab(name):
    return settings.GWLAB[name]


def _velocity_replica(dist, alpha, horizon, mode, stream):
    tree = TreeArena(dist, MeasureKind.IGW)
    summary = run(tree, alpha, StopRule.time(horizon), stream.source(), mode=mode)
    return summary.rho_final / horizon


def estimate_velocity(dist, alpha, horizon=None, replicas=None, seed=0, parallelism=1,
                      mode=TimeMode.MEAN_TIME) -> EstimateCI:
    """Mean of ρ(X_t)/t at t = horizon over walks on IGW trees."""
    horizon = horizon or _lab('HORIZON')
    replicas = replicas or _lab('REPLICAS')
    task = partial(_velocity_replica, dist, float(alpha), float(horizon), mode)
    acc = run_replicated(task, replicas, parallelism, seed,
                         branch=(stream_label(f'velocity:{alpha!r}:{mode}'),))
    result = ci(acc)
    logger.info('v(alpha=%g) = %.6f +- %.6f [%d replicas]', alpha, result.mean, result.stderr, replicas)
    return result


def _diffusivity_replica(dist, horizon, stream):
    tree = TreeArena(dist, MeasureKind.IGW)
    summary = run(tree, 0.0, StopRule.time(horizon), stream.source(), mode=TimeMode.EXACT_TIME)
    return summary.rho_final ** 2 / horizon


def estimate_diffusivity(dist, horizon=None, replicas=None, seed=0, parallelism=1) -> EstimateCI:
    """Mean of ρ(X_t)²/t for the unbiased walk; exponential holding times are required."""
    horizon = horizon or _lab('HORIZON')
    replicas = replicas or _lab('REPLICAS')
    task = partial(_diffusivity_replica, dist, float(horizon))
    return ci(run_replicated(task, replicas, parallelism, seed, branch=(stream_label('diffusivity'),)))


def _root_w_moments(dist, depth, replicas, seed):
    generator = RngStream(seed, 0, (stream_label('diffusivity_w'),)).generator()
    m = dist.mean
    degree = dist.sample_many(generator, replicas)
    owner = np.repeat(np.arange(replicas), degree)
    children = w_samples(dist, depth - 1, generator, int(degree.sum()))
    w_root = np.bincount(owner, weights=children.values, minlength=replicas) / m
    w_children_sq = np.bincount(owner, weights=children.values ** 2, minlength=replicas)
    return w_root, w_children_sq


def estimate_diffusivity_w(dist, depth=None, replicas=None, seed=0) -> EstimateCI:
    """⟨m W_o² + Σ_s W_s²⟩ / ⟨W_o²⟩² over the root of IGW trees."""
    depth = depth or _lab('MARTINGALE_DEPTH')
    replicas = replicas or _lab('REPLICAS')
    w_root, w_children_sq = _root_w_moments(dist, depth, replicas, seed)
    numerator = dist.mean * w_root ** 2 + w_children_sq
    return ratio_ci(numerator, w_root ** 2, power=2).as_estimate()


def estimate_w_second_moment(dist, depth=None, replicas=None, seed=0) -> EstimateCI:
    depth = depth or _lab('MARTINGALE_DEPTH')
    replicas = replicas or _lab('REPLICAS')
    w_root, _ = _root_w_moments(dist, depth, replicas, seed)
    return estimate(w_root ** 2)


def _beta_replica(dist, alpha, n, stream):
    tree = TreeArena(dist, MeasureKind.GW)
    summary = run(tree, alpha, StopRule.level(n), stream.source(), boundary=Boundary.ABSORB)
    return 0.0 if summary.absorbed else 1.0


def estimate_beta_mc(dist, alpha, n, replicas=None, seed=0, parallelism=1) -> EstimateCI:
    """Fraction of walks from a fresh vertex that reach n levels below it before leaving it upward."""
    replicas = replicas or _lab('REPLICAS')
    if n <= 0:
        return EstimateCI(1.0, 0.0, replicas, 0.0)
    task = partial(_beta_replica, dist, float(alpha), int(n))
    values = collect_replicated(task, replicas, parallelism, seed,
                                branch=(stream_label(f'beta:{alpha!r}:{n}'),))
    return estimate(values)


def _hitting_replica(dist, alpha, levels, stream):
    tree = TreeArena(dist, MeasureKind.IGW)
    summary = run(tree, alpha, StopRule.level(max(levels)), stream.source(), mode=TimeMode.EXACT_TIME)
    return tuple(summary.tau_levels[level] / level for level in levels)


def estimate_hitting_times(dist, alpha, levels, replicas=None, seed=0, parallelism=1) -> dict:
    """τ_n/n per level, to be compared with 1/v_α (α > 0)."""
    replicas = replicas or _lab('REPLICAS')
    levels = sorted(int(level) for level in levels)
    task = partial(_hitting_replica, dist, float(alpha), tuple(levels))
    values = collect_replicated(task, replicas, parallelism, seed,
                                branch=(stream_label(f'hitting:{alpha!r}'),))
    values = values.reshape(replicas, len(levels))
    return {level: estimate(values[:, i]) for i, level in enumerate(levels)}


@dataclass
class GapReport:
    gaps: np.ndarray
    survival: np.ndarray
    tail_rate: float
    buffer: int


def _regeneration_replica(dist, alpha, horizon, buffer, stream):
    tree = TreeArena(dist, MeasureKind.IGW)
    summary = run(tree, alpha, StopRule.time(horizon), stream.source(), record=True)
    levels = [level for level, _ in level_regenerations(summary, buffer)]
    return np.diff(levels).tolist()


def regeneration_gaps(dist, alpha, horizon=None, replicas=100, seed=0, buffer=None) -> GapReport:
    """Level gaps between confirmed level regenerations and their fitted exponential tail."""
    horizon = horizon or _lab('HORIZON')
    buffer = buffer or default_buffer(dist, alpha)
    gaps = []
    for i in range(replicas):
        stream = RngStream(seed, i, (stream_label(f'regen:{alpha!r}'),))
        gaps.extend(_regeneration_replica(dist, float(alpha), float(horizon), buffer, stream))
    gaps = np.asarray(gaps, dtype=np.int64)
    if gaps.size == 0:
        return GapReport(gaps, np.zeros(0), math.nan, buffer)
    grid = np.arange(1, gaps.max() + 1)
    survival = np.array([(gaps > g).mean() for g in grid])
    usable = survival > 0
    if usable.sum() >= 2:
        slope, _ = np.polyfit(grid[usable], np.log(survival[usable]), 1)
        rate = -float(slope)
    else:
        rate = math.inf
    return GapReport(gaps, survival, rate, buffer)


def velocity_sign_check(dist, alphas, horizon=None, replicas=None, seed=0, parallelism=1) -> list:
    """(alpha, estimate, sign agrees) per α."""
    rows = []
    for alpha in alphas:
        result = estimate_velocity(dist, alpha, horizon, replicas, seed, parallelism)
        rows.append((alpha, result, math.copysign(1.0, result.mean) == math.copysign(1.0, alpha)))
    return rows


def einstein_slope_fit(rows) -> EstimateCI:
    """Least-squares slope through the origin of v_α against α.

    ``rows`` holds (alpha, EstimateCI) pairs; the stderr propagates the
    per-α stderrs, which are independent because every α uses its own branch.
    """
    alphas = np.array([alpha for alpha, _ in rows], dtype=float)
    means = np.array([result.mean for _, result in rows])
    stderrs = np.array([result.stderr for _, result in rows])
    norm = float(np.dot(alphas, alphas))
    if norm == 0.0:
        raise ValueError('slope fit needs at least one non-zero α')
    slope = float(np.dot(alphas, means)) / norm
    stderr = math.sqrt(float(np.dot(alphas ** 2, stderrs ** 2))) / norm
    return EstimateCI(slope, stderr, sum(result.n for _, result in rows), 3 * stderr)
