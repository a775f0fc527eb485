"""Escape-probability and hitting-time experiments over random trees.

Each replica builds its own subtree pool from its own stream and reports pool
means, so replicas are independent even though elements inside a pool share
deep structure.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np
from django.conf import settings

from gwlab.exceptions import DomainError
from montecarlo.accumulators import EstimateCI, combined_sigma, estimate
from montecarlo.rng import RngStream, stream_label
from montecarlo.runner import collect_replicated
from walks.estimators import estimate_velocity
from .pool import SubtreePool, limit_pool, limit_schedule

logger = logging.getLogger(__name__)


MIN_POOL_ELEMENTS = 64


def pool_layout(samples, pool_size=None, min_pools=None):
    """(pools, elements per pool) covering ``samples`` tree draws.

    Pools shrink until ``samples`` spreads over ``MIN_POOLS`` independent
    replicas; requests too small for that keep four pools of 64 elements.
    """
    size = pool_size or settings.GWLAB['POOL_SIZE']
    min_pools = min_pools or settings.GWLAB['MIN_POOLS']
    size = int(min(size, max(MIN_POOL_ELEMENTS, math.ceil(samples / min_pools))))
    return max(4, math.ceil(samples / size)), size


def _escape_replica(dist, alpha, size, tol, stream):
    generator = stream.generator()
    pool, report = limit_pool(dist, alpha, size, generator, tol=tol)
    beta = report.values
    y = beta / alpha
    return (
        y.mean(),
        (y ** 2).mean(),
        (report.w ** 2).mean(),
        (beta / (1.0 - beta)).mean(),
        beta.mean(),
        report.converged_fraction,
    )


def _escape_rows(dist, alpha, samples, tol, seed, parallelism, pool_size):
    if alpha <= 0:
        raise DomainError(f'escape experiments need α > 0, got {alpha}.')
    tol = tol or settings.GWLAB['BETA_TOL']
    pools, size = pool_layout(samples, pool_size)
    task = partial(_escape_replica, dist, float(alpha), size, tol)
    rows = collect_replicated(task, pools, parallelism, seed,
                              branch=(stream_label(f'escape:{alpha!r}'),))
    unsettled = 1.0 - rows[:, 5].mean()
    if unsettled > 0.01:
        logger.warning('alpha=%g: %.1f%% of β recursions unsettled', alpha, 100 * unsettled)
    return rows


def escape_linear_response(dist, alphas, samples=10000, tol=None, seed=0, parallelism=1,
                           pool_size=None) -> dict:
    """α ↦ estimate of E[β(o)]/α."""
    table = {}
    for alpha in alphas:
        rows = _escape_rows(dist, alpha, samples, tol, seed, parallelism, pool_size)
        table[alpha] = estimate(rows[:, 0])
        logger.info('E[beta]/alpha at alpha=%g: %.6f', alpha, table[alpha].mean)
    return table


def mean_escape(dist, alpha, samples=10000, tol=None, seed=0, parallelism=1, pool_size=None) -> EstimateCI:
    rows = _escape_rows(dist, alpha, samples, tol, seed, parallelism, pool_size)
    return estimate(rows[:, 4])


@dataclass
class YMoments:
    ey: EstimateCI
    ey2: EstimateCI
    ew2: EstimateCI
    ey_minus_ey2: EstimateCI
    ey_vs_inverse_ew2: float

    @property
    def inverse_ew2(self) -> float:
        return 1.0 / self.ew2.mean


def y_moment_check(dist, alpha, samples=10000, seed=0, parallelism=1, tol=None,
                   pool_size=None) -> YMoments:
    """E[β/α], E[(β/α)²] and ⟨W_o²⟩, which coincide in the small-α limit up to inversion."""
    rows = _escape_rows(dist, alpha, samples, tol, seed, parallelism, pool_size)
    ey, ey2, ew2 = estimate(rows[:, 0]), estimate(rows[:, 1]), estimate(rows[:, 2])
    inverse = 1.0 / ew2.mean
    inverse_ci = EstimateCI(inverse, ew2.stderr * inverse ** 2, ew2.n, 3 * ew2.stderr * inverse ** 2)
    return YMoments(
        ey=ey,
        ey2=ey2,
        ew2=ew2,
        ey_minus_ey2=estimate(rows[:, 0] - rows[:, 1]),
        ey_vs_inverse_ew2=combined_sigma(ey, inverse_ci),
    )


@dataclass
class BoundsCheck:
    e_b: EstimateCI
    lower: float
    upper: float

    @property
    def within(self) -> bool:
        return self.lower - 3 * self.e_b.stderr <= self.e_b.mean <= self.upper + 3 * self.e_b.stderr


def escape_bounds_check(dist, alpha, samples=10000, seed=0, parallelism=1, tol=None,
                        pool_size=None) -> BoundsCheck:
    """E[B] against m(m-1)/E[d(d-1)]·(1-e^{-α}) ≤ E[B] ≤ e^α - 1."""
    rows = _escape_rows(dist, alpha, samples, tol, seed, parallelism, pool_size)
    slope = dist.constants().escape_slope
    return BoundsCheck(estimate(rows[:, 3]), slope * (1.0 - math.exp(-alpha)), math.exp(alpha) - 1.0)


def _gamma_replica(dist, alpha, n, size, stream):
    pool = SubtreePool(dist, alpha, [n], size, stream.generator())
    return pool.gamma_at(n).mean() / n, pool.big_gamma_at(n).mean() / n


@dataclass
class HittingCrossCheck:
    lhs: EstimateCI
    rhs: EstimateCI
    sigma: float
    big_gamma_over_n: EstimateCI
    velocity: EstimateCI
    mean_beta: EstimateCI


def hitting_velocity_crosscheck(dist, alpha, n, samples=10000, seed=0, parallelism=1,
                                horizon=None, replicas=None, pool_size=None) -> HittingCrossCheck:
    """E[γ_n(o)]/n from the recursion against E[β(o)]/v_α with v_α simulated."""
    if alpha <= 0:
        raise DomainError(f'hitting cross-check needs α > 0, got {alpha}.')
    pools, size = pool_layout(samples, pool_size)
    task = partial(_gamma_replica, dist, float(alpha), int(n), size)
    rows = collect_replicated(task, pools, parallelism, seed,
                              branch=(stream_label(f'gamma:{alpha!r}:{n}'),))
    lhs = estimate(rows[:, 0])
    big_gamma = estimate(rows[:, 1])
    beta = mean_escape(dist, alpha, samples, seed=seed, parallelism=parallelism, pool_size=pool_size)
    velocity = estimate_velocity(dist, alpha, horizon, replicas, seed, parallelism)
    ratio = beta.mean / velocity.mean
    stderr = abs(ratio) * math.hypot(beta.stderr / beta.mean, velocity.stderr / velocity.mean)
    rhs = EstimateCI(ratio, stderr, min(beta.n, velocity.n), 3 * stderr)
    return HittingCrossCheck(lhs, rhs, combined_sigma(lhs, rhs), big_gamma, velocity, beta)


def _phi_replica(dist, alpha, n, size, stream):
    pool = SubtreePool(dist, alpha, range(0, n + 1), size, stream.generator(), track_phi=True)
    phi = pool.phi_at(n)
    w = np.stack([pool.w_at(r) for r in range(1, n)], axis=1)
    bound = np.exp(alpha * np.arange(1, n)) * w
    bound_ok = float(np.all(phi <= bound * (1 + 1e-12) + 1e-300))
    identity_gap = float(np.max(np.abs(phi.sum(axis=1) - pool.big_gamma_at(n))))
    return (*phi.mean(axis=0), bound_ok, identity_gap)


@dataclass
class PhiExpectation:
    phi: dict
    bound_ok: bool
    identity_gap: float


def expected_phi(dist, alpha, n, samples=10000, seed=0, parallelism=1, pool_size=None) -> PhiExpectation:
    """E[Φ_n(r)] for r = 1..n-1 over random trees, with the pointwise checks
    Φ_n(r) ≤ e^{αr} W(o, r) and Γ_n(o) = Σ_r Φ_n(r) on every element."""
    if n < 2:
        raise ValueError('n must be >= 2')
    pools, size = pool_layout(samples, pool_size)
    task = partial(_phi_replica, dist, float(alpha), int(n), size)
    rows = collect_replicated(task, pools, parallelism, seed,
                              branch=(stream_label(f'phi:{alpha!r}:{n}'),))
    phi = {r: estimate(rows[:, r - 1]) for r in range(1, n)}
    return PhiExpectation(phi, bool(rows[:, n - 1].all()), float(rows[:, n].max()))


def phi_uniform_bound(dist, alpha, n_max=40, samples=4096, seed=0) -> tuple[float, int, int]:
    """(max E[Φ_n(r)], n, r) over 1 ≤ r < n ≤ n_max on one pool."""
    generator = RngStream(seed, 0, (stream_label(f'phi-sup:{alpha!r}'),)).generator()
    pool = SubtreePool(dist, alpha, range(0, n_max + 1), samples, generator, track_phi=True)
    best = (0.0, 0, 0)
    for n in range(2, n_max + 1):
        means = pool.phi_at(n).mean(axis=0)
        r = int(np.argmax(means))
        if means[r] > best[0]:
            best = (float(means[r]), n, r + 1)
    return best


def beta_trace(dist, alpha, cuts, seed=0, size=256) -> list[tuple[int, float, float]]:
    """(n, β_n(o), γ_n(o)) along the given cuts for one sampled tree."""
    generator = RngStream(seed, 0, (stream_label(f'trace:{alpha!r}'),)).generator()
    pool = SubtreePool(dist, alpha, cuts, size, generator)
    return [(int(c), float(pool.beta_at(c)[0]), float(pool.gamma_at(c)[0])) for c in pool.cuts]


@dataclass
class DecayProfile:
    levels: list
    mean_gap: list
    rate: float
    exceed_fraction: list = field(default_factory=list)

    @property
    def decreasing(self) -> bool:
        return all(a >= b for a, b in zip(self.mean_gap, self.mean_gap[1:]))


def beta_decay_profile(dist, alpha, levels=(8, 16, 32), samples=2048, seed=0, tol=None) -> DecayProfile:
    """Mean β_ℓ(o) - β(o) over trees, with a fitted exponential rate c."""
    tol = tol or settings.GWLAB['BETA_TOL']
    generator = RngStream(seed, 0, (stream_label(f'decay:{alpha!r}'),)).generator()
    cap = settings.GWLAB['BETA_CAP']
    cuts = sorted(set(levels) | set(limit_schedule(min(levels), min(cap, 1024))))
    pool = SubtreePool(dist, alpha, cuts, samples, generator)
    limit = pool.beta[:, -1]
    gaps = [float(np.mean(pool.beta_at(level) - limit)) for level in levels]
    positive = [(level, gap) for level, gap in zip(levels, gaps) if gap > 0]
    rate = math.nan
    if len(positive) >= 2:
        slope, _ = np.polyfit([p[0] for p in positive], np.log([p[1] for p in positive]), 1)
        rate = -float(slope)
    exceed = []
    if not math.isnan(rate):
        exceed = [float(np.mean(pool.beta_at(level) - limit > math.exp(-rate * level))) for level in levels]
    return DecayProfile(list(levels), gaps, rate, exceed)
