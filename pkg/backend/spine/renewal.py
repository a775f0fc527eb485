"""Spine-walk representations of E[Φ_n(r)], E[B_n(o)] and the velocity.

Replicas are subtree pools: each replica builds its own pool, draws one
spine environment per pool element and reports the pool mean, so the
replica means are independent.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import partial

import numpy as np
from django.conf import settings
from scipy.linalg import solve_banded

from gwlab.exceptions import DomainError, PathTooShort, TooFewSamples
from montecarlo.accumulators import EstimateCI, RatioEstimate, combined_sigma, estimate, ratio_ci
from montecarlo.rng import RngStream, stream_label
from montecarlo.runner import collect_replicated
from recursion.experiments import pool_layout
from recursion.pool import SubtreeDraws, SubtreePool, limit_pool
from walks.estimators import estimate_velocity
from .sampler import spine_environment
from .walk import (
    SpineEnv, default_spine_buffer, log_products, regeneration_times, sample_steps, spine_step_law,
)

logger = logging.getLogger(__name__)

PATH_CAP = 1 << 22


def z_exact(env: SpineEnv, r: int, upper: int) -> float:
    """E_0[1{τ(-r) < τ(upper)} Π_{i<τ(-r)} f(S_i)] from the tridiagonal system on (-r, upper)."""
    if r < 1:
        raise ValueError('r must be >= 1')
    if upper <= 0:
        return 0.0
    up, down = spine_step_law(env.dist, env.alpha)
    f = env.f_range(-r + 1, upper)
    bands = np.zeros((3, f.size))
    bands[0, 1:] = -f[:-1] * up
    bands[1] = 1.0
    bands[2, :-1] = -f[1:] * down
    rhs = np.zeros(f.size)
    rhs[0] = f[0] * down
    return float(solve_banded((1, 1), bands, rhs)[r - 1])


def z_inner(env: SpineEnv, r: int, upper: int, replicas: int, generator) -> float:
    """The same functional by running ``replicas`` copies of S to -r or ``upper``."""
    if upper <= 0:
        return 0.0
    up, _ = spine_step_law(env.dist, env.alpha)
    log_f = np.log(env.f_range(-r + 1, upper))
    position = np.zeros(replicas, dtype=np.int64)
    log_weight = np.zeros(replicas)
    value = np.zeros(replicas)
    alive = np.ones(replicas, dtype=bool)
    while alive.any():
        idx = np.flatnonzero(alive)
        log_weight[idx] += log_f[position[idx] + r - 1]
        position[idx] += sample_steps(generator, up, idx.size)
        low = position[idx] == -r
        value[idx[low]] = np.exp(log_weight[idx[low]])
        alive[idx[low | (position[idx] == upper)]] = False
    return float(value.mean())


def _phi_replica(dist, alpha, n, r, size, inner, stream):
    cut = n - r
    if cut <= 0:
        return 0.0
    generator = stream.generator()
    draws = SubtreeDraws(SubtreePool(dist, alpha, range(n), size, generator), generator)
    total = 0.0
    for _ in range(size):
        env, profile = spine_environment(dist, alpha, draws, generator, cut=cut)
        if inner:
            z = z_inner(env, r, cut, inner, generator)
        else:
            z = z_exact(env, r, cut)
        total += z / profile.progeny[0]
    return total / size


def phi_spine_estimate(dist, alpha, n, r, samples=10000, seed=0, parallelism=1, inner=0,
                       pool_size=None) -> EstimateCI:
    """Q[Z_n(r) / M_{n-r}] with Z_n(r) solved exactly per environment (or by ``inner`` walks)."""
    if not 1 <= r <= n:
        raise ValueError('need 1 <= r <= n')
    pools, size = pool_layout(samples, pool_size)
    task = partial(_phi_replica, dist, float(alpha), int(n), int(r), size, int(inner))
    values = collect_replicated(task, pools, parallelism, seed,
                                branch=(stream_label(f'phi_spine:{alpha!r}:{n}:{r}'),))
    return estimate(values)


@dataclass
class SpineBlock:
    path: np.ndarray
    zeta: float
    displacement: int

    @property
    def length(self) -> int:
        return self.path.size - 1


@dataclass
class BlockDecomposition:
    leading: SpineBlock
    blocks: list

    @property
    def zetas(self) -> np.ndarray:
        return np.array([block.zeta for block in self.blocks])


def _split(env, path, times) -> list[SpineBlock]:
    logs = log_products(env, path[: times[-1] + 1])
    bounds = [0, *times.tolist()]
    return [
        SpineBlock(path[s:e + 1], float(math.exp(logs[e] - logs[s])), int(path[e] - path[s]))
        for s, e in zip(bounds, bounds[1:])
    ]


def _extend_to_blocks(env, generator, buffer, blocks):
    up, _ = spine_step_law(env.dist, env.alpha)
    path = np.zeros(1, dtype=np.int64)
    length = 4 * buffer
    while True:
        path = np.concatenate((path, path[-1] + np.cumsum(sample_steps(generator, up, length))))
        times = regeneration_times(path, buffer)
        if times.size >= blocks:
            return path, times
        if path.size > PATH_CAP:
            raise PathTooShort(f'No {blocks} confirmed blocks within {path.size} steps.')
        length = path.size


def _limit_draws(dist, alpha, size, generator, tol):
    pool, report = limit_pool(dist, alpha, size, generator, tol=tol)
    return SubtreeDraws(pool, generator, report), report


def _require_transient(alpha):
    if alpha <= 0:
        raise DomainError(f'renewal estimators need α > 0, got {alpha}.')


def regeneration_blocks(dist, alpha, path_length=20000, buffer=None, seed=0, pool_size=None) -> BlockDecomposition:
    """Hindsight regeneration decomposition of one long S path under f_∞."""
    _require_transient(alpha)
    buffer = buffer or default_spine_buffer(dist, alpha)
    generator = RngStream(seed, 0, (stream_label(f'blocks:{alpha!r}'),)).generator()
    draws, _ = _limit_draws(dist, alpha, pool_size or settings.GWLAB['POOL_SIZE'], generator, None)
    env = SpineEnv(dist, alpha, draws, generator)
    up, _ = spine_step_law(dist, alpha)
    path = np.concatenate(([0], np.cumsum(sample_steps(generator, up, path_length))))
    times = regeneration_times(path, buffer)
    if times.size == 0:
        raise PathTooShort(f'No confirmed regeneration in {path_length} steps.')
    blocks = _split(env, path, times)
    logger.debug('alpha=%g: %d confirmed blocks in %d steps', alpha, len(blocks), path_length)
    return BlockDecomposition(blocks[0], blocks[1:])


def block_lag_correlation(blocks) -> tuple[float, float]:
    """Lag-1 sample correlation of ζ over consecutive blocks and its null stderr 1/√n."""
    zetas = np.array([block.zeta for block in blocks])
    if zetas.size < 3:
        raise TooFewSamples('Lag correlation needs at least three blocks.')
    corr = float(np.corrcoef(zetas[:-1], zetas[1:])[0, 1])
    return corr, 1.0 / math.sqrt(zetas.size - 1)


def sample_r1(dist, alpha, samples=10000, seed=0, buffer=None) -> np.ndarray:
    """First regeneration times R_1 of independent S paths."""
    _require_transient(alpha)
    buffer = buffer or default_spine_buffer(dist, alpha)
    up, _ = spine_step_law(dist, alpha)
    generator = RngStream(seed, 0, (stream_label(f'r1:{alpha!r}'),)).generator()
    out = np.empty(samples, dtype=np.int64)
    for i in range(samples):
        path = np.zeros(1, dtype=np.int64)
        length = 4 * buffer
        while True:
            path = np.concatenate((path, path[-1] + np.cumsum(sample_steps(generator, up, length))))
            times = regeneration_times(path, buffer)
            if times.size:
                out[i] = times[0]
                break
    return out


def r1_exponential_moment(r1, kappa=0.1, checkpoints=5) -> list[tuple[int, float]]:
    """Running means of e^{κ R_1} at geometrically spaced sample counts."""
    r1 = np.asarray(r1, dtype=float)
    running = np.cumsum(np.exp(kappa * r1)) / np.arange(1, r1.size + 1)
    counts = sorted({max(1, r1.size >> k) for k in range(checkpoints)})
    return [(c, float(running[c - 1])) for c in counts]


def _renewal_replica(dist, alpha, size, buffer, tol, stream):
    generator = stream.generator()
    draws, report = _limit_draws(dist, alpha, size, generator, tol)
    rows = np.empty((size, 4))
    for i in range(size):
        env, profile = spine_environment(dist, alpha, draws, generator)
        path, times = _extend_to_blocks(env, generator, buffer, 2)
        first, second = _split(env, path, times[:2])
        rows[i] = (
            first.zeta * profile.beta[1] / profile.progeny[1],
            first.zeta / profile.progeny[0],
            second.zeta,
            second.zeta * abs(second.displacement),
        )
    return (*rows.mean(axis=0), report.values.mean())


@dataclass
class RenewalSummary:
    numerator: EstimateCI
    leading: EstimateCI
    zeta2: EstimateCI
    block_weight: EstimateCI
    mean_beta: EstimateCI
    velocity: RatioEstimate


def renewal_summary(dist, alpha, samples=10000, seed=0, parallelism=1, pool_size=None,
                    buffer=None, tol=None) -> RenewalSummary:
    """Paired spine-walk functionals under Q⊗P with f_∞ potentials.

    numerator = ζ_1 β(u*_1)/M_∞(u*_1), leading = ζ_1/M_∞, zeta2 = ζ_2 and
    block_weight = ζ_2 |S_{R_2} - S_{R_1}|; velocity is m·numerator/leading.
    """
    _require_transient(alpha)
    buffer = buffer or default_spine_buffer(dist, alpha)
    pools, size = pool_layout(samples, pool_size)
    task = partial(_renewal_replica, dist, float(alpha), size, int(buffer), tol)
    rows = collect_replicated(task, pools, parallelism, seed,
                              branch=(stream_label(f'renewal:{alpha!r}'),))
    summary = RenewalSummary(
        numerator=estimate(rows[:, 0]),
        leading=estimate(rows[:, 1]),
        zeta2=estimate(rows[:, 2]),
        block_weight=estimate(rows[:, 3]),
        mean_beta=estimate(rows[:, 4]),
        velocity=ratio_ci(dist.mean * rows[:, 0], rows[:, 1]),
    )
    logger.info('alpha=%g: v_rep=%.6f, E[zeta2]=%.4f', alpha, summary.velocity.corrected, summary.zeta2.mean)
    return summary


def velocity_representation(dist, alpha, samples=10000, seed=0, parallelism=1, pool_size=None) -> EstimateCI:
    return renewal_summary(dist, alpha, samples, seed, parallelism, pool_size).velocity.as_estimate()


def renewal_denominator(dist, alpha, samples=10000, seed=0, parallelism=1, pool_size=None) -> EstimateCI:
    return renewal_summary(dist, alpha, samples, seed, parallelism, pool_size).block_weight


def _h_replica(dist, alpha, y_max, size, buffer, tol, stream):
    generator = stream.generator()
    draws, _ = _limit_draws(dist, alpha, size, generator, tol)
    totals = np.zeros(y_max)
    accepted = 0
    for _ in range(size):
        env = SpineEnv(dist, alpha, draws, generator)
        path, times = _extend_to_blocks(env, generator, buffer, 1)
        head = path[: times[0] + 1]
        if head[1:].max() >= 1:
            continue
        accepted += 1
        logs = log_products(env, head)
        reach = min(y_max, -int(head.min()))
        first_hit = np.searchsorted(-np.minimum.accumulate(head), np.arange(1, reach + 1))
        totals[:reach] += np.exp(logs[first_hit])
    h = totals / max(accepted, 1)
    return (*h, h.sum(), accepted / size)


@dataclass
class HProfile:
    h: list
    total: EstimateCI
    acceptance: float

    @property
    def means(self) -> np.ndarray:
        return np.array([value.mean for value in self.h])


def h_estimate(dist, alpha, y_max=40, samples=10000, seed=0, parallelism=1, pool_size=None,
               buffer=None, tol=None) -> HProfile:
    """h(y), y = 1..y_max: mean potential product up to τ(-y) ≤ R_1 given that S never reaches 1."""
    if alpha < 0:
        raise DomainError(f'h needs α ≥ 0, got {alpha}.')
    buffer = buffer or default_spine_buffer(dist, alpha)
    pools, size = pool_layout(samples, pool_size)
    task = partial(_h_replica, dist, float(alpha), int(y_max), size, int(buffer), tol)
    rows = collect_replicated(task, pools, parallelism, seed,
                              branch=(stream_label(f'h:{alpha!r}'),))
    return HProfile(
        h=[estimate(rows[:, y]) for y in range(y_max)],
        total=estimate(rows[:, y_max]),
        acceptance=float(rows[:, y_max + 1].mean()),
    )


def _quotient(value, stderr_terms, n) -> EstimateCI:
    stderr = abs(value) * math.sqrt(sum(t * t for t in stderr_terms))
    return EstimateCI(value, stderr, n, 3 * stderr)


@dataclass
class RenewalClosure:
    lhs: EstimateCI
    rhs: EstimateCI
    leading: EstimateCI
    denominator: EstimateCI
    h_total: EstimateCI

    @property
    def sigma(self) -> float:
        return combined_sigma(self.lhs, self.rhs)


def renewal_closure(dist, alpha, samples=10000, seed=0, parallelism=1, horizon=None, replicas=None,
                 y_max=40, pool_size=None) -> RenewalClosure:
    """m E[β]/v_α (simulated v) against Q⊗P[ζ_1/M_∞] Σh / Q⊗P[ζ_2 |ΔS|]."""
    summary = renewal_summary(dist, alpha, samples, seed, parallelism, pool_size)
    profile = h_estimate(dist, alpha, y_max, samples, seed, parallelism, pool_size)
    velocity = estimate_velocity(dist, alpha, horizon, replicas, seed, parallelism)
    beta = summary.mean_beta
    lhs = _quotient(dist.mean * beta.mean / velocity.mean,
                    (beta.stderr / beta.mean, velocity.stderr / velocity.mean), min(beta.n, velocity.n))
    lead, denom, h_total = summary.leading, summary.block_weight, profile.total
    rhs = _quotient(lead.mean * h_total.mean / denom.mean,
                    (lead.stderr / lead.mean, h_total.stderr / h_total.mean, denom.stderr / denom.mean),
                    lead.n)
    return RenewalClosure(lhs, rhs, lead, denom, h_total)


def _sandwich_replica(dist, alpha, n, r, size, stream):
    generator = stream.generator()
    pool = SubtreePool(dist, alpha, range(n + 1), size, generator)
    draws = SubtreeDraws(pool, generator)
    cut = n - r + 1
    factor = dist.mean / dist.bias_rate(alpha)
    upper = lower = 0.0
    for _ in range(size):
        env, profile = spine_environment(dist, alpha, draws, generator, cut=cut)
        value = factor * z_exact(env, r - 1, cut) / profile.progeny[1]
        a1 = profile.a[1]
        upper += value
        lower += value * a1 / (1.0 + a1)
    return pool.b_at(n).mean(), lower / size, upper / size


@dataclass
class SandwichReport:
    e_b: EstimateCI
    lower: EstimateCI
    upper: EstimateCI

    @property
    def holds(self) -> bool:
        low_gap = self.lower.mean - self.e_b.mean
        high_gap = self.e_b.mean - self.upper.mean
        return (low_gap <= 3 * math.hypot(self.lower.stderr, self.e_b.stderr)
                and high_gap <= 3 * math.hypot(self.upper.stderr, self.e_b.stderr))


def escape_sandwich(dist, alpha, n=20, r=10, samples=10000, seed=0, parallelism=1, pool_size=None) -> SandwichReport:
    """(m/λ) Q[Z_n(r-1)/M(u*_1) · a_1/(1+a_1)] ≤ E[B_n(o)] ≤ (m/λ) Q[Z_n(r-1)/M(u*_1)]."""
    if not 2 <= r <= n - 1:
        raise ValueError('need 2 <= r <= n - 1')
    pools, size = pool_layout(samples, pool_size)
    task = partial(_sandwich_replica, dist, float(alpha), int(n), int(r), size)
    rows = collect_replicated(task, pools, parallelism, seed,
                              branch=(stream_label(f'sandwich:{alpha!r}:{n}:{r}'),))
    return SandwichReport(estimate(rows[:, 0]), estimate(rows[:, 1]), estimate(rows[:, 2]))


def _infinite_cut_replica(dist, alpha, r, size, tol, stream):
    generator = stream.generator()
    draws, _ = _limit_draws(dist, alpha, size, generator, tol)
    total = 0.0
    for _ in range(size):
        env, profile = spine_environment(dist, alpha, draws, generator)
        total += z_exact(env, r, profile.depth) / profile.progeny[0]
    return total / size


@dataclass
class CutComparison:
    finite: EstimateCI
    infinite: EstimateCI

    @property
    def gap(self) -> float:
        return self.infinite.mean - self.finite.mean


def cut_comparison(dist, alpha, n, r, samples=4096, seed=0, parallelism=1, pool_size=None, tol=None) -> CutComparison:
    """Q[Z_n(r)/M_{n-r}] with f_{n-r} against the same functional with f_∞."""
    _require_transient(alpha)
    finite = phi_spine_estimate(dist, alpha, n, r, samples, seed, parallelism, pool_size=pool_size)
    pools, size = pool_layout(samples, pool_size)
    task = partial(_infinite_cut_replica, dist, float(alpha), int(r), size, tol)
    values = collect_replicated(task, pools, parallelism, seed,
                                branch=(stream_label(f'cut_inf:{alpha!r}:{r}'),))
    return CutComparison(finite, estimate(values))
