"""Monte Carlo checks on the environment process over IGW samples.

Every batch is a set of ray profiles (root, its children, the ray and the
off-ray subtrees summarised by their W values) drawn by one replica stream.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import partial

import numpy as np
from django.conf import settings

from gwlab.exceptions import DomainError
from montecarlo.accumulators import EstimateCI, estimate
from montecarlo.rng import RngStream, stream_label
from montecarlo.runner import collect_replicated
from trees.arena import MeasureKind, TreeArena
from trees.martingales import sample_ray_profiles
from walks.estimators import estimate_velocity
from .density import (
    c_alpha, default_truncation, truncation_bound, v_alpha_closed, z_alpha_estimate, z_alpha_from_ray,
)
from .view import EnvView, generator_apply

logger = logging.getLogger(__name__)

PROFILE_CHUNK = 4096
TEST_FUNCTIONS = ('constant', 'degree', 'w_root', 'capped_z')
EXPLICIT_FUNCTIONS = ('explicit_degree',)
EXPLICIT_SAMPLES = 500


def _batched(task, samples, seed, parallelism, label) -> np.ndarray:
    """Run ``task(size, stream) -> (k, size)`` over equal chunks; returns (k, total)."""
    chunks = max(1, math.ceil(samples / PROFILE_CHUNK))
    size = math.ceil(samples / chunks)
    rows = collect_replicated(partial(task, size), chunks, parallelism, seed,
                              branch=(stream_label(label),))
    rows = rows.reshape(chunks, -1, size)
    return rows.transpose(1, 0, 2).reshape(rows.shape[1], -1)


def _depth(depth):
    return depth or settings.GWLAB['MARTINGALE_DEPTH']


def _z_task(dist, alpha, j_max, depth, size, stream):
    profiles = sample_ray_profiles(dist, j_max, depth, stream.generator(), size)
    return z_alpha_from_ray(profiles.w_ray, alpha)[None, :]


@dataclass
class ZAlphaReport:
    z: EstimateCI
    c_alpha: float
    truncation_error: float
    scaled_median: float

    @property
    def agrees(self) -> bool:
        return self.z.covers(self.c_alpha, slack=self.truncation_error)


def z_alpha_mean(dist, alpha, samples=10000, seed=0, parallelism=1, j_max=None, depth=None) -> ZAlphaReport:
    """⟨Z_α⟩ over IGW trees against C_α, plus the median of |α| Z_α."""
    if alpha >= 0:
        raise DomainError(f'Z_α needs α < 0, got {alpha}.')
    j_max = j_max or default_truncation(alpha)
    task = partial(_z_task, dist, float(alpha), int(j_max), _depth(depth))
    z = _batched(task, samples, seed, parallelism, f'z_alpha:{alpha!r}')[0]
    report = ZAlphaReport(
        z=estimate(z),
        c_alpha=c_alpha(dist, alpha),
        truncation_error=truncation_bound(dist, alpha, j_max),
        scaled_median=float(np.median(abs(alpha) * z)),
    )
    logger.info('alpha=%g: <Z> = %.6f, C = %.6f', alpha, report.z.mean, report.c_alpha)
    return report


def _ancestor_task(dist, js, depth, size, stream):
    profiles = sample_ray_profiles(dist, max(js), depth, stream.generator(), size)
    return profiles.w_ray[:, list(js)].T


def ancestor_moments(dist, js=(0, 1, 2, 5), samples=10000, seed=0, parallelism=1, depth=None) -> dict:
    """j ↦ (⟨W_{-j}⟩, (1-b) m^{-j} + b)."""
    js = tuple(sorted(int(j) for j in js))
    task = partial(_ancestor_task, dist, js, _depth(depth))
    rows = _batched(task, samples, seed, parallelism, 'ancestors')
    b, m = dist.constants().b, dist.mean
    return {j: (estimate(rows[i]), (1.0 - b) * m ** -j + b) for i, j in enumerate(js)}


def _residual_task(dist, alpha, j_max, depth, cap, size, stream):
    profiles = sample_ray_profiles(dist, max(j_max, 1), depth, stream.generator(), size)
    lam = dist.bias_rate(alpha)
    owner = profiles.child_owner
    d = profiles.root_degree.astype(float)
    w = profiles.w_root
    z = z_alpha_from_ray(profiles.w_ray, alpha)
    psi = z / c_alpha(dist, alpha)

    def per_sample(values):
        return np.bincount(owner, weights=values, minlength=size)

    degree = per_sample(profiles.child_degree.astype(float)) - d * d + lam * (profiles.ray_degree[:, 0] - d)
    w_root = per_sample(profiles.child_w) - d * w + lam * (profiles.w_ray[:, 1] - w)
    capped = np.minimum(z, cap)
    z_child = np.minimum(profiles.child_w + math.exp(alpha) * z[owner], cap)
    z_parent = np.minimum(math.exp(-alpha) * (z - w), cap)
    capped_z = per_sample(z_child) - d * capped + lam * (z_parent - capped)
    return np.stack([np.zeros(size), psi * degree, psi * w_root, psi * capped_z])


def _explicit_task(dist, alpha, j_max, depth, size, stream):
    source = stream.source()

    def degree(view):
        return float(view.degree(source))

    values = np.empty(size)
    for i in range(size):
        env = EnvView.of(TreeArena(dist, MeasureKind.IGW))
        residual = generator_apply(env, degree, alpha, source)
        values[i] = z_alpha_estimate(env, alpha, source, j_max, depth).psi * residual
    return values[None, :]


def stationarity_residual(dist, alpha, test_fns=TEST_FUNCTIONS + EXPLICIT_FUNCTIONS, samples=10000, seed=0,
                          parallelism=1, j_max=None, depth=None, cap=1000.0) -> dict:
    """name ↦ estimate of ⟨ψ_α L_α f⟩₀, which vanishes for every bounded f.

    Shifted values use Z(τ_x T) = W_x + e^α Z(T) towards a child and
    Z(τ_parent T) = e^{-α} (Z(T) - W_o) towards the parent. ``explicit_degree``
    repeats the degree residual on grown IGW trees through the shift
    operators, on at most EXPLICIT_SAMPLES trees.
    """
    if alpha >= 0:
        raise DomainError(f'ψ_α needs α < 0, got {alpha}.')
    unknown = set(test_fns) - set(TEST_FUNCTIONS) - set(EXPLICIT_FUNCTIONS)
    if unknown:
        raise ValueError(f'Unknown test functions: {sorted(unknown)}')
    j_max = j_max or default_truncation(alpha)
    table = {}
    if set(test_fns) & set(TEST_FUNCTIONS):
        task = partial(_residual_task, dist, float(alpha), int(j_max), _depth(depth), float(cap))
        rows = _batched(task, samples, seed, parallelism, f'stationarity:{alpha!r}')
        table.update({name: estimate(rows[TEST_FUNCTIONS.index(name)])
                      for name in test_fns if name in TEST_FUNCTIONS})
    if 'explicit_degree' in test_fns:
        task = partial(_explicit_task, dist, float(alpha), int(j_max), _depth(depth))
        rows = _batched(task, min(samples, EXPLICIT_SAMPLES), seed, parallelism, f'explicit:{alpha!r}')
        table['explicit_degree'] = estimate(rows[0])
    return table


@dataclass
class MuInfinityReport:
    c_harmonic: float
    velocity: EstimateCI
    normalization: EstimateCI
    alpha: float
    lam: float

    @property
    def inverse(self) -> float:
        return 1.0 / self.c_harmonic

    @property
    def match(self) -> str:
        """Which of C and 1/C the simulated velocity agrees with."""
        for label, target in (('C', self.c_harmonic), ('1/C', self.inverse)):
            if self.velocity.covers(target, slack=target * self.lam):
                return label
        return 'neither'


def mu_infinity_velocity(dist, samples=10000, seed=0, alpha=8.0, horizon=None, replicas=None,
                         parallelism=1) -> MuInfinityReport:
    """Velocity at large bias against C = Σ p_k/k and its inverse."""
    constants = dist.constants()
    velocity = estimate_velocity(dist, alpha, horizon, replicas, seed, parallelism)
    generator = RngStream(seed, 0, (stream_label('mu_infinity'),)).generator()
    degrees = dist.sample_many(generator, samples)
    normalization = estimate(1.0 / (constants.c_harmonic * degrees))
    report = MuInfinityReport(constants.c_harmonic, velocity, normalization, alpha, dist.bias_rate(alpha))
    logger.info('v at alpha=%g: %.6f matches %s', alpha, velocity.mean, report.match)
    return report


def _singular_task(dist, alpha, j_max, size, stream):
    degrees = dist.sample_many(stream.generator(), (size, j_max - 1))
    log_prod = np.concatenate([np.zeros((size, 1)), np.cumsum(np.log(degrees), axis=1)], axis=1)
    log_rate = math.log(dist.bias_rate(alpha))
    terms = np.exp(log_prod - log_rate * np.arange(j_max))
    return ((1.0 - math.exp(alpha)) * terms.sum(axis=1))[None, :]


def gw_singular_psi_check(dist, alpha, j_max=80, samples=10000, seed=0, parallelism=1) -> tuple[EstimateCI, float]:
    """Mean of (1-e^α) Σ_{j≥1} (m e^{-α})^{1-j} Π_{i<j} d_{-i} over iid GW degrees, and e^{α j_max}."""
    if alpha >= 0:
        raise DomainError(f'ψ needs α < 0, got {alpha}.')
    if j_max < 1:
        raise ValueError('j_max must be >= 1')
    task = partial(_singular_task, dist, float(alpha), int(j_max))
    rows = _batched(task, samples, seed, parallelism, f'singular:{alpha!r}')
    return estimate(rows[0]), math.exp(alpha * j_max)


def _psi_task(dist, alphas, j_max, depth, size, stream):
    profiles = sample_ray_profiles(dist, j_max, depth, stream.generator(), size)
    return np.stack([np.abs(z_alpha_from_ray(profiles.w_ray, a) / c_alpha(dist, a) - 1.0) for a in alphas])


def psi_trend(dist, alphas=(-0.2, -0.1, -0.05), samples=2000, seed=0, parallelism=1, depth=None) -> dict:
    """α ↦ mean |ψ_α - 1| on common trees; shrinks as α ↗ 0."""
    alphas = tuple(sorted(float(a) for a in alphas))
    if alphas[-1] >= 0:
        raise DomainError('ψ_α needs α < 0.')
    j_max = default_truncation(alphas[-1])
    task = partial(_psi_task, dist, alphas, j_max, _depth(depth))
    rows = _batched(task, samples, seed, parallelism, 'psi_trend')
    return {a: estimate(rows[i]) for i, a in enumerate(alphas)}


@dataclass
class SweepRow:
    alpha: float
    c_alpha: float
    v_closed: float
    v_simulated: EstimateCI


def negative_sweep(dist, alphas, horizon=None, replicas=None, seed=0, parallelism=1) -> list[SweepRow]:
    rows = []
    for alpha in alphas:
        v_sim = estimate_velocity(dist, alpha, horizon, replicas, seed, parallelism)
        rows.append(SweepRow(alpha, c_alpha(dist, alpha), v_alpha_closed(dist, alpha), v_sim))
    return rows
