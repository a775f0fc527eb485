"""The spine walk S on Z and its random site potentials.

S steps +1 with probability λ/(λ+m²) and -1 otherwise. Each site x carries
a_x = (1/λ) Σ β(v) over the off-spine children v of the spine vertex at x,
and the potential f(x) = (m²+λ) / (m (1 + λ + λ a_x)).
"""
from __future__ import annotations

import math

import numpy as np

REGENERATION_TOL = 1e-12


def spine_step_law(dist, alpha) -> tuple[float, float]:
    lam = dist.bias_rate(alpha)
    m2 = dist.mean ** 2
    return lam / (lam + m2), m2 / (lam + m2)


def spine_drift(dist, alpha) -> float:
    up, down = spine_step_law(dist, alpha)
    return up - down


def default_spine_buffer(dist, alpha) -> int:
    """Smallest K with (λ/m²)^K < 1e-12."""
    ratio = dist.bias_rate(alpha) / dist.mean ** 2
    return int(math.floor(math.log(REGENERATION_TOL) / math.log(ratio))) + 1


class SpineEnv:
    """Site potentials of one environment, sampled on demand and cached.

    ``cut`` is the level cut n of f_n (None for f_∞). Sites with a preset
    value come from a sampled spine tree; all other sites are independent.
    """

    def __init__(self, dist, alpha, draws, generator, cut=None, preset=None):
        self.dist = dist
        self.alpha = float(alpha)
        self.lam = dist.bias_rate(alpha)
        self.m = dist.mean
        self.cut = cut
        self.draws = draws
        self.generator = generator
        self._a = dict(enumerate(preset)) if preset is not None else {}

    @property
    def f_cap(self) -> float:
        """f at a_x = 0, the largest value any site can take."""
        return (self.m ** 2 + self.lam) / (self.m * (1.0 + self.lam))

    def _check(self, x):
        if self.cut is not None and x >= self.cut:
            raise ValueError(f'site {x} is not below the cut {self.cut}')

    def _sample(self, sites):
        off = self.dist.sample_size_biased_many(self.generator, len(sites)) - 1
        if self.cut is None:
            beta, _ = self.draws.draw_limit(int(off.sum()))
            owner = np.repeat(np.arange(len(sites)), off)
            sums = np.bincount(owner, weights=beta, minlength=len(sites))
        else:
            sums = np.array([
                self.draws.draw(self.cut - x - 1, int(k))[0].sum() for x, k in zip(sites, off)
            ])
        for x, value in zip(sites, sums / self.lam):
            self._a[int(x)] = float(value)

    def fill(self, lo, hi) -> None:
        """Make sure every site in [lo, hi) has a sampled value."""
        missing = [x for x in range(lo, hi) if x not in self._a]
        if missing:
            for x in missing:
                self._check(x)
            self._sample(missing)

    def a(self, x) -> float:
        self._check(x)
        if x not in self._a:
            self._sample([int(x)])
        return self._a[x]

    def f(self, x) -> float:
        return (self.m ** 2 + self.lam) / (self.m * (1.0 + self.lam + self.lam * self.a(x)))

    def f_range(self, lo, hi) -> np.ndarray:
        """f(x) for x = lo..hi-1."""
        self.fill(lo, hi)
        a = np.array([self._a[x] for x in range(lo, hi)])
        return (self.m ** 2 + self.lam) / (self.m * (1.0 + self.lam + self.lam * a))


def f_potential(env: SpineEnv, x) -> float:
    return env.f(x)


def sample_steps(generator, p_up, length) -> np.ndarray:
    return np.where(generator.random(length) < p_up, 1, -1)


def regeneration_times(path, buffer) -> np.ndarray:
    """Confirmed n ≥ 1 with S_n ≤ min_{j<n} S_j and S_j < S_n for all j > n.

    A candidate counts only when the recorded path ends at least ``buffer``
    sites below it.
    """
    path = np.asarray(path)
    if path.size < 2:
        return np.zeros(0, dtype=np.int64)
    prefix_min = np.minimum.accumulate(path)
    after = np.full(path.size, np.iinfo(np.int64).min)
    after[:-1] = np.maximum.accumulate(path[::-1])[::-1][1:]
    hits = (path == prefix_min) & (after < path) & (path[-1] <= path - buffer)
    hits[0] = False
    return np.flatnonzero(hits)


def log_products(env: SpineEnv, path) -> np.ndarray:
    """c[t] = Σ_{i<t} log f(S_i), so a block product is exp(c[end] - c[start])."""
    path = np.asarray(path)
    lo, hi = int(path.min()), int(path.max()) + 1
    log_f = np.log(env.f_range(lo, hi))
    steps = log_f[path[:-1] - lo]
    return np.concatenate(([0.0], np.cumsum(steps)))
