from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy import stats

from gwlab.exceptions import TooFewSamples


@dataclass
class MomentAccumulator:
    """Streaming count, mean and squared-deviation sum (Welford)."""
    n: int = 0
    mean: float = 0.0
    m2: float = 0.0
    min: float = math.inf
    max: float = -math.inf

    def push(self, value: float) -> None:
        value = float(value)
        self.n += 1
        delta = value - self.mean
        self.mean += delta / self.n
        self.m2 += delta * (value - self.mean)
        self.min = min(self.min, value)
        self.max = max(self.max, value)

    def merge(self, other: MomentAccumulator) -> MomentAccumulator:
        if other.n == 0:
            return MomentAccumulator(self.n, self.mean, self.m2, self.min, self.max)
        if self.n == 0:
            return MomentAccumulator(other.n, other.mean, other.m2, other.min, other.max)
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * other.n / n
        m2 = self.m2 + other.m2 + delta * delta * self.n * other.n / n
        return MomentAccumulator(n, mean, m2, min(self.min, other.min), max(self.max, other.max))

    @property
    def variance(self) -> float:
        return self.m2 / (self.n - 1) if self.n > 1 else math.nan

    @property
    def stderr(self) -> float:
        # NaN is the "n<2" sentinel
        return math.sqrt(self.m2 / (self.n * (self.n - 1))) if self.n > 1 else math.nan

    @classmethod
    def of(cls, values: Iterable[float]) -> MomentAccumulator:
        acc = cls()
        for value in values:
            acc.push(value)
        return acc


def reduce_ordered(accumulators: list[MomentAccumulator]) -> MomentAccumulator:
    """Pairwise merge tree over accumulators kept in replica-id order."""
    if not accumulators:
        return MomentAccumulator()
    level = list(accumulators)
    while len(level) > 1:
        merged = [level[i].merge(level[i + 1]) for i in range(0, len(level) - 1, 2)]
        if len(level) % 2:
            merged.append(level[-1])
        level = merged
    return level[0]


def accumulate(values) -> MomentAccumulator:
    return reduce_ordered([MomentAccumulator.of([v]) for v in np.asarray(values, dtype=float).ravel()])


@dataclass(frozen=True)
class EstimateCI:
    mean: float
    stderr: float
    n: int
    half_width: float = math.nan
    level: str = '3sigma'

    @property
    def low(self) -> float:
        return self.mean - self.half_width

    @property
    def high(self) -> float:
        return self.mean + self.half_width

    def sigma_distance(self, target: float, slack: float = 0.0) -> float:
        gap = max(abs(self.mean - target) - slack, 0.0)
        if gap == 0.0:
            return 0.0
        return gap / self.stderr if self.stderr > 0 else math.inf

    def covers(self, target: float, sigmas: float = 3.0, slack: float = 0.0) -> bool:
        return self.sigma_distance(target, slack) <= student_sigmas(sigmas, self.n)

    def scaled(self, factor: float) -> EstimateCI:
        return EstimateCI(self.mean * factor, self.stderr * abs(factor), self.n,
                          self.half_width * abs(factor), self.level)


LEVELS = ('0.95', '0.99', '3sigma')
SMALL_SAMPLE = 30


def z_value(level) -> float:
    if str(level) == '3sigma':
        return 3.0
    level = float(level)
    if not 0.0 < level < 1.0:
        raise ValueError(f'Unsupported confidence level {level!r}.')
    return float(stats.norm.ppf(0.5 + level / 2.0))


def student_sigmas(sigmas: float, n: int) -> float:
    """Normal-scale ``sigmas`` as the Student-t quantile of equal coverage with n - 1 degrees of freedom."""
    if n < 2 or n >= SMALL_SAMPLE:
        return sigmas
    return float(stats.t.ppf(stats.norm.cdf(sigmas), n - 1))


def ci(acc: MomentAccumulator, level='3sigma') -> EstimateCI:
    if acc.n < 2:
        raise TooFewSamples(f'Interval needs n >= 2, got n={acc.n}.')
    half = student_sigmas(z_value(level), acc.n) * acc.stderr
    return EstimateCI(acc.mean, acc.stderr, acc.n, half, str(level))


def estimate(values, level='3sigma') -> EstimateCI:
    return ci(accumulate(values), level)


@dataclass(frozen=True)
class RatioEstimate:
    naive: float
    corrected: float
    stderr: float
    n: int

    def as_estimate(self, level='3sigma') -> EstimateCI:
        half = student_sigmas(z_value(level), self.n) * self.stderr
        return EstimateCI(self.corrected, self.stderr, self.n, half, str(level))


def ratio_ci(numerators, denominators, power: float = 1.0) -> RatioEstimate:
    """mean(num) / mean(den)**power with a delete-one jackknife bias correction."""
    num = np.asarray(numerators, dtype=float)
    den = np.asarray(denominators, dtype=float)
    n = num.size
    if n < 2:
        raise TooFewSamples(f'Ratio needs n >= 2, got n={n}.')
    naive = num.mean() / den.mean() ** power
    loo_num = (num.sum() - num) / (n - 1)
    loo_den = (den.sum() - den) / (n - 1)
    loo = loo_num / loo_den ** power
    corrected = n * naive - (n - 1) * loo.mean()
    stderr = math.sqrt((n - 1) / n * float(np.sum((loo - loo.mean()) ** 2)))
    return RatioEstimate(float(naive), float(corrected), stderr, n)


def combined_sigma(a: EstimateCI, b: EstimateCI) -> float:
    """Distance between two independent estimates in combined-σ units."""
    spread = math.hypot(a.stderr, b.stderr)
    gap = abs(a.mean - b.mean)
    if gap == 0.0:
        return 0.0
    return gap / spread if spread > 0 else math.inf
