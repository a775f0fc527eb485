from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import Mapping

import numpy as np
from django.conf import settings

from .exceptions import (
    DuplicateOffspring,
    NegativeProbability,
    NotNormalized,
    OffspringError,
    SubcriticalMean,
    ZeroOffspringMass,
)

NORMALIZATION_TOL = 1e-12


@dataclass(frozen=True)
class ModelConstants:
    m: float
    m2: float
    edd1: float
    b: float
    d0: float
    c_harmonic: float

    @property
    def einstein_slope(self) -> float:
        """Target of lim v_α/α."""
        return self.d0 / 2.0

    @property
    def escape_slope(self) -> float:
        """Target of lim E[β(o)]/α, equal to D⁰/(2m)."""
        return self.m * (self.m - 1.0) / self.edd1


class AliasTable:
    """Walker/Vose alias table over a finite set of integer values."""

    def __init__(self, values, weights):
        weights = np.asarray(weights, dtype=float)
        size = len(weights)
        scaled = weights * size / weights.sum()
        prob = np.ones(size)
        alias = np.arange(size)
        small = [i for i in range(size) if scaled[i] < 1.0]
        large = [i for i in range(size) if scaled[i] >= 1.0]
        while small and large:
            s, g = small.pop(), large.pop()
            prob[s] = scaled[s]
            alias[s] = g
            scaled[g] -= 1.0 - scaled[s]
            (small if scaled[g] < 1.0 else large).append(g)
        self.size = size
        self.values = np.asarray(values, dtype=np.int64)
        self.prob = prob
        self.alias = alias
        self._values = self.values.tolist()
        self._prob = prob.tolist()
        self._alias_values = self.values[alias].tolist()

    def draw(self, u: float) -> int:
        scaled = u * self.size
        i = int(scaled)
        if scaled - i < self._prob[i]:
            return self._values[i]
        return self._alias_values[i]

    def draw_many(self, generator: np.random.Generator, size) -> np.ndarray:
        scaled = generator.random(size) * self.size
        idx = scaled.astype(np.int64)
        keep = (scaled - idx) < self.prob[idx]
        return np.where(keep, self.values[idx], self.values[self.alias[idx]])


@dataclass(frozen=True)
class OffspringDist:
    """Validated offspring law {p_k}, k >= 1, with finite support."""
    probs: tuple
    _table: AliasTable = field(init=False, repr=False, compare=False)
    _biased_table: AliasTable = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ks, ps = self.ks, self.ps
        object.__setattr__(self, '_table', AliasTable(ks, ps))
        object.__setattr__(self, '_biased_table', AliasTable(ks, ks * ps))

    @classmethod
    def new(cls, probs: Mapping[int, float]) -> OffspringDist:
        max_k = settings.GWLAB['MAX_OFFSPRING']
        cleaned = {}
        for k, p in probs.items():
            if int(k) != k or k < 0:
                raise OffspringError(f'Offspring count {k!r} is not a non-negative integer.')
            p = float(p)
            if p < 0 or math.isnan(p):
                raise NegativeProbability(f'p_{k} = {p} is negative.')
            if k == 0:
                if p > 0:
                    raise ZeroOffspringMass(f'p_0 = {p} > 0; trees with leaves are not supported.')
                continue
            if k > max_k:
                raise OffspringError(f'Offspring count {k} exceeds the supported maximum {max_k}.')
            if p > 0:
                cleaned[int(k)] = p
        total = sum(cleaned.values())
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise NotNormalized(f'Probabilities sum to {total!r}, not 1.')
        mean = sum(k * p for k, p in cleaned.items())
        if mean <= 1.0 + NORMALIZATION_TOL:
            raise SubcriticalMean(f'Mean offspring {mean} must exceed 1.')
        return cls(tuple(sorted(cleaned.items())))

    @classmethod
    def parse(cls, text: str) -> OffspringDist:
        """Parse "k:p,k:p,..." with exact decimal arithmetic."""
        probs = {}
        total = Decimal(0)
        for item in str(text).replace(' ', '').split(','):
            if not item:
                continue
            try:
                k_text, p_text = item.split(':')
                k, p = int(k_text), Decimal(p_text)
            except (ValueError, InvalidOperation):
                raise OffspringError(f'Cannot parse offspring entry {item!r}; expected k:p.')
            if k in probs:
                raise DuplicateOffspring(f'Offspring count {k} given twice.')
            probs[k] = p
            total += p
        if not probs:
            raise OffspringError('Empty offspring law.')
        if total != 1 and abs(total - 1) > Decimal(NORMALIZATION_TOL):
            raise NotNormalized(f'Probabilities sum to {total}, not 1.')
        return cls.new({k: float(p) for k, p in probs.items()})

    def __str__(self):
        return ','.join(f'{k}:{p:g}' for k, p in self.probs)

    @property
    def ks(self) -> np.ndarray:
        return np.array([k for k, _ in self.probs], dtype=np.int64)

    @property
    def ps(self) -> np.ndarray:
        return np.array([p for _, p in self.probs], dtype=float)

    @property
    def mean(self) -> float:
        return float(np.dot(self.ks, self.ps))

    @property
    def is_point_mass(self) -> bool:
        return len(self.probs) == 1

    def constants(self) -> ModelConstants:
        ks, ps = self.ks.astype(float), self.ps
        m = float(np.dot(ks, ps))
        m2 = float(np.dot(ks * ks, ps))
        edd1 = m2 - m
        return ModelConstants(
            m=m,
            m2=m2,
            edd1=edd1,
            b=edd1 / (m * (m - 1.0)),
            d0=2.0 * m * m * (m - 1.0) / edd1,
            c_harmonic=float(np.dot(ps, 1.0 / ks)),
        )

    def size_biased(self) -> OffspringDist:
        ks, ps = self.ks, self.ps
        weights = ks * ps / np.dot(ks, ps)
        return OffspringDist(tuple(zip(ks.tolist(), (weights / weights.sum()).tolist())))

    def bias_rate(self, alpha: float) -> float:
        """λ = m e^{-α}, the jump rate toward the parent."""
        return self.mean * math.exp(-alpha)

    def sample(self, source) -> int:
        return self._table.draw(source.uniform())

    def sample_size_biased(self, source) -> int:
        return self._biased_table.draw(source.uniform())

    def sample_many(self, generator: np.random.Generator, size) -> np.ndarray:
        return self._table.draw_many(generator, size)

    def sample_size_biased_many(self, generator: np.random.Generator, size) -> np.ndarray:
        return self._biased_table.draw_many(generator, size)


def parse_offspring(value) -> OffspringDist:
    if isinstance(value, OffspringDist):
        return value
    if isinstance(value, Mapping):
        return OffspringDist.new(value)
    return OffspringDist.parse(value)
