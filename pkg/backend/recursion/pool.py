"""Population of virtual Galton-Watson subtrees for deep recursion cuts.

A pool of K elements is built level by level from the boundary up: every
element at height h draws its offspring count and picks its children
uniformly among the K elements of height h-1. Each top element is therefore a
genuine tree (siblings may share sub-subtrees) and all requested cuts are
evaluated on that same tree, so β_n(o) is non-increasing in n per element.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from django.conf import settings

from gwlab.exceptions import DomainError, NoConvergence

logger = logging.getLogger(__name__)


class SubtreePool:
    """Per top element and per cut c: β_c, γ_c, W_c = Z_c/m^c, and optionally Φ_c(r)."""

    def __init__(self, dist, alpha, cuts, size, generator, track_phi=False):
        cuts = sorted({int(c) for c in cuts})
        if not cuts or cuts[0] < 0:
            raise ValueError('cuts must be non-negative')
        self.dist = dist
        self.alpha = float(alpha)
        self.lam = dist.bias_rate(alpha)
        self.cuts = np.asarray(cuts, dtype=np.int64)
        self.size = int(size)
        self.height = int(self.cuts[-1])
        self.track_phi = track_phi
        self._column = {c: i for i, c in enumerate(cuts)}
        self._build(generator)

    def _build(self, generator):
        K, H, lam, m = self.size, self.height, self.lam, self.dist.mean
        cuts = self.cuts
        width = H + 1 if self.track_phi else 1
        prev_start = int(np.searchsorted(cuts, H))
        ncols = len(cuts) - prev_start
        beta = np.ones((K, ncols))
        gamma = np.zeros((K, ncols))
        w = np.ones((K, ncols))
        phi = self._boundary_phi(K, ncols, width)
        for h in range(1, H + 1):
            start = int(np.searchsorted(cuts, H - h))
            remaining = cuts[start:] - (H - h)
            inner = remaining >= 1
            prev_cols = np.arange(start, len(cuts))[inner] - prev_start

            degree = self.dist.sample_many(generator, K)
            picks = generator.integers(0, K, size=int(degree.sum()))
            offsets = np.concatenate(([0], np.cumsum(degree)[:-1]))

            child_beta = beta[picks][:, prev_cols]
            s = np.add.reduceat(child_beta, offsets, axis=0)
            g = np.add.reduceat(gamma[picks][:, prev_cols], offsets, axis=0)
            ws = np.add.reduceat(w[picks][:, prev_cols], offsets, axis=0)

            ncols = len(remaining)
            beta = np.ones((K, ncols))
            gamma = np.zeros((K, ncols))
            w = np.ones((K, ncols))
            beta[:, inner] = s / (lam + s)
            gamma[:, inner] = (1.0 + g) / (lam + s)
            w[:, inner] = ws / m
            if self.track_phi:
                weight = (1.0 - child_beta) / lam
                child_phi = phi[picks][:, prev_cols, :-1]
                new_phi = self._boundary_phi(K, ncols, width)
                new_phi[:, inner, 1:] = np.add.reduceat(weight[:, :, None] * child_phi, offsets, axis=0)
                phi = new_phi
            prev_start = start
        self.beta = beta
        self.gamma = gamma
        self.w = w
        self.phi = phi if self.track_phi else None
        logger.debug('built pool: K=%d height=%d cuts=%d', K, H, len(cuts))

    @staticmethod
    def _boundary_phi(K, ncols, width):
        phi = np.zeros((K, ncols, width))
        phi[:, :, 0] = 1.0
        return phi

    def column(self, cut) -> int:
        return self._column[int(cut)]

    def beta_at(self, cut) -> np.ndarray:
        return self.beta[:, self.column(cut)]

    def gamma_at(self, cut) -> np.ndarray:
        return self.gamma[:, self.column(cut)]

    def w_at(self, cut) -> np.ndarray:
        return self.w[:, self.column(cut)]

    def b_at(self, cut) -> np.ndarray:
        """B_c(o) = β/(1-β)."""
        beta = self.beta_at(cut)
        with np.errstate(divide='ignore'):
            return beta / (1.0 - beta)

    def big_gamma_at(self, cut) -> np.ndarray:
        """Γ_c(o) = Σ γ_c(children) = γ λ / (1-β) - 1."""
        return self.gamma_at(cut) * self.lam / (1.0 - self.beta_at(cut)) - 1.0

    def phi_at(self, cut) -> np.ndarray:
        """Φ_c(r) for r = 1..c-1, one row per top element."""
        if not self.track_phi:
            raise ValueError('pool was built without Φ tracking')
        return self.phi[:, self.column(cut), 1:int(cut)]


def limit_schedule(n0, cap) -> list[int]:
    cuts = []
    n = int(n0)
    while n <= cap:
        cuts.append(n)
        n *= 2
    return cuts


@dataclass
class LimitReport:
    values: np.ndarray
    depth_used: np.ndarray
    converged: np.ndarray
    w: np.ndarray

    @property
    def converged_fraction(self) -> float:
        return float(self.converged.mean())


def beta_limits(pool: SubtreePool, tol: float) -> LimitReport:
    """Per element: the first doubling at which successive β values differ by < tol."""
    cuts = pool.cuts
    beta = pool.beta
    K = pool.size
    values = beta[:, -1].copy()
    depth_used = np.full(K, cuts[-1])
    converged = np.zeros(K, dtype=bool)
    for i in range(1, len(cuts)):
        fresh = (~converged) & (np.abs(beta[:, i - 1] - beta[:, i]) < tol)
        values[fresh] = beta[fresh, i]
        depth_used[fresh] = cuts[i]
        converged |= fresh
    return LimitReport(values, depth_used, converged, pool.w[:, -1].copy())


def beta_limit(pool: SubtreePool, index: int = 0, tol=None) -> float:
    """Converged β(o) of one pool element; raises NoConvergence at the cap."""
    tol = tol or settings.GWLAB['BETA_TOL']
    report = beta_limits(pool, tol)
    if not report.converged[index]:
        raise NoConvergence(f'β did not settle to {tol} by depth {pool.height}.')
    return float(report.values[index])


def limit_pool(dist, alpha, size, generator, tol=None, n0=None, cap=None):
    """Build limit pools with growing height until every element settles or the cap is hit."""
    if alpha <= 0:
        raise DomainError(f'β(o) is only defined for α > 0, got α={alpha}.')
    tol = tol or settings.GWLAB['BETA_TOL']
    n0 = n0 or settings.GWLAB['BETA_N0']
    cap = cap or settings.GWLAB['BETA_CAP']
    height = min(cap, max(4 * n0, 256))
    while True:
        pool = SubtreePool(dist, alpha, limit_schedule(n0, height), size, generator)
        report = beta_limits(pool, tol)
        if report.converged.all() or height >= cap:
            break
        height = min(cap, height * 4)
    if not report.converged.all():
        logger.warning('alpha=%g: %.2f%% of elements unsettled at depth %d',
                       alpha, 100 * (1 - report.converged_fraction), pool.height)
    return pool, report


class SubtreeDraws:
    """Random top elements of a pool, used to close off explicit trees and spine environments."""

    def __init__(self, pool: SubtreePool, generator, report: LimitReport | None = None):
        self.pool = pool
        self.generator = generator
        self.report = report

    def _pick(self, count):
        return self.generator.integers(0, self.pool.size, size=count)

    def draw(self, cut, count):
        """(β_cut, γ_cut, W_cut) of ``count`` random elements."""
        idx = self._pick(count)
        col = self.pool.column(cut)
        return self.pool.beta[idx, col], self.pool.gamma[idx, col], self.pool.w[idx, col]

    def draw_limit(self, count):
        """(β, W) with β converged and W at the deepest cut."""
        idx = self._pick(count)
        return self.report.values[idx], self.report.w[idx]
