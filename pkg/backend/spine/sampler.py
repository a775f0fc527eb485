"""Spine environments under Q, drawn from subtree pools.

Below the origin the spine u*_0, u*_1, ... carries size-biased offspring
counts; the off-spine children of u*_j contribute their (β, W) from a pool
at cut n-j-1 (finite cut n) or their converged values (infinite cut, spine
truncated at a fixed depth with β = M = 1 at the bottom).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from django.conf import settings

from .walk import SpineEnv


@dataclass
class SpineProfile:
    """Per spine level j: a_j, the off-spine W sum, β(u*_j) and M(u*_j)."""
    a: np.ndarray
    off_w: np.ndarray
    beta: np.ndarray
    progeny: np.ndarray
    cut: int | None

    @property
    def depth(self) -> int:
        return self.a.size


def sample_spine_profile(dist, alpha, draws, generator, cut=None, depth=None) -> SpineProfile:
    lam, m = dist.bias_rate(alpha), dist.mean
    if cut is None:
        depth = depth or settings.GWLAB['SPINE_DEPTH']
    else:
        depth = int(cut)
    off = dist.sample_size_biased_many(generator, depth) - 1
    if cut is None:
        beta, w = draws.draw_limit(int(off.sum()))
        owner = np.repeat(np.arange(depth), off)
        beta_sum = np.bincount(owner, weights=beta, minlength=depth)
        w_sum = np.bincount(owner, weights=w, minlength=depth)
    else:
        beta_sum = np.zeros(depth)
        w_sum = np.zeros(depth)
        for j in range(depth):
            if off[j]:
                b, _, w = draws.draw(depth - j - 1, int(off[j]))
                beta_sum[j], w_sum[j] = b.sum(), w.sum()
    spine_beta = np.ones(depth + 1)
    progeny = np.ones(depth + 1)
    for j in range(depth - 1, -1, -1):
        s = spine_beta[j + 1] + beta_sum[j]
        spine_beta[j] = s / (lam + s)
        progeny[j] = (progeny[j + 1] + w_sum[j]) / m
    return SpineProfile(beta_sum / lam, w_sum, spine_beta, progeny, cut)


def spine_environment(dist, alpha, draws, generator, cut=None, depth=None) -> tuple[SpineEnv, SpineProfile]:
    """Environment whose sites 0..depth-1 follow a sampled spine tree."""
    profile = sample_spine_profile(dist, alpha, draws, generator, cut, depth)
    env = SpineEnv(dist, alpha, draws, generator, cut=cut, preset=profile.a)
    return env, profile
