"""Explicit invariant density ψ_α = Z_α / C_α of the environment process (α < 0).

    Z_α = Σ_{j≥0} e^{jα} W_{-j},   C_α = b/(1-e^α) + (1-b)/(1-e^α/m)
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from django.conf import settings

from gwlab.exceptions import DomainError
from trees.martingales import w_beyond


def _negative(alpha, what):
    if alpha >= 0:
        raise DomainError(f'{what} needs α < 0, got {alpha}.')


def default_truncation(alpha) -> int:
    """Ray terms kept so that e^{α j_max} < 4e-4."""
    return math.ceil(8.0 / abs(alpha))


def truncation_bound(dist, alpha, j_max) -> float:
    b = dist.constants().b
    return b * math.exp(alpha * (j_max + 1)) / (1.0 - math.exp(alpha))


def c_alpha(dist, alpha) -> float:
    _negative(alpha, 'C_α')
    b = dist.constants().b
    q = math.exp(alpha)
    return b / (1.0 - q) + (1.0 - b) / (1.0 - q / dist.mean)


def v_alpha_closed(dist, alpha) -> float:
    """Velocity -m e^{-α} / C_α on the recurrent-bias side."""
    return -dist.mean * math.exp(-alpha) / c_alpha(dist, alpha)


@dataclass(frozen=True)
class PsiAlphaEstimate:
    z_alpha: float
    c_alpha: float
    truncation_j: int
    martingale_depth: int
    truncation_error: float = 0.0

    @property
    def psi(self) -> float:
        return self.z_alpha / self.c_alpha


def ray_weights(alpha, j_max) -> np.ndarray:
    return np.exp(alpha * np.arange(j_max + 1))


def z_alpha_from_ray(w_ray, alpha) -> np.ndarray:
    """Truncated Z_α for every row of a (samples, j_max + 1) array of W_{-j}."""
    return w_ray @ ray_weights(alpha, w_ray.shape[1] - 1)


def z_alpha_estimate(env, alpha, source, j_max=None, depth=None) -> PsiAlphaEstimate:
    """Z_α of one marked tree, growing the ray it needs.

    W_{-j} comes from m W_{-j} = W_{-j+1} + Σ W(s, depth) over the off-ray
    children s of v_{-j}. Subtrees below the grown part of the arena are
    drawn from the population process, so only the ray is materialised.
    """
    _negative(alpha, 'Z_α')
    j_max = default_truncation(alpha) if j_max is None else j_max
    depth = depth or settings.GWLAB['MARTINGALE_DEPTH']
    tree = env.tree
    generator = source.generator
    m = tree.dist.mean
    below = env.current
    w = w_beyond(tree, below, depth, generator).value
    z = w
    for j in range(1, j_max + 1):
        ancestor = tree.parent_of(below, source)
        off = sum(w_beyond(tree, s, depth, generator).value for s in tree.children[ancestor] if s != below)
        w = (w + off) / m
        z += math.exp(alpha * j) * w
        below = ancestor
    return PsiAlphaEstimate(
        z_alpha=z,
        c_alpha=c_alpha(tree.dist, alpha),
        truncation_j=j_max,
        martingale_depth=depth,
        truncation_error=truncation_bound(tree.dist, alpha, j_max),
    )
