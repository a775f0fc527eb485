"""Bottom-up β_n / γ_n recursions on an explicit tree.

    β_n(x) = Σβ_n(x_i) / (λ + Σβ_n(x_i)),       β_n = 1 on level n
    γ_n(x) = (1 + Σγ_n(x_i)) / (λ + Σβ_n(x_i)), γ_n = 0 on level n
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from gwlab.exceptions import InsufficientDepth

LOG_SPACE_DEPTH = 64


@dataclass
class BetaGammaTable:
    """β_n and γ_n per node id (NaN outside the solved region)."""
    beta: np.ndarray
    gamma: np.ndarray
    level_cut: int
    lam: float
    root: int
    levels: list

    def b_value(self, node) -> float:
        """B_n(x) = (1/λ) Σ β_n(x_i) = β/(1-β)."""
        beta = self.beta[node]
        return beta / (1.0 - beta) if beta < 1.0 else np.inf

    def big_gamma(self, node) -> float:
        """Γ_n(x) = Σ γ_n(x_i) = γ λ (1 + B) - 1."""
        beta = self.beta[node]
        return self.gamma[node] * self.lam / (1.0 - beta) - 1.0

    @property
    def beta_root(self) -> float:
        return float(self.beta[self.root])

    @property
    def gamma_root(self) -> float:
        return float(self.gamma[self.root])


def solve(tree, n: int, lam: float, closure=None, root=None) -> BetaGammaTable:
    """Solve below ``root`` (default: the tree root) with the boundary n levels down.

    Unexpanded vertices above the boundary raise InsufficientDepth unless a
    ``closure`` supplies (β, γ) for the subtree hanging there.
    """
    if n < 0:
        raise ValueError('n must be >= 0')
    root = tree.root if root is None else root
    levels = tree.levels(root, n)
    size = len(tree)
    beta = np.full(size, np.nan)
    gamma = np.full(size, np.nan)

    bottom = np.asarray(levels[n], dtype=np.int64)
    beta[bottom] = 1.0
    gamma[bottom] = 0.0
    for k in range(n - 1, -1, -1):
        row = levels[k]
        inner, owners, kids, frontier = [], [], [], []
        for v in row:
            children = tree.children[v]
            if children is None:
                frontier.append(v)
                continue
            owners.extend([len(inner)] * len(children))
            kids.extend(children)
            inner.append(v)
        if frontier:
            if closure is None:
                raise InsufficientDepth(f'{len(frontier)} unexpanded vertices at relative level {k} < {n}.')
            frontier = np.asarray(frontier, dtype=np.int64)
            closed_beta, closed_gamma, _ = closure.draw(n - k, frontier.size)
            beta[frontier] = closed_beta
            gamma[frontier] = closed_gamma
        if inner:
            owners = np.asarray(owners, dtype=np.int64)
            kids = np.asarray(kids, dtype=np.int64)
            s = np.bincount(owners, weights=beta[kids], minlength=len(inner))
            g = np.bincount(owners, weights=gamma[kids], minlength=len(inner))
            inner = np.asarray(inner, dtype=np.int64)
            beta[inner] = s / (lam + s)
            gamma[inner] = (1.0 + g) / (lam + s)
    return BetaGammaTable(beta, gamma, n, lam, root, levels)


@dataclass
class PhiProfile:
    phi: dict
    gamma_o: float
    b_n_o: float

    @property
    def total(self) -> float:
        return float(sum(self.phi.values()))


def _explicit_reach(tree, levels, n) -> int:
    """Deepest relative level r such that every vertex above r is expanded."""
    for k in range(n):
        if any(tree.children[v] is None for v in levels[k]):
            return k
    return n


def phi_profile(tree, n: int, lam: float, table: BetaGammaTable | None = None) -> PhiProfile:
    """Φ_n(r) = λ^{-r} Σ_{|u|=r} Π_{i=1..r} 1/(1 + B_n(u_i)) for r = 1..n-1.

    Uses 1/(1 + B_n(u)) = 1 - β_n(u). Path products are pushed forward level
    by level, in log space for n > 64. On a tree closed off by a pool only the
    levels down to the first unexpanded vertex are reported.
    """
    table = table or solve(tree, n, lam)
    levels = table.levels
    root = table.root
    log_space = n > LOG_SPACE_DEPTH
    weight = {root: 0.0 if log_space else 1.0}
    phi = {}
    log_lam = np.log(lam)
    reach = _explicit_reach(tree, levels, n)
    for r in range(1, min(n, reach + 1)):
        row = levels[r]
        if not row:
            phi[r] = 0.0
            continue
        nodes = np.asarray(row, dtype=np.int64)
        one_minus_beta = 1.0 - table.beta[nodes]
        parents = [tree.parent[v] for v in row]
        if log_space:
            values = np.array([weight[p] for p in parents]) - log_lam + np.log(one_minus_beta)
            phi[r] = float(np.exp(logsumexp(values)))
        else:
            values = np.array([weight[p] for p in parents]) * one_minus_beta / lam
            phi[r] = float(values.sum())
        weight = dict(zip(row, values.tolist()))
    kids = levels[1] if n >= 1 else []
    gamma_o = float(np.sum(table.gamma[np.asarray(kids, dtype=np.int64)])) if kids else 0.0
    b_n_o = float(np.sum(table.beta[np.asarray(kids, dtype=np.int64)]) / lam) if kids else 0.0
    return PhiProfile(phi, gamma_o, b_n_o)
