"""Product of the z_j recursion against an absorbing weighted chain.

    z_n = 0,  z_j = 1 / (1 + a_j + b_{j+1} (1 - z_{j+1}))

∏_{j=1..r} z_j equals the expected product of (1+b_{j+1})/(1+b_{j+1}+a_j)
over the visits of the chain started at r that steps j -> j+1 with
probability b_{j+1}/(1+b_{j+1}), taken on the event that it reaches 0 before n.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gwlab.exceptions import SingularSystem
from montecarlo.rng import RngStream, stream_label


@dataclass(frozen=True)
class ZjbisInstance:
    n: int
    a: tuple  # a_0 .. a_{n-1}
    b: tuple  # b_1 .. b_n
    r: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError('n must be >= 2')
        if len(self.a) != self.n or len(self.b) != self.n:
            raise ValueError('a and b must both have n entries')
        if min(self.a) < 0 or min(self.b) <= 0:
            raise ValueError('a must be >= 0 and b > 0')
        if not 1 <= self.r < self.n:
            raise ValueError('r must lie in [1, n)')

    def b_at(self, j) -> float:
        """b_j for j = 1..n."""
        return self.b[j - 1]


def zjbis_lhs(inst: ZjbisInstance) -> float:
    z = [0.0] * (inst.n + 1)
    for j in range(inst.n - 1, -1, -1):
        z[j] = 1.0 / (1.0 + inst.a[j] + inst.b_at(j + 1) * (1.0 - z[j + 1]))
    return float(np.prod(z[1:inst.r + 1]))


def zjbis_rhs_oracle(inst: ZjbisInstance) -> float:
    """Solve u(j) = w_j (p_j u(j+1) + q_j u(j-1)), u(0) = 1, u(n) = 0, for j = 1..n-1."""
    n = inst.n
    size = n - 1
    matrix = np.eye(size)
    rhs = np.zeros(size)
    for j in range(1, n):
        b = inst.b_at(j + 1)
        weight = (1.0 + b) / (1.0 + b + inst.a[j])
        up, down = b / (1.0 + b), 1.0 / (1.0 + b)
        row = j - 1
        if j + 1 < n:
            matrix[row, row + 1] -= weight * up
        if j - 1 > 0:
            matrix[row, row - 1] -= weight * down
        else:
            rhs[row] += weight * down
    try:
        u = np.linalg.solve(matrix, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc))
    return float(u[inst.r - 1])


def random_instance(generator, n_max=8, low=0.0, high=2.0) -> ZjbisInstance:
    n = int(generator.integers(2, n_max + 1))
    a = generator.uniform(low, high, size=n)
    b = generator.uniform(low, high, size=n)
    b = np.where(b > 0, b, high / 2)
    r = int(generator.integers(1, n))
    return ZjbisInstance(n, tuple(a.tolist()), tuple(b.tolist()), r)


def zjbis_trials(trials=100, n_max=8, seed=0) -> float:
    """Largest |lhs - rhs| over random instances."""
    generator = RngStream(seed, 0, (stream_label('zjbis'),)).generator()
    worst = 0.0
    for _ in range(trials):
        inst = random_instance(generator, n_max)
        worst = max(worst, abs(zjbis_lhs(inst) - zjbis_rhs_oracle(inst)))
    return worst
