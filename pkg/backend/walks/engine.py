"""Continuous-time α-biased walk on a lazily grown tree.

From a vertex with d children the walk jumps to each child at rate 1 and to
the parent at rate λ = m e^{-α}.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

from django.db import models

from gwlab.exceptions import BufferTooSmall
from trees.arena import NO_PARENT


class TimeMode(models.TextChoices):
    EXACT_TIME = 'EXACT_TIME', 'Exponential holding times'
    MEAN_TIME = 'MEAN_TIME', 'Mean holding times'


class Boundary(models.TextChoices):
    GROW = 'GROW', 'Grow ancestors on demand'
    REFLECT = 'REFLECT', 'No parent move at the root'
    ABSORB = 'ABSORB', 'Killed on leaving the root'


class StopKind(models.TextChoices):
    TIME = 'TIME', 'Time'
    LEVEL = 'LEVEL', 'Level'
    JUMPS = 'JUMPS', 'Jumps'


@dataclass(frozen=True)
class StopRule:
    kind: str
    value: float

    @classmethod
    def time(cls, t_max):
        if t_max <= 0:
            raise ValueError('time horizon must be > 0')
        return cls(StopKind.TIME, float(t_max))

    @classmethod
    def level(cls, n):
        return cls(StopKind.LEVEL, int(n))

    @classmethod
    def jumps(cls, count):
        if count < 0:
            raise ValueError('jump count must be >= 0')
        return cls(StopKind.JUMPS, int(count))


@dataclass
class WalkSummary:
    rho_final: int
    elapsed: float
    n_jumps: int
    tau_levels: dict = field(default_factory=dict)
    regen_levels: list = field(default_factory=list)
    absorbed: bool = False
    node_final: int = 0
    trace: list | None = None

    @property
    def rho_path(self) -> list[int]:
        return [row[1] for row in self.trace] if self.trace else []


def step(tree, node, alpha, source, mode=TimeMode.EXACT_TIME, boundary=Boundary.GROW, lam=None):
    """One jump: returns (next_node, holding_time); next_node is None when absorbed."""
    if lam is None:
        lam = tree.dist.bias_rate(alpha)
    kids = tree.ensure_children(node, source)
    d = len(kids)
    parent = tree.parent[node]
    if parent == NO_PARENT:
        if boundary == Boundary.GROW:
            parent = tree.parent_of(node, source)
        elif boundary == Boundary.REFLECT:
            lam = 0.0
    total = d + lam
    if mode == TimeMode.EXACT_TIME:
        holding = source.exponential() / total
    else:
        holding = 1.0 / total
    u = source.uniform() * total
    if u < d:
        return kids[int(u)], holding
    return (None if parent == NO_PARENT else parent), holding


def run(tree, alpha, stop: StopRule, source, mode=TimeMode.MEAN_TIME,
        boundary=Boundary.GROW, start=None, record=False) -> WalkSummary:
    """Run until the stop rule fires; ρ is tracked relative to the tree's root."""
    lam = tree.dist.bias_rate(alpha)
    node = tree.root if start is None else start
    rho = tree.depth[node]
    t = 0.0
    jumps = 0
    tau = {}
    best = rho
    absorbed = False
    trace = [(0.0, rho, -1)] if record else None

    t_max = stop.value if stop.kind == StopKind.TIME else math.inf
    target = stop.value if stop.kind == StopKind.LEVEL else None
    max_jumps = stop.value if stop.kind == StopKind.JUMPS else None
    exact = mode == TimeMode.EXACT_TIME
    children = tree.children
    parents = tree.parent

    while True:
        if target is not None and rho >= target:
            break
        if max_jumps is not None and jumps >= max_jumps:
            break
        kids = children[node]
        if kids is None:
            kids = tree.expand(node, source)
        d = len(kids)
        parent = parents[node]
        rate_up = lam
        if parent == NO_PARENT:
            if boundary == Boundary.GROW:
                parent = tree.grow_ancestor(source)
            elif boundary == Boundary.REFLECT:
                rate_up = 0.0
        total = d + rate_up
        holding = source.exponential() / total if exact else 1.0 / total
        if t + holding > t_max:
            t = t_max
            break
        t += holding
        u = source.uniform() * total
        if u < d:
            node = kids[int(u)]
            rho += 1
        elif parent == NO_PARENT:
            absorbed = True
            jumps += 1
            if record:
                trace.append((t, rho - 1, d))
            break
        else:
            node = parent
            rho -= 1
        jumps += 1
        if rho > best:
            best = rho
            tau[rho] = t
        if record:
            trace.append((t, rho, d))

    return WalkSummary(
        rho_final=rho - 1 if absorbed else rho,
        elapsed=t,
        n_jumps=jumps,
        tau_levels=tau,
        absorbed=absorbed,
        node_final=node,
        trace=trace,
    )


def default_buffer(dist, alpha) -> int:
    ratio = dist.mean * math.exp(alpha)
    if ratio <= 1.0:
        return 200
    return int(min(max(math.ceil(40.0 / math.log(ratio)), 20), 200))


def level_regenerations(summary: WalkSummary, buffer: int) -> list[tuple[int, float]]:
    """Fresh-level hits after which the walk never drops below that level.

    A hit is confirmed only when the recorded path ends at least ``buffer``
    levels beyond it; the unconfirmed tail is dropped.
    """
    if buffer < 1:
        raise BufferTooSmall(f'buffer={buffer}')
    trace = summary.trace or []
    if not trace:
        return []
    rhos = [row[1] for row in trace]
    suffix_min = rhos[:]
    for i in range(len(rhos) - 2, -1, -1):
        suffix_min[i] = min(rhos[i], suffix_min[i + 1])
    final = rhos[-1]
    confirmed = []
    best = rhos[0]
    for i in range(1, len(rhos)):
        level = rhos[i]
        if level > best:
            best = level
            if suffix_min[i] >= level and final >= level + buffer:
                confirmed.append((level, trace[i][0]))
    summary.regen_levels = confirmed
    return confirmed


def write_trace(summary: WalkSummary, path) -> None:
    """CSV "jump_index,time,rho,node_degree"; the degree is the one left by the jump."""
    with open(path, 'w', newline='') as handle:
        writer = csv.writer(handle)
        writer.writerow(['jump_index', 'time', 'rho', 'node_degree'])
        for index, (time, rho, degree) in enumerate(summary.trace or []):
            writer.writerow([index, repr(time), rho, degree])
