from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class RngStream:
    """Counter-based stream identified by (seed, stream_id).

    The Philox key is derived from a SeedSequence with ``stream_id`` (and an
    optional branch path) as spawn key, so replica ``i`` never depends on how
    many replicas ran before it or on which worker runs it.
    """
    seed: int
    stream_id: int
    branch: tuple = field(default=())

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(
            entropy=int(self.seed) & 0xFFFFFFFFFFFFFFFF,
            spawn_key=(int(self.stream_id), *(int(b) for b in self.branch)),
        )
        return np.random.Generator(np.random.Philox(seq))

    def child(self, key: int) -> RngStream:
        return RngStream(self.seed, self.stream_id, (*self.branch, key))

    def source(self, block: int = 4096) -> RandomSource:
        return RandomSource(self.generator(), block=block)


class RandomSource:
    """Block-buffered uniforms and unit exponentials for scalar hot loops."""

    def __init__(self, generator: np.random.Generator, block: int = 4096):
        self.generator = generator
        self._block = block
        self._uniforms: list[float] = []
        self._u_pos = 0
        self._exps: list[float] = []
        self._e_pos = 0

    def uniform(self) -> float:
        if self._u_pos >= len(self._uniforms):
            self._uniforms = self.generator.random(self._block).tolist()
            self._u_pos = 0
        value = self._uniforms[self._u_pos]
        self._u_pos += 1
        return value

    def exponential(self) -> float:
        if self._e_pos >= len(self._exps):
            self._exps = self.generator.standard_exponential(self._block).tolist()
            self._e_pos = 0
        value = self._exps[self._e_pos]
        self._e_pos += 1
        return value


def stream_label(text: str) -> int:
    """Stable integer key for a branch name (Python's str hash is salted)."""
    value = 0
    for char in text.encode():
        value = (value * 131 + char) & 0xFFFFFFFF
    return value
