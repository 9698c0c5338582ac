"""Reproducible random streams.

Every stochastic source in a run (arrivals, class selection, task service,
overhead) owns a named child stream derived from one integer seed through
numpy's SeedSequence spawn mechanism.  Draws are therefore reproducible bit
for bit across platforms for a given seed, and adding a consumer never
shifts the draws seen by existing ones.
"""
from __future__ import annotations

import numpy as np

# stream ids, one per stochastic source
ARRIVALS = 0
CLASS_PICK = 1
SERVICE = 2
OVERHEAD = 3
REPLICATE = 7


class RngStream:
    """Single-owner random stream.

    A stream must never be shared between two consumers; derive children
    with child() instead.  Identity is (seed, path): child(i) appends i to
    the spawn path, so the tree of streams is stable under refactoring.
    """

    def __init__(self, seed: int, path: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.path = tuple(int(p) for p in path)
        self._gen = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=self.path))
        )

    def __repr__(self):
        return f"RngStream(seed={self.seed}, path={self.path})"

    def child(self, stream_id: int) -> "RngStream":
        return RngStream(self.seed, self.path + (int(stream_id),))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def exponential(self, rate: float, size=None):
        assert rate > 0.0
        return self._gen.standard_exponential(size) / rate

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None):
        return self._gen.uniform(low, high, size)

    def random(self, size=None):
        return self._gen.random(size)


class BufferedExp:
    """Scalar unit-exponential draws served from block buffers.

    Wraps (and takes ownership of) a stream's generator.  Block refills cut
    per-draw overhead in the event loop without changing the draw sequence:
    draw i is always the i-th standard exponential of the stream.
    """

    def __init__(self, stream: RngStream, block: int = 8192):
        self._gen = stream.generator
        self._block = int(block)
        self._buf = self._gen.standard_exponential(self._block)
        self._pos = 0

    def draw(self, rate: float) -> float:
        if self._pos == self._block:
            self._buf = self._gen.standard_exponential(self._block)
            self._pos = 0
        x = self._buf[self._pos]
        self._pos += 1
        return x / rate


class BufferedUniform:
    """Scalar U(0,1) draws served from block buffers; see BufferedExp."""

    def __init__(self, stream: RngStream, block: int = 8192):
        self._gen = stream.generator
        self._block = int(block)
        self._buf = self._gen.random(self._block)
        self._pos = 0

    def draw(self) -> float:
        if self._pos == self._block:
            self._buf = self._gen.random(self._block)
            self._pos = 0
        x = self._buf[self._pos]
        self._pos += 1
        return x
