"""Seed derivation and deterministic uniform streams.

Every stochastic routine in this package draws from a stream of uniforms on
the open interval (0, 1) that is a pure function of a 64-bit seed.  Parallel
paths get independent seeds through :func:`derive_path_seed`, a splitmix64
finalizer applied to ``master_seed + (index + 1) * golden`` with the usual
golden-ratio increment.  The generator identity is numpy's PCG64 (period
2**128), and within-build determinism is guaranteed; bit equality across
numpy versions is not promised.
"""

from __future__ import annotations

import numpy as np

__all__ = ["splitmix64", "derive_path_seed", "UniformStream", "SequenceStream"]

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

#: random() returns 0.0 with probability 2**-53; nudge those onto (0, 1).
_TINY = 2.0**-54


def splitmix64(x: int) -> int:
    """The splitmix64 output finalizer (a strong 64-bit mixer)."""
    z = x & _MASK64
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_path_seed(master_seed: int, index: int) -> int:
    """Seed for path ``index``: ``splitmix64(master + (index + 1) * golden)``."""
    if index < 0:
        raise ValueError("path index must be non-negative")
    return splitmix64((master_seed + (index + 1) * _GOLDEN) & _MASK64)


def uniform_block(rng: np.random.Generator, size: int) -> np.ndarray:
    """A block of uniforms strictly inside (0, 1) from ``rng``."""
    u = rng.random(size)
    u[u == 0.0] = _TINY
    return u


class UniformStream:
    """Buffered scalar uniforms in (0, 1), a pure function of the seed."""

    def __init__(self, seed: int, block_size: int = 4096):
        self._rng = np.random.Generator(np.random.PCG64(seed))
        self._block_size = int(block_size)
        self._block = np.empty(0)
        self._i = 0
        self.n_drawn = 0

    def next(self) -> float:
        if self._i >= self._block.size:
            self._block = uniform_block(self._rng, self._block_size)
            self._i = 0
        u = self._block[self._i]
        self._i += 1
        self.n_drawn += 1
        return float(u)


class SequenceStream:
    """A fixed, finite uniform stream for exact replay in tests."""

    def __init__(self, values):
        self._values = [float(v) for v in values]
        self._i = 0
        self.n_drawn = 0

    def next(self) -> float:
        if self._i >= len(self._values):
            raise ValueError("fixed uniform stream exhausted")
        u = self._values[self._i]
        self._i += 1
        self.n_drawn += 1
        return u
