"""Deterministic random number generation.

The generator is splitmix64 (algorithm id "splitmix64-v1"): output i of a
stream seeded with s is mix64(s + (i+1)*GOLDEN) where mix64 is the usual
xor-shift/multiply finalizer.  Outputs depend only on (seed, index), so
blocks of any size can be produced with vectorized uint64 arithmetic and
the stream is identical on every platform.  Normal deviates come from the
Box-Muller transform applied to consecutive pairs of uniforms.

Stage seeds are derived from one root seed by hashing the stage name
(FNV-1a 64) into the root and mixing, see derive_seed.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)

ALGORITHM = "splitmix64-v1"


_MASK = 0xFFFFFFFFFFFFFFFF


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def _mix64_int(z: int) -> int:
    # same finalizer on plain ints; numpy scalars warn on wraparound
    z &= _MASK
    z = ((z ^ (z >> 30)) * int(_MIX1)) & _MASK
    z = ((z ^ (z >> 27)) * int(_MIX2)) & _MASK
    return z ^ (z >> 31)


def derive_seed(root_seed: int, label: str) -> int:
    """Derive a stage seed from the root seed and a stage name.

    FNV-1a over the UTF-8 label, xored into the root, then mixed once so
    related roots do not produce related stage streams.
    """
    h = 0xCBF29CE484222325
    for byte in label.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & _MASK
    return _mix64_int((root_seed & _MASK) ^ h)


class Rng:
    """Counter-based splitmix64 stream with a fixed, versioned algorithm."""

    algorithm = ALGORITHM

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._index = 0

    def next_uint64(self, n: int) -> np.ndarray:
        """Next n raw 64-bit outputs as a uint64 array."""
        idx = np.arange(self._index + 1, self._index + n + 1, dtype=np.uint64)
        self._index += n
        return _mix64(np.uint64(self.seed) + idx * _GOLDEN)

    def uniform(self, n: int) -> np.ndarray:
        """n doubles uniform on [0, 1), 53-bit resolution."""
        return (self.next_uint64(n) >> np.uint64(11)) * (2.0 ** -53)

    def normal(self, n: int) -> np.ndarray:
        """n standard-normal doubles via Box-Muller on uniform pairs."""
        m = (n + 1) // 2
        u1 = self.uniform(m)
        u2 = self.uniform(m)
        # u1 == 0 would give log(0); shift into (0, 1]
        r = np.sqrt(-2.0 * np.log(1.0 - u1))
        theta = 2.0 * np.pi * u2
        out = np.empty(2 * m)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        return out[:n]

    def integers(self, n: int, bound: int) -> np.ndarray:
        """n integers uniform on [0, bound) (multiply-shift, tiny bias is
        irrelevant at the bounds used here)."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        words = self.next_uint64(n)
        return ((words >> np.uint64(11)).astype(np.float64) * (2.0 ** -53) * bound).astype(np.int64)

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle driven by this stream."""
        for i in range(len(items) - 1, 0, -1):
            j = int(self.integers(1, i + 1)[0])
            items[i], items[j] = items[j], items[i]
