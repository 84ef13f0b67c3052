"""Portable seeded pseudo-random numbers.

SplitMix64 (Steele, Lea & Flood 2014): the state advances by the odd
constant ``0x9E3779B97F4A7C15`` and each output is the state passed through
the mixer::

    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z =  z ^ (z >> 31)

all modulo 2**64. Uniform doubles take the top 53 bits, ``(z >> 11) * 2**-53``.
Normal deviates use the cosine branch of Box-Muller on two consecutive
uniforms, ``sqrt(-2 ln(1 - u1)) * cos(2 pi u2)``.

Because the state after k draws is ``seed + k * gamma``, blocks of draws are
generated with vectorised uint64 arithmetic and are bit-identical to the
scalar recurrence on every platform.
"""

from __future__ import annotations

import numpy as np

GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
MASK64 = (1 << 64) - 1


def mix64(z: np.ndarray) -> np.ndarray:
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= np.uint64(MIX1)
    z ^= z >> np.uint64(27)
    z *= np.uint64(MIX2)
    z ^= z >> np.uint64(31)
    return z


class SplitMix64:
    """Seedable SplitMix64 stream."""

    def __init__(self, seed: int):
        self.state = int(seed) & MASK64

    def next_uint64(self, n: int) -> np.ndarray:
        if n < 0:
            raise ValueError("n must be non-negative")
        k = np.arange(1, n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            states = np.uint64(self.state) + k * np.uint64(GAMMA)
        self.state = (self.state + n * GAMMA) & MASK64
        return mix64(states)

    def uniform(self, n: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
        u = (self.next_uint64(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return low + (high - low) * u

    def normal(self, n: int, scale: float = 1.0) -> np.ndarray:
        u = self.uniform(2 * n)
        u1, u2 = u[0::2], u[1::2]
        return scale * np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * np.pi * u2)

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates shuffle of ``range(n)``."""
        perm = np.arange(n)
        if n < 2:
            return perm
        u = self.uniform(n - 1)
        for idx, i in enumerate(range(n - 1, 0, -1)):
            j = int(u[idx] * (i + 1))
            perm[i], perm[j] = perm[j], perm[i]
        return perm

    def spawn(self) -> "SplitMix64":
        """Independent child stream seeded from the next output."""
        return SplitMix64(int(self.next_uint64(1)[0]))
