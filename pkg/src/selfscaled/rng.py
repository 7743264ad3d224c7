"""SplitMix64: a tiny, fully specified 64-bit generator.

Chosen so that network initializations can be reproduced bit-for-bit in
any language. One step::

    state = (state + 0x9E3779B97F4A7C15) mod 2**64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2**64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) mod 2**64
    out = z ^ (z >> 31)

Uniforms on [0, 1) take the top 53 bits: ``(out >> 11) * 2**-53``.
Normals use Box-Muller on two consecutive uniforms (cosine branch only,
the sine branch is discarded so the stream position stays simple).
"""
from __future__ import annotations

import math

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def uniform(self, low: float = 0.0, high: float = 1.0) -> float:
        u = (self.next_u64() >> 11) * (1.0 / (1 << 53))
        return low + (high - low) * u

    def normal(self, mean: float = 0.0, std: float = 1.0) -> float:
        u1 = self.uniform()
        u2 = self.uniform()
        # 1 - u1 lies in (0, 1], so the log is finite
        r = math.sqrt(-2.0 * math.log(1.0 - u1))
        return mean + std * r * math.cos(2.0 * math.pi * u2)
