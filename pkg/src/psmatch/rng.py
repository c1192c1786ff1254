"""Deterministic 64-bit PRNG used everywhere randomness is needed.

The generator is fully specified so that identically seeded runs reproduce
bit-for-bit, independent of platform or interpreter version:

* State update (splitmix64): ``state += 0x9E3779B97F4A7C15`` (mod 2^64),
  then the output is mixed as
  ``z = state; z = (z ^ z>>30) * 0xBF58476D1CE4E5B9;
  z = (z ^ z>>27) * 0x94D049BB133111EB; z ^= z>>31`` (all mod 2^64).
* ``random()`` takes the top 53 bits: ``(next_u64() >> 11) * 2**-53``,
  uniform on [0, 1).
* ``randbelow(n)`` uses unbiased rejection sampling on raw 64-bit draws.
* ``normal()`` uses the trigonometric Box-Muller transform on
  ``u1 = 1 - random()`` (so the log argument is in (0, 1]) and
  ``u2 = random()``; the pair ``(r*cos(2*pi*u2), r*sin(2*pi*u2))`` with
  ``r = sqrt(-2*ln(u1))`` is consumed one value per call, the sine term
  being cached for the next call.
"""

from __future__ import annotations

import math

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """Seeded splitmix64 stream with uniform, bounded-int, and normal draws."""

    def __init__(self, seed: int):
        self._state = seed & _MASK
        self._cached_normal: float | None = None

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK
        return z ^ (z >> 31)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * 2.0**-53

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n), unbiased via rejection sampling."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = _MASK + 1 - ((_MASK + 1) % n)
        while True:
            v = self.next_u64()
            if v < limit:
                return v % n

    def uniform(self, low: float, high: float) -> float:
        return low + (high - low) * self.random()

    def normal(self) -> float:
        """Standard normal draw via Box-Muller, one value per call."""
        if self._cached_normal is not None:
            z = self._cached_normal
            self._cached_normal = None
            return z
        u1 = 1.0 - self.random()
        u2 = self.random()
        r = math.sqrt(-2.0 * math.log(u1))
        theta = 2.0 * math.pi * u2
        self._cached_normal = r * math.sin(theta)
        return r * math.cos(theta)
