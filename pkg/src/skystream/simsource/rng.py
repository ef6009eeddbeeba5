"""Deterministic pseudo-random generation for the synthetic flight source.

splitmix64 expands a single 64-bit seed into the xoshiro256** state; both
algorithms are fixed bit-for-bit so the same seed yields the same traffic
stream on every run and in any reimplementation.
"""

from __future__ import annotations

_MASK64 = 0xFFFFFFFFFFFFFFFF


def _splitmix64_next(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    z = z ^ (z >> 31)
    return state, z


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class Xoshiro256StarStar:
    """xoshiro256** seeded via splitmix64 from a single 64-bit seed."""

    def __init__(self, seed: int) -> None:
        state = seed & _MASK64
        s = []
        for _ in range(4):
            state, value = _splitmix64_next(state)
            s.append(value)
        self._s = s

    def next_u64(self) -> int:
        s = self._s
        result = (_rotl((s[1] * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s[1] << 17) & _MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def below(self, n: int) -> int:
        """Uniform-ish integer in [0, n) via modulo; bias is negligible for n << 2^64."""
        if n <= 0:
            raise ValueError("n must be positive")
        return self.next_u64() % n

    def uniform(self, lo: float, hi: float) -> float:
        """Uniform float in [lo, hi) using the top 53 bits."""
        frac = (self.next_u64() >> 11) * (1.0 / (1 << 53))
        return lo + (hi - lo) * frac

    def choice(self, seq):
        return seq[self.below(len(seq))]
