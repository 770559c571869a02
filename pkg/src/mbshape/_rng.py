"""xoshiro256** seeded by SplitMix64, in pure Python.

The compiled chain kernel implements the same generator; both consume the
same 4-word state so streams agree bit for bit across backends.
"""

from __future__ import annotations

import numpy as np

MASK = (1 << 64) - 1
_INV53 = 1.0 / 9007199254740992.0


def splitmix64_state(seed: int) -> np.ndarray:
    """Expand a 64-bit seed into a 4-word xoshiro state."""
    x = int(seed) & MASK
    out = []
    for _ in range(4):
        x = (x + 0x9E3779B97F4A7C15) & MASK
        z = x
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        out.append(z ^ (z >> 31))
    return np.array(out, dtype=np.uint64)


def _rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & MASK


class Xoshiro256ss:
    """Reference generator operating on a shared ``uint64[4]`` state array."""

    def __init__(self, state):
        self.s = [int(v) for v in state]

    @classmethod
    def from_seed(cls, seed: int) -> "Xoshiro256ss":
        return cls(splitmix64_state(seed))

    def next_u64(self) -> int:
        s = self.s
        result = (_rotl((s[1] * 5) & MASK, 7) * 9) & MASK
        t = (s[1] << 17) & MASK
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def next_double(self) -> float:
        """Uniform on ``[0, 1)`` with 53 random bits."""
        return (self.next_u64() >> 11) * _INV53

    def state(self) -> np.ndarray:
        return np.array(self.s, dtype=np.uint64)
