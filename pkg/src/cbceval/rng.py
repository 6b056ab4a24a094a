"""Portable seeded pseudo-random generation.

All randomness in this package flows through SplitMix64, a published 64-bit
generator defined purely over integer arithmetic, so a given seed yields an
identical stream on every platform and Python build. Reference constants:
increment 0x9E3779B97F4A7C15, mix multipliers 0xBF58476D1CE4E5B9 and
0x94D049BB133111EB, shifts 30/27/31.
"""

MASK64 = (1 << 64) - 1

_GAMMA = 0x9E3779B97F4A7C15
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MIX_A) & MASK64
    z = ((z ^ (z >> 27)) * _MIX_B) & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """Deterministic 64-bit generator with a tiny, fully specified state."""

    def __init__(self, seed: int):
        self._state = seed & MASK64

    def next_uint64(self) -> int:
        self._state = (self._state + _GAMMA) & MASK64
        return _mix(self._state)

    def next_float(self) -> float:
        """Uniform double in [0, 1) built from the top 53 bits."""
        return (self.next_uint64() >> 11) * 2.0**-53

    def randbelow(self, n: int) -> int:
        """Unbiased integer in [0, n) via rejection sampling."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = ((1 << 64) // n) * n
        while True:
            x = self.next_uint64()
            if x < limit:
                return x % n


def child_seed(seed: int, *tags: int) -> int:
    """Derive an independent stream seed from a base seed and integer tags.

    Folds each tag into the state with the SplitMix64 finalizer, so
    (seed, tag) pairs map to well-separated child streams deterministically.
    """
    x = seed & MASK64
    for t in tags:
        x = _mix((x + ((t + 1) * _GAMMA)) & MASK64)
    return x
