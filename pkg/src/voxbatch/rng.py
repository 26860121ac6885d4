"""Deterministic, splittable random number generation.

The generator is SplitMix64: output i is ``mix64(seed + (i+1) * GAMMA)``,
a pure function of (seed, counter). Streams are therefore identical across
platforms and processes for equal seeds, which the procedural generators
rely on for reproducible episodes.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB


def _mix64(z: int) -> int:
    z &= _MASK64
    z = ((z ^ (z >> 30)) * _MIX_A) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX_B) & _MASK64
    return z ^ (z >> 31)


class SeededRng:
    """Counter-based generator; (seed, counter) fully determine the stream."""

    __slots__ = ("seed", "counter")

    def __init__(self, seed: int, counter: int = 0):
        self.seed = seed & _MASK64
        self.counter = counter

    def next_u64(self) -> int:
        self.counter += 1
        return _mix64(self.seed + self.counter * _GAMMA)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (2.0**-53)

    def randrange(self, n: int) -> int:
        """Uniform integer in [0, n). Uses the multiply-shift reduction."""
        if n <= 0:
            raise ValueError(f"randrange needs n >= 1, got {n}")
        return (self.next_u64() * n) >> 64

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi] inclusive."""
        return lo + self.randrange(hi - lo + 1)

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def choice(self, seq):
        if not seq:
            raise IndexError("choice from empty sequence")
        return seq[self.randrange(len(seq))]

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randrange(i + 1)
            items[i], items[j] = items[j], items[i]

    def split(self, index: int) -> "SeededRng":
        """Derive an independent child generator; child streams never alias
        the parent's because the child seed passes through mix64."""
        return SeededRng(_mix64(self.seed ^ _mix64((index + 1) * _GAMMA)))

    def __repr__(self) -> str:
        return f"SeededRng(seed={self.seed:#x}, counter={self.counter})"
