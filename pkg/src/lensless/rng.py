"""Portable seeded generator used for aperture permutations and row selection.

xorshift64* (Vigna, 2016) with state initialised through one round of
splitmix64, so that a seed of zero is valid and nearby seeds give unrelated
streams. All arithmetic is done on Python ints masked to 64 bits, which keeps
the output identical on every platform and in any other language that follows
the same recipe.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
XORSHIFT_MULT = 0x2545F4914F6CDD1D


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class XorShift64Star:
    """xorshift64* generator (shifts 12, 25, 27)."""

    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError(f"seed must be non-negative, got {seed}")
        state = splitmix64(seed & MASK64)
        # xorshift state must never be zero
        self.state = state or 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * XORSHIFT_MULT) & MASK64

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection (no modulo bias)."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = MASK64 + 1 - ((MASK64 + 1) % n)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n

    def shuffle(self, items: list) -> list:
        """In-place Fisher-Yates shuffle, walking from the end."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]
        return items

    def sample(self, population: list, k: int) -> list:
        """First k entries of a partial Fisher-Yates shuffle from the front."""
        pool = list(population)
        if not 0 <= k <= len(pool):
            raise ValueError(f"cannot draw {k} items from {len(pool)}")
        for i in range(k):
            j = i + self.below(len(pool) - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]


def permutation(n: int, seed: int) -> list[int]:
    return XorShift64Star(seed).shuffle(list(range(n)))
