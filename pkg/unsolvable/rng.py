"""
Seeded random streams.

The stream is numpy's PCG64 bit generator seeded through SeedSequence. Only
the raw 64-bit outputs are consumed; integers, floats and shuffles are derived
here, so draws do not depend on numpy's Generator distribution code, which is
not guaranteed stable across releases. The raw PCG64 stream and SeedSequence
are.
"""

from typing import List, MutableSequence, Sequence, TypeVar

import numpy as np

T = TypeVar("T")

_MASK64 = (1 << 64) - 1


class SeededRng:
    """Deterministic, splittable random stream over PCG64."""

    def __init__(self, seed: int, spawn_key: Sequence[int] = ()):
        if seed < 0 or seed > _MASK64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self.spawn_key = tuple(spawn_key)
        self._bits = np.random.PCG64(np.random.SeedSequence(seed, spawn_key=self.spawn_key))

    def next_u64(self) -> int:
        return int(self._bits.random_raw())

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection on the raw stream."""
        if n <= 0:
            raise ValueError("randbelow requires n > 0")
        if n == 1:
            return 0
        limit = (_MASK64 + 1) - ((_MASK64 + 1) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def randint(self, low: int, high: int) -> int:
        """Uniform integer in [low, high]."""
        return low + self.randbelow(high - low + 1)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def choice(self, items: Sequence[T]) -> T:
        if not items:
            raise IndexError("choice from an empty sequence")
        return items[self.randbelow(len(items))]

    def shuffle(self, items: MutableSequence[T]) -> None:
        """Fisher-Yates, in place."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample(self, items: Sequence[T], k: int) -> List[T]:
        pool = list(items)
        if k > len(pool):
            raise ValueError("sample larger than population")
        for i in range(k):
            j = i + self.randbelow(len(pool) - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]

    def spawn(self, *key: int) -> "SeededRng":
        """Independent child stream; the same key always yields the same child."""
        return SeededRng(self.seed, self.spawn_key + tuple(key))

    def derive_seed(self, *key: int) -> int:
        """A fresh 64-bit seed for a child generation task."""
        return self.spawn(*key).next_u64()


def seeded_rng(seed: int) -> SeededRng:
    return SeededRng(seed)
