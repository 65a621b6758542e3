"""The one 64-bit hash per key, its two 32-bit halves, and the derived functions."""

from dataclasses import dataclass

from ._backend import backend

MASK32 = 0xFFFFFFFF
MASK64 = 0xFFFFFFFFFFFFFFFF
DEFAULT_SEED = 0xDEADBEEF

xxh64 = backend.xxh64


def hash64(key: int, seed: int = DEFAULT_SEED) -> int:
    """XXH64 of the key's 8 little-endian bytes."""
    return backend.hash64(key, seed & MASK64)


@dataclass(frozen=True)
class HashPair:
    lo: int  # h'
    hi: int  # h''

    @classmethod
    def from_hash(cls, h: int) -> "HashPair":
        return cls(h & MASK32, (h >> 32) & MASK32)

    @classmethod
    def of(cls, key: int, seed: int = DEFAULT_SEED) -> "HashPair":
        return cls.from_hash(hash64(key, seed))


def derive(pair: HashPair, i: int, H: int | None = None) -> int:
    """``h_i = lo + i * hi`` in wrapping 32-bit arithmetic."""
    if i < 0 or (H is not None and i >= H):
        raise ValueError(f"choice index {i} out of range")
    return (pair.lo + i * pair.hi) & MASK32


@dataclass(frozen=True)
class HashFamily:
    """H derived functions sharing one seeded 64-bit hash."""

    seed: int = DEFAULT_SEED
    H: int = 3

    def __post_init__(self):
        if self.H < 2:
            raise ValueError("a family needs at least two functions")

    def pair(self, key: int) -> HashPair:
        return HashPair.of(key, self.seed)

    def values(self, key: int) -> list[int]:
        p = self.pair(key)
        return [derive(p, i) for i in range(self.H)]
