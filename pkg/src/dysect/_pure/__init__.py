"""Pure-Python backend: the same algorithms as the compiled core, readable and slow."""

from .common import COUNTER_NAMES, EMPTY
from .dysect import DysectTable
from .flat import BucketCuckooTable, LinearProbingTable, RobinHoodTable, SubtableTable
from .hashing import derive, hash64, xxh64

BACKEND = "python"
HAS_RESERVE = False


def word_key(token, seed):
    """64-bit key of a token; the reserved empty marker is folded onto its neighbour."""
    k = xxh64(token, seed)
    return k - 1 if k == EMPTY else k


def count_words(table, data, seed=0):
    """Insert-or-increment every ASCII-whitespace token of ``data``; returns the token count."""
    tokens = 0
    for tok in data.split():
        table.increment(word_key(tok, seed), 1)
        tokens += 1
    return tokens


__all__ = [
    "BACKEND", "COUNTER_NAMES", "EMPTY", "HAS_RESERVE",
    "DysectTable", "LinearProbingTable", "RobinHoodTable", "BucketCuckooTable", "SubtableTable",
    "hash64", "xxh64", "derive", "word_key", "count_words",
]
