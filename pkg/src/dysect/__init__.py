"""DySECT: a dynamic, space-efficient bucket cuckoo table, competitor tables
that grow in place, and a benchmark harness."""

from ._backend import BACKEND, available_backends, load_backend
from .errors import InsertFailed, MigrationError, ShrinkFailed, TableError
from .hashing import DEFAULT_SEED, HashFamily, HashPair, derive, hash64, xxh64
from .table import DysectTable
from .tables import (TABLE_KINDS, BucketCuckooTable, LinearProbingTable, RobinHoodTable,
                     SubtableTable, make_table)

__version__ = "0.1.0"

EMPTY_KEY = 0xFFFFFFFFFFFFFFFF

__all__ = [
    "BACKEND", "DEFAULT_SEED", "EMPTY_KEY", "TABLE_KINDS",
    "DysectTable", "LinearProbingTable", "RobinHoodTable", "BucketCuckooTable",
    "SubtableTable", "make_table",
    "HashPair", "HashFamily", "hash64", "derive", "xxh64",
    "TableError", "InsertFailed", "ShrinkFailed", "MigrationError",
    "load_backend", "available_backends",
]
