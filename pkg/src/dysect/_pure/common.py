"""Shared plumbing for the pure-Python tables: hashing with counters, the
public dictionary surface, batch helpers and the walk RNG."""

from ..errors import InsertFailed
from .hashing import MASK32, MASK64, hash64

EMPTY = MASK64

COUNTER_NAMES = (
    "hash_calls",       # hashes of the operation's own key
    "rehash_calls",     # hashes of stored elements (displacement, shifts, migration)
    "find_probes",
    "max_find_probes",
    "erase_probes",
    "erase_moves",
    "displacements",    # elements moved to make room for an insert
    "searches",
    "failed_searches",
    "search_steps",     # buckets examined (BFS) or walk steps
    "migrations",
    "migrated",         # elements touched by migrations
    "buffered",         # elements parked in a migration buffer
    "shrinks",
    "shrink_failures",
    "reinserted",       # elements reinserted after a shrink overflow
    "peak_cells",
)


def check_key(key):
    if not 0 <= key <= MASK64:
        raise OverflowError("key must be a 64-bit unsigned integer")
    if key == EMPTY:
        raise ValueError("key 2**64-1 is reserved as the empty-cell marker")


def check_value(value):
    if not 0 <= value <= MASK64:
        raise OverflowError("value must be a 64-bit unsigned integer")


class SplitMix:
    """splitmix64; the compiled backend uses the same sequence."""

    def __init__(self, seed):
        self.state = seed & MASK64

    def next(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)


class TableBase:
    kind = "abstract"

    def __init__(self, seed):
        self.seed = seed & MASK64
        self.stats = dict.fromkeys(COUNTER_NAMES, 0)
        self.growth_log = []
        self._trace = None

    # -- hashing ---------------------------------------------------------
    def _hash(self, key):
        self.stats["hash_calls"] += 1
        if self._trace is not None:
            self._trace.append(key)
        return hash64(key, self.seed)

    def _rehash(self, key):
        self.stats["rehash_calls"] += 1
        if self._trace is not None:
            self._trace.append(key)
        return hash64(key, self.seed)

    def trace_hashes(self, enabled=True):
        """Record every key passed to the hash function (test instrumentation)."""
        self._trace = [] if enabled else None

    def take_trace(self):
        out = self._trace or []
        if self._trace is not None:
            self._trace = []
        return out

    # -- public dictionary surface ----------------------------------------
    def insert(self, key, value=0):
        """Store ``key -> value``. Returns False (and changes nothing) if the key exists."""
        check_key(key)
        check_value(value)
        return self._insert(key, value, self._hash(key))

    def find(self, key):
        check_key_lookup(key)
        if key == EMPTY:
            return None
        return self._find(key, self._hash(key))

    def erase(self, key):
        check_key_lookup(key)
        if key == EMPTY:
            return False
        return self._erase(key, self._hash(key))

    def increment(self, key, delta=1):
        """Add ``delta`` to the value of ``key``, inserting it with ``delta`` if absent."""
        check_key(key)
        check_value(delta)
        return self._increment(key, delta, self._hash(key))

    def __len__(self):
        return self._n

    def __contains__(self, key):
        return self.find(key) is not None

    def __getitem__(self, key):
        v = self.find(key)
        if v is None:
            raise KeyError(key)
        return v

    def keys(self):
        return [k for k, _ in self.items()]

    @property
    def n(self):
        return self._n

    @property
    def load_factor(self):
        m = self.capacity
        return self._n / m if m else 0.0

    def counters(self):
        return dict(self.stats)

    def reset_counters(self):
        peak = self.stats["peak_cells"]
        self.stats = dict.fromkeys(COUNTER_NAMES, 0)
        self.stats["peak_cells"] = peak

    def _note_cells(self, cells):
        if cells > self.stats["peak_cells"]:
            self.stats["peak_cells"] = cells

    def _note_find(self, probes):
        self.stats["find_probes"] += probes
        if probes > self.stats["max_find_probes"]:
            self.stats["max_find_probes"] = probes

    # -- batches ------------------------------------------------------------
    def insert_many(self, keys, values=None):
        keys = _as_list(keys)
        values = keys if values is None else _as_list(values)
        done = 0
        for k, v in zip(keys, values):
            try:
                if self.insert(k, v):
                    done += 1
            except InsertFailed as exc:
                exc.inserted = done
                raise
        return done

    def find_many(self, keys):
        found = 0
        for k in _as_list(keys):
            if self.find(k) is not None:
                found += 1
        return found

    def erase_many(self, keys):
        removed = 0
        for k in _as_list(keys):
            if self.erase(k):
                removed += 1
        return removed

    def increment_many(self, keys, delta=1):
        for k in _as_list(keys):
            self.increment(k, delta)

    def apply_ops(self, ops, keys):
        """Run a mixed stream: op 0 inserts (value = key), 1 finds, 2 erases, 3 increments.

        Returns how many operations succeeded (new key, hit, removal; increments always count).
        """
        ops, keys = _as_list(ops), _as_list(keys)
        if len(ops) != len(keys):
            raise ValueError("ops and keys differ in length")
        hits = 0
        for op, k in zip(ops, keys):
            if op == 0:
                hits += self.insert(k, k)
            elif op == 1:
                hits += self.find(k) is not None
            elif op == 2:
                hits += self.erase(k)
            elif op == 3:
                self.increment(k, 1)
                hits += 1
            else:
                raise ValueError(f"unknown op code {op}")
        return hits

    def sum_values(self):
        return sum(v for _, v in self.items()) & MASK64


def check_key_lookup(key):
    if not 0 <= key <= MASK64:
        raise OverflowError("key must be a 64-bit unsigned integer")


def _as_list(keys):
    tolist = getattr(keys, "tolist", None)
    return tolist() if tolist is not None else list(keys)


__all__ = ["EMPTY", "MASK32", "MASK64", "COUNTER_NAMES", "TableBase", "SplitMix",
           "check_key", "check_value"]
