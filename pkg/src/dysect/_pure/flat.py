"""Single-array competitor tables with scale-factor addressing and in-place
growth, plus the multi-subtable variants that grow by full migration."""

import math

from ..errors import InsertFailed, MigrationError
from .common import EMPTY, MASK32, MASK64, TableBase
from .cuckoo import BucketCuckooBase
from .dysect import DEFAULT_SEED, _log2_exact
from .hashing import hash64


def _check_delta(delta_min):
    if delta_min is not None and not 0.0 < delta_min < 1.0:
        raise ValueError("delta_min must lie in (0, 1) or be None for a static table")
    return None if delta_min is None else float(delta_min)


def _check_backend(backend):
    if backend not in ("reserved", "reallocate"):
        raise ValueError(f"unknown storage backend {backend!r}")


class FlatGrowth:
    """Growth policy shared by the in-place tables.

    Growth fires once the load exceeds ``(delta_min + 1) / 2`` and targets
    ``m = n / delta_min``.  The pure backend cannot reserve address space, so
    growth copies into a fresh array before running the in-place sweep.
    """

    storage = "reallocate"
    cell_quantum = 1

    def grow_threshold(self):
        return (self.delta_min + 1.0) / 2.0 * self._m

    def grow_target(self):
        return math.ceil(self._n / self.delta_min)

    def maybe_grow(self):
        if self.delta_min is None or not self._n > self.grow_threshold():
            return False
        self.migrate(max(self.grow_target(), self._m + self.cell_quantum))
        return True

    def migrate(self, m_new):
        """Grow the table to ``m_new`` cells with a back-to-front in-place sweep."""
        if m_new <= self._m:
            raise ValueError("migration target must exceed the current size")
        if m_new % self.cell_quantum:
            raise ValueError(f"size must be a multiple of {self.cell_quantum}")
        m_old = self._m
        extra = m_new - m_old
        self._note_cells(m_old + m_new)
        self._keys = self._keys + [EMPTY] * extra
        self._vals = self._vals + [0] * extra
        moved, buffered = self._sweep(m_new)
        self.stats["migrations"] += 1
        self.stats["migrated"] += moved
        self.stats["buffered"] += buffered
        self.growth_log.append(("migrate", self._n, m_old, m_new, moved, buffered))

    @property
    def capacity(self):
        return self._m

    def dump(self):
        return list(zip(self._keys, self._vals))


class _FlatCells(FlatGrowth, TableBase):
    def __init__(self, capacity, delta_min, seed, backend):
        super().__init__(seed)
        _check_backend(backend)
        self.delta_min = _check_delta(delta_min)
        m = max(int(capacity), 1)
        self._m = m
        self._n = 0
        self._keys = [EMPTY] * m
        self._vals = [0] * m
        self._note_cells(m)

    def home(self, lo):
        return (lo * self._m) >> 32

    def items(self):
        return [(k, v) for k, v in zip(self._keys, self._vals) if k != EMPTY]

    def _bump(self, pos, delta):
        v = (self._vals[pos] + delta) & MASK64
        self._vals[pos] = v
        return v


class LinearProbingTable(_FlatCells):
    kind = "linear"

    def __init__(self, capacity=1024, delta_min=None, seed=DEFAULT_SEED, backend="reserved",
                 max_cells=None):
        super().__init__(capacity, delta_min, seed, backend)

    def _probe(self, key, lo):
        keys, m = self._keys, self._m
        p = (lo * m) >> 32
        probes = 0
        for _ in range(m):
            k = keys[p]
            if k == EMPTY:
                return p, False, probes
            probes += 1
            if k == key:
                return p, True, probes
            p += 1
            if p == m:
                p = 0
        return -1, False, probes

    def _insert(self, key, value, h):
        pos, found, _ = self._probe(key, h & MASK32)
        if found:
            return False
        if pos < 0:
            raise InsertFailed(f"table full (m={self._m})")
        self._keys[pos] = key
        self._vals[pos] = value
        self._n += 1
        self.maybe_grow()
        return True

    def _increment(self, key, delta, h):
        pos, found, _ = self._probe(key, h & MASK32)
        if found:
            return self._bump(pos, delta)
        if pos < 0:
            raise InsertFailed(f"table full (m={self._m})")
        self._keys[pos] = key
        self._vals[pos] = delta
        self._n += 1
        self.maybe_grow()
        return delta

    def _place(self, key, value, h):
        pos, _, _ = self._probe(key, h & MASK32)
        if pos < 0:
            return False
        self._keys[pos] = key
        self._vals[pos] = value
        return True

    def _find(self, key, h):
        pos, found, probes = self._probe(key, h & MASK32)
        self._note_find(probes)
        return self._vals[pos] if found else None

    def _erase(self, key, h):
        pos, found, probes = self._probe(key, h & MASK32)
        self.stats["erase_probes"] += probes
        if not found:
            return False
        keys, vals, m = self._keys, self._vals, self._m
        i = j = pos
        moves = 0
        while True:
            j += 1
            if j == m:
                j = 0
            k = keys[j]
            if k == EMPTY:
                break
            hk = ((self._rehash(k) & MASK32) * m) >> 32
            if (j > i and (hk <= i or hk > j)) or (j < i and hk <= i and hk > j):
                keys[i], vals[i] = k, vals[j]
                i = j
                moves += 1
        keys[i] = EMPTY
        vals[i] = 0
        self._n -= 1
        self.stats["erase_moves"] += moves
        return True

    def _sweep(self, m_new):
        keys, vals = self._keys, self._vals
        buffer = []
        moved = 0
        for p in range(self._m - 1, -1, -1):
            k = keys[p]
            if k == EMPTY:
                continue
            v = vals[p]
            keys[p] = EMPTY
            vals[p] = 0
            moved += 1
            h = self._rehash(k)
            q = ((h & MASK32) * m_new) >> 32
            if q < p:
                buffer.append((k, v, h))
                continue
            while q < m_new and keys[q] != EMPTY:
                q += 1
            if q == m_new:
                buffer.append((k, v, h))
                continue
            keys[q] = k
            vals[q] = v
        self._m = m_new
        for k, v, h in buffer:
            if not self._place(k, v, h):
                raise MigrationError(f"could not reinsert key {k}")
        return moved, len(buffer)

    def check_invariants(self):
        keys, m = self._keys, self._m
        count = 0
        for p in range(m):
            k = keys[p]
            if k == EMPTY:
                continue
            count += 1
            q = ((hash64(k, self.seed) & MASK32) * m) >> 32
            while q != p:
                if keys[q] == EMPTY:
                    raise AssertionError(f"empty cell {q} inside the probe run of key {k}")
                q = q + 1 if q + 1 < m else 0
        if count != self._n:
            raise AssertionError(f"element count {count} != n {self._n}")


class RobinHoodTable(_FlatCells):
    """Robin Hood table kept sorted by the 32-bit hash (no wraparound).

    A run that would overflow the last cell is shifted towards the front
    instead, so some elements near the end can sit before their home cell;
    every element is connected to its home by occupied cells.
    """

    kind = "robinhood"

    def __init__(self, capacity=1024, delta_min=None, seed=DEFAULT_SEED, backend="reserved",
                 max_cells=None):
        super().__init__(capacity, delta_min, seed, backend)
        self._seen = {}

    def _scan(self, key, lo):
        """Return ``(position or -1, insertion point, probes)``.

        Hashes seen on the way are kept in ``_seen`` (cell -> lo) for erase.
        """
        keys, m = self._keys, self._m
        seen = self._seen = {}
        t = (lo * m) >> 32
        k = keys[t]
        if k == EMPTY:
            return -1, t, 0
        probes = 1
        if k == key:
            return t, t, probes
        lt = seen[t] = self._rehash(k) & MASK32
        ip = t
        if lt <= lo:
            p = t + 1
            while p < m:
                k = keys[p]
                if k == EMPTY:
                    break
                probes += 1
                if k == key:
                    return p, p, probes
                lp = seen[p] = self._rehash(k) & MASK32
                if lp > lo:
                    break
                p += 1
            ip = p
        if lt >= lo:
            q = t - 1
            while q >= 0:
                k = keys[q]
                if k == EMPTY:
                    break
                probes += 1
                if k == key:
                    return q, q, probes
                lq = seen[q] = self._rehash(k) & MASK32
                if lq < lo:
                    break
                q -= 1
            if lt > lo:
                ip = q + 1
        return -1, ip, probes

    def _lo_at(self, p):
        lo = self._seen.get(p)
        if lo is None:
            lo = self._rehash(self._keys[p]) & MASK32
        return lo

    def _insert_at(self, ip, key, value):
        keys, vals, m = self._keys, self._vals, self._m
        if ip < m and keys[ip] == EMPTY:
            keys[ip] = key
            vals[ip] = value
            return
        e = ip
        while e < m and keys[e] != EMPTY:
            e += 1
        if e < m:
            for q in range(e, ip, -1):
                keys[q] = keys[q - 1]
                vals[q] = vals[q - 1]
            keys[ip] = key
            vals[ip] = value
            self.stats["displacements"] += e - ip
            return
        e = ip - 1
        while e >= 0 and keys[e] != EMPTY:
            e -= 1
        if e < 0:
            raise InsertFailed(f"table full (m={m})")
        for q in range(e, ip - 1):
            keys[q] = keys[q + 1]
            vals[q] = vals[q + 1]
        keys[ip - 1] = key
        vals[ip - 1] = value
        self.stats["displacements"] += ip - 1 - e

    def _insert(self, key, value, h):
        pos, ip, _ = self._scan(key, h & MASK32)
        if pos >= 0:
            return False
        self._insert_at(ip, key, value)
        self._n += 1
        self.maybe_grow()
        return True

    def _increment(self, key, delta, h):
        pos, ip, _ = self._scan(key, h & MASK32)
        if pos >= 0:
            return self._bump(pos, delta)
        self._insert_at(ip, key, delta)
        self._n += 1
        self.maybe_grow()
        return delta

    def _place(self, key, value, h):
        _, ip, _ = self._scan(key, h & MASK32)
        try:
            self._insert_at(ip, key, value)
        except InsertFailed:
            return False
        return True

    def _find(self, key, h):
        pos, _, probes = self._scan(key, h & MASK32)
        self._note_find(probes)
        return self._vals[pos] if pos >= 0 else None

    def _erase(self, key, h):
        pos, _, probes = self._scan(key, h & MASK32)
        self.stats["erase_probes"] += probes
        if pos < 0:
            return False
        keys, vals, m = self._keys, self._vals, self._m
        q = pos
        moves = 0
        while q + 1 < m and keys[q + 1] != EMPTY:
            k = keys[q + 1]
            if (self._lo_at(q + 1) * m) >> 32 > q:
                break
            keys[q], vals[q] = k, vals[q + 1]
            q += 1
            moves += 1
        if q == pos:
            while q - 1 >= 0 and keys[q - 1] != EMPTY:
                k = keys[q - 1]
                if (self._lo_at(q - 1) * m) >> 32 < q:
                    break
                keys[q], vals[q] = k, vals[q - 1]
                q -= 1
                moves += 1
        keys[q] = EMPTY
        vals[q] = 0
        self._n -= 1
        self.stats["erase_moves"] += moves
        return True

    def _sweep(self, m_new):
        keys, vals = self._keys, self._vals
        w = m_new
        moved = 0
        for p in range(self._m - 1, -1, -1):
            k = keys[p]
            if k == EMPTY:
                continue
            t = ((self._rehash(k) & MASK32) * m_new) >> 32
            pos = min(max(t, p), w - 1)
            if pos != p:
                keys[pos], vals[pos] = k, vals[p]
                keys[p] = EMPTY
                vals[p] = 0
            w = pos
            moved += 1
        self._m = m_new
        return moved, 0

    def check_invariants(self):
        keys, m = self._keys, self._m
        count = 0
        prev = -1
        for p in range(m):
            k = keys[p]
            if k == EMPTY:
                continue
            count += 1
            lo = hash64(k, self.seed) & MASK32
            if lo < prev:
                raise AssertionError(f"hash order broken at cell {p}")
            prev = lo
            t = (lo * m) >> 32
            for q in range(min(t, p), max(t, p) + 1):
                if keys[q] == EMPTY:
                    raise AssertionError(f"key {k} at {p} cut off from its home {t}")
        if count != self._n:
            raise AssertionError(f"element count {count} != n {self._n}")


class BucketCuckooTable(FlatGrowth, BucketCuckooBase):
    kind = "cuckoo"

    def __init__(self, capacity=1024, delta_min=None, B=8, H=3, seed=DEFAULT_SEED,
                 max_probes=1024, strategy="bfs", backend="reserved", max_cells=None):
        BucketCuckooBase.__init__(self, seed, B, H, max_probes, strategy)
        _check_backend(backend)
        self.delta_min = _check_delta(delta_min)
        self.cell_quantum = B
        nb = max(1, -(-int(capacity) // B))
        self._nb = nb
        self._m = nb * B
        self._keys = [EMPTY] * self._m
        self._vals = [0] * self._m
        self._note_cells(self._m)

    def grow_target(self):
        B = self.B
        return B * math.floor(self._n / (self.delta_min * B))

    def _bucket(self, lo, hi, i):
        return (((lo + i * hi) & MASK32) * self._nb) >> 32

    def _slot(self, bid):
        return self._keys, self._vals, bid * self.B

    def _bucket_ids(self):
        return range(self._nb)

    def _insert_new(self, key, value, h):
        while not self._place(key, value, h):
            if self.delta_min is None or self.grow_target() <= self._m:
                raise InsertFailed(
                    f"no free cell within {self.max_probes} probes (n={self._n}, m={self._m})")
            self.migrate(self.grow_target())
        self._n += 1
        self.maybe_grow()

    def migrate(self, m_new):
        """Grow to ``m_new`` cells; overflow is buffered and reinserted after the sweep."""
        if m_new <= self._m:
            raise ValueError("migration target must exceed the current size")
        if m_new % self.B:
            raise ValueError(f"size must be a multiple of {self.B}")
        m_old = self._m
        moved, pending = self._grow_cells(m_new)
        i = 0
        while i < len(pending):
            k, v, h = pending[i]
            if self._place(k, v, h):
                i += 1
                continue
            # the buffer does not fit: widen by one bucket and carry on
            more_moved, more = self._grow_cells(self._m + self.B)
            moved += more_moved
            pending.extend(more)
        self.stats["migrations"] += 1
        self.stats["migrated"] += moved
        self.stats["buffered"] += len(pending)
        self.growth_log.append(("migrate", self._n, m_old, self._m, moved, len(pending)))

    def _grow_cells(self, m_new):
        extra = m_new - self._m
        self._note_cells(self._m + m_new)
        self._keys = self._keys + [EMPTY] * extra
        self._vals = self._vals + [0] * extra
        return self._sweep(m_new)

    def _sweep(self, m_new):
        B, H = self.B, self.H
        keys, vals = self._keys, self._vals
        nb_old = self._nb
        nb_new = m_new // B
        buffer = []
        moved = 0
        for b in range(nb_old - 1, -1, -1):
            base = b * B
            items = []
            for c in range(B):
                k = keys[base + c]
                if k == EMPTY:
                    break
                items.append((k, vals[base + c]))
                keys[base + c] = EMPTY
                vals[base + c] = 0
            for k, v in reversed(items):
                moved += 1
                h = self._rehash(k)
                lo, hi = h & MASK32, h >> 32
                for i in range(H):
                    g = (lo + i * hi) & MASK32
                    if (g * nb_old) >> 32 == b:
                        break
                else:
                    raise AssertionError(f"key {k} misplaced in bucket {b}")
                nb2 = (g * nb_new) >> 32
                occ = self._occupancy(nb2)
                if occ < B:
                    keys[nb2 * B + occ] = k
                    vals[nb2 * B + occ] = v
                else:
                    buffer.append((k, v, h))
        self._nb = nb_new
        self._m = m_new
        return moved, buffer


_SCHEMES = {
    "linear": LinearProbingTable,
    "robinhood": RobinHoodTable,
    "cuckoo": BucketCuckooTable,
}


class SubtableTable(TableBase):
    """T independent flat tables; each grows by allocate-and-copy migration."""

    def __init__(self, scheme, capacity=0, delta_min=0.9, T=256, B=8, H=3, seed=DEFAULT_SEED,
                 max_probes=1024, strategy="bfs"):
        super().__init__(seed)
        if scheme not in _SCHEMES:
            raise ValueError(f"unknown scheme {scheme!r}")
        if not 0.0 < delta_min < 1.0:
            raise ValueError("delta_min must lie in (0, 1)")
        self.scheme = scheme
        self.kind = scheme + "-sub"
        self.t = _log2_exact(T, "T")
        self.T = T
        self.delta_min = float(delta_min)
        self._opts = {"seed": seed}
        quantum = 1
        if scheme == "cuckoo":
            self._opts.update(B=B, H=H, max_probes=max_probes, strategy=strategy)
            quantum = B
        self._quantum = quantum
        per = max(1, -(-int(capacity) // T))
        per = -(-per // quantum) * quantum
        self._subs = [self._new_sub(per) for _ in range(T)]
        self._n = 0
        self._m = per * T
        self._note_cells(self._m)

    def _new_sub(self, cells):
        sub = _SCHEMES[self.scheme](cells, delta_min=None, backend="reallocate", **self._opts)
        sub.stats = self.stats
        sub._trace = self._trace
        return sub

    def trace_hashes(self, enabled=True):
        super().trace_hashes(enabled)
        for sub in self._subs:
            sub._trace = self._trace

    def take_trace(self):
        out = list(self._trace or [])
        if self._trace is not None:
            del self._trace[:]
        return out

    @property
    def capacity(self):
        return self._m

    def route(self, h):
        return h >> (64 - self.t) if self.t else 0

    def subtable_cells(self):
        return [s._m for s in self._subs]

    def _routed(self, h, op):
        r = self.route(h)
        sub = self._subs[r]
        before = sub._n
        while True:
            try:
                result = op(sub)
                break
            except InsertFailed:
                sub = self._grow_sub(r)
                before = sub._n
        if sub._n > before:
            self._n += 1
            self._maybe_grow_sub(r)
        return result

    def _insert(self, key, value, h):
        return self._routed(h, lambda sub: sub._insert(key, value, h))

    def _increment(self, key, delta, h):
        return self._routed(h, lambda sub: sub._increment(key, delta, h))

    def _find(self, key, h):
        return self._subs[self.route(h)]._find(key, h)

    def _erase(self, key, h):
        if self._subs[self.route(h)]._erase(key, h):
            self._n -= 1
            return True
        return False

    def _maybe_grow_sub(self, r):
        sub = self._subs[r]
        if sub._n > (self.delta_min + 1.0) / 2.0 * sub._m:
            self._grow_sub(r)

    def _grow_sub(self, r):
        old = self._subs[r]
        q = self._quantum
        target = math.ceil(old._n / self.delta_min)
        if q > 1:
            target = q * math.floor(old._n / (self.delta_min * q))
        m_new = max(target, old._m + q)
        old_m, old_n = old._m, old._n
        # allocate-and-copy: both copies of this one subtable coexist
        self._note_cells(self._m + m_new)
        old.migrate(m_new)
        self._m += m_new - old_m
        self.growth_log.append(("migrate", r, self._n, old_m, m_new, old_n))
        return old

    def items(self):
        out = []
        for sub in self._subs:
            out.extend(sub.items())
        return out

    def check_invariants(self):
        total = 0
        for r, sub in enumerate(self._subs):
            sub.check_invariants()
            for k, _ in sub.items():
                if self.route(hash64(k, self.seed)) != r:
                    raise AssertionError(f"key {k} stored in the wrong subtable")
            total += sub._n
        if total != self._n:
            raise AssertionError(f"element count {total} != n {self._n}")

    def dump(self):
        return [sub.dump() for sub in self._subs]
