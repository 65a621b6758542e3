"""Bucket cuckoo machinery shared by DySECT and the flat bucket cuckoo table.

Subclasses provide ``_bucket(lo, hi, i)`` (bucket id of choice ``i``) and
``_slot(bid)`` (key list, value list, first cell index).  Buckets keep their
occupied cells as a prefix; ``EMPTY`` marks the first free cell.
"""

from ..errors import InsertFailed
from .common import EMPTY, MASK32, MASK64, SplitMix, TableBase

STRATEGIES = ("bfs", "rw-optimistic", "rw-pessimistic")


class BucketCuckooBase(TableBase):
    def __init__(self, seed, B, H, max_probes, strategy):
        super().__init__(seed)
        if B < 1 or H < 2:
            raise ValueError("need B >= 1 and H >= 2")
        if strategy not in STRATEGIES:
            raise ValueError(f"unknown displacement strategy {strategy!r}")
        if max_probes < 1:
            raise ValueError("max_probes must be positive")
        self.B = B
        self.H = H
        self.max_probes = max_probes
        self.strategy = strategy
        self._rng = SplitMix(self.seed ^ 0x5DEECE66D)
        self._n = 0
        self.last_path_length = 0

    # -- bucket helpers ------------------------------------------------------
    def _choices(self, lo, hi):
        return [self._bucket(lo, hi, i) for i in range(self.H)]

    def _occupancy(self, bid):
        keys, _, base = self._slot(bid)
        B = self.B
        c = 0
        while c < B and keys[base + c] != EMPTY:
            c += 1
        return c

    def _search(self, key, lo, hi):
        """Return ``(bid, cell, probes)``; ``bid`` is None when the key is absent."""
        probes = 0
        B = self.B
        for i in range(self.H):
            bid = self._bucket(lo, hi, i)
            keys, _, base = self._slot(bid)
            for c in range(B):
                k = keys[base + c]
                if k == EMPTY:
                    break
                probes += 1
                if k == key:
                    return bid, c, probes
        return None, 0, probes

    def _find(self, key, h):
        bid, c, probes = self._search(key, h & MASK32, h >> 32)
        self._note_find(probes)
        if bid is None:
            return None
        _, vals, base = self._slot(bid)
        return vals[base + c]

    def _erase(self, key, h):
        bid, c, probes = self._search(key, h & MASK32, h >> 32)
        self.stats["erase_probes"] += probes
        if bid is None:
            return False
        keys, vals, base = self._slot(bid)
        last = self._occupancy(bid) - 1
        keys[base + c] = keys[base + last]
        vals[base + c] = vals[base + last]
        keys[base + last] = EMPTY
        vals[base + last] = 0
        self._n -= 1
        self._after_erase()
        return True

    def _after_erase(self):
        pass

    def _increment(self, key, delta, h):
        bid, c, _ = self._search(key, h & MASK32, h >> 32)
        if bid is not None:
            _, vals, base = self._slot(bid)
            v = (vals[base + c] + delta) & MASK64
            vals[base + c] = v
            return v
        self._insert_new(key, delta, h)
        return delta

    def _insert(self, key, value, h):
        bid, _, _ = self._search(key, h & MASK32, h >> 32)
        if bid is not None:
            return False
        self._insert_new(key, value, h)
        return True

    def _put(self, bid, key, value):
        """Append to the bucket's prefix; returns False if the bucket is full."""
        keys, vals, base = self._slot(bid)
        for c in range(self.B):
            if keys[base + c] == EMPTY:
                keys[base + c] = key
                vals[base + c] = value
                return True
        return False

    def _place(self, key, value, h):
        """Store an absent key, displacing others if needed. No growth."""
        lo, hi = h & MASK32, h >> 32
        starts = self._choices(lo, hi)
        best, best_occ = starts[0], self.B + 1
        for bid in starts:
            occ = self._occupancy(bid)
            if occ < best_occ:
                best, best_occ = bid, occ
        if best_occ < self.B:
            keys, vals, base = self._slot(best)
            keys[base + best_occ] = key
            vals[base + best_occ] = value
            self.last_path_length = 0
            return True
        self.stats["searches"] += 1
        if self.strategy == "bfs":
            ok = self._bfs(key, value, h, starts)
        elif self.strategy == "rw-optimistic":
            ok = self._walk_optimistic(key, value, h, starts)
        else:
            ok = self._walk_pessimistic(key, value, h, starts)
        if not ok:
            self.stats["failed_searches"] += 1
        return ok

    # -- displacement ----------------------------------------------------------
    def _bfs(self, key, value, h, starts):
        B, H = self.B, self.H
        budget = self.max_probes
        nb, parent, pcell = [], [], []
        visited = set()
        for bid in starts:
            if bid not in visited:
                visited.add(bid)
                nb.append(bid)
                parent.append(-1)
                pcell.append(-1)
        examined = len(nb)
        head = 0
        while head < len(nb):
            bid = nb[head]
            keys, _, base = self._slot(bid)
            for c in range(B):
                ek = keys[base + c]
                eh = self._rehash(ek)
                elo, ehi = eh & MASK32, eh >> 32
                for i in range(H):
                    alt = self._bucket(elo, ehi, i)
                    if alt == bid or alt in visited:
                        continue
                    if examined >= budget:
                        self.stats["search_steps"] += examined
                        return False
                    visited.add(alt)
                    examined += 1
                    occ = self._occupancy(alt)
                    if occ < B:
                        self.stats["search_steps"] += examined
                        self._apply_path(nb, parent, pcell, head, c, alt, occ, key, value)
                        return True
                    nb.append(alt)
                    parent.append(head)
                    pcell.append(c)
            head += 1
        self.stats["search_steps"] += examined
        return False

    def _apply_path(self, nb, parent, pcell, node, cell, dst, dst_cell, key, value):
        moves = 0
        while True:
            src = nb[node]
            sk, sv, sbase = self._slot(src)
            dk, dv, dbase = self._slot(dst)
            dk[dbase + dst_cell] = sk[sbase + cell]
            dv[dbase + dst_cell] = sv[sbase + cell]
            moves += 1
            dst, dst_cell = src, cell
            cell = pcell[node]
            node = parent[node]
            if node < 0:
                break
        keys, vals, base = self._slot(dst)
        keys[base + dst_cell] = key
        vals[base + dst_cell] = value
        self.stats["displacements"] += moves
        self.last_path_length = moves

    def _walk_candidates(self, lo, hi, exclude):
        out = []
        for i in range(self.H):
            bid = self._bucket(lo, hi, i)
            if bid != exclude and bid not in out:
                out.append(bid)
        return out

    def _walk_hash(self, cache, key):
        h = cache.get(key)
        if h is None:
            h = self._rehash(key)
            cache[key] = h
        return h

    def _walk_optimistic(self, key, value, h, starts):
        """Evict-and-recurse, committing as it goes; undone if the budget runs out.

        A victim with no other bucket to go to is left alone and another is drawn.
        """
        B = self.B
        rng = self._rng
        cache = {key: h}
        log = []  # (bucket, cell, evicted key, evicted value)
        cur_k, cur_v = key, value
        cands = []
        for bid in starts:
            if bid not in cands:
                cands.append(bid)
        steps = 0
        while True:
            if log:
                for bid in cands:
                    occ = self._occupancy(bid)
                    if occ < B:
                        keys, vals, base = self._slot(bid)
                        keys[base + occ] = cur_k
                        vals[base + occ] = cur_v
                        self.stats["search_steps"] += steps
                        self.stats["displacements"] += len(log)
                        self.last_path_length = len(log)
                        return True
            if steps >= self.max_probes:
                break
            steps += 1
            bid = cands[rng.next() % len(cands)]
            c = rng.next() % B
            keys, vals, base = self._slot(bid)
            ek = keys[base + c]
            eh = self._walk_hash(cache, ek)
            ecands = self._walk_candidates(eh & MASK32, eh >> 32, bid)
            if not ecands:
                continue
            log.append((bid, c, ek, vals[base + c]))
            keys[base + c] = cur_k
            vals[base + c] = cur_v
            cur_k, cur_v = ek, log[-1][3]
            cands = ecands
        for bid, c, ek, ev in reversed(log):
            keys, vals, base = self._slot(bid)
            keys[base + c] = ek
            vals[base + c] = ev
        self.stats["search_steps"] += steps
        return False

    def _walk_pessimistic(self, key, value, h, starts):
        """Random walk over an untouched table; moves are applied only on success."""
        B = self.B
        rng = self._rng
        cache = {key: h}
        path = []
        on_path = set()
        cands = []
        for bid in starts:
            if bid not in cands:
                cands.append(bid)
        steps = 0
        while True:
            free = [b for b in cands if b not in on_path]
            if path:
                for bid in free:
                    occ = self._occupancy(bid)
                    if occ < B:
                        self._commit_walk(path, bid, occ, key, value)
                        self.stats["search_steps"] += steps
                        return True
            if steps >= self.max_probes or not free:
                break
            steps += 1
            bid = free[rng.next() % len(free)]
            c = rng.next() % B
            keys, _, base = self._slot(bid)
            eh = self._walk_hash(cache, keys[base + c])
            ecands = self._walk_candidates(eh & MASK32, eh >> 32, bid)
            if not any(b not in on_path for b in ecands):
                continue
            path.append((bid, c))
            on_path.add(bid)
            cands = ecands
        self.stats["search_steps"] += steps
        return False

    def _commit_walk(self, path, dst, dst_cell, key, value):
        for bid, c in reversed(path):
            sk, sv, sbase = self._slot(bid)
            dk, dv, dbase = self._slot(dst)
            dk[dbase + dst_cell] = sk[sbase + c]
            dv[dbase + dst_cell] = sv[sbase + c]
            dst, dst_cell = bid, c
        keys, vals, base = self._slot(dst)
        keys[base + dst_cell] = key
        vals[base + dst_cell] = value
        self.stats["displacements"] += len(path)
        self.last_path_length = len(path)

    # -- introspection ---------------------------------------------------------
    def place_at(self, key, value, i):
        """Put ``key`` directly into its choice-``i`` bucket (test hook)."""
        h = self._hash(key)
        if self._search(key, h & MASK32, h >> 32)[0] is not None:
            return False
        if not self._put(self._bucket(h & MASK32, h >> 32, i), key, value):
            raise InsertFailed(f"choice {i} bucket is full")
        self._n += 1
        return True

    def bucket_of(self, key, i):
        """Bucket id of choice ``i`` for ``key`` (no counters touched)."""
        from .hashing import hash64
        h = hash64(key, self.seed)
        return self._bucket(h & MASK32, h >> 32, i)

    def _bucket_ids(self):
        raise NotImplementedError

    def items(self):
        out = []
        for bid in self._bucket_ids():
            keys, vals, base = self._slot(bid)
            for c in range(self.B):
                k = keys[base + c]
                if k == EMPTY:
                    break
                out.append((k, vals[base + c]))
        return out

    def check_invariants(self):
        """Audit prefix compaction and placement; raises AssertionError."""
        from .hashing import hash64
        count = 0
        for bid in self._bucket_ids():
            keys, _, base = self._slot(bid)
            seen_empty = False
            for c in range(self.B):
                k = keys[base + c]
                if k == EMPTY:
                    seen_empty = True
                    continue
                if seen_empty:
                    raise AssertionError(f"gap inside bucket {bid:#x}")
                h = hash64(k, self.seed)
                if bid not in self._choices(h & MASK32, h >> 32):
                    raise AssertionError(f"key {k} stored outside its buckets")
                count += 1
        if count != self._n:
            raise AssertionError(f"element count {count} != n {self._n}")
