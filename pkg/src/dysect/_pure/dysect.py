"""DySECT: T power-of-two subtables of B-cell buckets that double one at a time."""

from ..errors import InsertFailed, ShrinkFailed
from .common import EMPTY, MASK32
from .cuckoo import BucketCuckooBase

GROW_MODES = ("eager", "on_failure", "static")
DEFAULT_SEED = 0xDEADBEEF


def _log2_exact(v, what):
    if v < 1 or v & (v - 1):
        raise ValueError(f"{what} must be a power of two, got {v}")
    return v.bit_length() - 1


class DysectTable(BucketCuckooBase):
    kind = "dysect"

    def __init__(self, capacity=0, delta_min=0.9, T=256, B=8, H=3, seed=DEFAULT_SEED,
                 max_probes=1024, strategy="bfs", grow_mode="eager", shrink=False,
                 backend="portable", max_cells=None):
        super().__init__(seed, B, H, max_probes, strategy)
        if not 0.0 < delta_min < 1.0:
            raise ValueError("delta_min must lie in (0, 1)")
        if grow_mode not in GROW_MODES:
            raise ValueError(f"unknown grow mode {grow_mode!r}")
        if backend not in ("portable", "reserved"):
            raise ValueError(f"unknown storage backend {backend!r}")
        self.t = _log2_exact(T, "T")
        if self.t > 16:
            raise ValueError("T may be at most 2**16")
        self.T = T
        self.delta_min = float(delta_min)
        self.grow_mode = grow_mode
        self.shrink_enabled = bool(shrink)
        # Address-space reservation needs the compiled core.
        self.storage = "portable"
        x = 0
        while T * (B << x) < capacity:
            x += 1
        if x + self.t > 32:
            raise ValueError("capacity exceeds 2**32 buckets")
        self._xs = x   # exponent of the small subtables
        self._j = 0    # subtables 0.._j-1 have exponent _xs + 1
        cells = B << x
        self._keys = [[EMPTY] * cells for _ in range(T)]
        self._vals = [[0] * cells for _ in range(T)]
        self._masks = [(1 << x) - 1] * T
        self._m = T * cells
        self._note_cells(self._m)

    # -- addressing ---------------------------------------------------------------
    def _bucket(self, lo, hi, i):
        g = (lo + i * hi) & MASK32
        sub = g >> (32 - self.t) if self.t else 0
        return (sub << 32) | (g & self._masks[sub])

    def _slot(self, bid):
        sub = bid >> 32
        return self._keys[sub], self._vals[sub], (bid & MASK32) * self.B

    def _bucket_ids(self):
        for sub in range(self.T):
            for b in range(self._masks[sub] + 1):
                yield (sub << 32) | b

    def locate(self, lo, hi, i):
        """``(subtable, bucket)`` addressed by choice ``i`` of hash pair ``(lo, hi)``."""
        if not 0 <= i < self.H:
            raise ValueError(f"choice index {i} out of range for H={self.H}")
        bid = self._bucket(lo, hi, i)
        return bid >> 32, bid & MASK32

    # -- sizes ----------------------------------------------------------------------
    @property
    def capacity(self):
        return self._m

    @property
    def grow_cursor(self):
        return self._j

    def subtable_cells(self):
        return [(m + 1) * self.B for m in self._masks]

    def subtable_occupancy(self, sub):
        keys = self._keys[sub]
        return sum(1 for k in keys if k != EMPTY)

    def _small_cells(self):
        return self.B << self._xs

    def space_bound(self):
        """``n / delta_min + 2 * s_max``: the dynamic space limit once grown."""
        return self._n / self.delta_min + 2 * max(self.subtable_cells())

    # -- insertion ------------------------------------------------------------------
    def _insert_new(self, key, value, h):
        if self.grow_mode == "eager":
            while self.maybe_grow():
                pass
        while not self._place(key, value, h):
            if self.grow_mode != "on_failure":
                raise InsertFailed(
                    f"no free cell within {self.max_probes} probes (n={self._n}, m={self._m})")
            self._grow()
        self._n += 1

    # -- growing ----------------------------------------------------------------------
    def grow_threshold(self):
        """Growth fires once n exceeds this: delta_min * (m + 2s), s the cursor subtable."""
        return self.delta_min * (self._m + 2 * self._small_cells())

    def should_grow(self):
        return self._n > self.delta_min * (self._m + 2 * self._small_cells())

    def maybe_grow(self):
        """Double the cursor subtable if the size constraint allows it."""
        if self.grow_mode == "static" or not self.should_grow():
            return False
        self._grow()
        return True

    def grow(self):
        """Unconditionally double the next subtable in grow order."""
        self._grow()

    def _grow(self):
        idx = self._j
        B, H = self.B, self.H
        nb_old = 1 << self._xs
        old_mask = nb_old - 1
        new_mask = (nb_old << 1) - 1
        old_k, old_v = self._keys[idx], self._vals[idx]
        new_k = [EMPTY] * (2 * nb_old * B)
        new_v = [0] * (2 * nb_old * B)
        self._note_cells(self._m + 2 * nb_old * B)
        shift = 32 - self.t
        moved = 0
        for b in range(nb_old):
            w0 = b * B
            w1 = (b + nb_old) * B
            for c in range(B):
                k = old_k[b * B + c]
                if k == EMPTY:
                    break
                h = self._rehash(k)
                lo, hi = h & MASK32, h >> 32
                for i in range(H):
                    g = (lo + i * hi) & MASK32
                    if (g >> shift if shift < 32 else 0) == idx and g & old_mask == b:
                        break
                else:
                    raise AssertionError(f"key {k} misplaced in subtable {idx}")
                if g & new_mask == b:
                    new_k[w0], new_v[w0] = k, old_v[b * B + c]
                    w0 += 1
                else:
                    new_k[w1], new_v[w1] = k, old_v[b * B + c]
                    w1 += 1
                moved += 1
        self._keys[idx], self._vals[idx] = new_k, new_v
        self._masks[idx] = new_mask
        m_before = self._m
        self._m += nb_old * B
        self._j += 1
        if self._j == self.T:
            self._j = 0
            self._xs += 1
        self.stats["migrations"] += 1
        self.stats["migrated"] += moved
        self.growth_log.append(("grow", idx, self._n, m_before, moved))

    # -- shrinking -----------------------------------------------------------------------
    def _large_cells(self):
        if self._j == 0:
            return self.B << self._xs
        return self.B << (self._xs + 1)

    def should_shrink(self):
        if self._j == 0 and self._xs == 0:
            return False
        return self._n < self.delta_min * (self._m - self._large_cells())

    def _after_erase(self):
        if self.shrink_enabled:
            self.maybe_shrink()

    def maybe_shrink(self):
        if not self.should_shrink():
            return False
        try:
            self._shrink()
        except ShrinkFailed:
            return False
        return True

    def shrink_to_size(self, target_n):
        """Halve subtables (last doubled first) while ``max(n, target_n)`` still fits."""
        need = max(self._n, target_n) / self.delta_min
        shrunk = 0
        while not (self._j == 0 and self._xs == 0):
            if self._m - self._large_cells() // 2 < need:
                break
            self._shrink()
            shrunk += 1
        return shrunk

    def _shrink(self):
        if self._j == 0:
            if self._xs == 0:
                raise ShrinkFailed("subtables are already minimal")
            self._xs -= 1
            self._j = self.T
        idx = self._j - 1
        B = self.B
        nb_new = 1 << self._xs
        old_k, old_v = self._keys[idx], self._vals[idx]
        new_k = [EMPTY] * (nb_new * B)
        new_v = [0] * (nb_new * B)
        self._note_cells(self._m + nb_new * B)
        buffer = []
        moved = 0
        for b in range(nb_new):
            w = b * B
            for src in (b, b + nb_new):
                for c in range(B):
                    k = old_k[src * B + c]
                    if k == EMPTY:
                        break
                    moved += 1
                    if w < (b + 1) * B:
                        new_k[w], new_v[w] = k, old_v[src * B + c]
                        w += 1
                    else:
                        buffer.append((k, old_v[src * B + c]))
        self._keys[idx], self._vals[idx] = new_k, new_v
        self._masks[idx] = nb_new - 1
        m_before = self._m
        self._m -= nb_new * B
        self._j -= 1
        self._n -= len(buffer)
        self.stats["shrinks"] += 1
        self.stats["migrated"] += moved
        self.stats["reinserted"] += len(buffer)
        self.growth_log.append(("shrink", idx, self._n + len(buffer), m_before, moved,
                                len(buffer)))
        pending = [(k, v, self._rehash(k)) for k, v in buffer]
        for pos, (k, v, h) in enumerate(pending):
            if not self._place(k, v, h):
                self._undo_shrink(pending[pos:])
                raise ShrinkFailed(
                    f"reinsertion failed after shrinking subtable {idx}; shrink undone")
            self._n += 1

    def _undo_shrink(self, pending):
        self.stats["shrink_failures"] += 1
        self._grow()
        for k, v, h in pending:
            if not self._place(k, v, h):
                raise AssertionError("could not restore elements after a failed shrink")
            self._n += 1

    # -- dump -----------------------------------------------------------------------------
    def dump(self):
        return [list(zip(k, v)) for k, v in zip(self._keys, self._vals)]
