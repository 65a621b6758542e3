"""Benchmark workloads, timing and CSV output.

Every ``run_*`` function takes a :class:`WorkloadSpec` and returns a list of
:class:`BenchRecord` rows. Timings use the monotonic clock around whole
operation windows; counters are exact deltas over the same windows. Each run
finishes with an audit of the table contents against the generated keys.
"""

from __future__ import annotations

import copy
import csv
import dataclasses
import io
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from ._backend import available_backends, load_backend
from .errors import InsertFailed
from .hashing import DEFAULT_SEED
from .table import STRATEGIES
from .tables import IN_PLACE_KINDS, TABLE_KINDS, make_table

EXPERIMENTS = ("static-fill", "dynamic-growth", "wordcount", "mixed-find", "mixed-erase",
               "max-load", "param-sweep", "backends")

ALIASES = {"static": "static-fill", "dynamic": "dynamic-growth", "growth": "dynamic-growth",
           "words": "wordcount", "mixed": "mixed-find", "maxload": "max-load",
           "sweep": "param-sweep", "backend": "backends"}

KEY_LIMIT = np.uint64(0xFFFFFFFFFFFFFFFF)  # exclusive bound, keeps the empty marker out
OP_INSERT, OP_FIND, OP_ERASE = 0, 1, 2

# Desk-scale defaults, about a tenth of the original experiment sizes.
_DEFAULTS = {
    "static-fill": dict(capacity=1 << 20, tables=("dysect", "linear", "robinhood", "cuckoo")),
    "dynamic-growth": dict(n=2_000_000, capacity=5_000, delta_mins=(0.85, 0.90, 0.95, 0.975)),
    "wordcount": dict(capacity=5_000, delta_mins=(0.85, 0.90, 0.95, 0.97)),
    "mixed-find": dict(n=1_500_000, ops=1_000_000, capacity=5_000, delta_mins=(0.95,)),
    "mixed-erase": dict(n=1_500_000, ops=500_000, capacity=5_000, delta_mins=(0.95,)),
    "max-load": dict(n=2_000_000, capacity=5_000, max_probes=16384, tables=("dysect",)),
    "param-sweep": dict(n=500_000, capacity=5_000, tables=("dysect",),
                        delta_mins=(0.85, 0.90, 0.95, 0.975, 0.99),
                        strategies=STRATEGIES),
    "backends": dict(n=200_000, capacity=5_000, tables=("dysect",), delta_mins=(0.95,)),
}


class AuditFailed(RuntimeError):
    """A table disagrees with the keys the generator put into it."""


def canonical_experiment(name: str) -> str:
    name = ALIASES.get(name, name)
    if name not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}")
    return name


@dataclass
class WorkloadSpec:
    """Declarative input for one benchmark run.

    ``None`` for ``n``, ``capacity`` or ``ops`` picks the experiment's desk-scale default.
    """

    experiment: str
    tables: tuple = TABLE_KINDS
    n: int | None = None
    capacity: int | None = None
    delta_mins: tuple = (0.85, 0.90, 0.95)
    ratios: tuple = (0.0, 0.25, 0.5, 0.75, 1.0)
    ops: int | None = None
    reps: int = 5
    window: int = 1000
    seed: int = DEFAULT_SEED
    T: int = 256
    B: int = 8
    H: int = 3
    max_probes: int | None = None
    strategies: tuple = ("bfs",)
    grid: tuple = ((8, 3), (8, 2), (4, 3), (4, 2))
    checkpoint_step: float = 0.05
    fill_limit: float = 0.99
    audit_every: int = 10_000
    corpus: str | None = None
    impl: str = "auto"
    workers: int = 1

    def __post_init__(self):
        self.experiment = canonical_experiment(self.experiment)
        defaults = _DEFAULTS[self.experiment]
        explicit = getattr(self, "_explicit", set())
        for key, value in defaults.items():
            if key in explicit:
                continue
            current = getattr(self, key)
            if current is None or current == _FIELD_DEFAULTS.get(key):
                setattr(self, key, value)
        if self.max_probes is None:
            self.max_probes = 1024
        self.tables = tuple(self.tables)
        self.delta_mins = tuple(float(d) for d in self.delta_mins)
        self.ratios = tuple(float(r) for r in self.ratios)
        self.strategies = tuple(self.strategies)
        self.grid = tuple((int(b), int(h)) for b, h in self.grid)
        self.validate()

    def validate(self):
        for kind in self.tables:
            if kind not in TABLE_KINDS:
                raise ValueError(f"unknown table kind {kind!r}; choose from {', '.join(TABLE_KINDS)}")
        for s in self.strategies:
            if s not in STRATEGIES:
                raise ValueError(f"unknown strategy {s!r}; choose from {', '.join(STRATEGIES)}")
        for r in self.ratios:
            if not 0.0 <= r <= 1.0:
                raise ValueError(f"ratio {r} outside [0, 1]")
        for d in self.delta_mins:
            if not 0.0 < d < 1.0:
                raise ValueError(f"delta_min {d} outside (0, 1)")
        for name in ("reps", "window", "T", "B", "H", "max_probes", "audit_every", "workers"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("n", "capacity", "ops"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{name} must be positive")
        if not self.tables:
            raise ValueError("no tables selected")
        if not 0.0 < self.checkpoint_step < 1.0:
            raise ValueError("checkpoint_step must lie in (0, 1)")
        if not 0.0 < self.fill_limit <= 1.0:
            raise ValueError("fill_limit must lie in (0, 1]")
        if self.impl not in ("auto", "compiled", "python"):
            raise ValueError(f"unknown impl {self.impl!r}")

    @classmethod
    def build(cls, experiment: str, **kwargs) -> "WorkloadSpec":
        """Construct with explicit overrides; omitted fields take the experiment defaults."""
        obj = cls.__new__(cls)
        obj._explicit = {k for k, v in kwargs.items() if v is not None}
        for f in fields(cls):
            if f.name == "experiment":
                continue
            default = f.default if f.default is not dataclasses.MISSING else None
            setattr(obj, f.name, kwargs.pop(f.name, default))
        if kwargs:
            raise TypeError(f"unknown workload fields: {', '.join(sorted(kwargs))}")
        obj.experiment = experiment
        obj.__post_init__()
        return obj

    @classmethod
    def from_mapping(cls, data: dict) -> "WorkloadSpec":
        """Build from string values, e.g. a parsed key=value file."""
        data = dict(data)
        experiment = data.pop("experiment", None)
        if experiment is None:
            raise ValueError("config needs an 'experiment' entry")
        return cls.build(experiment, **{k: _convert(k, v) for k, v in data.items()})

    def to_config(self) -> str:
        lines = [f"experiment = {self.experiment}"]
        for f in fields(self):
            if f.name == "experiment":
                continue
            lines.append(f"{f.name} = {_render(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"


_FIELD_DEFAULTS = {f.name: f.default for f in fields(WorkloadSpec)
                   if f.default is not dataclasses.MISSING}


def _split(value: str) -> list[str]:
    return [p.strip() for p in str(value).split(",") if p.strip()]


def _parse_grid(value) -> tuple:
    if not isinstance(value, str):
        return tuple(value)
    out = []
    for part in _split(value):
        b, sep, h = part.lower().partition("x")
        if not sep:
            b, sep, h = part.partition("/")
        if not sep:
            raise ValueError(f"bad B/H pair {part!r}; write it as 8x3 or 8/3")
        out.append((int(b), int(h)))
    return tuple(out)


_CONVERTERS: dict[str, Callable] = {
    "tables": lambda v: tuple(_split(v)) if isinstance(v, str) else tuple(v),
    "strategies": lambda v: tuple(_split(v)) if isinstance(v, str) else tuple(v),
    "delta_mins": lambda v: tuple(float(x) for x in (_split(v) if isinstance(v, str) else v)),
    "ratios": lambda v: tuple(float(x) for x in (_split(v) if isinstance(v, str) else v)),
    "grid": _parse_grid,
    "seed": lambda v: int(str(v), 0),
    "checkpoint_step": float,
    "fill_limit": float,
    "corpus": lambda v: None if v in (None, "", "none") else str(v),
    "impl": str,
}


def _convert(key: str, value):
    if key in _CONVERTERS:
        return _CONVERTERS[key](value)
    if key in _FIELD_DEFAULTS or key in ("n", "capacity", "ops", "max_probes"):
        return None if value in (None, "", "none") else int(float(value))
    raise ValueError(f"unknown config key {key!r}")


def _render(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return ",".join(f"{b}x{h}" for b, h in value)
        return ",".join(str(v) for v in value)
    return str(value)


def parse_config(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for num, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"line {num}: expected key = value")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def load_config(path) -> dict:
    return parse_config(Path(path).read_text())


# -- records ----------------------------------------------------------------------------

CSV_HEADER = ("experiment", "table", "backend", "rep", "seed", "delta_min", "delta", "n", "m",
              "op", "ops", "latency_ns", "normalized_ns", "probes_per_op", "erase_moves",
              "displacements", "migrations", "peak_cells", "B", "H", "strategy", "param",
              "note")

TIMING_COLUMNS = ("latency_ns", "normalized_ns")


@dataclass
class BenchRecord:
    """One CSV row.

    ``delta`` is the load used for normalization: the checkpoint load in static runs,
    ``delta_min`` in growing runs and the start load in mixed runs.
    ``normalized_ns`` always equals ``latency_ns * (1 - delta)``.
    """

    experiment: str
    table: str
    op: str
    delta: float
    n: int
    m: int
    latency_ns: float = 0.0
    ops: int = 0
    delta_min: float | None = None
    backend: str = ""
    rep: int = 0
    seed: int = 0
    probes_per_op: float = 0.0
    erase_moves: int = 0
    displacements: int = 0
    migrations: int = 0
    peak_cells: int = 0
    B: int = 0
    H: int = 0
    strategy: str = ""
    param: float | None = None
    note: str = ""
    normalized_ns: float = field(init=False)

    def __post_init__(self):
        self.normalized_ns = self.latency_ns * (1.0 - self.delta)

    def as_row(self) -> dict:
        row = dataclasses.asdict(self)
        return {k: ("" if row[k] is None else row[k]) for k in CSV_HEADER}


def write_csv(records: Iterable[BenchRecord], out=None) -> str | None:
    """Write records with the fixed header to a path, a file object or (``None``) a string."""
    buf = io.StringIO() if out is None else None
    handle = buf
    close = False
    if out is not None:
        if hasattr(out, "write"):
            handle = out
        else:
            handle = open(out, "w", newline="")
            close = True
    try:
        writer = csv.DictWriter(handle, fieldnames=CSV_HEADER, lineterminator="\n")
        writer.writeheader()
        for rec in records:
            writer.writerow(rec.as_row())
    finally:
        if close:
            handle.close()
    return buf.getvalue() if buf is not None else None


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# -- key streams and helpers --------------------------------------------------------------

def make_keys(count: int, seed: int, unique: bool = True) -> np.ndarray:
    """Uniform random 64-bit keys (never the empty marker), first occurrences kept in order."""
    rng = np.random.default_rng(seed)
    keys = rng.integers(0, KEY_LIMIT, size=count, dtype=np.uint64)
    if not unique:
        return keys
    while True:
        _, idx = np.unique(keys, return_index=True)
        if len(idx) == len(keys) and len(keys) == count:
            return keys
        idx.sort()
        keys = keys[idx]
        extra = rng.integers(0, KEY_LIMIT, size=count - len(keys), dtype=np.uint64)
        keys = np.concatenate([keys, extra])


def _rng(seed: int, salt: int) -> np.random.Generator:
    return np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, salt])


class _Meter:
    """Counter deltas and wall time over one window."""

    def __init__(self, table):
        self.table = table
        self.before = table.counters()
        self.t0 = time.perf_counter_ns()

    def stop(self) -> tuple[int, dict]:
        elapsed = time.perf_counter_ns() - self.t0
        after = self.table.counters()
        return elapsed, {k: after[k] - self.before[k] for k in after
                         if k not in ("peak_cells", "max_find_probes")}


def _timed(table, fn, *args):
    meter = _Meter(table)
    result = fn(*args)
    elapsed, delta = meter.stop()
    return elapsed, delta, result


def _probes(op: str, delta: dict) -> int:
    if op.startswith("find"):
        return delta["find_probes"]
    if op == "erase":
        return delta["erase_probes"]
    return delta["search_steps"]


def _record(spec: WorkloadSpec, table, kind: str, op: str, *, delta: float, elapsed: int,
            ops: int, counts: dict, rep: int, seed: int, dmin=None, param=None, note="",
            strategy=None, B=None, H=None, probes=None) -> BenchRecord:
    c = table.counters()
    if getattr(table, "storage", "") == "reallocate":
        # growth copies the whole array, so the space bound does not hold during migration
        note = ";".join(filter(None, [note, "storage=reallocate", "not-space-efficient"]))
    return BenchRecord(
        experiment=spec.experiment, table=kind, op=op, delta=delta, n=len(table),
        m=table.capacity, latency_ns=elapsed / ops if ops else 0.0, ops=ops, delta_min=dmin,
        backend=_backend_name(table), rep=rep, seed=seed,
        probes_per_op=(probes if probes is not None else _probes(op, counts)) / ops if ops else 0.0,
        erase_moves=counts.get("erase_moves", 0), displacements=counts.get("displacements", 0),
        migrations=c["migrations"], peak_cells=c["peak_cells"],
        B=B if B is not None else (spec.B if kind in ("dysect", "cuckoo", "cuckoo-sub") else 0),
        H=H if H is not None else (spec.H if kind in ("dysect", "cuckoo", "cuckoo-sub") else 0),
        strategy=strategy or (spec.strategies[0] if kind in ("dysect", "cuckoo", "cuckoo-sub")
                              else ""),
        param=param, note=note)


def _backend_name(table) -> str:
    return "python" if type(table).__module__.startswith("dysect._pure") else "compiled"


def _table(spec: WorkloadSpec, kind: str, capacity: int, dmin, seed: int, **kw):
    opts = dict(T=spec.T, B=spec.B, H=spec.H, seed=seed, max_probes=spec.max_probes,
                strategy=spec.strategies[0], impl=spec.impl)
    opts.update(kw)
    return make_table(kind, capacity, dmin, **opts)


def audit_contents(table, keys: np.ndarray) -> None:
    """Raise AuditFailed unless the table holds exactly ``keys`` (which must be distinct)."""
    found = table.find_many(keys)
    if found != len(keys) or len(table) != len(keys):
        raise AuditFailed(f"{getattr(table, 'kind', table)}: found {found} of {len(keys)} keys, "
                          f"table reports {len(table)} elements")


def space_audit(table, kind: str, dmin: float) -> bool | None:
    """Check the dynamic space bound; ``None`` where no bound applies yet (or at all)."""
    if not table.growth_log or kind.endswith("-sub"):
        return None
    n, m = len(table), table.capacity
    if kind == "dysect":
        return m <= n / dmin + 2 * max(table.subtable_cells())
    return m <= n / dmin + 1


def migration_audit(table, kind: str, dmin: float) -> bool | None:
    """Check every logged in-place migration landed within ``n / dmin + 1`` cells."""
    if kind not in IN_PLACE_KINDS or not table.growth_log:
        return None
    return all(entry[3] <= entry[1] / dmin + 1 for entry in table.growth_log)


def _map_tasks(fn, tasks: list, workers: int) -> list:
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def _flatten(groups: Iterable[list]) -> list:
    return [r for g in groups for r in g]


# -- static fill --------------------------------------------------------------------------

def _static_fill_one(task) -> list[BenchRecord]:
    spec, kind, rep = task
    seed = spec.seed + rep
    table = _table(spec, kind, spec.capacity, None, seed)
    m = table.capacity
    keys = make_keys(m + spec.window, seed)
    rng = _rng(seed, 1)
    w = spec.window
    records = []
    pos = 0
    failed = None
    never_fails = kind in ("linear", "robinhood")
    limit = int(spec.fill_limit * m) if never_fails else m

    def fill(upto):
        nonlocal pos, failed
        try:
            table.insert_many(keys[pos:upto])
            pos = upto
        except InsertFailed as exc:
            pos += exc.inserted
            failed = pos

    steps = int(round(1.0 / spec.checkpoint_step))
    for i in range(1, steps):
        target = int(round(i * spec.checkpoint_step * m))
        if target + w > limit:
            break
        fill(target)
        if failed is not None:
            break
        load = len(table) / m
        table.find_many(keys[rng.integers(0, pos, size=w)])  # warmup, discarded
        elapsed, counts, _ = _timed(table, table.insert_many, keys[pos:pos + w])
        pos += w
        records.append(_record(spec, table, kind, "insert", delta=load, elapsed=elapsed, ops=w,
                               counts=counts, rep=rep, seed=seed))
        hits = keys[rng.integers(0, pos, size=w)]
        elapsed, counts, found = _timed(table, table.find_many, hits)
        if found != w:
            raise AuditFailed(f"{kind}: {w - found} stored keys not found")
        records.append(_record(spec, table, kind, "find-hit", delta=load, elapsed=elapsed, ops=w,
                               counts=counts, rep=rep, seed=seed))
        misses = rng.integers(0, KEY_LIMIT, size=w, dtype=np.uint64)
        elapsed, counts, _ = _timed(table, table.find_many, misses)
        records.append(_record(spec, table, kind, "find-miss", delta=load, elapsed=elapsed, ops=w,
                               counts=counts, rep=rep, seed=seed))
    if failed is None and not never_fails:
        chunk = max(w, m // 64)
        while failed is None and pos < m:
            fill(min(pos + chunk, m))
    if failed is not None or pos >= m:
        records.append(_record(spec, table, kind, "max-load", delta=len(table) / m, elapsed=0,
                               ops=0, counts={}, rep=rep, seed=seed,
                               note="failed" if failed is not None else "full"))
    audit_contents(table, keys[:pos])
    return records


def run_static_fill(spec: WorkloadSpec) -> list[BenchRecord]:
    """Fill a non-growing table, measuring inserts and finds at each load checkpoint."""
    kinds = [k for k in spec.tables if not k.endswith("-sub")]
    tasks = [(spec, kind, rep) for rep in range(spec.reps) for kind in kinds]
    return _flatten(_map_tasks(_static_fill_one, tasks, spec.workers))


# -- dynamic growth -----------------------------------------------------------------------

def _grow_run(spec: WorkloadSpec, table, kind: str, keys: np.ndarray, dmin: float,
              check: Callable | None = None):
    """Insert ``keys`` in audit-sized chunks. Returns (ns, inserted, audits, violations, failure)."""
    total = 0
    audits = violations = 0
    pos = 0
    failure = None
    step = spec.audit_every
    chunks = 0
    while pos < len(keys):
        chunk = keys[pos:pos + step]
        t0 = time.perf_counter_ns()
        try:
            table.insert_many(chunk)
        except InsertFailed as exc:
            total += time.perf_counter_ns() - t0
            pos += exc.inserted
            failure = exc
            break
        total += time.perf_counter_ns() - t0
        pos += len(chunk)
        chunks += 1
        ok = space_audit(table, kind, dmin)
        if ok is not None:
            audits += 1
            violations += not ok
        if check is not None:
            check(chunks)
    if migration_audit(table, kind, dmin) is False:
        violations += 1
    return total, pos, audits, violations, failure


def _dynamic_one(task) -> list[BenchRecord]:
    spec, kind, dmin, rep = task
    seed = spec.seed + rep
    keys = make_keys(spec.n, seed)
    table = _table(spec, kind, spec.capacity, dmin, seed)
    before = table.counters()
    total, pos, audits, violations, failure = _grow_run(spec, table, kind, keys, dmin)
    counts = {k: v - before[k] for k, v in table.counters().items()}
    note = f"audits={audits};violations={violations}"
    if failure is not None:
        note += ";failed"
    records = [_record(spec, table, kind, "insert", delta=dmin, elapsed=total, ops=max(pos, 1),
                       counts=counts, rep=rep, seed=seed, dmin=dmin, note=note)]
    records.extend(_find_windows(spec, table, kind, keys[:pos], dmin, rep, seed))
    audit_contents(table, keys[:pos])
    return records


def _find_windows(spec, table, kind, stored, dmin, rep, seed, delta=None):
    rng = _rng(seed, 2)
    w = spec.window
    load = dmin if delta is None else delta
    out = []
    if len(stored):
        table.find_many(stored[rng.integers(0, len(stored), size=w)])  # warmup
        elapsed, counts, found = _timed(table, table.find_many,
                                        stored[rng.integers(0, len(stored), size=w)])
        if found != w:
            raise AuditFailed(f"{kind}: {w - found} stored keys not found")
        out.append(_record(spec, table, kind, "find-hit", delta=load, elapsed=elapsed, ops=w,
                           counts=counts, rep=rep, seed=seed, dmin=dmin))
    elapsed, counts, _ = _timed(table, table.find_many,
                                rng.integers(0, KEY_LIMIT, size=w, dtype=np.uint64))
    out.append(_record(spec, table, kind, "find-miss", delta=load, elapsed=elapsed, ops=w,
                       counts=counts, rep=rep, seed=seed, dmin=dmin))
    return out


def run_dynamic_growth(spec: WorkloadSpec) -> list[BenchRecord]:
    """Insert ``n`` keys into a small growing table for every delta_min."""
    tasks = [(spec, kind, d, rep) for rep in range(spec.reps) for kind in spec.tables for d in spec.delta_mins]
    return _flatten(_map_tasks(_dynamic_one, tasks, spec.workers))


# -- word count ---------------------------------------------------------------------------

def iter_chunks(path, size: int = 1 << 23) -> Iterator[bytes]:
    """Read a file in blocks cut at whitespace, so no token straddles two blocks."""
    tail = b""
    with open(path, "rb") as fh:
        while True:
            block = fh.read(size)
            if not block:
                break
            block = tail + block
            cut = max(block.rfind(c) for c in (b" ", b"\n", b"\t", b"\r", b"\x0b", b"\x0c"))
            if cut < 0:
                tail = block
                continue
            tail = block[cut + 1:]
            yield block[:cut + 1]
    if tail:
        yield tail


def count_file(table, path, seed: int = 0, impl: str = "auto") -> int:
    """Insert-or-increment every whitespace token of a file; returns the token count."""
    counter = load_backend(impl).count_words
    return sum(counter(table, chunk, seed) for chunk in iter_chunks(path))


def _wordcount_one(task) -> list[BenchRecord]:
    spec, kind, dmin, rep, corpus = task
    seed = spec.seed + rep
    table = _table(spec, kind, spec.capacity, dmin, seed)
    counter = load_backend(spec.impl).count_words
    tokens = 0
    elapsed = 0
    before = table.counters()
    for chunk in iter_chunks(corpus):
        t0 = time.perf_counter_ns()
        tokens += counter(table, chunk, spec.seed)
        elapsed += time.perf_counter_ns() - t0
    counts = {k: v - before[k] for k, v in table.counters().items()}
    total = table.sum_values()
    if total != tokens:
        raise AuditFailed(f"{kind}: counters sum to {total}, corpus has {tokens} tokens")
    rate = tokens / (elapsed / 1e9) if elapsed else 0.0
    return [_record(spec, table, kind, "wordcount", delta=dmin, elapsed=elapsed,
                    ops=max(tokens, 1), counts=counts, rep=rep, seed=seed, dmin=dmin,
                    param=rate, note=f"tokens={tokens};unique={len(table)}")]


def run_wordcount(spec: WorkloadSpec, corpus=None) -> list[BenchRecord]:
    """Count the tokens of a text file with every table and delta_min."""
    corpus = corpus or spec.corpus
    if corpus is None:
        raise ValueError("word count needs a corpus file")
    if not os.path.isfile(corpus):
        raise FileNotFoundError(f"corpus not found: {corpus}")
    tasks = [(spec, kind, d, rep, str(corpus)) for rep in range(spec.reps) for kind in spec.tables for d in spec.delta_mins]
    return _flatten(_map_tasks(_wordcount_one, tasks, spec.workers))


def make_corpus(path, size_bytes: int = 100 << 20, unique: int = 1_000_000, seed: int = 1,
                exponent: float = 1.0, block_tokens: int = 1 << 20) -> dict:
    """Write a Zipf-distributed synthetic text of about ``size_bytes`` bytes.

    Returns the number of tokens written and how many distinct ones occurred.
    """
    rng = np.random.default_rng(seed)
    weights = 1.0 / np.arange(1, unique + 1, dtype=np.float64) ** exponent
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    # shuffle rank -> word so frequent words are not all short
    order = rng.permutation(unique)
    vocab = np.array([f"w{np.base_repr(int(i), 36).lower()}".encode() for i in order], dtype=object)
    seen = np.zeros(unique, dtype=bool)
    written = tokens = 0
    with open(path, "wb") as fh:
        while written < size_bytes:
            ranks = np.searchsorted(cdf, rng.random(block_tokens), side="right")
            ranks = np.minimum(ranks, unique - 1)
            words = vocab[ranks]
            lines = [b" ".join(words[i:i + 16]) for i in range(0, len(words), 16)]
            data = b"\n".join(lines) + b"\n"
            if written + len(data) > size_bytes:
                data = data[:size_bytes - written]
                cut = data.rfind(b"\n")
                data = data[:cut + 1] if cut >= 0 else b""
                if not data:
                    break
            count = len(data.split())
            seen[ranks[:count]] = True
            fh.write(data)
            written += len(data)
            tokens += count
    return {"bytes": written, "tokens": tokens, "distinct": int(seen.sum())}


# -- mixed workloads ----------------------------------------------------------------------

def _mixed_one(task) -> list[BenchRecord]:
    spec, kind, ratio, rep, erase = task
    seed = spec.seed + rep
    dmin = spec.delta_mins[0]
    keys = make_keys(spec.n + spec.ops, seed)
    prefill, fresh = keys[:spec.n], keys[spec.n:]
    table = _table(spec, kind, spec.capacity, dmin, seed)
    table.insert_many(prefill)
    start_load = len(table) / table.capacity
    rng = _rng(seed, 3 + int(ratio * 1000))
    ops = spec.ops
    is_insert = rng.random(ops) < ratio
    n_ins = int(is_insert.sum())
    codes = np.where(is_insert, OP_INSERT, OP_ERASE if erase else OP_FIND).astype(np.uint8)
    stream = np.empty(ops, dtype=np.uint64)
    stream[is_insert] = fresh[:n_ins]
    n_other = ops - n_ins
    if erase:
        victims = prefill[rng.permutation(len(prefill))[:n_other]]
        if len(victims) < n_other:
            raise ValueError("mixed-erase needs ops <= n for the erase share")
    else:
        victims = prefill[rng.integers(0, len(prefill), size=n_other)]
    stream[~is_insert] = victims
    # short warmup of successful finds, outside the timed window
    table.find_many(prefill[rng.integers(0, len(prefill), size=spec.window)])
    elapsed, counts, hits = _timed(table, table.apply_ops, codes, stream)
    if hits != ops:
        raise AuditFailed(f"{kind}: {ops - hits} of {ops} mixed operations missed")
    name = "mixed-erase" if erase else "mixed-find"
    probes = counts["erase_probes"] if erase else counts["find_probes"]
    records = [_record(spec, table, kind, name, delta=start_load, elapsed=elapsed, ops=ops,
                       counts=counts, rep=rep, seed=seed, dmin=dmin, param=ratio,
                       probes=probes, note=f"inserts={n_ins};others={n_other}")]
    if erase:
        live = np.concatenate([np.setdiff1d(prefill, victims, assume_unique=True), fresh[:n_ins]])
    else:
        live = np.concatenate([prefill, fresh[:n_ins]])
        if ratio == 0.0:
            # pure-find reference on the same table
            sample = prefill[rng.integers(0, len(prefill), size=ops)]
            elapsed, counts, _ = _timed(table, table.find_many, sample)
            records.append(_record(spec, table, kind, "find-pure", delta=start_load,
                                   elapsed=elapsed, ops=ops, counts=counts, rep=rep, seed=seed,
                                   dmin=dmin, param=0.0))
    audit_contents(table, live)
    return records


def run_mixed(spec: WorkloadSpec, erase: bool | None = None) -> list[BenchRecord]:
    """Prefill each table dynamically, then time a random insert/find or insert/erase stream."""
    if erase is None:
        erase = spec.experiment == "mixed-erase"
    if erase and spec.ops > spec.n:
        raise ValueError("mixed-erase needs ops <= n")
    tasks = [(spec, kind, r, rep, erase) for rep in range(spec.reps) for kind in spec.tables for r in spec.ratios]
    return _flatten(_map_tasks(_mixed_one, tasks, spec.workers))


def linear_fit(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares line through the points; returns (slope, intercept, R^2)."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


# -- maximum load -------------------------------------------------------------------------

def _max_load_one(task) -> list[BenchRecord]:
    spec, B, H, rep = task
    seed = spec.seed + rep
    keys = make_keys(spec.n, seed)
    table = _table(spec, "dysect", spec.capacity, spec.delta_mins[0], seed, B=B, H=H,
                   grow_mode="on_failure")
    t0 = time.perf_counter_ns()
    table.insert_many(keys)
    elapsed = time.perf_counter_ns() - t0
    records = []
    for entry in table.growth_log:
        if entry[0] != "grow":
            continue
        _, idx, n, m_before, moved = entry
        records.append(BenchRecord(
            experiment=spec.experiment, table="dysect", op="grow", delta=n / m_before, n=n,
            m=m_before, backend=_backend_name(table), rep=rep, seed=seed, B=B, H=H,
            strategy=spec.strategies[0], param=float(idx), migrations=moved))
    for peak, trough, m0 in load_cycles([(r.param, r.delta, r.m) for r in records], spec.T):
        records.append(BenchRecord(
            experiment=spec.experiment, table="dysect", op="cycle", delta=peak, n=0, m=m0,
            backend=_backend_name(table), rep=rep, seed=seed, B=B, H=H,
            strategy=spec.strategies[0], param=peak - trough, note=f"trough={trough:.6f}"))
    c = table.counters()
    records.append(_record(spec, table, "dysect", "insert", delta=len(table) / table.capacity,
                           elapsed=elapsed, ops=len(keys), counts=c, rep=rep, seed=seed, B=B,
                           H=H, note="grow-on-failure"))
    audit_contents(table, keys)
    # baseline: a static cuckoo table of the final size filled until the first failure
    static = _table(spec, "cuckoo", table.capacity, None, seed, B=B, H=H)
    extra = make_keys(static.capacity, seed + 7919)
    try:
        static.insert_many(extra)
    except InsertFailed:
        pass
    records.append(_record(spec, static, "cuckoo", "static-max", delta=len(static) / static.capacity,
                           elapsed=0, ops=0, counts={}, rep=rep, seed=seed, B=B, H=H))
    return records


def load_cycles(events: Sequence[tuple], T: int) -> list[tuple[float, float, int]]:
    """Split (cursor, load, m) growth events into complete rounds over all T subtables.

    Returns (peak, trough, m at round start) per round; a round starts at cursor 0.
    """
    rounds = []
    current = None
    for idx, load, m in events:
        if int(idx) == 0:
            if current is not None and len(current[0]) == T:
                rounds.append(current)
            current = ([], m)
        if current is not None:
            current[0].append(load)
    if current is not None and len(current[0]) == T:
        rounds.append(current)
    return [(max(loads), min(loads), m0) for loads, m0 in rounds]


def run_max_load(spec: WorkloadSpec) -> list[BenchRecord]:
    """Grow only on failed insertions and record the load at every growth event."""
    tasks = [(spec, B, H, rep) for rep in range(spec.reps) for B, H in spec.grid]
    return _flatten(_map_tasks(_max_load_one, tasks, spec.workers))


# -- parameter sweep ----------------------------------------------------------------------

def _sweep_one(task) -> list[BenchRecord]:
    spec, B, H, strategy, dmin, rep = task
    seed = spec.seed + rep
    keys = make_keys(spec.n, seed)
    table = _table(spec, "dysect", spec.capacity, dmin, seed, B=B, H=H, strategy=strategy)
    checks = 0

    def check(chunks):
        nonlocal checks
        if chunks % 10 == 0:
            table.check_invariants()
            checks += 1

    before = table.counters()
    total, pos, audits, violations, failure = _grow_run(spec, table, "dysect", keys, dmin, check)
    counts = {k: v - before[k] for k, v in table.counters().items()}
    table.check_invariants()
    checks += 1
    audit_contents(table, keys[:pos])
    note = f"checks={checks};violations={violations}"
    op = "insert"
    if failure is not None:
        op = "fail"
        note += ";failed"
    records = [_record(spec, table, "dysect", op, delta=dmin, elapsed=total, ops=max(pos, 1),
                       counts=counts, rep=rep, seed=seed, dmin=dmin, strategy=strategy, B=B, H=H,
                       param=len(table) / table.capacity, note=note)]
    for rec in _find_windows(spec, table, "dysect", keys[:pos], dmin, rep, seed):
        rec.B, rec.H, rec.strategy = B, H, strategy
        records.append(rec)
    return records


def run_param_sweep(spec: WorkloadSpec) -> list[BenchRecord]:
    """Dynamic growth across bucket sizes, hash counts and displacement strategies."""
    tasks = [(spec, B, H, s, d, rep) for rep in range(spec.reps) for B, H in spec.grid for s in spec.strategies
             for d in spec.delta_mins]
    return _flatten(_map_tasks(_sweep_one, tasks, spec.workers))


def highest_clean_delta(records: Iterable[BenchRecord]) -> dict:
    """Largest delta_min each (B, H, strategy) finished without an insertion failure."""
    failed, best = {}, {}
    for r in records:
        if r.op not in ("insert", "fail"):
            continue
        key = (r.B, r.H, r.strategy)
        best.setdefault(key, 0.0)
        if r.op == "fail":
            failed[key] = min(failed.get(key, 1.0), r.delta_min)
    for r in records:
        key = (r.B, r.H, r.strategy)
        if r.op == "insert" and r.delta_min < failed.get(key, 2.0):
            best[key] = max(best[key], r.delta_min)
    return best


# -- backend comparison -------------------------------------------------------------------

def run_backends(spec: WorkloadSpec) -> list[BenchRecord]:
    """Time the same growth workload on every available backend."""
    records = []
    for rep in range(spec.reps):
        for impl in available_backends():
            sub = copy.copy(spec)
            sub.impl = impl
            for kind in spec.tables:
                for d in spec.delta_mins:
                    rows = _dynamic_one((sub, kind, d, rep))
                    for r in rows:
                        r.experiment = spec.experiment
                        r.backend = impl
                    records.extend(rows)
    return records


def backend_speedup(records: Iterable[BenchRecord], op: str = "insert") -> dict:
    """Mean python/compiled latency ratio per table kind."""
    sums: dict = {}
    for r in records:
        if r.op == op:
            sums.setdefault(r.table, {}).setdefault(r.backend, []).append(r.latency_ns)
    out = {}
    for kind, by in sums.items():
        if "python" in by and "compiled" in by:
            out[kind] = float(np.mean(by["python"]) / np.mean(by["compiled"]))
    return out


# -- dispatch -----------------------------------------------------------------------------

RUNNERS = {
    "static-fill": run_static_fill,
    "dynamic-growth": run_dynamic_growth,
    "wordcount": run_wordcount,
    "mixed-find": run_mixed,
    "mixed-erase": run_mixed,
    "max-load": run_max_load,
    "param-sweep": run_param_sweep,
    "backends": run_backends,
}


def run(spec: WorkloadSpec) -> list[BenchRecord]:
    return RUNNERS[spec.experiment](spec)


def mean_by(records: Iterable[BenchRecord], key: Callable, value: Callable = None) -> dict:
    """Average a column over repetitions, grouped by ``key(record)``."""
    value = value or (lambda r: r.latency_ns)
    groups: dict = {}
    for r in records:
        groups.setdefault(key(r), []).append(value(r))
    return {k: float(np.mean(v)) for k, v in groups.items()}


# -- gnuplot ------------------------------------------------------------------------------

_PLOTS = {
    "static-fill": ("delta", "normalized_ns", ("insert", "find-hit", "find-miss"),
                    "load factor", "time x (1 - load) [ns]"),
    "dynamic-growth": ("delta_min", "normalized_ns", ("insert",),
                       "delta_min", "insert time x (1 - delta_min) [ns]"),
    "wordcount": ("delta_min", "latency_ns", ("wordcount",), "delta_min", "time per token [ns]"),
    "mixed-find": ("param", "latency_ns", ("mixed-find",), "insert ratio", "time per op [ns]"),
    "mixed-erase": ("param", "latency_ns", ("mixed-erase",), "insert ratio", "time per op [ns]"),
    "max-load": ("m", "delta", ("grow",), "cells", "load at growth"),
    "param-sweep": ("delta_min", "normalized_ns", ("insert",),
                    "delta_min", "insert time x (1 - delta_min) [ns]"),
    "backends": ("delta_min", "latency_ns", ("insert",), "delta_min", "insert time [ns]"),
}


def gnuplot_script(csv_path, experiment: str, tables: Sequence[str] | None = None,
                   output: str | None = None) -> str:
    """A gnuplot script plotting one series per table (and op) from a bench CSV."""
    experiment = canonical_experiment(experiment)
    xcol, ycol, ops, xlabel, ylabel = _PLOTS[experiment]
    col = {name: i + 1 for i, name in enumerate(CSV_HEADER)}
    if tables is None:
        tables = sorted({row["table"] for row in read_csv(csv_path)}) if os.path.exists(csv_path) \
            else list(TABLE_KINDS)
    lines = [
        "set datafile separator ','",
        f"set xlabel '{xlabel}'",
        f"set ylabel '{ylabel}'",
        "set key left top",
        "set grid",
    ]
    if output:
        lines += ["set terminal pngcairo size 900,600", f"set output '{output}'"]
    series = []
    for table in tables:
        for op in ops:
            title = table if len(ops) == 1 else f"{table} {op}"
            cond = f'strcol({col["table"]}) eq "{table}" && strcol({col["op"]}) eq "{op}"'
            style = "points pt 7 ps 0.4" if experiment == "max-load" else "linespoints"
            series.append(f"'{csv_path}' every ::1 using (({cond}) ? ${col[xcol]} : NaN):"
                          f"(({cond}) ? ${col[ycol]} : NaN) with {style} title '{title}'")
    lines.append("plot " + ", \\\n     ".join(series))
    return "\n".join(lines) + "\n"


def write_gnuplot(csv_path, experiment: str, out, **kw) -> None:
    Path(out).write_text(gnuplot_script(csv_path, experiment, **kw))


__all__ = [
    "EXPERIMENTS", "WorkloadSpec", "BenchRecord", "CSV_HEADER", "TIMING_COLUMNS", "AuditFailed",
    "canonical_experiment", "parse_config", "load_config", "write_csv", "read_csv", "make_keys",
    "audit_contents", "space_audit", "migration_audit", "run_static_fill", "run_dynamic_growth",
    "run_wordcount", "iter_chunks", "count_file", "make_corpus", "run_mixed", "linear_fit",
    "run_max_load", "load_cycles", "run_param_sweep", "highest_clean_delta", "run_backends",
    "backend_speedup", "run", "mean_by", "gnuplot_script", "write_gnuplot",
]
