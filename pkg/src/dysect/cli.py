"""Command line: ``dysect bench <experiment> ...`` plus a few helpers.

Exit codes: 0 on success, 2 for bad flags or configuration, 1 for runtime failures.
"""

from __future__ import annotations

import argparse
import logging
import os
import random
import sys
import time

from . import bench
from .errors import TableError
from .hashing import DEFAULT_SEED
from .table import STRATEGIES
from .tables import TABLE_KINDS, make_table

log = logging.getLogger("dysect")

SEED_ENV = "DYSECT_SEED"


class UsageError(Exception):
    """Bad input detected after parsing; maps to exit code 2."""


def _listing(item_type, allowed=None, what="value"):
    def parse(text):
        out = []
        for part in text.split(","):
            part = part.strip()
            if not part:
                continue
            if allowed is not None and part not in allowed:
                raise argparse.ArgumentTypeError(
                    f"unknown {what} {part!r} (choose from {', '.join(allowed)})")
            try:
                out.append(item_type(part))
            except ValueError:
                raise argparse.ArgumentTypeError(f"bad {what} {part!r}") from None
        if not out:
            raise argparse.ArgumentTypeError(f"empty {what} list")
        return out
    return parse


def _grid(text):
    try:
        return list(bench._parse_grid(text))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _seed(text):
    try:
        return int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed {text!r}") from None


def _experiment(text):
    try:
        return bench.canonical_experiment(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


# flag dest -> WorkloadSpec field; list-valued flags may repeat
_SPEC_FLAGS = {
    "table": "tables", "delta_min": "delta_mins", "ratio": "ratios", "strategy": "strategies",
    "grid": "grid", "n": "n", "capacity": "capacity", "ops": "ops", "reps": "reps",
    "window": "window", "seed": "seed", "T": "T", "B": "B", "H": "H",
    "max_probes": "max_probes", "checkpoint_step": "checkpoint_step",
    "fill_limit": "fill_limit", "audit_every": "audit_every", "corpus": "corpus",
    "impl": "impl", "workers": "workers",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dysect", description="Dynamic hash tables and their benchmark workloads.")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="more progress output on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="run one benchmark experiment and write CSV")
    b.add_argument("experiment", type=_experiment, metavar="EXPERIMENT",
                   help=f"one of: {', '.join(bench.EXPERIMENTS)} (short: "
                        f"{', '.join(sorted(bench.ALIASES))})")
    add = b.add_argument
    add("--table", action="extend", type=_listing(str, TABLE_KINDS, "table"),
        help="table kind(s), repeat or comma-separate")
    add("--delta-min", action="extend", type=_listing(float, what="delta_min"),
        help="minimum load factor(s)")
    add("--ratio", action="extend", type=_listing(float, what="ratio"),
        help="insert share(s) for mixed workloads")
    add("--strategy", action="extend", type=_listing(str, STRATEGIES, "strategy"),
        help="displacement strategy(ies)")
    add("--grid", type=_grid, help="B/H pairs, e.g. 8x3,8x2")
    add("--n", type=int, help="elements to insert (or prefill)")
    add("--capacity", type=int, help="initial capacity")
    add("--ops", type=int, help="operations in mixed workloads")
    add("--reps", type=int, help="repetitions (default 5)")
    add("--window", type=int, help="operations per timing window (default 1000)")
    add("--seed", type=_seed, help=f"base seed (default ${SEED_ENV} or {DEFAULT_SEED:#x})")
    add("-T", "--T", dest="T", type=int, help="subtables")
    add("-B", "--B", dest="B", type=int, help="bucket size")
    add("-H", "--H", dest="H", type=int, help="hash functions")
    add("--max-probes", type=int, help="displacement budget")
    add("--checkpoint-step", type=float, help="load checkpoint spacing (static fill)")
    add("--fill-limit", type=float, help="stop static fill of linear/robinhood here")
    add("--audit-every", type=int, help="inserts between space audits")
    add("--corpus", help="text file for the word count")
    add("--impl", choices=("auto", "compiled", "python"), help="table backend")
    add("--workers", type=int, help="processes for repetitions")
    add("--config", help="key = value file; flags override it")
    add("--out", default="-", help="CSV path, '-' for stdout")
    add("--gnuplot", metavar="PATH", help="also write a gnuplot script for the CSV")

    e = sub.add_parser("exercise", help="random operations checked against a dict")
    e.add_argument("--table", type=_listing(str, TABLE_KINDS, "table"), default=list(TABLE_KINDS))
    e.add_argument("--ops", type=int, default=20000)
    e.add_argument("--keys", type=int, default=2000, help="size of the key universe")
    e.add_argument("--delta-min", type=float, default=0.9)
    e.add_argument("--seed", type=_seed)
    e.add_argument("--impl", choices=("auto", "compiled", "python"), default="auto")

    c = sub.add_parser("corpus", help="write a synthetic Zipf text for the word count")
    c.add_argument("--out", required=True)
    c.add_argument("--mb", type=float, default=100.0)
    c.add_argument("--unique", type=int, default=1_000_000)
    c.add_argument("--seed", type=_seed, default=1)

    p = sub.add_parser("plot", help="write a gnuplot script for a bench CSV")
    p.add_argument("csv")
    p.add_argument("experiment", type=_experiment)
    p.add_argument("--out", default="-", help="script path, '-' for stdout")
    p.add_argument("--png", help="make the script render to this image")
    return parser


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_SEED
    try:
        return int(raw, 0)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={raw!r} is not an integer") from None


def spec_from_args(args) -> bench.WorkloadSpec:
    data = {}
    if args.config:
        try:
            data = bench.load_config(args.config)
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        except ValueError as exc:
            raise UsageError(f"{args.config}: {exc}") from None
        data.pop("experiment", None)
    try:
        kwargs = {k: bench._convert(k, v) for k, v in data.items()}
    except ValueError as exc:
        raise UsageError(f"{args.config}: {exc}") from None
    for flag, name in _SPEC_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            kwargs[name] = tuple(value) if isinstance(value, list) else value
    kwargs.setdefault("seed", default_seed())
    try:
        return bench.WorkloadSpec.build(args.experiment, **kwargs)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def cmd_bench(args) -> int:
    spec = spec_from_args(args)
    if spec.experiment == "wordcount":
        if spec.corpus is None:
            raise UsageError("wordcount needs --corpus")
        if not os.path.isfile(spec.corpus):
            raise FileNotFoundError(f"corpus not found: {spec.corpus}")
    log.info("running %s on %s", spec.experiment, ", ".join(spec.tables))
    t0 = time.perf_counter()
    records = bench.run(spec)
    log.info("%d records in %.1fs", len(records), time.perf_counter() - t0)
    if args.out == "-":
        bench.write_csv(records, sys.stdout)
    else:
        bench.write_csv(records, args.out)
        log.info("wrote %s", args.out)
    if args.gnuplot:
        src = args.out if args.out != "-" else "results.csv"
        bench.write_gnuplot(src, spec.experiment, args.gnuplot,
                            tables=sorted({r.table for r in records}))
    return 0


def exercise(kind: str, ops: int, universe: int, delta_min: float, seed: int,
             impl: str = "auto") -> dict:
    """Random insert/find/erase/increment against a dict; raises AssertionError on mismatch."""
    rng = random.Random(seed)
    table = make_table(kind, 64, delta_min, T=16 if kind.endswith("-sub") else 64, seed=seed,
                       impl=impl)
    ref: dict = {}
    for i in range(ops):
        key = rng.randrange(universe)
        roll = rng.random()
        if roll < 0.4:
            got, want = table.insert(key, i), key not in ref
            if want:
                ref[key] = i
        elif roll < 0.7:
            got, want = table.find(key), ref.get(key)
        elif roll < 0.9:
            got, want = table.erase(key), ref.pop(key, None) is not None
        else:
            ref[key] = ref.get(key, 0) + 3
            got, want = table.increment(key, 3), ref[key]
        if got != want:
            raise AssertionError(f"{kind}: op {i} on key {key} returned {got!r}, expected {want!r}")
    if len(table) != len(ref) or sorted(table.items()) != sorted(ref.items()):
        raise AssertionError(f"{kind}: final contents differ from the reference")
    table.check_invariants()
    return {"table": kind, "ops": ops, "size": len(ref), "capacity": table.capacity}


def cmd_exercise(args) -> int:
    seed = args.seed if args.seed is not None else default_seed()
    for kind in args.table:
        res = exercise(kind, args.ops, args.keys, args.delta_min, seed, args.impl)
        print(f"{res['table']:<14} ok  ops={res['ops']} n={res['size']} m={res['capacity']}")
    return 0


def cmd_corpus(args) -> int:
    info = bench.make_corpus(args.out, int(args.mb * (1 << 20)), args.unique, args.seed)
    print(f"wrote {args.out}: {info['bytes']} bytes, {info['tokens']} tokens, "
          f"{info['distinct']} distinct")
    return 0


def cmd_plot(args) -> int:
    if not os.path.isfile(args.csv):
        raise FileNotFoundError(f"csv not found: {args.csv}")
    script = bench.gnuplot_script(args.csv, args.experiment, output=args.png)
    if args.out == "-":
        sys.stdout.write(script)
    else:
        with open(args.out, "w") as fh:
            fh.write(script)
    return 0


COMMANDS = {"bench": cmd_bench, "exercise": cmd_exercise, "corpus": cmd_corpus,
            "plot": cmd_plot}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"dysect: error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"dysect: error: {exc.strerror or exc}"
              + (f": {exc.filename}" if exc.filename else ""), file=sys.stderr)
        return 1
    except (OSError, TableError, bench.AuditFailed, AssertionError) as exc:
        print(f"dysect: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
