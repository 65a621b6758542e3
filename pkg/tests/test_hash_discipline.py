"""One hash evaluation per key per operation yields every bucket choice."""

import collections
import random

import pytest

from dysect import TABLE_KINDS, make_table


def run_traced(kind, impl, delta_min, ops=6000, seed=1):
    t = make_table(kind, 64, delta_min, T=64 if kind == "dysect" else 16, impl=impl,
                   shrink=True)
    t.trace_hashes(True)
    rng = random.Random(seed)
    rows = []
    for i in range(ops):
        k, r = rng.randrange(1500), rng.random()
        c0 = t.counters()
        if r < 0.6:
            t.insert(k, i)
        elif r < 0.8:
            t.find(k)
        else:
            t.erase(k)
        c1 = t.counters()
        d = {name: c1[name] - c0[name] for name in ("hash_calls", "rehash_calls", "migrations",
                                                    "shrinks", "migrated")}
        rows.append((d, t.take_trace()))
    return t, rows


@pytest.mark.parametrize("delta_min", [0.85, 0.95])
@pytest.mark.parametrize("kind", TABLE_KINDS)
def test_single_hash_per_operation(impl, kind, delta_min):
    _, rows = run_traced(kind, impl, delta_min, ops=6000 if impl == "compiled" else 1500)
    migrating = 0
    for d, trace in rows:
        assert d["hash_calls"] == 1
        if d["migrations"] or d["shrinks"]:
            migrating += 1
            continue
        # no search or walk hashes any key twice
        assert max(collections.Counter(trace).values()) == 1
    assert migrating > 0


@pytest.mark.parametrize("kind", ["linear", "robinhood", "linear-sub", "robinhood-sub"])
def test_migrating_operations_hash_a_key_at_most_twice(impl, kind):
    # the operation itself plus the sweep that moves the element
    _, rows = run_traced(kind, impl, 0.9, ops=6000 if impl == "compiled" else 1500)
    grows = [tr for d, tr in rows if d["migrations"]]
    assert grows
    assert all(max(collections.Counter(tr).values()) <= 2 for tr in grows)


@pytest.mark.parametrize("kind", ["dysect", "linear", "robinhood", "cuckoo"])
def test_sweep_hashes_each_element_once(impl, kind):
    t = make_table(kind, 4096, 0.9, T=64, impl=impl)
    for k in range(1, 3000):
        t.insert(k, k)
    t.reset_counters()
    t.trace_hashes(True)
    if kind == "dysect":
        t.grow()
    else:
        t.migrate(2 * t.capacity)
    c = t.counters()
    trace = t.take_trace()
    assert c["hash_calls"] == 0 and c["buffered"] == 0
    assert c["rehash_calls"] == c["migrated"] == len(trace) == len(set(trace))
