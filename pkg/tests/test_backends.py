import os
import random
import subprocess
import sys

import numpy as np
import pytest

import dysect
from dysect import load_backend

C = pytest.importorskip("dysect._core")
P = load_backend("python")

VARIANTS = {
    "dysect": lambda m: m.DysectTable(0, 0.9, T=64, backend="portable"),
    "dysect-rwo": lambda m: m.DysectTable(0, 0.9, T=64, strategy="rw-optimistic"),
    "dysect-rwp": lambda m: m.DysectTable(0, 0.9, T=64, strategy="rw-pessimistic"),
    "dysect-shrink": lambda m: m.DysectTable(0, 0.9, T=64, shrink=True),
    "dysect-onfail": lambda m: m.DysectTable(0, 0.9, T=16, grow_mode="on_failure"),
    "linear": lambda m: m.LinearProbingTable(100, 0.9, backend="reallocate"),
    "robinhood": lambda m: m.RobinHoodTable(100, 0.9, backend="reallocate"),
    "cuckoo": lambda m: m.BucketCuckooTable(100, 0.9, backend="reallocate"),
    "cuckoo-rwp": lambda m: m.BucketCuckooTable(100, 0.9, backend="reallocate",
                                                strategy="rw-pessimistic"),
    "linear-sub": lambda m: m.SubtableTable("linear", 0, 0.9, T=16),
    "robinhood-sub": lambda m: m.SubtableTable("robinhood", 0, 0.9, T=16),
    "cuckoo-sub": lambda m: m.SubtableTable("cuckoo", 0, 0.9, T=16),
}


@pytest.mark.parametrize("variant", sorted(VARIANTS))
def test_backends_are_step_for_step_identical(variant):
    a, b = VARIANTS[variant](P), VARIANTS[variant](C)
    a.trace_hashes()
    b.trace_hashes()
    rng = random.Random(7)
    for step in range(8000):
        op, k = rng.random(), rng.randrange(3000)
        if step > 5000 and variant == "dysect-shrink":
            op = 0.7 + 0.3 * op
        if op < 0.45:
            r = a.insert(k, step), b.insert(k, step)
        elif op < 0.55:
            r = a.increment(k, 3), b.increment(k, 3)
        elif op < 0.75:
            r = a.find(k), b.find(k)
        else:
            r = a.erase(k), b.erase(k)
        assert r[0] == r[1], step
        assert a.take_trace() == b.take_trace(), step
    assert a.dump() == b.dump()
    assert a.counters() == b.counters()
    assert a.growth_log == b.growth_log


@pytest.mark.parametrize("impl", ["compiled", "python"])
def test_apply_ops(impl):
    t = load_backend(impl).DysectTable(0, 0.9, T=64)
    ops = np.array([0, 0, 1, 1, 2, 2, 3, 3, 1], dtype=np.uint8)
    keys = np.array([5, 5, 5, 6, 5, 5, 7, 7, 7], dtype=np.uint64)
    # new 5, hit 5, removed 5, two increments, hit 7
    assert t.apply_ops(ops, keys) == 6
    assert t.find(7) == 2 and t.find(5) is None
    with pytest.raises(ValueError):
        t.apply_ops(ops[:3], keys)
    with pytest.raises(ValueError):
        t.apply_ops(np.array([9], dtype=np.uint8), np.array([1], dtype=np.uint64))


def test_batch_matches_single(impl):
    mod = load_backend(impl)
    a, b = mod.DysectTable(0, 0.9, T=64), mod.DysectTable(0, 0.9, T=64)
    keys = np.arange(1, 3001, dtype=np.uint64)
    assert a.insert_many(keys) == 3000
    for k in range(1, 3001):
        b.insert(k, k)
    assert a.dump() == b.dump()
    assert a.find_many(keys[::2]) == 1500
    assert a.erase_many(keys[::3]) == 1000


def test_auto_selects_compiled():
    assert dysect.BACKEND == "compiled"
    assert dysect.available_backends() == ["compiled", "python"]
    with pytest.raises(ValueError):
        load_backend("rust")


def test_env_forces_pure():
    env = dict(os.environ, DYSECT_PURE="1")
    out = subprocess.run([sys.executable, "-c", "import dysect; print(dysect.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
