import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dysect import bench, load_backend, make_table, xxh64
from dysect.bench import BenchRecord, WorkloadSpec

TINY = dict(reps=1, window=200, T=64, capacity=2000)


def spec(experiment, **kw):
    return WorkloadSpec.build(experiment, **{**TINY, **kw})


# -- workload specs -------------------------------------------------------------------------

def test_defaults_and_aliases():
    s = WorkloadSpec.build("dynamic")
    assert s.experiment == "dynamic-growth" and s.n == 2_000_000
    assert s.delta_mins == (0.85, 0.90, 0.95, 0.975)
    assert WorkloadSpec.build("dynamic", n=10).n == 10


@pytest.mark.parametrize("bad", [dict(tables=("foo",)), dict(delta_mins=(1.2,)),
                                 dict(ratios=(2.0,)), dict(reps=0), dict(strategies=("dfs",)),
                                 dict(impl="rust"), dict(n=-1)])
def test_validation(bad):
    with pytest.raises(ValueError):
        WorkloadSpec.build("dynamic", **bad)


def test_unknown_field_and_experiment():
    with pytest.raises(TypeError):
        WorkloadSpec.build("dynamic", colour="red")
    with pytest.raises(ValueError):
        WorkloadSpec.build("fastest")


def test_config_round_trip():
    s = WorkloadSpec.build("param-sweep", grid=((8, 3), (4, 2)), seed=17, n=1000)
    again = WorkloadSpec.from_mapping(bench.parse_config(s.to_config()))
    assert again == s


def test_parse_config_errors():
    with pytest.raises(ValueError):
        bench.parse_config("n 5")
    assert bench.parse_config("# c\nn = 5  # five\ndelta-min = 0.9") == {"n": "5",
                                                                         "delta_min": "0.9"}
    assert bench._parse_grid("8x3, 4/2") == ((8, 3), (4, 2))
    with pytest.raises(ValueError):
        bench._parse_grid("83")


# -- records ------------------------------------------------------------------------------

def test_csv_header_and_normalization():
    r = BenchRecord("static-fill", "dysect", "insert", delta=0.9, n=9, m=10, latency_ns=100.0)
    assert r.normalized_ns == pytest.approx(10.0)
    text = bench.write_csv([r])
    lines = text.splitlines()
    assert lines[0] == ",".join(bench.CSV_HEADER)
    assert len(lines) == 2


@given(st.floats(0, 1e6), st.floats(0, 0.999))
def test_normalization_identity(lat, delta):
    r = BenchRecord("x", "t", "op", delta=delta, n=0, m=0, latency_ns=lat)
    assert r.normalized_ns == pytest.approx(lat * (1 - delta))


def test_make_keys_unique_and_deterministic():
    a = bench.make_keys(50_000, 3)
    assert len(np.unique(a)) == 50_000
    assert (a == bench.make_keys(50_000, 3)).all()
    assert (a != np.uint64(2**64 - 1)).all()


# -- experiments --------------------------------------------------------------------------

def test_static_fill_records():
    recs = bench.run(spec("static", capacity=4096, tables=("dysect", "linear")))
    ops = {(r.table, r.op) for r in recs}
    assert {("dysect", "insert"), ("dysect", "find-hit"), ("dysect", "find-miss"),
            ("dysect", "max-load"), ("linear", "insert")} <= ops
    for r in recs:
        assert r.normalized_ns == pytest.approx(r.latency_ns * (1 - r.delta))
    top = max(r.delta for r in recs if r.table == "dysect" and r.op == "insert")
    assert top >= 0.9


def test_dynamic_growth_audits():
    recs = bench.run(spec("dynamic", n=20_000, tables=("dysect", "linear", "cuckoo-sub"),
                          delta_mins=(0.9,), audit_every=1000))
    ins = [r for r in recs if r.op == "insert"]
    assert len(ins) == 3
    for r in ins:
        assert r.n == 20_000 and "violations=0" in r.note


def test_wordcount_small(tmp_path):
    corpus = tmp_path / "c.txt"
    corpus.write_text("a b a\n")
    for impl in ("compiled", "python"):
        t = make_table("dysect", 64, 0.9, T=64, impl=impl)
        assert bench.count_file(t, corpus, seed=0, impl=impl) == 3
        assert len(t) == 2
        assert t.find(xxh64(b"a", 0)) == 2 and t.find(xxh64(b"b", 0)) == 1


def test_wordcount_conservation(tmp_path):
    corpus = tmp_path / "z.txt"
    info = bench.make_corpus(corpus, 200_000, unique=5000, seed=2)
    words = corpus.read_bytes().split()
    assert info["tokens"] == len(words) and info["distinct"] == len(set(words))
    recs = bench.run(spec("words", corpus=str(corpus), tables=("dysect", "robinhood"),
                          delta_mins=(0.9,)))
    for r in recs:
        assert f"tokens={info['tokens']}" in r.note and r.param > 0


def test_wordcount_missing_corpus(tmp_path):
    with pytest.raises(FileNotFoundError):
        bench.run(spec("words", corpus=str(tmp_path / "none.txt")))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.sampled_from([b"ab", b"c", b" ", b"\n", b"xyz", b"\t "]), max_size=60),
       st.integers(1, 9))
def test_iter_chunks_keeps_tokens(tmp_path_factory, parts, size):
    path = tmp_path_factory.mktemp("chunks") / "t.txt"
    data = b"".join(parts)
    path.write_bytes(data)
    tokens = [t for chunk in bench.iter_chunks(path, size) for t in chunk.split()]
    assert tokens == data.split()


def test_mixed_find_zero_ratio_matches_pure_find():
    recs = bench.run(spec("mixed", n=20_000, ops=10_000, ratios=(0.0, 0.5),
                          tables=("dysect",)))
    by = {(r.op, r.param): r for r in recs}
    assert ("find-pure", 0.0) in by and ("mixed-find", 0.5) in by
    assert by[("mixed-find", 0.0)].probes_per_op == pytest.approx(
        by[("find-pure", 0.0)].probes_per_op, rel=0.2)


def test_mixed_erase_counts():
    recs = bench.run(spec("mixed-erase", n=20_000, ops=8000, ratios=(0.0, 0.5, 1.0),
                          tables=("linear", "cuckoo")))
    by = {(r.table, r.param): r for r in recs}
    # the ratio-0 stream erases and never inserts
    assert by[("linear", 0.0)].note == "inserts=0;others=8000"
    assert by[("cuckoo", 0.0)].erase_moves == 0
    assert by[("linear", 0.0)].erase_moves > 0
    with pytest.raises(ValueError):
        bench.run(spec("mixed-erase", n=100, ops=1000, tables=("dysect",)))


def test_linear_fit():
    slope, icpt, r2 = bench.linear_fit([0, 1, 2, 3], [1, 3, 5, 7])
    assert (slope, icpt, r2) == pytest.approx((2, 1, 1))


def test_load_cycles():
    ev = [(0, 0.9, 100), (1, 0.95, 104), (0, 0.97, 108), (1, 0.96, 112), (0, 0.5, 116)]
    assert bench.load_cycles(ev, 2) == [(0.95, 0.9, 100), (0.97, 0.96, 108)]


def test_max_load_small():
    recs = bench.run(spec("max-load", n=30_000, grid=((8, 3),), capacity=2000))
    grows = [r for r in recs if r.op == "grow"]
    assert grows and all(0.5 < r.delta <= 1.0 for r in grows)
    assert any(r.op == "static-max" for r in recs)
    assert any(r.op == "cycle" for r in recs)


def test_param_sweep_small():
    recs = bench.run(spec("sweep", n=20_000, grid=((8, 3), (4, 2)), strategies=("bfs",),
                          delta_mins=(0.85, 0.95)))
    best = bench.highest_clean_delta(recs)
    assert best[(8, 3, "bfs")] == 0.95
    assert all("violations=0" in r.note for r in recs if r.op in ("insert", "fail"))


def test_backends_small():
    recs = bench.run(spec("backends", n=5000))
    assert {r.backend for r in recs} == {"compiled", "python"}
    assert bench.backend_speedup(recs)["dysect"] > 1


def test_workers_give_same_records():
    one = bench.run(spec("dynamic", n=5000, tables=("dysect", "linear"), delta_mins=(0.9,)))
    two = bench.run(spec("dynamic", n=5000, tables=("dysect", "linear"), delta_mins=(0.9,),
                         workers=2))
    strip = lambda rs: [{k: v for k, v in r.as_row().items() if k not in bench.TIMING_COLUMNS}
                        for r in rs]
    assert strip(one) == strip(two)


def test_space_audit_helpers():
    t = make_table("linear", 100, 0.9)
    assert bench.space_audit(t, "linear", 0.9) is None
    for k in range(1, 2000):
        t.insert(k)
    assert bench.space_audit(t, "linear", 0.9)
    assert bench.migration_audit(t, "linear", 0.9)
    with pytest.raises(bench.AuditFailed):
        bench.audit_contents(t, np.arange(1, 2001, dtype=np.uint64))


def test_gnuplot(tmp_path):
    recs = bench.run(spec("dynamic", n=3000, tables=("dysect",), delta_mins=(0.9,)))
    csv_path = tmp_path / "r.csv"
    bench.write_csv(recs, csv_path)
    text = bench.gnuplot_script(str(csv_path), "dynamic", output="r.png")
    assert "pngcairo" in text and "'dysect'" in text.replace('"', "'")
    assert text.count("plot ") == 1
    assert bench.mean_by(recs, lambda r: r.op)["insert"] > 0


def test_reallocating_tables_are_tagged():
    recs = bench.run(spec("dynamic", n=3000, tables=("linear",), delta_mins=(0.9,),
                          impl="python"))
    assert all("not-space-efficient" in r.note for r in recs)
    recs = bench.run(spec("dynamic", n=3000, tables=("linear",), delta_mins=(0.9,),
                          impl="compiled"))
    assert not any("not-space-efficient" in r.note for r in recs)
