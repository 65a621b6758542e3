"""Competitor tables and a uniform constructor for every table kind."""

from ._backend import backend, load_backend

LinearProbingTable = backend.LinearProbingTable
RobinHoodTable = backend.RobinHoodTable
BucketCuckooTable = backend.BucketCuckooTable
SubtableTable = backend.SubtableTable

TABLE_KINDS = ("dysect", "linear", "robinhood", "cuckoo",
               "linear-sub", "robinhood-sub", "cuckoo-sub")
IN_PLACE_KINDS = ("linear", "robinhood", "cuckoo")


def make_table(kind, capacity=0, delta_min=0.9, *, T=256, B=8, H=3, seed=0xDEADBEEF,
               max_probes=1024, strategy="bfs", grow_mode="eager", shrink=False,
               storage=None, impl="auto"):
    """Build any table kind from one parameter set; irrelevant options are ignored.

    ``delta_min=None`` gives a static (non-growing) table where the kind allows it.
    ``impl`` picks the backend ("auto", "compiled" or "python").
    """
    mod = load_backend(impl)
    if kind == "dysect":
        grow = "static" if delta_min is None else grow_mode
        return mod.DysectTable(capacity, 0.9 if delta_min is None else delta_min, T=T, B=B,
                               H=H, seed=seed, max_probes=max_probes, strategy=strategy,
                               grow_mode=grow, shrink=shrink, backend=storage or "portable")
    if kind in ("linear", "robinhood"):
        cls = mod.LinearProbingTable if kind == "linear" else mod.RobinHoodTable
        return cls(max(capacity, 1), delta_min, seed=seed, backend=storage or "reserved")
    if kind == "cuckoo":
        return mod.BucketCuckooTable(max(capacity, 1), delta_min, B=B, H=H, seed=seed,
                                     max_probes=max_probes, strategy=strategy,
                                     backend=storage or "reserved")
    if kind.endswith("-sub") and kind[:-4] in IN_PLACE_KINDS:
        if delta_min is None:
            raise ValueError("subtable variants always grow; give a delta_min")
        return mod.SubtableTable(kind[:-4], capacity, delta_min, T=T, B=B, H=H, seed=seed,
                                 max_probes=max_probes, strategy=strategy)
    raise ValueError(f"unknown table kind {kind!r}; choose from {', '.join(TABLE_KINDS)}")


__all__ = ["LinearProbingTable", "RobinHoodTable", "BucketCuckooTable", "SubtableTable",
           "TABLE_KINDS", "IN_PLACE_KINDS", "make_table"]
