"""The DySECT table from the selected backend."""

from ._backend import backend

DysectTable = backend.DysectTable
GROW_MODES = ("eager", "on_failure", "static")
STRATEGIES = ("bfs", "rw-optimistic", "rw-pessimistic")

__all__ = ["DysectTable", "GROW_MODES", "STRATEGIES"]
