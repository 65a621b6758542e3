"""Exceptions shared by the compiled and pure-Python table backends."""


class TableError(RuntimeError):
    pass


class InsertFailed(TableError):
    """No free cell could be reached and the table may not grow.

    The table is left exactly as it was before the failing insert.
    """


class ShrinkFailed(TableError):
    """Reinsertion during a subtable shrink failed; the shrink was undone."""


class MigrationError(TableError):
    """An element buffered during an in-place migration could not be reinserted."""
