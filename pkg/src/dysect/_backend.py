"""Backend selection: the compiled core when it imports, else pure Python.

Set ``DYSECT_PURE=1`` to force the fallback.
"""

import importlib
import os

_MODULES = {"compiled": "dysect._core", "python": "dysect._pure"}


def load_backend(name="auto"):
    """Return the backend module called ``name`` ("auto", "compiled" or "python")."""
    if name not in ("auto", *_MODULES):
        raise ValueError(f"unknown backend {name!r}")
    if name == "auto":
        if os.environ.get("DYSECT_PURE") == "1":
            return importlib.import_module(_MODULES["python"])
        try:
            return importlib.import_module(_MODULES["compiled"])
        except ImportError:
            return importlib.import_module(_MODULES["python"])
    return importlib.import_module(_MODULES[name])


def available_backends():
    out = []
    for name in _MODULES:
        try:
            load_backend(name)
        except ImportError:
            continue
        out.append(name)
    return out


backend = load_backend()
BACKEND = backend.BACKEND
