import os
import sys

import pytest

from dysect import available_backends, load_backend, make_table

BACKENDS = available_backends()


@pytest.fixture(params=BACKENDS)
def impl(request):
    return request.param


@pytest.fixture
def mod(impl):
    return load_backend(impl)


def pytest_report_header(config):
    return f"dysect backends: {', '.join(BACKENDS)}"


def small(kind, impl, capacity=64, delta_min=0.9, **kw):
    """A small table; subtable-style kinds get few subtables so growth happens early."""
    kw.setdefault("T", 16 if kind.endswith("-sub") else 64)
    return make_table(kind, capacity, delta_min, impl=impl, **kw)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("tests.test_acceptance") or sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for num in sorted(results):
            terminalreporter.write_line(results[num])
