import zlib

import numpy as np
import pytest

from fieldgeom import scenario, suites
from fieldgeom.grid import PeriodicGrid

# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def g1():
    return PeriodicGrid((64,))


@pytest.fixture
def g2():
    return PeriodicGrid((32, 32))


@pytest.fixture
def rng(request):
    # stable per-test seed so failures reproduce
    return np.random.default_rng(zlib.crc32(request.node.name.encode()))


def shipped_context(name: str) -> suites.Context:
    """Suite context for a shipped scenario, built the way the command line builds it."""
    sc = scenario.load(scenario.shipped(name))
    return suites.Context(sc.build_model(), sc.sigma(), sc.region_U(), sc.gamma, sc.tolerances)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
