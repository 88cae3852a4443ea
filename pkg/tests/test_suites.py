import math

import pytest

from fieldgeom import suites
from fieldgeom.errors import ConfigError
from fieldgeom.suites import Check, Context, run_suite

from conftest import shipped_context


@pytest.fixture(scope="module")
def scalar_ctx():
    return shipped_context("scalar1d")


def _rows(result):
    return [(r.name, r.residual, r.tolerance, r.passed, r.draws) for r in result.rows]


def test_aggregate_keeps_the_worst_draw():
    draws = [
        [Check("a", "x", 1e-9, 1e-8), Check("ctl", "y", 0.5, 1e-3, floor=True)],
        [Check("a", "x", 3e-9, 1e-8), Check("ctl", "y", 0.2, 1e-3, floor=True)],
    ]
    rows = {r.name: r for r in suites._aggregate("s", draws, {})}
    assert rows["a"].residual == 3e-9 and rows["a"].passed and rows["a"].draws == 2
    assert rows["ctl"].residual == 0.2 and rows["ctl"].kind == "min" and rows["ctl"].passed


def test_nan_counts_as_failure():
    (row,) = suites._aggregate("s", [[Check("a", "x", math.nan, 1.0)]], {})
    assert row.residual == math.inf and not row.passed


def test_positive_control_below_floor_fails():
    (row,) = suites._aggregate("s", [[Check("ctl", "y", 1e-6, 1e-3, floor=True)]], {})
    assert not row.passed


def test_tolerance_override():
    (row,) = suites._aggregate("s", [[Check("a", "x", 1e-9, 1e-8)]], {"a": 1e-10})
    assert row.tolerance == 1e-10 and not row.passed


def test_unknown_suite(scalar_ctx):
    with pytest.raises(ConfigError, match="unknown suite"):
        run_suite("nosuch", scalar_ctx)


def test_same_seed_same_rows(scalar_ctx):
    a = run_suite("a3", scalar_ctx, seed=4, draws=3)
    b = run_suite("a3", scalar_ctx, seed=4, draws=3)
    assert _rows(a) == _rows(b)
    assert a.draws == 3 and all(r.draws == 3 for r in a.rows)


def test_threads_do_not_change_results(scalar_ctx):
    serial = run_suite("dfm", scalar_ctx, seed=2, draws=3, threads=1)
    pooled = run_suite("dfm", scalar_ctx, seed=2, draws=3, threads=3)
    assert _rows(serial) == _rows(pooled)


def test_suites_do_not_share_draws(scalar_ctx):
    # the suite name salts the seed
    a = run_suite("a3", scalar_ctx, seed=0, draws=1)
    b = run_suite("a3", scalar_ctx, seed=1, draws=1)
    assert _rows(a) != _rows(b)


def test_thread_count_from_environment(monkeypatch):
    monkeypatch.setenv(suites.THREADS_ENV, "4")
    assert suites.thread_count() == 4
    monkeypatch.setenv(suites.THREADS_ENV, "0")
    assert suites.thread_count() == 1
    monkeypatch.setenv(suites.THREADS_ENV, "many")
    with pytest.raises(ConfigError):
        suites.thread_count()


def test_default_draws_cover_every_suite():
    assert set(suites.DEFAULT_DRAWS) == set(suites.SUITES)
    assert all(n >= 5 for n in suites.DEFAULT_DRAWS.values())


def test_clock_suites_need_clocks():
    from fieldgeom.lagrangian import noncovariant1d

    model = noncovariant1d()
    ctx = Context(model, *suites.default_regions(model.grid))
    with pytest.raises(ConfigError):
        run_suite("dfm", ctx, draws=1)
