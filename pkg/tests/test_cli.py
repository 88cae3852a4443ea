import json
from importlib import resources

import jsonschema
import pytest
from click.testing import CliRunner

from fieldgeom import report as rp
from fieldgeom import scenario
from fieldgeom.cli import EXIT_FAIL, EXIT_GATE, EXIT_OK, EXIT_USAGE, main

BF = str(scenario.shipped("bf2d"))
SCALAR = str(scenario.shipped("scalar1d"))
NONCOV = str(scenario.shipped("noncovariant"))


@pytest.fixture
def run():
    runner = CliRunner()
    return lambda *args: runner.invoke(main, [str(a) for a in args])


@pytest.fixture(scope="module")
def report_schema():
    return json.loads(resources.files("fieldgeom").joinpath("schemas/report.schema.json").read_text())


def test_help_lists_commands(run):
    out = run("--help").output
    for cmd in ("check", "charges", "dress", "report"):
        assert cmd in out


def test_check_passes_and_validates(run, tmp_path, report_schema):
    js, cs = tmp_path / "r.json", tmp_path / "r.csv"
    res = run("check", SCALAR, "--suite", "a3", "--draws", 2, "--json", js, "--csv", cs)
    assert res.exit_code == EXIT_OK, res.output
    assert "overall pass" in res.output
    rep = json.loads(js.read_text())
    jsonschema.validate(rep, report_schema)
    assert rep["body"]["suites"][0]["draws"] == 2
    assert cs.read_text().splitlines()[0] == ",".join(rp.CSV_COLUMNS)


def test_report_bodies_are_byte_identical(run, tmp_path):
    bodies = []
    for i in range(2):
        js = tmp_path / f"r{i}.json"
        assert run("check", BF, "--suite", "a4", "--draws", 1, "--json", js).exit_code == EXIT_OK
        bodies.append(rp.dumps(json.loads(js.read_text())["body"]))
    assert bodies[0] == bodies[1]


def test_seed_override_changes_the_body(run, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run("check", SCALAR, "--suite", "a3", "--draws", 1, "--json", a)
    run("check", SCALAR, "--suite", "a3", "--draws", 1, "--seed", 99, "--json", b)
    body_a, body_b = (json.loads(p.read_text())["body"] for p in (a, b))
    assert body_b["scenario"]["seed"] == 99
    assert body_a != body_b


def test_quiet(run):
    res = run("check", SCALAR, "--suite", "decomposition", "--draws", 1, "--quiet")
    assert res.exit_code == EXIT_OK and res.output.strip() == "pass"


def test_noncovariant_stops_at_the_gate(run, tmp_path, report_schema):
    js = tmp_path / "gate.json"
    res = run("check", NONCOV, "--json", js)
    assert res.exit_code == EXIT_GATE
    assert "covariance gate failed" in res.output
    rep = json.loads(js.read_text())
    jsonschema.validate(rep, report_schema)
    assert rep["body"]["gate"]["pass"] is False and rep["body"]["suites"] == []
    assert rep["body"]["gate"]["residual"] > 1e-3


def test_charges_refuse_a_noncovariant_density(run):
    assert run("charges", NONCOV).exit_code == EXIT_GATE


@pytest.mark.parametrize("args", [
    ("check", BF, "--suite", "nosuch"),
    ("check", "/nonexistent/scenario.toml"),
    ("check", NONCOV, "--suite", "dfm"),
    ("charges", BF, "--generators", "dz"),
    ("charges", BF, "--slice", "point:1.0"),
    ("check", BF, "--draws", 0),
])
def test_usage_errors(run, args):
    res = run(*args)
    assert res.exit_code == EXIT_USAGE, res.output


def test_clockless_model_skips_clock_suites(run, tmp_path):
    # the noncovariant scenario with a loose gate still has no clocks
    text = scenario.shipped("noncovariant").read_text() + '\n[tolerances]\n"covariance gate" = 10.0\n"identity2" = 1.0\n'
    p = tmp_path / "loose.toml"
    p.write_text(text)
    js = tmp_path / "r.json"
    res = run("check", p, "--draws", 1, "--json", js)
    assert "skipped (no clock fields): dfm, residual" in res.output
    assert json.loads(js.read_text())["body"]["skipped"] == ["dfm", "residual"]


def test_failing_row_gives_exit_1(run, tmp_path):
    text = scenario.shipped("scalar1d").read_text() + '\n[tolerances]\n"current two routes" = 0.0\n'
    p = tmp_path / "strict.toml"
    p.write_text(text)
    res = run("check", p, "--suite", "a3", "--draws", 1)
    assert res.exit_code == EXIT_FAIL
    assert "FAIL" in res.output


def test_bf_charges_closed_form(run, tmp_path):
    js = tmp_path / "q.json"
    res = run("charges", BF, "--json", js)
    assert res.exit_code == EXIT_OK, res.output
    rows = {r["generator"]: r for r in json.loads(js.read_text())["body"]["charges"]}
    # B = 1.2, A_x = 0.5 on y = 0.7, x in [0, pi]: Q(g d/dx) = 1.2 * 0.5 * (g(pi) - g(0))
    assert rows["g_dx"]["total"] == pytest.approx(1.2 * 0.5 * ((0.5 - 0.3) - (0.5 + 0.3)), abs=1e-12)
    assert rows["dx"]["total"] == pytest.approx(0.0, abs=1e-12)
    assert rows["dy"]["total"] == pytest.approx(0.0, abs=1e-12)
    assert rows["zero"]["total"] == 0.0
    assert json.loads(js.read_text())["body"]["field_equation_residual"] <= 1e-12


def test_charges_generator_subset_and_slice(run):
    res = run("charges", BF, "--generators", "g_dx", "--slice", "segment:0.7,0.0,1.5707963267948966")
    assert res.exit_code == EXIT_OK
    lines = res.output.splitlines()
    assert lines[1].startswith("g_dx") and len(lines) == 3
    # g(pi/2) - g(0) = -0.3
    assert f"{1.2 * 0.5 * -0.3:.6e}" in lines[1]


def test_dress_round_trip(run, tmp_path):
    out = tmp_path / "dressed"
    res = run("dress", BF, "--out", out)
    assert res.exit_code == EXIT_OK, res.output
    field, dressed = out / "field.json", out / "dressed.json"
    meta = json.loads(dressed.read_text())["origin"]
    assert meta["dressing"] == {"construction": "clock", "clocks": ["chi1", "chi2"]}
    for path in (field, dressed):
        phi = rp.read_config(path)
        again = tmp_path / "again.json"
        rp.write_config(phi, again, json.loads(path.read_text())["origin"])
        assert again.read_bytes() == path.read_bytes()
    # a second run writes the same bytes
    out2 = tmp_path / "dressed2"
    run("dress", BF, "--out", out2)
    assert (out2 / "dressed.json").read_bytes() == dressed.read_bytes()


def test_dress_without_clocks_is_a_usage_error(run, tmp_path):
    res = run("dress", NONCOV, "--out", tmp_path / "x")
    assert res.exit_code == EXIT_USAGE and "no clock fields" in res.output


def test_report_command(run, tmp_path):
    js = tmp_path / "r.json"
    run("check", SCALAR, "--suite", "a4", "--draws", 1, "--json", js)
    table = run("report", js)
    assert table.exit_code == EXIT_OK and "overall pass" in table.output
    body = run("report", js, "--format", "body")
    assert body.output == rp.dumps(json.loads(js.read_text())["body"])
    csv_out = tmp_path / "r.csv"
    assert run("report", js, "--format", "csv", "--out", csv_out).exit_code == EXIT_OK
    assert csv_out.read_text() == rp.to_csv(json.loads(js.read_text()))


def test_report_rejects_other_json(run, tmp_path):
    p = tmp_path / "other.json"
    p.write_text('{"hello": 1}')
    assert run("report", p).exit_code == EXIT_USAGE


def test_module_entry_point():
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "fieldgeom", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "charges" in res.stdout
