"""Command-line runner: ``fieldgeom check | charges | dress | report``.

Exit codes: 0 success, 1 a residual out of tolerance (or a computation that
could not finish), 2 a usage or scenario error, 3 the covariance gate failed.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click
import numpy as np

from . import cps, dfm, sampling, suites
from . import report as rp
from .errors import ConfigError, FieldGeomError
from .lagrangian import check_covariance
from .scenario import Scenario, load, slice_from_text

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_GATE = 0, 1, 2, 3
GATE_DRAWS = 5
GATE_TOLERANCE = 1e-8
CLOCK_SUITES = ("dfm", "residual")


class _Exit(Exception):
    def __init__(self, code: int, message: str = ""):
        super().__init__(message)
        self.code = code
        self.message = message


def _load(path) -> Scenario:
    try:
        return load(path)
    except ConfigError as exc:
        raise _Exit(EXIT_USAGE, f"error: {exc}") from None


def covariance_gate(model, tolerances: dict, seed: int) -> dict:
    """Worst D L(X^v) - d iota_X L over a few seeded (X, phi) draws."""
    el = model.euler_lagrange()
    worst = 0.0
    for rng in sampling.spawn(seed * 1000 + sum(b"gate"), GATE_DRAWS):
        phi = model.off_shell(rng)
        X = sampling.random_vector_field(model.grid, rng)
        worst = max(worst, check_covariance(el, X, phi))
    tol = float(tolerances.get("covariance gate", GATE_TOLERANCE))
    return {"residual": float(worst), "tolerance": tol, "pass": bool(worst <= tol)}


def _gate_or_exit(model, sc: Scenario, seed: int) -> dict:
    gate = covariance_gate(model, sc.tolerances, seed)
    if not gate["pass"]:
        raise _Exit(EXIT_GATE, f"covariance gate failed: residual {gate['residual']:.3e} exceeds {gate['tolerance']:.1e}; the density is not diffeomorphism covariant")
    return gate


def _run(fn):
    try:
        code = fn()
    except _Exit as exc:
        if exc.message:
            click.echo(exc.message, err=True)
        sys.exit(exc.code)
    sys.exit(code)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(package_name="artifact", prog_name="fieldgeom")
def main():
    """Identity suites, Noether charges and dressings for scenario files."""


@main.command()
@click.argument("scenario", type=click.Path(dir_okay=False))
@click.option("--suite", default="all", show_default=True, type=click.Choice(["all", *suites.SUITES]), help="Suite to run.")
@click.option("--seed", type=int, default=None, help="Override the scenario seed.")
@click.option("--draws", type=click.IntRange(min=1), default=None, help="Random draws per suite (default: per-suite setting).")
@click.option("--json", "json_out", type=click.Path(dir_okay=False), default=None, help="Write the full JSON report here.")
@click.option("--csv", "csv_out", type=click.Path(dir_okay=False), default=None, help="Write a CSV summary here.")
@click.option("--quiet", is_flag=True, help="Print only the overall verdict.")
def check(scenario, suite, seed, draws, json_out, csv_out, quiet):
    """Run identity suites on SCENARIO after the covariance gate."""

    def go():
        sc = _load(scenario)
        s = sc.seed if seed is None else seed
        model = sc.build_model()
        names = list(suites.SUITES) if suite == "all" else [suite]
        skipped = []
        if not model.clocks:
            if suite != "all" and suite in CLOCK_SUITES:
                raise _Exit(EXIT_USAGE, f"error: suite {suite!r} needs clock fields and model {model.name!r} has none")
            skipped = [n for n in names if n in CLOCK_SUITES]
            names = [n for n in names if n not in CLOCK_SUITES]
        gate = covariance_gate(model, sc.tolerances, s)
        summary = sc.summary() | {"seed": s}
        if not gate["pass"]:
            rep = rp.build_report(summary, gate, [], suites.thread_count(), {"skipped": names})
            _write(rep, json_out, csv_out)
            raise _Exit(EXIT_GATE, f"covariance gate failed: residual {gate['residual']:.3e} exceeds {gate['tolerance']:.1e}; no suite was run")
        ctx = suites.Context(model, sc.sigma(), sc.region_U(), sc.gamma, sc.tolerances)
        results, errors = [], {}
        for name in names:
            try:
                results.append(suites.run_suite(name, ctx, s, draws))
            except FieldGeomError as exc:
                errors[name] = str(exc)
        extra = {"skipped": skipped}
        if errors:
            extra["errors"] = errors
        rep = rp.build_report(summary, gate, results, suites.thread_count(), extra)
        if errors:
            rep["body"]["pass"] = False
        _write(rep, json_out, csv_out)
        if not quiet:
            click.echo(rp.render_table(rep), nl=False)
            for name, msg in errors.items():
                click.echo(f"suite {name} could not run: {msg}", err=True)
            if skipped:
                click.echo(f"skipped (no clock fields): {', '.join(skipped)}")
        else:
            click.echo("pass" if rep["body"]["pass"] else "FAIL")
        return EXIT_OK if rep["body"]["pass"] else EXIT_FAIL

    _run(go)


def _write(rep, json_out, csv_out):
    if json_out:
        rp.write_json(rep, json_out)
    if csv_out:
        rp.write_csv(rep, csv_out)


def _on_shell_flag(sc: Scenario):
    family = sc.fields.get("family", "on_shell")
    if family == "analytic":
        return bool(sc.fields.get("on_shell", False))
    return family == "on_shell"


@main.command()
@click.argument("scenario", type=click.Path(dir_okay=False))
@click.option("--generators", default=None, help="Comma-separated generator names (default: all in the scenario).")
@click.option("--slice", "slice_text", default=None, help="Override the slice: point:x, segment:y0,a,b or circle:y0.")
@click.option("--json", "json_out", type=click.Path(dir_okay=False), default=None, help="Write the rows as JSON.")
def charges(scenario, generators, slice_text, json_out):
    """Noether charges of the scenario's generators on its configuration."""

    def go():
        sc = _load(scenario)
        model = sc.build_model()
        try:
            Sigma = sc.sigma() if slice_text is None else slice_from_text(slice_text, sc.dim)
            names = [g.strip() for g in generators.split(",") if g.strip()] if generators else None
            gens = sc.vector_fields(model.grid, names)
        except ConfigError as exc:
            raise _Exit(EXIT_USAGE, f"error: {exc}") from None
        gate = _gate_or_exit(model, sc, sc.seed)
        phi = sc.configuration(model)
        el = model.euler_lagrange()
        ps = cps.PhaseSpace(el, sc.gamma)
        flag = _on_shell_flag(sc)
        e_res = float(max(np.max(np.abs(v)) for v in el.coefficients(phi).values()))
        rows = [ps.charge(X, Sigma, phi, on_shell=flag, name=name).as_dict() for name, X in gens]
        click.echo(rp.charges_table(rows), nl=False)
        click.echo(f"field-equation residual sup|E| = {e_res:.3e}")
        if json_out:
            body = {"scenario": sc.summary(), "gate": gate, "slice": repr(Sigma), "field_equation_residual": e_res, "charges": rows}
            rp.write_json({"header": rp.make_header(), "body": body}, json_out)
        return EXIT_OK

    _run(go)


@main.command()
@click.argument("scenario", type=click.Path(dir_okay=False))
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True, help="Directory for field.json and dressed.json.")
def dress(scenario, out_dir):
    """Dress the scenario's configuration with its clock fields."""

    def go():
        sc = _load(scenario)
        model = sc.build_model()
        phi = sc.configuration(model)
        clocks = sc.dressing.get("clocks")
        if not (clocks or model.clocks):
            raise _Exit(EXIT_USAGE, f"error: model {model.name!r} has no clock fields to dress with")
        try:
            u = dfm.clock_dressing(model.schema, clocks)
            phi_u = dfm.dress_field(phi, u)
        except FieldGeomError as exc:
            raise _Exit(EXIT_USAGE if isinstance(exc, ConfigError) else EXIT_FAIL, f"error: {exc}") from None
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        base = {"scenario": sc.name, "family": sc.fields.get("family", "on_shell"), "seed": sc.seed}
        rp.write_config(phi, out / "field.json", base | {"kind": "configuration"})
        rp.write_config(phi_u, out / "dressed.json", base | {"kind": "dressed", "dressing": u.describe(), "source": "field.json"})
        click.echo(f"wrote {out / 'field.json'} and {out / 'dressed.json'}")
        return EXIT_OK

    _run(go)


@main.command("report")
@click.argument("report_file", type=click.Path(dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["table", "csv", "body"]), default="table", show_default=True)
@click.option("--out", "out_file", type=click.Path(dir_okay=False), default=None, help="Write here instead of stdout.")
def report_cmd(report_file, fmt, out_file):
    """Render a JSON report as a table, a CSV summary, or its deterministic body."""

    def go():
        try:
            rep = rp.load_json(report_file)
            text = {"table": rp.render_table, "csv": rp.to_csv, "body": lambda r: rp.dumps(r["body"])}[fmt](rep)
        except (ConfigError, KeyError, TypeError) as exc:
            raise _Exit(EXIT_USAGE, f"error: not a fieldgeom report: {exc}") from None
        if out_file:
            Path(out_file).write_text(text)
        else:
            click.echo(text, nl=False)
        return EXIT_OK if rep["body"].get("pass", False) else EXIT_FAIL

    _run(go)


if __name__ == "__main__":
    main()
