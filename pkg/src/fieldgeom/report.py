"""Machine-readable reports and field-configuration files.

A report is a JSON object with two keys.  ``header`` holds everything that
may legitimately differ between two runs of the same scenario (timestamp,
thread count, timings); ``body`` holds the results and is byte-identical for
repeated runs under a fixed seed.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import math
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from . import __version__
from .errors import ConfigError
from .fieldspace import FieldConfig, FieldSchema
from .geom import FormField
from .grid import PeriodicGrid

SCHEMA_VERSION = "1.0"
TOOL = "fieldgeom"
CSV_COLUMNS = ("suite", "name", "anchor", "residual", "tolerance", "pass")


def _number(v) -> float | None:
    # JSON has no inf/nan; a missing residual reads as null and the row fails
    v = float(v)
    return v if math.isfinite(v) else None


def row_dict(row) -> dict:
    d = row.as_dict()
    d["residual"] = _number(d["residual"])
    d["tolerance"] = float(d["tolerance"])
    return d


def build_report(scenario: Mapping, gate: Mapping | None, results: Iterable, threads: int = 1, extra: Mapping | None = None) -> dict:
    results = list(results)
    suites = [
        {"name": r.name, "draws": r.draws, "pass": bool(r.passed), "rows": [row_dict(row) for row in r.rows]}
        for r in results
    ]
    passed = all(s["pass"] for s in suites) and (gate is None or bool(gate["pass"]))
    body = {"scenario": dict(scenario), "gate": None if gate is None else dict(gate), "suites": suites, "pass": passed}
    if extra:
        body.update(extra)
    return {"header": make_header(threads, {r.name: r.seconds for r in results}), "body": body}


def make_header(threads: int = 1, timings: Mapping | None = None) -> dict:
    """Run metadata; the only part of a report allowed to vary between runs."""
    return {
        "tool": TOOL,
        "version": __version__,
        "schema_version": SCHEMA_VERSION,
        "generated": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "threads": int(threads),
        "timings": {k: round(float(v), 3) for k, v in (timings or {}).items()},
    }


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(report: Mapping, path) -> None:
    Path(path).write_text(dumps(report))


def load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read report {path}: {exc}") from exc


def report_rows(report: Mapping) -> list[dict]:
    return [row for s in report["body"]["suites"] for row in s["rows"]]


def to_csv(report: Mapping) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in report_rows(report):
        res = row["residual"]
        w.writerow([row["suite"], row["name"], row["anchor"], "inf" if res is None else repr(res), repr(row["tolerance"]), "pass" if row["pass"] else "FAIL"])
    return buf.getvalue()


def write_csv(report: Mapping, path) -> None:
    Path(path).write_text(to_csv(report))


def render_table(report: Mapping) -> str:
    rows = report_rows(report)
    body = report["body"]
    lines = []
    gate = body.get("gate")
    if gate:
        lines.append(f"covariance gate  {gate['residual']:.3e} <= {gate['tolerance']:.0e}  {'pass' if gate['pass'] else 'FAIL'}")
    width = max([len(r["name"]) for r in rows] + [4])
    sw = max([len(r["suite"]) for r in rows] + [5])
    lines.append(f"{'suite':<{sw}}  {'name':<{width}}  {'residual':>10}  {'tol':>7}  result")
    for r in rows:
        res = "inf" if r["residual"] is None else f"{r['residual']:.3e}"
        lines.append(f"{r['suite']:<{sw}}  {r['name']:<{width}}  {res:>10}  {r['tolerance']:>7.0e}  {'pass' if r['pass'] else 'FAIL'}")
    n_fail = sum(not r["pass"] for r in rows)
    lines.append(f"{len(rows)} rows, {n_fail} failing; overall {'pass' if body['pass'] else 'FAIL'}")
    return "\n".join(lines) + "\n"


def charges_table(rows: Iterable[Mapping]) -> str:
    rows = list(rows)
    gw = max([len(r["generator"]) for r in rows] + [9])
    sw = max([len(r["slice"]) for r in rows] + [5])
    out = [f"{'generator':<{gw}}  {'slice':<{sw}}  {'bulk':>13}  {'corner':>13}  {'total':>13}  gamma"]
    for r in rows:
        # + 0.0 turns -0.0 into 0.0
        b, c, t = (r[k] + 0.0 for k in ("bulk", "corner", "total"))
        out.append(f"{r['generator']:<{gw}}  {r['slice']:<{sw}}  {b:>13.6e}  {c:>13.6e}  {t:>13.6e}  {r['gamma']}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# field configurations


def schema_to_dict(schema: FieldSchema) -> dict:
    return {
        "grid": list(schema.grid.sizes),
        "fields": [{"name": n, "degree": k, "winding": None if schema.winding(n) is None else list(schema.winding(n))} for n, k in schema.entries],
    }


def schema_from_dict(d: Mapping) -> FieldSchema:
    grid = PeriodicGrid(tuple(int(n) for n in d["grid"]))
    degrees = {f["name"]: int(f["degree"]) for f in d["fields"]}
    windings = {f["name"]: f["winding"] for f in d["fields"] if f.get("winding") is not None}
    return FieldSchema.build(grid, degrees, windings)


def config_to_dict(phi: FieldConfig, origin: Mapping | None = None) -> dict:
    """Plain-JSON form of a configuration; ``origin`` records how it was produced."""
    fields = {}
    for name, _ in phi.schema.entries:
        fields[name] = [np.asarray(c, dtype=float).tolist() for c in phi.fields[name].comps]
    return {"schema": schema_to_dict(phi.schema), "fields": fields, "origin": dict(origin) if origin else {"kind": "configuration"}}


def config_from_dict(d: Mapping) -> FieldConfig:
    try:
        schema = schema_from_dict(d["schema"])
        fields = {}
        for name, k in schema.entries:
            comps = [np.asarray(c, dtype=float) for c in d["fields"][name]]
            fields[name] = FormField(schema.grid, k, comps)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed field file: {exc}") from exc
    return FieldConfig(schema, fields)


def write_config(phi: FieldConfig, path, origin: Mapping | None = None) -> None:
    Path(path).write_text(dumps(config_to_dict(phi, origin)))


def read_config(path) -> FieldConfig:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read field file {path}: {exc}") from exc
    return config_from_dict(data)


__all__ = [
    "CSV_COLUMNS",
    "SCHEMA_VERSION",
    "build_report",
    "charges_table",
    "config_from_dict",
    "config_to_dict",
    "dumps",
    "load_json",
    "make_header",
    "read_config",
    "render_table",
    "report_rows",
    "schema_from_dict",
    "schema_to_dict",
    "to_csv",
    "write_config",
    "write_csv",
    "write_json",
]
