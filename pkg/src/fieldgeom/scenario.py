"""Scenario files: TOML descriptions of a model, its data and the checks to run.

A scenario names a shipped model (or declares a custom one), fixes grid size,
boundary Lagrangian and gamma choice, says how the field configuration is
initialized, and lists the slice, region, generators, dressing and any
tolerance overrides.  See ``scenarios/*.toml`` for complete examples.
"""

from __future__ import annotations

import ast
import operator
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from . import geom, sampling
from .errors import ConfigError, FieldGeomError
from .fieldspace import FieldConfig, FieldSchema, FieldTangent
from .geom import FormField, VectorFieldM
from .grid import PeriodicGrid
from .lagrangian import LagrangianSpec, get_model
from .lagrangian.models import MODELS, Model

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

FAMILIES = ("on_shell", "off_shell", "analytic")

# ---------------------------------------------------------------------------
# analytic expressions in x, y


_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNOPS = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_FUNCS = {"sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp, "log": np.log, "sqrt": np.sqrt, "tanh": np.tanh, "cosh": np.cosh, "sinh": np.sinh, "abs": np.abs}
_CONSTS = {"pi": np.pi}


def evaluate_expression(text: str, env: Mapping[str, Any]):
    """Evaluate an arithmetic expression over numpy arrays.

    Only numbers, the names in ``env`` and ``pi``, + - * / ** (and ^ as a
    power), unary signs and the elementary functions in ``_FUNCS`` are allowed.
    """
    try:
        tree = ast.parse(str(text).replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {text!r}: {exc.msg}") from None

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id in env:
                return env[node.id]
            if node.id in _CONSTS:
                return _CONSTS[node.id]
            raise ConfigError(f"unknown name {node.id!r} in expression {text!r}")
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            return _UNOPS[type(node.op)](ev(node.operand))
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords:
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise ConfigError(f"unsupported syntax in expression {text!r}")

    return ev(tree)


def _grid_function(grid: PeriodicGrid, text) -> np.ndarray:
    env = dict(zip(("x", "y"), grid.mesh))
    out = evaluate_expression(text, env)
    out = np.asarray(out, dtype=float) * np.ones(grid.shape)
    if not np.all(np.isfinite(out)):
        raise ConfigError(f"expression {text!r} is not finite on the grid")
    return out


def _components(value, count: int, what: str) -> list:
    items = [value] if isinstance(value, (str, int, float)) else list(value)
    if len(items) != count:
        raise ConfigError(f"{what} needs {count} component expression(s), got {len(items)}")
    return items


# ---------------------------------------------------------------------------
# regions


def parse_slice(spec: Mapping, dim: int):
    kind = spec.get("kind")
    try:
        if dim == 1 and kind == "point":
            return geom.slice_point(float(spec["x"]))
        if dim == 2 and kind == "segment":
            return geom.Segment(float(spec["y0"]), float(spec["a"]), float(spec["b"]))
        if dim == 2 and kind == "circle":
            return geom.Circle(float(spec["y0"]))
    except KeyError as exc:
        raise ConfigError(f"slice of kind {kind!r} is missing {exc.args[0]!r}") from None
    raise ConfigError(f"slice kind {kind!r} is not available in {dim}D (1D: point; 2D: segment, circle)")


def parse_region(spec: Mapping, dim: int):
    kind = spec.get("kind")
    try:
        if dim == 1 and kind == "interval":
            return geom.Interval(float(spec["a"]), float(spec["b"]))
        if dim == 2 and kind == "band":
            return geom.Band(float(spec["a"]), float(spec["b"]))
        if kind == "whole":
            return geom.Whole(dim)
    except KeyError as exc:
        raise ConfigError(f"region of kind {kind!r} is missing {exc.args[0]!r}") from None
    raise ConfigError(f"region kind {kind!r} is not available in {dim}D (1D: interval, whole; 2D: band, whole)")


def slice_from_text(text: str, dim: int):
    """``point:1.1``, ``segment:y0,a,b`` or ``circle:y0`` (the --slice flag)."""
    kind, _, rest = text.partition(":")
    try:
        nums = [float(v) for v in rest.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"cannot read slice {text!r}") from None
    keys = {"point": ("x",), "segment": ("y0", "a", "b"), "circle": ("y0",)}.get(kind)
    if keys is None or len(nums) != len(keys):
        raise ConfigError(f"cannot read slice {text!r}; expected point:x, segment:y0,a,b or circle:y0")
    return parse_slice({"kind": kind, **dict(zip(keys, nums))}, dim)


def describe_region(D) -> str:
    return repr(D)


# ---------------------------------------------------------------------------
# scenario


@dataclass
class Generator:
    name: str
    components: tuple

    def build(self, grid: PeriodicGrid) -> VectorFieldM:
        comps = _components(self.components, grid.dim, f"generator {self.name!r}")
        return VectorFieldM(grid, [_grid_function(grid, c) for c in comps])


@dataclass
class Scenario:
    name: str
    model_name: str
    seed: int
    grid: dict
    lagrangian: dict
    fields: dict
    slice: dict
    region: dict
    generators: list = field(default_factory=list)
    dressing: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    schema: dict = field(default_factory=dict)
    path: str = ""

    @property
    def dim(self) -> int:
        return int(self.grid["dim"])

    @property
    def gamma(self) -> str:
        return str(self.lagrangian.get("gamma", "zero"))

    def summary(self) -> dict:
        return {"name": self.name, "model": self.model_name, "seed": self.seed, "grid": [self.grid["n"]] * self.dim, "gamma": self.gamma}

    # -- construction

    def build_model(self) -> Model:
        n = int(self.grid["n"])
        boundary = self.lagrangian.get("boundary")
        if isinstance(boundary, list):
            boundary = tuple(boundary)
        if self.model_name == "custom":
            return self._custom_model(n, boundary)
        kwargs: dict = {"n": n}
        if boundary is not None:
            kwargs["boundary"] = boundary
        if "lam" in self.lagrangian.get("params", {}):
            kwargs["lam"] = float(self.lagrangian["params"]["lam"])
        try:
            model = get_model(self.model_name, **kwargs)
        except TypeError as exc:
            raise ConfigError(f"model {self.model_name!r} does not accept these settings: {exc}") from None
        if model.grid.dim != self.dim:
            raise ConfigError(f"model {self.model_name!r} lives in {model.grid.dim}D but the grid says dim = {self.dim}")
        return model

    def _custom_model(self, n: int, boundary) -> Model:
        if "source" not in self.lagrangian:
            raise ConfigError("a custom model needs [lagrangian] source")
        grid = PeriodicGrid((n,) * self.dim)
        degrees = {name: int(k) for name, k in self.schema.get("degrees", {}).items()}
        if not degrees:
            raise ConfigError("a custom model needs [schema.degrees]")
        schema = FieldSchema.build(grid, degrees, self.schema.get("windings", {}))
        spec = LagrangianSpec(self.lagrangian["source"], schema, self.lagrangian.get("params", {}), boundary)
        offsets = self.schema.get("offsets", {})

        def off_shell(rng):
            return sampling.random_config(schema, rng, offsets=offsets)

        declared = self.fields.get("family") == "analytic" and bool(self.fields.get("on_shell", False))

        def on_shell(rng):
            if not declared:
                raise ConfigError("this custom scenario declares no on-shell configuration")
            return self.analytic_config(schema)

        clocks = tuple(name for name, _ in schema.windings)
        return Model("custom", spec, bool(self.lagrangian.get("covariant", True)), on_shell, off_shell, clocks)

    def analytic_config(self, schema: FieldSchema) -> FieldConfig:
        values = self.fields.get("values", {})
        grid = schema.grid
        out = {}
        for name, k in schema.entries:
            if name not in values:
                raise ConfigError(f"[fields.values] has no entry for {name!r}")
            count = 1 if k in (0, grid.dim) else grid.dim
            comps = _components(values[name], count, f"field {name!r}")
            out[name] = FormField(grid, k, [_grid_function(grid, c) for c in comps])
        extra = set(values) - set(schema.names)
        if extra:
            raise ConfigError(f"[fields.values] names unknown fields: {sorted(extra)}")
        return FieldConfig(schema, out)

    def configuration(self, model: Model) -> FieldConfig:
        family = self.fields.get("family", "on_shell")
        rng = np.random.default_rng(self.seed)
        if family == "analytic":
            return self.analytic_config(model.schema)
        if family == "on_shell":
            return model.on_shell(rng)
        return model.off_shell(rng)

    def sigma(self):
        return parse_slice(self.slice, self.dim)

    def region_U(self):
        return parse_region(self.region, self.dim)

    def vector_fields(self, grid: PeriodicGrid, names=None) -> list[tuple[str, VectorFieldM]]:
        gens = {g.name: g for g in self.generators}
        chosen = list(gens) if not names else list(names)
        missing = [n for n in chosen if n not in gens]
        if missing:
            raise ConfigError(f"unknown generator(s) {missing}; scenario defines {sorted(gens)}")
        return [(n, gens[n].build(grid)) for n in chosen]

    def zero_tangent(self, model: Model) -> FieldTangent:
        return FieldTangent.zeros(model.schema)


def _table(data: Mapping, key: str, required: bool = True) -> dict:
    if key not in data:
        if required:
            raise ConfigError(f"scenario is missing the [{key}] table")
        return {}
    value = data[key]
    if not isinstance(value, dict):
        raise ConfigError(f"[{key}] must be a table")
    return value


def from_dict(data: Mapping, path: str = "") -> Scenario:
    head = _table(data, "scenario")
    grid = _table(data, "grid")
    for key in ("dim", "n"):
        if key not in grid:
            raise ConfigError(f"[grid] needs {key!r}")
    if int(grid["dim"]) not in (1, 2):
        raise ConfigError("[grid] dim must be 1 or 2")
    if int(grid["n"]) < 8 or int(grid["n"]) % 2:
        raise ConfigError("[grid] n must be an even number of at least 8")
    model_name = str(head.get("model", ""))
    if model_name != "custom" and model_name not in MODELS:
        raise ConfigError(f"unknown model {model_name!r}; shipped models: {sorted(MODELS)} or 'custom'")
    fields = _table(data, "fields", required=False) or {"family": "on_shell"}
    if fields.get("family", "on_shell") not in FAMILIES:
        raise ConfigError(f"[fields] family must be one of {FAMILIES}")
    gens = []
    for i, g in enumerate(data.get("generators", [])):
        if "components" not in g:
            raise ConfigError(f"generator #{i + 1} needs 'components'")
        gens.append(Generator(str(g.get("name", f"X{i + 1}")), tuple(_components(g["components"], int(grid["dim"]), f"generator #{i + 1}"))))
    lag = _table(data, "lagrangian", required=False)
    if lag.get("gamma", "zero") not in ("zero", "boundary"):
        raise ConfigError("[lagrangian] gamma must be 'zero' or 'boundary'")
    tolerances = {str(k): float(v) for k, v in _table(data, "tolerances", required=False).items()}
    return Scenario(
        name=str(head.get("name", Path(path).stem if path else "scenario")),
        model_name=model_name,
        seed=int(head.get("seed", 0)),
        grid=dict(grid),
        lagrangian=dict(lag),
        fields=dict(fields),
        slice=_table(data, "slice"),
        region=_table(data, "region"),
        generators=gens,
        dressing=_table(data, "dressing", required=False),
        tolerances=tolerances,
        schema=_table(data, "schema", required=False),
        path=str(path),
    )


def load(path) -> Scenario:
    """Read and validate a scenario file; every problem surfaces as ConfigError."""
    p = Path(path)
    try:
        data = tomllib.loads(p.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"scenario {path} is not valid TOML: {exc}") from None
    sc = from_dict(data, str(p))
    # resolve every reference now so later stages never meet a bad name
    try:
        model = sc.build_model()
        sc.sigma()
        sc.region_U()
        sc.vector_fields(model.grid)
        if sc.fields.get("family") == "analytic":
            sc.analytic_config(model.schema)
    except ConfigError:
        raise
    except FieldGeomError as exc:
        raise ConfigError(f"scenario {path}: {exc}") from exc
    return sc


def shipped(name: str) -> Path:
    """Path of a scenario file bundled with the package."""
    p = Path(__file__).parent / "scenarios" / f"{name}.toml"
    if not p.exists():
        raise ConfigError(f"no shipped scenario {name!r}")
    return p


__all__ = [
    "Generator",
    "Scenario",
    "evaluate_expression",
    "from_dict",
    "load",
    "parse_region",
    "parse_slice",
    "shipped",
    "slice_from_text",
]
