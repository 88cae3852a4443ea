"""Field-space geometry, covariant phase space and dressings on periodic grids."""

__version__ = "0.1.0"

from . import cps, dfm, dual, fieldspace, geom, grid, lagrangian, report, sampling, scenario, suites  # noqa: E402
from .errors import (  # noqa: E402
    ConfigError,
    DegreeError,
    DressingDegenerateError,
    FieldGeomError,
    InvalidDataError,
    NearSingularDiffeoError,
    ParseError,
)
from .fieldspace import FieldConfig, FieldForm, FieldSchema, FieldTangent  # noqa: E402
from .geom import Diffeo, FormField, VectorFieldM  # noqa: E402
from .grid import PeriodicGrid  # noqa: E402

__all__ = [
    "ConfigError",
    "DegreeError",
    "Diffeo",
    "DressingDegenerateError",
    "FieldConfig",
    "FieldForm",
    "FieldGeomError",
    "FieldSchema",
    "FieldTangent",
    "FormField",
    "InvalidDataError",
    "NearSingularDiffeoError",
    "ParseError",
    "PeriodicGrid",
    "VectorFieldM",
    "cps",
    "dfm",
    "dual",
    "fieldspace",
    "geom",
    "grid",
    "lagrangian",
    "report",
    "sampling",
    "scenario",
    "suites",
]
