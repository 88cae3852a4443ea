"""Random band-limited test data: fields, tangents, vector fields, diffeomorphisms."""

from __future__ import annotations

import numpy as np

from . import dual as ad
from .fieldspace import FieldConfig, FieldDepDiffeo, FieldDepVectorM, FieldSchema, FieldTangent
from .geom import Diffeo, FormField, VectorFieldM
from .grid import PeriodicGrid


def band_limited(grid: PeriodicGrid, rng: np.random.Generator, modes: int = 3, amp: float = 1.0) -> np.ndarray:
    """Random real trigonometric polynomial with |k| <= modes per axis, sup-norm about amp."""
    out = np.zeros(grid.shape)
    ks = range(-modes, modes + 1)
    if grid.dim == 1:
        (x,) = grid.mesh
        for k in ks:
            a, b = rng.normal(size=2)
            out += a * np.cos(k * x) + b * np.sin(k * x)
    else:
        x, y = grid.mesh
        for k in ks:
            for l in range(0, modes + 1):
                a, b = rng.normal(size=2)
                out += a * np.cos(k * x + l * y) + b * np.sin(k * x + l * y)
    scale = np.max(np.abs(out))
    return amp * out / scale if scale > 0 else out


def random_form(grid: PeriodicGrid, degree: int, rng, modes: int = 3, amp: float = 1.0) -> FormField:
    n = 1 if degree in (0, grid.dim) else grid.dim
    return FormField(grid, degree, [band_limited(grid, rng, modes, amp) for _ in range(n)])


def random_vector_field(grid: PeriodicGrid, rng, modes: int = 2, amp: float = 0.5) -> VectorFieldM:
    return VectorFieldM(grid, [band_limited(grid, rng, modes, amp) for _ in range(grid.dim)])


def random_diffeo(grid: PeriodicGrid, rng, modes: int = 2, size: float = 0.3) -> Diffeo:
    """Displacement rescaled so the Jacobian bound is ``size`` (< 1)."""
    disp = [band_limited(grid, rng, modes) for _ in range(grid.dim)]
    bound = Diffeo(grid, disp, check=False).jacobian_bound()
    scale = size / bound if bound > 0 else 1.0
    return Diffeo(grid, [scale * f for f in disp])


def random_config(schema: FieldSchema, rng, modes: int = 3, amp: float = 0.5, offsets: dict | None = None) -> FieldConfig:
    """Random fields; ``offsets`` adds a constant to named 0-form or 1-form slots (e.g. a positive einbein)."""
    offsets = offsets or {}
    fields = {}
    for name, k in schema.entries:
        form = random_form(schema.grid, k, rng, modes, amp)
        if name in offsets:
            form = FormField(form.grid, k, [c + offsets[name] for c in form.comps])
        fields[name] = form
    return FieldConfig(schema, fields)


def random_tangent(schema: FieldSchema, rng, modes: int = 3, amp: float = 1.0) -> FieldTangent:
    return FieldTangent(schema, {n: random_form(schema.grid, k, rng, modes, amp) for n, k in schema.entries})


def _probe(phi: FieldConfig, weights: dict):
    """A smooth scalar functional of phi: a weighted mean of its components."""
    total = 0.0
    for name, w in weights.items():
        for c in phi.fields[name].comps:
            total = total + w * ad.linear(np.mean, c)
    return total


def random_field_dep_vf(schema: FieldSchema, rng, modes: int = 2, amp: float = 0.3) -> FieldDepVectorM:
    """X(phi) = X0 + s(phi) X1 + s(phi)^2 X2 with s a random linear functional of phi.

    The nonlinearity makes D X depend on phi, which exercises every bracket term.
    """
    grid = schema.grid
    X0, X1, X2 = (random_vector_field(grid, rng, modes, amp) for _ in range(3))
    weights = {n: float(rng.normal()) for n in schema.names}

    def fn(phi):
        s = _probe(phi, weights)
        return X0 + X1 * s + X2 * (0.5 * s * s)

    return FieldDepVectorM(fn, "random")


def random_field_dep_diffeo(schema: FieldSchema, rng, modes: int = 2, size: float = 0.2) -> FieldDepDiffeo:
    """psi(phi) with displacement f0 + tanh(s(phi)) f1, bounded so the Jacobian stays < 1."""
    grid = schema.grid
    f0 = random_diffeo(grid, rng, modes, size / 2).disp
    f1 = random_diffeo(grid, rng, modes, size / 2).disp
    weights = {n: float(rng.normal()) for n in schema.names}

    def fn(phi):
        t = ad.tanh(_probe(phi, weights))
        return Diffeo(grid, [a + t * b for a, b in zip(f0, f1)], check=False)

    return FieldDepDiffeo(fn, "random")


def _gauge_band(grid: PeriodicGrid) -> tuple[int, float]:
    # on T^2 composites of two-mode diffeos alias at 32^2; one mode stays resolved
    return (2, 0.3) if grid.dim == 1 else (1, 0.2)


def gauge_diffeo(grid: PeriodicGrid, rng) -> Diffeo:
    """A random diffeo whose pullback composites stay resolved by the grid."""
    modes, size = _gauge_band(grid)
    return random_diffeo(grid, rng, modes, size)


def gauge_field_dep_diffeo(schema: FieldSchema, rng) -> FieldDepDiffeo:
    modes, size = _gauge_band(schema.grid)
    return random_field_dep_diffeo(schema, rng, modes, min(size, 0.2))


def spawn(seed: int, n: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]
