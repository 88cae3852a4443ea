"""Shipped model library with exactly constructed on-shell families."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .. import sampling
from ..fieldspace import FieldConfig, FieldSchema, FieldTangent
from ..geom import FormField, d
from ..grid import PeriodicGrid
from .euler import EulerLagrange, LagrangianSpec


@dataclass
class Model:
    name: str
    spec: LagrangianSpec
    covariant: bool
    on_shell: Callable[[np.random.Generator], FieldConfig]
    off_shell: Callable[[np.random.Generator], FieldConfig]
    clocks: tuple[str, ...] = ()
    on_shell_tangent: Callable[[np.random.Generator], FieldTangent] | None = None
    # Fourier modes of random off-shell data; products of such data must stay resolved by the grid
    modes: int = 3
    # clocks enter only through a term whose field equations vanish identically
    inert_clocks: bool = False

    @property
    def schema(self) -> FieldSchema:
        return self.spec.schema

    @property
    def grid(self) -> PeriodicGrid:
        return self.spec.schema.grid

    def euler_lagrange(self) -> EulerLagrange:
        return EulerLagrange(self.spec)


SCALAR_1D = "0.5*dx(phi)^2/eps_x + lam*eps_x"
BF_2D = "B*(dx(A_y) - dy(A_x)) + dx(chi1)*dy(chi2) - dy(chi1)*dx(chi2)"
NONCOVARIANT_1D = "0.5*dx(phi)^2"


def scalar1d(n: int = 128, lam: float = 0.5, boundary: str | None = None) -> Model:
    """Parametrized scalar on S^1 with einbein eps; phi has winding 1 and serves as a clock.

    Solutions: any monotone phi with eps = phi'/k, k = sqrt(2 lam).
    """
    grid = PeriodicGrid((n,))
    schema = FieldSchema.build(grid, {"phi": 0, "eps": 1}, {"phi": (1,)})
    spec = LagrangianSpec(SCALAR_1D, schema, {"lam": lam}, boundary)
    k = np.sqrt(2.0 * lam)

    def clock(rng):
        # periodic part of phi with |c'| <= 0.3, so phi = x + c stays monotone
        c = sampling.band_limited(grid, rng, modes=2, amp=1.0)
        return c * (0.3 / np.max(np.abs(d(FormField(grid, 0, [c])).comps[0])))

    def on_shell(rng):
        c = clock(rng)
        dphi = 1.0 + d(FormField(grid, 0, [c])).comps[0]
        return FieldConfig(schema, {"phi": FormField(grid, 0, [c]), "eps": FormField(grid, 1, [dphi / k])})

    def off_shell(rng):
        c = clock(rng)
        e = 1.0 + sampling.band_limited(grid, rng, modes=3, amp=0.3)
        return FieldConfig(schema, {"phi": FormField(grid, 0, [c]), "eps": FormField(grid, 1, [e])})

    def on_shell_tangent(rng):
        # variations of the solution family: delta eps = (delta c)'/k
        c = FormField(grid, 0, [sampling.band_limited(grid, rng, modes=2, amp=0.5)])
        return FieldTangent(schema, {"phi": c, "eps": FormField(grid, 1, [d(c).comps[0] / k])})

    return Model("scalar1d", spec, True, on_shell, off_shell, ("phi",), on_shell_tangent)


def bf2d(n: int = 32, boundary=None) -> Model:
    """BF theory B dA on T^2 plus the clock term d chi1 ^ d chi2.

    Solutions: B constant, A = c1 dx + c2 dy + d lambda, clocks arbitrary.
    """
    grid = PeriodicGrid((n, n))
    schema = FieldSchema.build(grid, {"B": 0, "A": 1, "chi1": 0, "chi2": 0}, {"chi1": (1, 0), "chi2": (0, 1)})
    spec = LagrangianSpec(BF_2D, schema, {}, boundary)

    def clocks(rng):
        # single-mode clocks: composites with chi^-1 stay resolved on a 32^2 grid
        disp = sampling.random_diffeo(grid, rng, modes=1, size=0.2).disp
        return FormField(grid, 0, [disp[0]]), FormField(grid, 0, [disp[1]])

    def on_shell(rng):
        b0 = float(rng.uniform(0.5, 1.5))
        c1, c2 = rng.uniform(-1.0, 1.0, size=2)
        lam = FormField(grid, 0, [sampling.band_limited(grid, rng, modes=2, amp=0.3)])
        dl = d(lam)
        A = FormField(grid, 1, [dl.comps[0] + c1, dl.comps[1] + c2])
        B = FormField(grid, 0, [np.full(grid.shape, b0)])
        x1, x2 = clocks(rng)
        return FieldConfig(schema, {"B": B, "A": A, "chi1": x1, "chi2": x2})

    def off_shell(rng):
        x1, x2 = clocks(rng)
        return FieldConfig(
            schema,
            {
                "B": sampling.random_form(grid, 0, rng, modes=2, amp=0.5),
                "A": sampling.random_form(grid, 1, rng, modes=2, amp=0.5),
                "chi1": x1,
                "chi2": x2,
            },
        )

    def on_shell_tangent(rng):
        # delta B constant, delta A closed, clock variations free
        db = float(rng.uniform(-1.0, 1.0))
        c1, c2 = rng.uniform(-1.0, 1.0, size=2)
        dl = d(FormField(grid, 0, [sampling.band_limited(grid, rng, modes=2, amp=0.5)]))
        return FieldTangent(
            schema,
            {
                "B": FormField(grid, 0, [np.full(grid.shape, db)]),
                "A": FormField(grid, 1, [dl.comps[0] + c1, dl.comps[1] + c2]),
                "chi1": sampling.random_form(grid, 0, rng, modes=2, amp=0.5),
                "chi2": sampling.random_form(grid, 0, rng, modes=2, amp=0.5),
            },
        )

    return Model("bf2d", spec, True, on_shell, off_shell, ("chi1", "chi2"), on_shell_tangent, modes=2, inert_clocks=True)


def noncovariant1d(n: int = 32) -> Model:
    """Bare 1/2 phi'^2 with no einbein: a deliberate positive control for the covariance gate."""
    grid = PeriodicGrid((n,))
    schema = FieldSchema.build(grid, {"phi": 0})
    spec = LagrangianSpec(NONCOVARIANT_1D, schema)

    def sample(rng):
        return FieldConfig(schema, {"phi": sampling.random_form(grid, 0, rng, amp=0.5)})

    return Model("noncovariant1d", spec, False, sample, sample)


MODELS = {"scalar1d": scalar1d, "bf2d": bf2d, "noncovariant1d": noncovariant1d}


def get_model(name: str, **kwargs) -> Model:
    try:
        factory = MODELS[name]
    except KeyError:
        raise KeyError(f"unknown model {name!r}; available: {sorted(MODELS)}") from None
    return factory(**kwargs)
