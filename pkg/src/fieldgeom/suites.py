"""Identity suites over seeded random draws.

A suite is a function ``(ctx, rng) -> list[Check]`` for a single draw.  The
runner repeats it over independent generators spawned from one seed and
keeps the worst value of every check, so each row in a report states the
largest residual seen and the tolerance it was held to.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from . import cps, dfm, geom, sampling
from . import dual as ad
from . import fieldspace as fs
from .errors import ConfigError
from .fieldspace import FieldDepVectorM, FieldForm
from .geom import Diffeo, VectorFieldM
from .lagrangian import check_covariance, check_decomposition, noncovariant1d
from .lagrangian.models import Model

THREADS_ENV = "FIELDGEOM_THREADS"


@dataclass(frozen=True)
class Check:
    """One measured residual from one draw.

    With ``floor`` set the check is a positive control: it passes when the
    value is at least ``tolerance``.
    """

    name: str
    anchor: str
    value: float
    tolerance: float
    floor: bool = False


@dataclass
class Row:
    suite: str
    name: str
    anchor: str
    residual: float
    tolerance: float
    passed: bool
    kind: str = "max"
    draws: int = 1

    def as_dict(self) -> dict:
        return {
            "suite": self.suite,
            "name": self.name,
            "anchor": self.anchor,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "kind": self.kind,
            "draws": self.draws,
        }


@dataclass
class SuiteResult:
    name: str
    draws: int
    rows: list[Row]
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)


@dataclass
class Context:
    """Everything a suite needs besides randomness."""

    model: Model
    Sigma: object
    U: object
    gamma: str = "zero"
    tolerances: dict = field(default_factory=dict)

    @cached_property
    def el(self):
        return self.model.euler_lagrange()

    @property
    def grid(self):
        return self.model.grid

    @property
    def schema(self):
        return self.model.schema

    @property
    def dim(self) -> int:
        return self.model.grid.dim


def default_regions(grid) -> tuple:
    """A slice with boundary and a region with boundary suited to the grid's dimension."""
    if grid.dim == 1:
        return geom.slice_point(1.1), geom.Interval(0.5, 2.0)
    return geom.Segment(0.7, 0.3, 2.5), geom.Band(0.5, 2.0)


# ---------------------------------------------------------------------------
# helpers


def _rel(diff, ref) -> float:
    return ad.sup_norm(diff) / max(1.0, ad.sup_norm(ref))


def _tangent(ctx: Context, rng, amp: float = 0.5):
    return sampling.random_tangent(ctx.schema, rng, modes=ctx.model.modes, amp=amp)


def _vf(ctx: Context, rng) -> VectorFieldM:
    return sampling.random_vector_field(ctx.grid, rng)


def vanishing_factor(grid, Sigma) -> np.ndarray:
    """A band-limited function of x vanishing at the endpoints of a segment slice (1 otherwise)."""
    pts = [p for _, p in Sigma.boundary()] if grid.dim == 2 else []
    if not pts:
        return np.ones(grid.shape)
    a, b = sorted(float(p.coords[0]) for p in pts)
    x = grid.mesh[0]
    # sin((x-a)/2) sin((x-b)/2) rewritten as a single periodic mode
    return np.cos(0.5 * (b - a)) - np.cos(x - 0.5 * (a + b))


def _vanishing_vf(ctx: Context, rng) -> VectorFieldM:
    return _vf(ctx, rng) * vanishing_factor(ctx.grid, ctx.Sigma)


def _richardson(F: Callable, h: float):
    """d/dtau F(tau) at 0 from central differences at h and h/2."""

    def central(s):
        return ad.tscale(1.0 / (2.0 * s), ad.tsub(F(s), F(-s)))

    coarse, fine = central(h), central(0.5 * h)
    return ad.tscale(1.0 / 3.0, ad.tsub(ad.tscale(4.0, fine), coarse))


def _on_shell_pair(ctx: Context, rng):
    m = ctx.model
    phi = m.on_shell(rng)
    if m.on_shell_tangent is None:
        raise ConfigError(f"model {m.name!r} has no on-shell tangent sampler")
    return phi, m.on_shell_tangent(rng), m.on_shell_tangent(rng)


def _require_clocks(ctx: Context):
    if not ctx.model.clocks:
        raise ConfigError(f"model {ctx.model.name!r} has no clock fields to dress with")


# ---------------------------------------------------------------------------
# suites


def suite_decomposition(ctx: Context, rng) -> list[Check]:
    el, m = ctx.el, ctx.model
    phi = m.off_shell(rng)
    d1, d2 = _tangent(ctx, rng), _tangent(ctx, rng)
    X = _vf(ctx, rng)
    a, b = rng.uniform(-2.0, 2.0, size=2)
    lin_E = el.E(phi, d1 * a + d2 * b) - el.E(phi, d1) * a - el.E(phi, d2) * b
    lin_t = el.theta(phi, d1 * a + d2 * b) - el.theta(phi, d1) * a - el.theta(phi, d2) * b
    out = [
        Check("decomposition", "dL = E + d theta pointwise", check_decomposition(el, phi, d1), 1e-8),
        Check("covariance gate", "D L(X^v) = d iota_X L for a covariant density", check_covariance(el, X, phi), 1e-8),
        Check("E linear in the tangent", "E(a d1 + b d2) = a E(d1) + b E(d2)", geom.sup(lin_E), 1e-10),
        Check("theta linear in the tangent", "theta(a d1 + b d2) = a theta(d1) + b theta(d2)", geom.sup(lin_t), 1e-10),
    ]
    clocks = sorted(ctx.el.spec.clocks)
    if m.inert_clocks:
        coef = el.coefficients(phi)
        out.append(Check("clock field equations vanish", "E_chi = 0 identically for the clock term", max(ad.sup_norm(coef[s]) for s in clocks), 1e-8))
    control = noncovariant1d(32)
    ctrl = check_covariance(control.euler_lagrange(), sampling.random_vector_field(control.grid, rng), control.off_shell(rng))
    out.append(Check("non-covariant control", "1/2 phi'^2 without einbein breaks covariance", ctrl, 1e-3, floor=True))
    return out


def suite_a1(ctx: Context, rng) -> list[Check]:
    phi = ctx.model.off_shell(rng)
    X, Y = _vf(ctx, rng), _vf(ctx, rng)
    lhs = fs.vf_bracket(fs.vertical_vf(X), fs.vertical_vf(Y))(phi)
    rhs = fs.field_lie(-geom.lie_bracket_gamma(X, Y), phi)
    out = [Check("constant anti-morphism", "[X^v, Y^v] = (-[X,Y]_Gamma)^v = ([X,Y]_diff)^v", _rel(lhs - rhs, lhs), 1e-6)]
    if ctx.model.clocks:
        # equivariant generators X(phi) = u(phi)_* X0 transported by the clock dressing
        u = dfm.clock_dressing(ctx.schema)
        X0, Y0 = _vf(ctx, rng), _vf(ctx, rng)
        Xf = FieldDepVectorM(lambda q: geom.pushforward_vf(u(q), X0), "u_* X0")
        Yf = FieldDepVectorM(lambda q: geom.pushforward_vf(u(q), Y0), "u_* Y0")
        Xp, Yp = Xf(phi), Yf(phi)
        gam = geom.lie_bracket_gamma(Xp, Yp)
        lhs = fs.vf_bracket(fs.vertical_vf(Xf), fs.vertical_vf(Yf))(phi)
        out.append(Check("equivariant anti-morphism", "[X^v, Y^v] = ([X,Y]_Gamma)^v = (-[X,Y]_diff)^v for equivariant X", _rel(lhs - fs.field_lie(gam, phi), lhs), 1e-6))
        ext = fs.extended_bracket(Xf, Yf)(phi)
        out.append(Check("equivariant extended bracket", "{X, Y} = [X,Y]_Gamma for equivariant X", _rel(ext - gam, gam), 1e-6))
        psi = sampling.gauge_diffeo(ctx.grid, rng)
        moved = Xf(fs.diff_action(psi, phi)) - geom.pullback_vf(psi, Xp)
        out.append(Check("transported generator equivariance", "X(psi^* phi) = (psi^-1)_* X(phi) o psi", _rel(moved, Xp), 1e-6))
    return out


def suite_brackets(ctx: Context, rng) -> list[Check]:
    phi = ctx.model.off_shell(rng)
    X, Y, Z = (sampling.random_field_dep_vf(ctx.schema, rng) for _ in range(3))
    lhs = fs.vf_bracket(fs.vertical_vf(X), fs.vertical_vf(Y))(phi)
    rhs = fs.vertical_vf(fs.extended_bracket(X, Y))(phi)
    eb = fs.extended_bracket
    jac = eb(X, eb(Y, Z))(phi) + eb(Y, eb(Z, X))(phi) + eb(Z, eb(X, Y))(phi)
    scale = max(ad.sup_norm(eb(A, eb(B, C))(phi)) for A, B, C in ((X, Y, Z), (Y, Z, X), (Z, X, Y)))
    self_br = eb(X, X)(phi)
    return [
        Check("vertical bracket = extended bracket", "[X^v, Y^v] = {X, Y}^v for field-dependent X, Y", _rel(lhs - rhs, lhs), 1e-6),
        Check("extended bracket Jacobi", "{X,{Y,Z}} + cyclic = 0", ad.sup_norm(jac) / max(1.0, scale), 1e-6),
        Check("extended bracket antisymmetry", "{X, X} = 0", ad.sup_norm(self_br), 1e-12),
    ]


def suite_a2(ctx: Context, rng) -> list[Check]:
    phi = ctx.model.off_shell(rng)
    psi = sampling.gauge_field_dep_diffeo(ctx.schema, rng)
    psi2 = sampling.gauge_field_dep_diffeo(ctx.schema, rng)
    Xi = fs.vertical_map(psi)
    delta = _tangent(ctx, rng)
    X = _vf(ctx, rng)
    closed = fs.vertical_pushforward(psi, phi, delta)
    oracle = _richardson(lambda t: Xi(phi + delta * t), 1e-2)
    Xv = fs.field_lie(X, phi)
    closed_v = fs.vertical_pushforward(psi, phi, Xv)
    oracle_v = _richardson(lambda t: Xi(fs.diff_action(geom.flow(X, t), phi)), 1e-2)
    basis = fs.basis_1form_transform(psi)(phi, delta) - fs.tangent_map(psi, phi, delta)
    twice = fs.vertical_map(psi2)(Xi(phi))
    once = fs.vertical_map(fs.vertical_compose(psi, psi2))(phi)
    return [
        Check("pushforward along a constant tangent", "Xi_* v = psi^*(v + L_{d psi(v) o psi^-1} phi) vs finite differences", _rel(closed - oracle, closed), 1e-6),
        Check("pushforward along X^v", "Xi_* X^v vs finite differences along the flow of X", _rel(closed_v - oracle_v, closed_v), 1e-6),
        Check("basis 1-form closed vs generic", "d phi^psi = psi^*(d phi + L_{d psi o psi^-1} phi)", ad.sup_norm(basis), 1e-7),
        Check("twisted composition law", "Xi_2 o Xi_1 = Xi for psi_1 o (psi_2 o R_psi_1)", ad.sup_norm(twice - once), 1e-7),
    ]


def suite_a3(ctx: Context, rng) -> list[Check]:
    ps = cps.PhaseSpace(ctx.el, ctx.gamma)
    phi = ctx.model.off_shell(rng)
    X = _vf(ctx, rng)
    Xd = sampling.random_field_dep_vf(ctx.schema, rng)
    phi_on = ctx.model.on_shell(rng)
    dJ_on = geom.d(ps.current(X, phi_on))
    return [
        Check("identity2", "iota_{X^v} theta - iota_X L = d theta(iota_X phi) - E(iota_X phi)", ps.identity2_residual(X, phi), 1e-8),
        Check("current closure off-shell", "dJ = -iota_{X^v} E", ps.current_closure_residual(X, phi), 1e-8),
        Check("current two routes", "iota_{X^v} theta - iota_X L - d gamma = d(theta(iota_X phi) - gamma) - E(iota_X phi)", geom.sup(ps.current(X, phi) - ps.current_exact(X, phi)), 1e-8),
        Check("field-dependent current two routes", "the same with X = X(phi)", geom.sup(ps.current(Xd, phi) - ps.current_exact(Xd, phi)), 1e-8),
        Check("current closed on-shell", "dJ = 0 on exact solutions", geom.sup(dJ_on), 1e-8),
    ]


def suite_cps(ctx: Context, rng) -> list[Check]:
    el, S = ctx.el, ctx.Sigma
    ps = cps.PhaseSpace(el, ctx.gamma)
    phi = ctx.model.off_shell(rng)
    delta = _tangent(ctx, rng)
    d2 = _tangent(ctx, rng)
    X, Y = _vf(ctx, rng), _vf(ctx, rng)
    Xd = sampling.random_field_dep_vf(ctx.schema, rng)
    a, b = rng.uniform(-2.0, 2.0, size=2)
    lin = ps.charge_value(X * a + Y * b, S, phi) - a * ps.charge_value(X, S, phi) - b * ps.charge_value(Y, S, phi)
    routes = ps.charge_value(X, S, phi) - ps.charge_from_current(X, S, phi)
    Th = ps.Theta_sigma(S)(phi, delta, d2)
    Thp = ps.Theta_sigma(S, primed=True)(phi, delta, d2)
    out = [
        Check("moment map identity", "iota_{X^v} Theta + dQ = oint(iota_X theta - d gamma) - int iota_X E", ps.moment_map_residual(X, S, phi, delta), 1e-6),
        Check("field-dependent moment map identity", "the same with Q(dX) and gamma(dX) terms for X = X(phi)", ps.moment_map_residual(Xd, S, phi, delta), 1e-6),
        Check("charge from current", "Q = int_Sigma J", abs(float(routes)), 1e-8),
        Check("charge linearity", "Q(aX + bY) = a Q(X) + b Q(Y)", abs(float(lin)), 1e-10),
        Check("boundary Lagrangian independence", "Theta from theta and from theta + d ell agree", abs(float(Th - Thp)), 1e-8),
    ]
    # boundary conditions: X vanishing on the corner and gamma = -iota_X ell kill the flux on-shell
    psb = cps.PhaseSpace(el, "boundary")
    phi_on, t1, _ = _on_shell_pair(ctx, rng)
    Xb = _vanishing_vf(ctx, rng)
    iT = ps.Theta_sigma(S)(phi_on, fs.field_lie(Xb, phi_on), t1)
    dQ = fs.directional_derivative(lambda q: psb.charge_value(Xb, S, q), phi_on, t1)
    out.append(Check("moment map with boundary conditions", "iota_{X^v} Theta = -dQ on-shell for X vanishing on the corner", abs(float(iT + dQ)), 1e-6))
    return out


def suite_a5(ctx: Context, rng) -> list[Check]:
    el, S = ctx.el, ctx.Sigma
    ps = cps.PhaseSpace(el, ctx.gamma)
    phi = ctx.model.off_shell(rng)
    X, Y = _vf(ctx, rng), _vf(ctx, rng)
    Xd, Yd = (sampling.random_field_dep_vf(ctx.schema, rng) for _ in range(2))
    phi_on = ctx.model.on_shell(rng)
    rel_on = ps.bracket(X, Y, S, phi_on) - ps.charge_value(geom.lie_bracket_diff(X, Y), S, phi_on) - ps.cocycle_concrete(X, Y, S, phi_on)
    # commuting generators: the bracket is the cocycle alone
    c = rng.uniform(-1.0, 1.0, size=ctx.dim)
    if ctx.dim == 1:
        A, B = VectorFieldM(ctx.grid, [c[0]]), VectorFieldM(ctx.grid, [2.0 * c[0]])
    else:
        A, B = VectorFieldM(ctx.grid, [c[0], 0.0]), VectorFieldM(ctx.grid, [0.0, c[1]])
    commuting = ps.bracket(A, B, S, phi_on) - ps.cocycle_concrete(A, B, S, phi_on)
    # a constant generator wrapped as field-dependent must reproduce the constant results
    Xw = FieldDepVectorM(lambda q: X, "wrapped")
    Yw = FieldDepVectorM(lambda q: Y, "wrapped")
    delta = _tangent(ctx, rng)
    red = max(
        abs(float(ps.charge_value(Xw, S, phi) - ps.charge_value(X, S, phi))),
        abs(float(ps.cocycle_concrete(Xw, Yw, S, phi) - ps.cocycle_concrete(X, Y, S, phi))),
        abs(float(ps.moment_map_residual(Xw, S, phi, delta) - ps.moment_map_residual(X, S, phi, delta))),
    )
    return [
        Check("cocycle two routes", "C = Theta(X^v, Y^v) - Q([X,Y]_diff) vs the corner expression", abs(float(ps.cocycle_concrete(X, Y, S, phi) - ps.cocycle_definitional(X, Y, S, phi))), 1e-6),
        Check("field-dependent cocycle two routes", "C-bar for X(phi), Y(phi) vs the corner expression", abs(float(ps.cocycle_concrete(Xd, Yd, S, phi) - ps.cocycle_definitional(Xd, Yd, S, phi))), 1e-6),
        Check("on-shell bracket relation", "{Q_X, Q_Y} = Q([X,Y]_diff) + C(X,Y) on-shell", abs(float(rel_on)), 1e-6),
        Check("commuting generators", "{Q_X, Q_Y} = C(X,Y) when [X,Y] = 0", abs(float(commuting)), 1e-6),
        Check("field-dependent reduces to constant", "wrapped constant X gives the constant-X charge, cocycle and moment map", red, 1e-12),
    ]


def suite_a4(ctx: Context, rng) -> list[Check]:
    ps = cps.PhaseSpace(ctx.el, ctx.gamma)
    S = ctx.Sigma
    phi_on = ctx.model.on_shell(rng)
    Xb, Yb, Zb = (_vanishing_vf(ctx, rng) for _ in range(3))
    cyc_b, _ = ps.cocycle_condition(Xb, Yb, Zb, S, phi_on)
    X, Y, Z = (_vf(ctx, rng) for _ in range(3))
    cyc, flux = ps.cocycle_condition(X, Y, Z, S, phi_on)
    br = geom.lie_bracket_diff
    degenerate = ps.cocycle(X, br(X, Z), S, phi_on) + ps.cocycle(X, br(Z, X), S, phi_on) + ps.cocycle(Z, br(X, X), S, phi_on)
    return [
        Check("cocycle condition", "C(X,[Y,Z]) + cyclic = 0 for generators vanishing on the corner", abs(cyc_b), 1e-5),
        Check("cocycle condition flux form", "C(X,[Y,Z]) + cyclic = dF_X(Y^v, Z^v) + cyclic", abs(cyc - flux), 1e-5),
        Check("cocycle condition degenerate", "cyclic sum with a repeated generator cancels", abs(float(degenerate)), 1e-6),
    ]


def suite_vertical(ctx: Context, rng) -> list[Check]:
    el = ctx.el
    phi = ctx.model.off_shell(rng)
    psi = sampling.gauge_field_dep_diffeo(ctx.schema, rng)
    tangents = (_tangent(ctx, rng), _tangent(ctx, rng))
    off = cps.vertical_transform_suite(el, psi, phi, ctx.Sigma, ctx.U, tangents)
    phi_on, t1, t2 = _on_shell_pair(ctx, rng)
    on = cps.vertical_transform_suite(el, psi, phi_on, ctx.Sigma, ctx.U, (t1, t2), on_shell=True)
    anchors = {
        "L": "L^psi = psi^* L closed vs generic",
        "E": "E^psi closed vs generic",
        "theta_Sigma": "theta_Sigma^psi closed vs generic",
        "Theta_Sigma": "Theta_Sigma^psi closed vs generic",
        "Theta_Sigma_exterior": "Theta_Sigma^psi closed vs d of the transformed current",
        "dS": "(dS)^psi closed vs generic",
    }
    out = [Check(f"vertical {k}", anchors[k], v, 1e-6) for k, v in off.items()]
    out.append(Check("vertical Theta boundary only", "on-shell Theta_Sigma^psi - Theta_Sigma is a pure boundary term", on["Theta_boundary_only"], 1e-6))
    out.append(Check("vertical E on-shell", "E^psi vanishes on solutions", on["E_on_shell"], 1e-7))
    return out


def suite_dfm(ctx: Context, rng) -> list[Check]:
    _require_clocks(ctx)
    el, S, U = ctx.el, ctx.Sigma, ctx.U
    phi = ctx.model.off_shell(rng)
    u = dfm.clock_dressing(ctx.schema)
    psis = [sampling.gauge_diffeo(ctx.grid, rng) for _ in range(2)]
    fpsi = [sampling.gauge_field_dep_diffeo(ctx.schema, rng)]
    Xs = [_vf(ctx, rng) for _ in range(2)]
    d1, d2 = _tangent(ctx, rng), _tangent(ctx, rng)
    phi_u = dfm.dress_field(phi, u)
    w = dfm.flat_connection(u)

    def dressed_basis(q, t):
        return dfm.dress_basis_1form(q, u, t)

    dphi_u = FieldForm(1, dressed_basis, None, "invariant", "dphi^u")
    L_u = FieldForm(0, lambda q: el.lagrangian(dfm.dress_field(q, u)), None, "invariant", "L^u")
    E_u = FieldForm(1, lambda q, t: el.E(dfm.dress_field(q, u), dressed_basis(q, t)), None, "invariant", "E^u")
    phi_inv = max(ad.sup_norm(dfm.dress_field(fs.diff_action(p, phi), u) - phi_u) for p in psis)
    phi_hor = max(ad.sup_norm(fs.tangent_map(u, phi, fs.field_lie(X, phi))) for X in Xs)
    clock_id = max(geom.sup(phi_u[c]) for c in u.clocks)
    L_inf = max(geom.sup(fs.directional_derivative(L_u, phi, fs.field_lie(X, phi))) for X in Xs)
    rep = dfm.dressed_presymplectic(el, S, U, phi, u, (d1, d2), psis=fpsi, Xs=Xs).residuals
    lhs, rhs = dfm.dressed_variation(el.lagrangian, u, phi, d1)
    horiz = dfm.horizontalize(fs.basis_1form(ctx.schema), w)
    via_h = fs.pullback_tangent(u(phi), horiz(phi, d1))
    rot = dfm.dress_basis_1form(phi, u, d1) - fs.basis_1form_transform(u)(phi, d1)
    same_map = fs.vertical_map(u)(phi) - phi_u
    out = [
        Check("dressing equivariance", "u(psi^* phi) = psi^-1 o u(phi)", dfm.equivariance_residual(u, phi, psis), 1e-6),
        Check("dressed field invariance", "(psi^* phi)^u = phi^u", phi_inv, 1e-6),
        Check("dressed field horizontality", "d phi^u (X^v) = 0", phi_hor, 1e-6),
        Check("clocks dress to identity", "chi o chi^-1 = id", clock_id, 1e-8),
        Check("dressed basis horizontality", "d phi^u (X^v) via omega_0 = 0", fs.horizontality_residual(dphi_u, phi, Xs), 1e-6),
        Check("dressed basis invariance", "d phi^u invariant under field-dependent psi", fs.invariance_residual(dphi_u, phi, fpsi, [d1]), 1e-6),
        Check("dressed L invariance", "L^u invariant under field-dependent psi", fs.invariance_residual(L_u, phi, fpsi), 1e-6),
        Check("dressed L horizontality", "d L^u (X^v) = 0", L_inf, 1e-6),
        Check("dressed E horizontality", "E^u(X^v) = 0", fs.horizontality_residual(E_u, phi, Xs), 1e-6),
        Check("dressed E invariance", "E^u invariant under field-dependent psi", fs.invariance_residual(E_u, phi, fpsi, [d1]), 1e-6),
        Check("dressed theta horizontality", "theta_Sigma^u (X^v) = 0", rep["theta_Sigma_horizontal"], 1e-6),
        Check("dressed theta invariance", "theta_Sigma^u invariant under (psi^* phi, psi^-1 Sigma)", rep["theta_Sigma_invariant"], 1e-6),
        Check("dressed Theta horizontality", "Theta_Sigma^u (X^v, .) = 0", rep["Theta_Sigma_horizontal"], 1e-6),
        Check("dressed Theta invariance", "Theta_Sigma^u invariant under (psi^* phi, psi^-1 Sigma)", rep["Theta_Sigma_invariant"], 1e-6),
        Check("connection vertical", "omega_0(X^v) = X", w.vertical_residual(phi, Xs), 1e-5),
        Check("connection equivariance", "omega_0 at psi^* phi = (psi^-1)_* omega_0 o psi", max(w.equivariance_residual(phi, d1, p) for p in psis), 1e-5),
        Check("connection flatness", "d omega_0 + [omega_0, omega_0]_diff = 0", dfm.curvature_residual(w, d1, d2, phi), 1e-5),
        Check("horizontalize then dress", "d phi^u = u^*(d phi - L_{omega_0} phi)", ad.sup_norm(via_h - dfm.dress_basis_1form(phi, u, d1)), 1e-7),
        Check("rule of thumb basis", "dressed basis = transformed basis with psi -> u", ad.sup_norm(rot), 1e-9),
        Check("rule of thumb field", "phi^u = Xi_u(phi)", ad.sup_norm(same_map), 1e-9),
        Check("dressed integral lemma", "d(u^* a) = u^*(d a + L_{du o u^-1} a)", ad.sup_norm(lhs - rhs), 1e-6),
    ]
    names = {
        "L": "L^u closed vs generic",
        "E": "E^u closed vs generic",
        "theta_Sigma": "theta_Sigma^u closed vs generic",
        "Theta_Sigma": "Theta_Sigma^u closed vs generic",
        "Theta_Sigma_exterior": "Theta_Sigma^u closed vs d of the dressed current",
        "dS": "(dS)^u closed vs generic",
        "dS_boundary": "(dS)^u - dS = boundary term on dU",
    }
    out += [Check(f"dressed {k}", v, rep[k], 1e-6) for k, v in names.items()]
    out.append(Check("dressed boundary invariance", "u^-1(dU) agrees for gauge-related configurations", max(dfm.dressed_boundary_residual(u, phi, U, p) for p in psis), 1e-6))
    vphi = sampling.gauge_diffeo(ctx.grid, rng)
    shift = dfm.connection_shift_suite(el, u, vphi, phi, S, Xs, [d1], psis[:1]).as_dict()
    shift_names = {
        "affine": "omega_0' = omega_0 + beta_0 for u' = u o vphi",
        "horizontal": "beta_0(X^v) = 0",
        "equivariant": "beta_0 is equivariant",
        "basis_shift": "d phi^{u'} = vphi^*(d phi^u - u^* L_{beta_0} phi)",
        "theta_shift": "theta_Sigma^{u'} = theta_Sigma^u - int theta(L_{beta_0} phi)",
        "invariant_shift": "alpha^{u'} = alpha^u - alpha(L_{beta_0} phi) on an invariant 1-form",
    }
    out += [Check(f"shift {k}", v, shift[k], 1e-6) for k, v in shift_names.items()]
    return out


def suite_residual(ctx: Context, rng) -> list[Check]:
    _require_clocks(ctx)
    el = ctx.el
    phi = ctx.model.off_shell(rng)
    u = dfm.clock_dressing(ctx.schema)
    psis = [sampling.gauge_diffeo(ctx.grid, rng) for _ in range(2)]
    gens = [_vf(ctx, rng) for _ in range(3)]
    rep = dfm.residual_suite(el, u, phi, psis, ctx.Sigma, gens)
    complete = rep.classification.startswith("complete elimination")
    rps, phi_u = dfm.residual_phase_space(el, u, phi)
    zero = rps.charge_value(VectorFieldM.zeros(ctx.grid), ctx.Sigma, phi_u)
    # second kind: a phi^u-dependent reparametrization of N
    vfd = sampling.gauge_field_dep_diffeo(ctx.schema, rng)
    u2 = dfm.reparametrized(u, vfd)
    d = _tangent(ctx, rng)
    lhs = fs.tangent_map(u2, phi, d)
    rhs = dfm.residual_basis_1form(phi_u, vfd, fs.tangent_map(u, phi, d))
    return [
        Check("residual classification", "clock dressing eliminates Diff(M) completely", rep.equivariance if complete else math.inf, 1e-6),
        Check("residual charges", "Q_{u^-1 Sigma}(X; phi^u) = Q_Sigma(u_* X; phi)", rep.charges["charge"], 1e-6),
        Check("residual bracket", "residual bracket = bare bracket of u_* X, u_* Y", rep.charges["bracket"], 1e-6),
        Check("residual cocycle", "residual cocycle = bare cocycle of u_* X, u_* Y", rep.charges["cocycle"], 1e-6),
        Check("residual zero generator", "Q(0; phi^u) = 0", abs(float(zero)), 1e-14),
        Check("second-kind basis transformation", "d phi^{u o vphi} = vphi^*(d phi^u + L_{d vphi o vphi^-1} phi^u)", ad.sup_norm(lhs - rhs), 1e-6),
    ]


def suite_integration(ctx: Context, rng) -> list[Check]:
    g, U, el = ctx.grid, ctx.U, ctx.el
    top = sampling.random_form(g, g.dim, rng)
    low = sampling.random_form(g, g.dim - 1, rng)
    psi, psi2 = sampling.gauge_diffeo(g, rng), sampling.gauge_diffeo(g, rng)
    X = _vf(ctx, rng)
    phi = ctx.model.off_shell(rng)
    pair = geom.integrate_preimage(geom.pullback(psi, top), U, psi) - geom.integrate(top, U)
    # translations map windows to windows, so both routes exist
    c = float(rng.uniform(0.1, 0.5))
    shift = Diffeo.translation(g, [c] + [0.0] * (g.dim - 1)) if g.dim == 1 else Diffeo.translation(g, [0.0, c])
    moved = geom.Interval(U.a - c, U.b - c) if g.dim == 1 else geom.Band(U.a - c, U.b - c)
    two = geom.integrate(geom.pullback(shift, top), moved) - geom.integrate_preimage(geom.pullback(shift, top), U, shift)
    stokes = geom.integrate(geom.d(low), U) - geom.boundary_integrate(low, U)
    fixed = cps.AnomalyCocycle(el, U)
    moving = cps.AnomalyCocycle(el, U, co_moving=True)
    return [
        Check("pairing invariance", "int_{psi^-1 U} psi^* w = int_U w", abs(float(pair)), 1e-8),
        Check("pairing two routes", "translated window vs change of variables", abs(float(two)), 1e-8),
        Check("continuity equation", "int_U L_X w = oint_{dU} iota_X w", abs(float(geom.region_continuity_residual(X, top, U))), 1e-8),
        Check("Stokes", "int_U d a = oint_{dU} a", abs(float(stokes)), 1e-8),
        Check("anomaly cocycle law", "c(phi; psi2 o psi) = c(phi; psi2) + c(psi2^* phi; psi), fixed region", fixed.cocycle_residual(phi, psi, psi2), 1e-8),
        Check("anomaly co-moving", "c = 0 when the region moves with psi", abs(float(moving(phi, psi))), 1e-8),
        Check("anomaly identity", "c(phi; id) = 0", abs(float(fixed(phi, Diffeo.identity(g)))), 1e-14),
    ]


SUITES: dict[str, Callable] = {
    "decomposition": suite_decomposition,
    "brackets": suite_brackets,
    "a1": suite_a1,
    "a2": suite_a2,
    "a3": suite_a3,
    "a4": suite_a4,
    "a5": suite_a5,
    "cps": suite_cps,
    "vertical": suite_vertical,
    "dfm": suite_dfm,
    "residual": suite_residual,
    "integration": suite_integration,
}

# draws per suite; the costly ones use fewer draws with several samples each
DEFAULT_DRAWS = {name: 20 for name in SUITES} | {"dfm": 5}


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


def _aggregate(name: str, per_draw: list[list[Check]], overrides: dict) -> list[Row]:
    rows: dict[str, Row] = {}
    for checks in per_draw:
        for c in checks:
            tol = float(overrides.get(c.name, c.tolerance))
            kind = "min" if c.floor else "max"
            v = float(c.value)
            if math.isnan(v):
                v = math.inf
            if c.name not in rows:
                rows[c.name] = Row(name, c.name, c.anchor, v, tol, False, kind, 0)
            r = rows[c.name]
            r.residual = min(r.residual, v) if c.floor else max(r.residual, v)
            r.draws += 1
    for r in rows.values():
        r.passed = r.residual >= r.tolerance if r.kind == "min" else r.residual <= r.tolerance
    return list(rows.values())


def run_suite(name: str, ctx: Context, seed: int = 0, draws: int | None = None, threads: int | None = None) -> SuiteResult:
    """Run one suite over ``draws`` independent generators spawned from ``seed``."""
    if name not in SUITES:
        raise ConfigError(f"unknown suite {name!r}; available: {', '.join(SUITES)}")
    fn = SUITES[name]
    n = DEFAULT_DRAWS[name] if draws is None else int(draws)
    # the suite name salts the seed so suites do not share draws
    salt = sum(name.encode())
    rngs = sampling.spawn(seed * 1000 + salt, n)
    workers = thread_count() if threads is None else threads
    start = time.perf_counter()
    if workers > 1 and n > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_draw = list(pool.map(lambda r: fn(ctx, r), rngs))
    else:
        per_draw = [fn(ctx, r) for r in rngs]
    rows = _aggregate(name, per_draw, ctx.tolerances)
    return SuiteResult(name, n, rows, time.perf_counter() - start)


def run_suites(names, ctx: Context, seed: int = 0, draws: int | None = None, threads: int | None = None) -> list[SuiteResult]:
    return [run_suite(n, ctx, seed, draws, threads) for n in names]


__all__ = [
    "Check",
    "Context",
    "DEFAULT_DRAWS",
    "Row",
    "SUITES",
    "SuiteResult",
    "THREADS_ENV",
    "default_regions",
    "run_suite",
    "run_suites",
    "thread_count",
    "vanishing_factor",
]
