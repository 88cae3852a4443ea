"""Dressing fields: clock-based relational dressings, dressed fields and forms,
the induced flat field-space connection, and residual symmetries.

A dressing is an evaluator phi -> u(phi) in Diff with u(psi^* phi) = psi^{-1} o u(phi).
The shipped construction inverts the clock map chi = (chi^1[, chi^2]).  Because
a dressing is in particular a field-dependent diffeomorphism, every closed
formula for vertical transformations applies to it verbatim with psi -> u.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import dual as ad
from . import fieldspace as fs
from . import geom
from .cps import PhaseSpace, VerticalTransforms
from .errors import DressingDegenerateError, NearSingularDiffeoError, UnsupportedDegreeError
from .fieldspace import FieldConfig, FieldDepDiffeo, FieldForm, FieldSchema, FieldTangent, as_field_dep_diffeo
from .geom import Diffeo, FormField, VectorFieldM

# minimum of det(d chi) accepted for a clock map
MONOTONE_FLOOR = 1e-3


class Dressing(FieldDepDiffeo):
    """phi -> u(phi), a Diffeo from the reference grid N to M.

    The last evaluation is cached, so repeated calls at the same configuration
    reuse the Newton inverse.
    """

    def __init__(self, fn: Callable[[FieldConfig], Diffeo], construction: str = "user-supplied", clocks: Sequence[str] = (), name: str = ""):
        super().__init__(fn, name or construction)
        self.construction = construction
        self.clocks = tuple(clocks)
        self._last = None

    def __call__(self, phi: FieldConfig) -> Diffeo:
        last = self._last
        if last is not None and last[0] is phi:
            return last[1]
        u = self.fn(phi)
        self._last = (phi, u)
        return u

    def describe(self) -> dict:
        return {"construction": self.construction, "clocks": list(self.clocks)}


def _clock_order(schema: FieldSchema, clocks: Sequence[str] | None) -> tuple[str, ...]:
    if clocks is None:
        clocks = [n for n in schema.names if schema.winding(n) is not None]
    dim = schema.grid.dim
    if len(clocks) != dim:
        raise DressingDegenerateError(f"a clock dressing in {dim}D needs {dim} clock fields, got {len(clocks)}")
    by_axis = {}
    for name in clocks:
        w = schema.winding(name)
        if w is None:
            raise DressingDegenerateError(f"{name!r} has no winding and cannot serve as a clock")
        axes = [i for i, k in enumerate(w) if k != 0]
        if len(axes) != 1 or w[axes[0]] != 1:
            raise DressingDegenerateError(f"clock {name!r} must wind once along a single axis, got {tuple(w)}")
        by_axis[axes[0]] = name
    if len(by_axis) != dim:
        raise DressingDegenerateError("clocks must wind along distinct axes")
    return tuple(by_axis[i] for i in range(dim))


def clock_map(phi: FieldConfig, clocks: Sequence[str]) -> Diffeo:
    """chi(x) = x + (periodic parts of the clocks), unchecked."""
    return Diffeo(phi.grid, [phi.fields[c].comps[0] for c in clocks], check=False)


def _monotone_floor(chi: Diffeo) -> float:
    J = [[ad.primal(c) for c in row] for row in chi.jacobian()]
    if chi.grid.dim == 1:
        return float(np.min(J[0][0]))
    return float(np.min(J[0][0] * J[1][1] - J[0][1] * J[1][0]))


def clock_dressing(schema_or_phi, clocks: Sequence[str] | None = None) -> Dressing:
    """u(phi) = chi(phi)^{-1}, inverted by Newton.

    Passing a configuration instead of a schema also validates it eagerly.
    """
    phi0 = schema_or_phi if isinstance(schema_or_phi, FieldConfig) else None
    schema = phi0.schema if phi0 is not None else schema_or_phi
    order = _clock_order(schema, clocks)

    def fn(phi):
        chi = clock_map(phi, order)
        floor = _monotone_floor(chi)
        if not floor > MONOTONE_FLOOR:
            raise DressingDegenerateError(f"clock map is not monotone: min det(d chi) = {floor:.3g}")
        try:
            return chi.inverse()
        except NearSingularDiffeoError as exc:
            raise DressingDegenerateError(f"clock map could not be inverted: {exc}") from exc

    u = Dressing(fn, "clock", order, "clock-dressing")
    if phi0 is not None:
        u(phi0)
    return u


def equivariance_residual(u, phi: FieldConfig, psis: Sequence[Diffeo]) -> float:
    """max over psi of sup |u(psi^* phi) - psi^{-1} o u(phi)| (displacements)."""
    U = as_field_dep_diffeo(u)
    base = U(phi)
    worst = 0.0
    for psi in psis:
        lhs = U(fs.diff_action(psi, phi))
        rhs = psi.inverse().compose(base)
        worst = max(worst, ad.sup_norm([a - b for a, b in zip(lhs.disp, rhs.disp)]))
    return worst


def user_dressing(fn: Callable[[FieldConfig], Diffeo], phi: FieldConfig, psis: Sequence[Diffeo], tol: float = 1e-6) -> Dressing:
    """Wrap a user evaluator after checking the equivariance contract at phi."""
    u = Dressing(fn, "user-supplied")
    res = equivariance_residual(u, phi, psis)
    if not res <= tol:
        raise DressingDegenerateError(f"user dressing is not equivariant: residual {res:.3g} > {tol:g}")
    return u


# ---------------------------------------------------------------------------
# dressed fields


def dress_field(phi: FieldConfig, u) -> FieldConfig:
    """phi^u = u^* phi."""
    return fs.diff_action(as_field_dep_diffeo(u)(phi), phi)


class FlatConnection:
    """omega_0(delta) = -du(delta) o u^{-1}."""

    def __init__(self, u):
        self.u = as_field_dep_diffeo(u)

    def __call__(self, phi: FieldConfig, delta: FieldTangent) -> VectorFieldM:
        return -fs.diffeo_variation(self.u, phi, delta)

    def form(self) -> FieldForm:
        return FieldForm(1, self, None, "unknown", "omega_0")

    def vertical_residual(self, phi: FieldConfig, Xs: Sequence[VectorFieldM]) -> float:
        """max sup |omega_0(X^v) - X|."""
        return max(ad.sup_norm(self(phi, fs.field_lie(X, phi)) - X) for X in Xs)

    def equivariance_residual(self, phi: FieldConfig, delta: FieldTangent, psi: Diffeo) -> float:
        """sup |omega_0(psi^* phi; psi^* delta) - (psi^{-1})_* omega_0(delta) o psi|."""
        lhs = self(fs.diff_action(psi, phi), fs.pullback_tangent(psi, delta))
        rhs = geom.pullback_vf(psi, self(phi, delta))
        return ad.sup_norm(lhs - rhs)


def flat_connection(u) -> FlatConnection:
    return FlatConnection(u)


def curvature(omega: Callable, phi: FieldConfig, a, b) -> VectorFieldM:
    """d omega(a, b) + [omega(a), omega(b)]_diff, by Koszul for vector fields a, b."""
    A = a if isinstance(a, fs.FieldVectorField) else fs.FieldVectorField.constant(a)
    B = b if isinstance(b, fs.FieldVectorField) else fs.FieldVectorField.constant(b)
    dw = fs.ext_deriv(FieldForm(1, omega), phi, A, B)
    return dw + geom.lie_bracket_diff(omega(phi, A(phi)), omega(phi, B(phi)))


def curvature_residual(omega: Callable, a, b, phi: FieldConfig) -> float:
    return ad.sup_norm(curvature(omega, phi, a, b))


def horizontalize(alpha: FieldForm, omega: Callable) -> FieldForm:
    """alpha^h(delta) = alpha(delta - {omega(delta)}^v) for field-space 1-forms."""
    if alpha.p == 0:
        return alpha
    if alpha.p > 1:
        raise UnsupportedDegreeError("horizontalize supports field-space 1-forms only")

    def fn(phi, delta):
        return alpha(phi, delta - fs.field_lie(omega(phi, delta), phi))

    return FieldForm(1, fn, alpha.r, alpha.equivariance, f"{alpha.name}^h")


def dress_basis_1form(phi: FieldConfig, u, delta: FieldTangent) -> FieldTangent:
    """d phi^u = u^*(d phi - L_{omega_0} phi), through the flat connection."""
    U = as_field_dep_diffeo(u)
    w = FlatConnection(U)(phi, delta)
    return fs.pullback_tangent(U(phi), delta - fs.field_lie(w, phi))


def dressed_variation(alpha: Callable[[FieldConfig], FormField], u, phi: FieldConfig, delta: FieldTangent):
    """Both sides of d(u^* alpha) = u^*(d alpha + L_{du o u^{-1}} alpha) for a phi-dependent form alpha."""
    U = as_field_dep_diffeo(u)
    lhs = fs.directional_derivative(lambda q: geom.pullback(U(q), alpha(q)), phi, delta)
    P = fs.diffeo_variation(U, phi, delta)
    inner = fs.directional_derivative(alpha, phi, delta) + geom.lie_derivative(P, alpha(phi))
    return lhs, geom.pullback(U(phi), inner)


def dressed_form(alpha: FieldForm, u) -> FieldForm:
    """alpha^u := Xi_u^* alpha, the generic dressing of a field-space form."""
    return fs.vertical_transform(alpha, u, "tangent-map")


# ---------------------------------------------------------------------------
# changes of dressing


def reparametrized(u, vphi) -> Dressing:
    """u' = u o vphi; ``vphi`` is a Diffeo of N or a map phi^u -> Diffeo."""
    U = as_field_dep_diffeo(u)

    def fn(phi):
        base = U(phi)
        v = vphi(dress_field(phi, U)) if callable(vphi) and not isinstance(vphi, Diffeo) else vphi
        return base.compose(v)

    clocks = getattr(U, "clocks", ())
    return Dressing(fn, "reparametrized", clocks, "u o vphi")


def shift_form(u, vphi) -> Callable:
    """beta_0(delta) = -u_*(d vphi(delta) o vphi^{-1}) o u^{-1}."""
    U = as_field_dep_diffeo(u)
    if isinstance(vphi, Diffeo):
        return lambda phi, delta: VectorFieldM.zeros(phi.grid)
    V = FieldDepDiffeo(lambda phi: vphi(dress_field(phi, U)), "vphi")

    def beta(phi, delta):
        w = fs.diffeo_variation(V, phi, delta)
        return -geom.pushforward_vf(U(phi), w)

    return beta


@dataclass
class ShiftReport:
    affine: float
    horizontal: float
    equivariant: float
    basis_shift: float
    theta_shift: float
    invariant_shift: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def connection_shift_suite(model, u, vphi, phi: FieldConfig, Sigma, Xs, deltas, psis) -> ShiftReport:
    """Checks of omega_0' = omega_0 + beta_0 for u' = u o vphi.

    * ``affine``: omega_0' - omega_0 - beta_0
    * ``horizontal``: beta_0(X^v)
    * ``equivariant``: beta_0(psi^* phi; psi^* delta) - (psi^{-1})_* beta_0 o psi
    * ``basis_shift``: d phi^{u'} = vphi^*(d phi^u - u^* L_{beta_0} phi)
    * ``theta_shift``: theta_Sigma^{u'} = theta_Sigma^u - int theta(L_{beta_0} phi)
    * ``invariant_shift``: alpha^{u'} = alpha^u - alpha(L_{beta_0} phi) for alpha = int_M E
    """
    el = model.euler_lagrange() if hasattr(model, "euler_lagrange") else model
    U = as_field_dep_diffeo(u)
    u2 = reparametrized(U, vphi)
    w, w2 = FlatConnection(U), FlatConnection(u2)
    beta = shift_form(U, vphi)
    ps = PhaseSpace(el)
    whole = geom.Whole(phi.grid.dim)

    def alpha(q, t):
        return geom.integrate(el.E(q, t), whole)

    out = dict.fromkeys(("affine", "horizontal", "equivariant", "basis_shift", "theta_shift", "invariant_shift"), 0.0)
    for d in deltas:
        b = beta(phi, d)
        out["affine"] = max(out["affine"], ad.sup_norm(w2(phi, d) - w(phi, d) - b))
        v = vphi if isinstance(vphi, Diffeo) else vphi(dress_field(phi, U))
        lhs = fs.tangent_map(u2, phi, d)
        rhs = fs.pullback_tangent(v, fs.tangent_map(U, phi, d) - fs.pullback_tangent(U(phi), fs.field_lie(b, phi)))
        out["basis_shift"] = max(out["basis_shift"], ad.sup_norm(lhs - rhs))
        t2 = VerticalTransforms(ps, u2).theta_sigma_generic(Sigma, phi, d)
        t1 = VerticalTransforms(ps, U).theta_sigma_closed(Sigma, phi, d) - geom.integrate(ps.theta(phi, fs.field_lie(b, phi)), Sigma)
        out["theta_shift"] = max(out["theta_shift"], abs(float(t2 - t1)))
        a2 = alpha(dress_field(phi, u2), fs.tangent_map(u2, phi, d))
        a1 = alpha(dress_field(phi, U), fs.tangent_map(U, phi, d)) - alpha(phi, fs.field_lie(b, phi))
        out["invariant_shift"] = max(out["invariant_shift"], abs(float(a2 - a1)))
        for psi in psis:
            lhs_b = beta(fs.diff_action(psi, phi), fs.pullback_tangent(psi, d))
            out["equivariant"] = max(out["equivariant"], ad.sup_norm(lhs_b - geom.pullback_vf(psi, b)))
    for X in Xs:
        out["horizontal"] = max(out["horizontal"], ad.sup_norm(beta(phi, fs.field_lie(X, phi))))
    return ShiftReport(**out)


# ---------------------------------------------------------------------------
# dressed presymplectic structure


@dataclass
class DressedReport:
    residuals: dict = field(default_factory=dict)
    values: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"residuals": dict(self.residuals), "values": {k: float(v) for k, v in self.values.items()}}


def dressed_presymplectic(model, Sigma, U, phi: FieldConfig, u, tangents, psis=(), Xs=()) -> DressedReport:
    """Dressed L, E, theta_Sigma, Theta_Sigma and dS.

    Each closed expression (the vertical-transformation formula with psi -> u)
    is compared with the generic route, evaluating bare objects at phi^u on
    d phi^u and integrating over u^{-1}(Sigma) or u^{-1}(U).  Horizontality on
    the ``Xs`` and invariance under the field-dependent ``psis`` are reported
    for theta_Sigma^u and Theta_Sigma^u.
    """
    el = model.euler_lagrange() if hasattr(model, "euler_lagrange") else model
    ps = PhaseSpace(el)
    Ud = as_field_dep_diffeo(u)
    vt = VerticalTransforms(ps, Ud)
    d1, d2 = tangents[0], tangents[1]
    rep = DressedReport()
    r = rep.residuals
    r["L"] = ad.sup_norm(vt.L_closed(phi) - ps.L(dress_field(phi, Ud)))
    r["E"] = ad.sup_norm(vt.E_closed(phi, d1) - el.E(dress_field(phi, Ud), dress_basis_1form(phi, Ud, d1)))
    th = vt.theta_sigma_closed(Sigma, phi, d1)
    r["theta_Sigma"] = abs(float(th - vt.theta_sigma_generic(Sigma, phi, d1)))
    Th = vt.Theta_sigma_closed(Sigma, phi, d1, d2)
    r["Theta_Sigma"] = abs(float(Th - vt.Theta_sigma_generic(Sigma, phi, d1, d2)))
    r["Theta_Sigma_exterior"] = abs(float(Th - vt.Theta_sigma_exterior(Sigma, phi, d1, d2)))
    dS = vt.dS_closed(U, phi, d1)
    r["dS"] = abs(float(dS - vt.dS_generic(U, phi, d1)))
    # (dS)^u - dS is the boundary flux of iota_{du o u^{-1}} L
    bare = geom.integrate(fs.directional_derivative(ps.L, phi, d1), U)
    flux = geom.boundary_integrate(geom.interior(vt.Psi(phi, d1), ps.L(phi)), U) if U.boundary() else 0.0
    r["dS_boundary"] = abs(float(dS - bare - flux))
    rep.values.update(theta_Sigma=th, Theta_Sigma=Th, dS=dS)

    theta_u = FieldForm(1, lambda q, t: vt.theta_sigma_closed(Sigma, q, t), None, "invariant", "theta_Sigma^u")
    Theta_u = FieldForm(2, lambda q, a, b: vt.Theta_sigma_closed(Sigma, q, a, b), None, "invariant", "Theta_Sigma^u")
    if Xs:
        r["theta_Sigma_horizontal"] = fs.horizontality_residual(theta_u, phi, Xs)
        r["Theta_Sigma_horizontal"] = fs.horizontality_residual(Theta_u, phi, Xs, [d2])
    if psis:
        r["theta_Sigma_invariant"] = joint_invariance_residual(vt, ps.theta, Sigma, phi, psis, [d1])
        r["Theta_Sigma_invariant"] = joint_invariance_residual(vt, ps.Theta_current(), Sigma, phi, psis, [d1, d2])
    return rep


def joint_invariance_residual(vt: VerticalTransforms, current, Sigma, phi: FieldConfig, psis, tangents) -> float:
    """Dressed integral at (psi^* phi, psi^-1(Sigma)) against its value at (phi, Sigma).

    A dressed integral lives on configurations times regions, so gauge
    transformations move the slice along with the fields.  Both sides use the
    generic route: ``current`` at phi^u on d phi^u, integrated over u^-1 of the slice.
    """

    def value(q, ts, region_map):
        val = current(vt.Xi(q), *(vt._carry(q, t) for t in ts))
        return geom.integrate_preimage(val, Sigma, region_map)

    base = value(phi, tangents, vt.psi(phi))
    worst = 0.0
    for psi in psis:
        P = fs.as_field_dep_diffeo(psi)
        p = P(phi)
        moved_phi = fs.diff_action(p, phi)
        moved_ts = [fs.vertical_pushforward(P, phi, t) for t in tangents]
        # u'^-1(p^-1(Sigma)) is the preimage of Sigma under p o u'
        worst = max(worst, abs(float(value(moved_phi, moved_ts, p.compose(vt.psi(moved_phi))) - base)))
    return worst


def dressed_boundary_residual(u, phi: FieldConfig, U, psi: Diffeo) -> float:
    """u^{-1}(dU) from phi vs u(psi^* phi)^{-1}(psi^{-1}(dU)) from the gauge-related pair."""
    Ud = as_field_dep_diffeo(u)
    pts = boundary_points(U, phi.grid)
    if not pts:
        return 0.0
    a = Ud(phi).inverse()
    b = Ud(fs.diff_action(psi, phi)).inverse()
    moved = psi.inverse().apply(pts)
    lhs = a.apply(pts)
    rhs = b.apply(moved)
    return float(max(np.max(np.abs(l - r)) for l, r in zip(lhs, rhs)))


def boundary_points(U, grid) -> tuple:
    """Sample points of dU as coordinate arrays (points for 1D regions, circles for bands)."""
    pieces = [piece for _, piece in U.boundary()]
    if not pieces:
        return ()
    if grid.dim == 1:
        return (np.array([p.coords[0] for p in pieces]),)
    xs = grid.nodes[0]
    X = np.concatenate([xs for _ in pieces])
    Y = np.concatenate([np.full_like(xs, c.y0) for c in pieces])
    return (X, Y)


# ---------------------------------------------------------------------------
# residual symmetries


@dataclass
class ResidualReport:
    classification: str
    equivariance: float
    conjugation: float
    cocycle: float
    charges: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def residual_cocycle(u, phi: FieldConfig, psi: Diffeo) -> Diffeo:
    """C(phi; psi) = u(phi)^{-1} o psi o u(psi^* phi), a diffeomorphism of N."""
    U = as_field_dep_diffeo(u)
    return geom.compose_chain(U(phi).inverse(), psi, U(fs.diff_action(psi, phi)))


def _disp_gap(a: Diffeo, b: Diffeo) -> float:
    return ad.sup_norm([x - y for x, y in zip(a.disp, b.disp)])


def classify_residual(u, phi: FieldConfig, psis: Sequence[Diffeo], tol: float = 1e-6):
    """Which equivariance law the dressing obeys on the sampled transformations.

    Returns (label, equivariance, conjugation, cocycle) where the numbers are
    worst-case residuals of u^psi = psi^{-1} u, u^psi = psi^{-1} u psi and of
    the cocycle law of C(phi; psi).
    """
    U = as_field_dep_diffeo(u)
    ident = Diffeo.identity(phi.grid)
    eq = conj = coc = 0.0
    for psi in psis:
        C = residual_cocycle(U, phi, psi)
        eq = max(eq, _disp_gap(C, ident))
        conj = max(conj, _disp_gap(C, psi))
    for psi, psi2 in zip(psis, list(psis[1:]) + list(psis[:1])):
        lhs = residual_cocycle(U, phi, geom.compose_chain(psi2, psi))
        rhs = residual_cocycle(U, phi, psi2).compose(residual_cocycle(U, fs.diff_action(psi2, phi), psi))
        coc = max(coc, _disp_gap(lhs, rhs))
    if eq <= tol:
        label = "complete elimination; residual group = Diff(N) reparametrizations"
    elif conj <= tol:
        label = "conjugation law: residual tensorial transformations"
    elif coc <= tol:
        label = "cocycle law: residual twisted-tensorial transformations"
    else:
        label = "unclassified"
    return label, eq, conj, coc


def residual_basis_1form(phi_u: FieldConfig, vphi, delta_u: FieldTangent) -> FieldTangent:
    """(d phi^u)^vphi = vphi^*(d phi^u + L_{d vphi o vphi^{-1}} phi^u) for a field-dependent vphi of N."""
    return fs.basis_1form_transform(vphi)(phi_u, delta_u)


def residual_phase_space(model, u, phi: FieldConfig, gamma: str = "zero") -> tuple[PhaseSpace, FieldConfig]:
    """The covariant phase space of the dressed theory: same Lagrangian at phi^u, slices u^{-1}(Sigma)."""
    el = model.euler_lagrange() if hasattr(model, "euler_lagrange") else model
    Ud = as_field_dep_diffeo(u)
    return PhaseSpace(el, gamma, transport=Ud(phi)), dress_field(phi, Ud)


def residual_suite(model, u, phi: FieldConfig, psis: Sequence[Diffeo], Sigma, generators: Sequence[VectorFieldM], tol: float = 1e-6) -> ResidualReport:
    """Classification plus residual charges, their bracket and cocycle.

    Every residual quantity for generators X in diff(N) is compared with the
    bare quantity for u_* X on Sigma (naturality of the construction).
    """
    el = model.euler_lagrange() if hasattr(model, "euler_lagrange") else model
    label, eq, conj, coc = classify_residual(u, phi, psis, tol)
    rps, phi_u = residual_phase_space(el, u, phi)
    ps = PhaseSpace(el)
    Ud = as_field_dep_diffeo(u)(phi)
    pushed = [geom.pushforward_vf(Ud, X) for X in generators]
    charges = {"charge": 0.0, "bracket": 0.0, "cocycle": 0.0}
    for X, Xm in zip(generators, pushed):
        q = rps.charge_value(X, Sigma, phi_u)
        charges["charge"] = max(charges["charge"], abs(float(q - ps.charge_value(Xm, Sigma, phi))))
    for (X, Xm), (Y, Ym) in zip(zip(generators, pushed), list(zip(generators, pushed))[1:]):
        b = rps.bracket(X, Y, Sigma, phi_u) - ps.bracket(Xm, Ym, Sigma, phi)
        c = rps.cocycle_concrete(X, Y, Sigma, phi_u) - ps.cocycle_concrete(Xm, Ym, Sigma, phi)
        charges["bracket"] = max(charges["bracket"], abs(float(b)))
        charges["cocycle"] = max(charges["cocycle"], abs(float(c)))
    return ResidualReport(label, eq, conj, coc, charges)


__all__ = [
    "Dressing",
    "FlatConnection",
    "ShiftReport",
    "DressedReport",
    "ResidualReport",
    "clock_dressing",
    "clock_map",
    "user_dressing",
    "equivariance_residual",
    "dress_field",
    "dress_basis_1form",
    "dressed_variation",
    "dressed_form",
    "flat_connection",
    "curvature",
    "curvature_residual",
    "horizontalize",
    "reparametrized",
    "shift_form",
    "connection_shift_suite",
    "dressed_presymplectic",
    "dressed_boundary_residual",
    "boundary_points",
    "residual_cocycle",
    "classify_residual",
    "residual_basis_1form",
    "residual_phase_space",
    "residual_suite",
]
