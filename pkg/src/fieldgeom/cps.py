"""Covariant phase space: Noether currents and charges, presymplectic structure,
moment-map residuals, charge brackets and their 2-cocycles, and the
transformation of L, E, theta_Sigma, Theta_Sigma and dS under field-dependent
diffeomorphisms.

Conventions:
  * ``[X, Y]_diff = -[X, Y]_Gamma`` (``geom.lie_bracket_diff``).
  * theta and L below are the bulk objects; a boundary Lagrangian ell only
    enters through theta' = theta + d ell and through the gamma choice
    ``"boundary"``, gamma(X) = -iota_X ell.
  * Generators may be plain ``VectorFieldM`` or field-dependent
    ``FieldDepVectorM``; the latter evaluate at phi.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from . import dual as ad
from . import fieldspace as fs
from . import geom
from .errors import InvalidDataError
from .fieldspace import FieldConfig, FieldForm, FieldTangent, as_field_dep, as_field_dep_diffeo
from .geom import Diffeo, FormField, VectorFieldM
from .lagrangian.euler import EulerLagrange

GAMMA_CHOICES = ("zero", "boundary")


@dataclass
class ChargeReport:
    slice: Any
    generator: str
    bulk: float
    corner: float
    gamma: str
    total: float
    on_shell: bool | None = None

    def as_dict(self) -> dict:
        return {
            "slice": repr(self.slice),
            "generator": self.generator,
            "bulk": float(ad.primal(self.bulk)),
            "corner": float(ad.primal(self.corner)),
            "gamma": self.gamma,
            "total": float(ad.primal(self.total)),
            "on_shell": self.on_shell,
        }


def _sum(*terms):
    acc = 0.0
    for t in terms:
        if t is not None:
            acc = acc + t
    return acc


def _bint(form: FormField | None, D):
    """Boundary integral that treats a missing (negative-degree) form as zero."""
    if form is None or not D.boundary():
        return 0.0
    return geom.boundary_integrate(form, D)


class PhaseSpace:
    """Covariant phase space of a compiled Lagrangian."""

    def __init__(self, el: EulerLagrange, gamma: str = "zero", transport: Diffeo | None = None):
        if gamma not in GAMMA_CHOICES:
            raise InvalidDataError(f"gamma choice must be one of {GAMMA_CHOICES}")
        if gamma == "boundary" and el.spec.boundary is None:
            raise InvalidDataError("gamma = -iota_X ell needs a boundary Lagrangian")
        self.el = el
        self.gamma_choice = gamma
        self.grid = el.spec.schema.grid
        self.dim = self.grid.dim
        # integrate over transport^{-1}(Sigma) instead of Sigma (dressed slices)
        self.transport = transport

    def _int(self, form, D):
        if self.transport is None:
            return geom.integrate(form, D)
        return geom.integrate_preimage(form, D, self.transport)

    def _bint(self, form, D):
        if form is None or not D.boundary():
            return 0.0
        if self.transport is None:
            return geom.boundary_integrate(form, D)
        return geom.boundary_integrate_preimage(form, D, self.transport)

    # -- basic ingredients

    def vec(self, X, phi: FieldConfig) -> VectorFieldM:
        return as_field_dep(X)(phi)

    def theta(self, phi, delta) -> FormField:
        return self.el.theta(phi, delta, boundary=False)

    def L(self, phi) -> FormField:
        return self.el.spec(phi)

    def gamma(self, X, phi: FieldConfig) -> FormField | None:
        """gamma(X; phi), an (n-2)-form (``None`` in 1D)."""
        if self.dim == 1:
            return None
        if self.gamma_choice == "zero":
            return FormField.zeros(self.grid, 0)
        return -geom.interior(self.vec(X, phi), self.el.spec.boundary_form(phi))

    def d_gamma(self, X, phi: FieldConfig, delta: FieldTangent) -> FormField | None:
        """Field-space derivative of phi -> gamma(X; phi), including any phi-dependence of X."""
        if self.dim == 1 or self.gamma_choice == "zero":
            return self.gamma(X, phi) if self.dim == 2 else None
        return fs.directional_derivative(lambda q: self.gamma(X, q), phi, delta)

    # -- currents and charges

    def current(self, X, phi: FieldConfig) -> FormField:
        """Definitional J = iota_{X^v} theta - iota_X L - d gamma."""
        Xp = self.vec(X, phi)
        J = self.theta(phi, fs.field_lie(Xp, phi)) - geom.interior(Xp, self.L(phi))
        g = self.gamma(X, phi)
        return J - geom.d(g) if g is not None else J

    def current_exact(self, X, phi: FieldConfig) -> FormField:
        """Structural J = d(theta(iota_X phi) - gamma) - E(iota_X phi)."""
        Xp = self.vec(X, phi)
        J = -self.el.E_iota(phi, Xp)
        t = self.el.theta_iota(phi, Xp)
        if t is not None:
            J = J + geom.d(t - self.gamma(X, phi))
        return J

    def charge_parts(self, X, Sigma, phi: FieldConfig):
        Xp = self.vec(X, phi)
        bulk = -self._int(self.el.E_iota(phi, Xp), Sigma)
        t = self.el.theta_iota(phi, Xp)
        corner = 0.0
        if t is not None:
            corner = self._bint(t - self.gamma(X, phi), Sigma)
        return bulk, corner

    def charge_value(self, X, Sigma, phi: FieldConfig):
        bulk, corner = self.charge_parts(X, Sigma, phi)
        return bulk + corner

    def charge(self, X, Sigma, phi: FieldConfig, on_shell: bool | None = None, name: str = "") -> ChargeReport:
        """Q = oint (theta(iota_X phi) - gamma) - int E(iota_X phi), split into corner and bulk."""
        bulk, corner = self.charge_parts(X, Sigma, phi)
        return ChargeReport(Sigma, name or type(X).__name__, float(bulk), float(corner), self.gamma_choice, float(bulk + corner), on_shell)

    def charge_from_current(self, X, Sigma, phi: FieldConfig):
        return self._int(self.current(X, phi), Sigma)

    # -- presymplectic structure

    def theta_sigma(self, Sigma, primed: bool = False) -> FieldForm:
        if primed:
            fn = lambda phi, d: self._int(self.el.theta(phi, d, boundary=True), Sigma)  # noqa: E731
        else:
            fn = lambda phi, d: self._int(self.theta(phi, d), Sigma)  # noqa: E731
        return FieldForm(1, fn, None, "invariant", "theta_Sigma")

    def Theta_sigma(self, Sigma, primed: bool = False) -> FieldForm:
        """Theta_Sigma = d theta_Sigma on tangent vectors."""
        return fs.exterior(self.theta_sigma(Sigma, primed))

    def Theta_current(self) -> FieldForm:
        """Pointwise presymplectic current Theta = d theta, valued in (n-1)-forms."""
        return fs.exterior(FieldForm(1, self.theta, self.dim - 1, "pullback", "theta"))

    def Theta_koszul(self, Sigma, phi: FieldConfig, A, B) -> Any:
        """Theta_Sigma(A, B) for field-space vector fields, by the Koszul formula."""
        return fs.ext_deriv(self.theta_sigma(Sigma), phi, A, B)

    # -- moment map

    def flux(self, X, Sigma) -> FieldForm:
        """F_X(delta) = oint (iota_X theta(delta) - d gamma(X)(delta)) - int iota_X E(delta)."""

        def fn(phi, delta):
            Xp = self.vec(X, phi)
            bulk = -self._int(geom.interior(Xp, self.el.E(phi, delta)), Sigma)
            if self.dim == 1:
                return bulk
            edge = geom.interior(Xp, self.theta(phi, delta)) - self.d_gamma(X, phi, delta)
            return bulk + self._bint(edge, Sigma)

        return FieldForm(1, fn, None, "unknown", "flux")

    def moment_map_residual(self, X, Sigma, phi: FieldConfig, delta: FieldTangent) -> float:
        """iota_{X^v} Theta_Sigma(delta) + dQ(X)(delta) - Q(dX(delta)) - oint(...) + int iota_X E(delta).

        The oint part carries gamma(dX(delta)) for field-dependent X.
        """
        Xf = as_field_dep(X)
        Xv = fs.field_lie(Xf(phi), phi)
        total = self.Theta_sigma(Sigma)(phi, Xv, delta)
        total = total + fs.directional_derivative(lambda q: self.charge_value(Xf, Sigma, q), phi, delta)
        total = total - self.flux(Xf, Sigma)(phi, delta)
        if not Xf.is_constant:
            dX = fs.directional_derivative(Xf, phi, delta)
            total = total - self.charge_value(dX, Sigma, phi)
            g = self.gamma(dX, phi)
            if g is not None:
                total = total - self._bint(g, Sigma)
        return abs(float(ad.primal(total)))

    # -- brackets and cocycles

    def bracket(self, X, Y, Sigma, phi: FieldConfig):
        """{Q(X), Q(Y)} := Theta_Sigma(X^v, Y^v)."""
        Xv = fs.field_lie(self.vec(X, phi), phi)
        Yv = fs.field_lie(self.vec(Y, phi), phi)
        return self.Theta_sigma(Sigma)(phi, Xv, Yv)

    def e_terms(self, X, Y, Sigma, phi: FieldConfig):
        """int (iota_Y E(X^v) - iota_X E(Y^v)), the off-shell part of the bracket."""
        Xp, Yp = self.vec(X, phi), self.vec(Y, phi)
        a = geom.interior(Yp, self.el.E(phi, fs.field_lie(Xp, phi)))
        b = geom.interior(Xp, self.el.E(phi, fs.field_lie(Yp, phi)))
        return self._int(a - b, Sigma)

    def cocycle_definitional(self, X, Y, Sigma, phi: FieldConfig):
        """Theta_Sigma(X^v, Y^v) - Q({X, Y}) - int (iota_Y E(X^v) - iota_X E(Y^v))."""
        XY = fs.extended_bracket(X, Y)
        return self.bracket(X, Y, Sigma, phi) - self.charge_value(XY, Sigma, phi) - self.e_terms(X, Y, Sigma, phi)

    def cocycle_concrete(self, X, Y, Sigma, phi: FieldConfig):
        """Closed boundary expression of the cocycle.

        oint [L_X theta(iota_Y phi) - L_Y theta(iota_X phi) + iota_X iota_Y L + gamma([X,Y]_diff)
              + iota_Y E(iota_X phi) - iota_X E(iota_Y phi)],
        minus Q(X^v(Y) - Y^v(X)) when the generators depend on phi.
        """
        Xf, Yf = as_field_dep(X), as_field_dep(Y)
        Xp, Yp = Xf(phi), Yf(phi)
        out = 0.0
        if self.dim == 2 and Sigma.boundary():
            el = self.el
            tY, tX = el.theta_iota(phi, Yp), el.theta_iota(phi, Xp)
            edge = geom.lie_derivative(Xp, tY) - geom.lie_derivative(Yp, tX)
            edge = edge + geom.interior(Xp, geom.interior(Yp, self.L(phi)))
            edge = edge + self.gamma(geom.lie_bracket_diff(Xp, Yp), phi)
            edge = edge + geom.interior(Yp, el.E_iota(phi, Xp)) - geom.interior(Xp, el.E_iota(phi, Yp))
            out = self._bint(edge, Sigma)
        if not (Xf.is_constant and Yf.is_constant):
            W = fs.directional_derivative(Yf, phi, fs.field_lie(Xp, phi)) - fs.directional_derivative(Xf, phi, fs.field_lie(Yp, phi))
            out = out - self.charge_value(W, Sigma, phi)
        return out

    def cocycle(self, X, Y, Sigma, phi: FieldConfig, route: str = "concrete"):
        if route == "concrete":
            return self.cocycle_concrete(X, Y, Sigma, phi)
        if route == "definitional":
            return self.cocycle_definitional(X, Y, Sigma, phi)
        raise InvalidDataError(f"unknown cocycle route {route!r}")

    def cocycle_condition(self, X: VectorFieldM, Y: VectorFieldM, Z: VectorFieldM, Sigma, phi: FieldConfig, route: str = "concrete"):
        """(cyclic sum of C(X, [Y,Z]_diff), cyclic sum of dF_X(Y^v, Z^v)).

        The two agree on-shell; both vanish when the generators vanish near the boundary.
        """
        br = geom.lie_bracket_diff
        lhs = 0.0
        rhs = 0.0
        for A, B, C in ((X, Y, Z), (Y, Z, X), (Z, X, Y)):
            lhs = lhs + self.cocycle(A, br(B, C), Sigma, phi, route)
            rhs = rhs + fs.ext_deriv(self.flux(A, Sigma), phi, fs.vertical_vf(B), fs.vertical_vf(C))
        return float(ad.primal(lhs)), float(ad.primal(rhs))

    # -- identities used as gates

    def identity2_residual(self, X: VectorFieldM, phi: FieldConfig) -> float:
        """sup |iota_{X^v} theta - iota_X L - d theta(iota_X phi) + E(iota_X phi)|."""
        lhs = self.theta(phi, fs.field_lie(X, phi)) - geom.interior(X, self.L(phi))
        rhs = -self.el.E_iota(phi, X)
        t = self.el.theta_iota(phi, X)
        if t is not None:
            rhs = rhs + geom.d(t)
        return ad.sup_norm(lhs - rhs)

    def current_closure_residual(self, X, phi: FieldConfig) -> float:
        """sup |dJ + iota_{X^v} E| (off-shell identity); in 1D J is a 0-form."""
        Xp = self.vec(X, phi)
        J = self.current(X, phi)
        return ad.sup_norm(geom.d(J) + self.el.E(phi, fs.field_lie(Xp, phi)))


# ---------------------------------------------------------------------------
# the abelian Lagrangian 1-cocycle


class AnomalyCocycle:
    """c(phi; psi) = int_U [psi^* L(phi) - L(phi)].

    ``co_moving=True`` integrates psi^* L over psi^{-1}(U) instead, for which
    the cocycle vanishes identically.
    """

    def __init__(self, el: EulerLagrange, U, co_moving: bool = False):
        self.el = el
        self.U = U
        self.co_moving = co_moving

    def __call__(self, phi: FieldConfig, psi: Diffeo):
        L = self.el.lagrangian(phi)
        moved = geom.pullback(psi, L)
        first = geom.integrate_preimage(moved, self.U, psi) if self.co_moving else geom.integrate(moved, self.U)
        return first - geom.integrate(L, self.U)

    def cocycle_residual(self, phi: FieldConfig, psi: Diffeo, psi2: Diffeo) -> float:
        """|c(phi; psi2 o psi) - c(phi; psi2) - c(psi2^* phi; psi)|."""
        lhs = self(phi, psi2.compose(psi))
        rhs = self(phi, psi2) + self(fs.diff_action(psi2, phi), psi)
        return abs(float(lhs - rhs))


def anomaly_cocycle_check(el: EulerLagrange, U, phi, psi, psi2, co_moving: bool = False) -> float:
    return AnomalyCocycle(el, U, co_moving).cocycle_residual(phi, psi, psi2)


# ---------------------------------------------------------------------------
# vertical transformations


class VerticalTransforms:
    """Closed formulas and generic (pull-everything-back) evaluations of
    L^psi, E^psi, theta_Sigma^psi, Theta_Sigma^psi and (dS)^psi.

    With Psi(delta) = d psi(delta) o psi^{-1}:

      L^psi          = psi^* L
      E^psi(delta)   = psi^*(E(delta) + d E(iota_Psi phi))
      theta_Sigma^psi = int [theta + iota_Psi L - E(iota_Psi phi)] + oint theta(iota_Psi phi)
      Theta_Sigma^psi = int Theta + oint [d theta(iota_Psi phi) + iota_Psi theta
                        + L_Psi theta(iota_Psi phi) + 1/2 iota_Psi iota_Psi L]
                        - int [iota_Psi E + d E(iota_Psi phi) + L_Psi E(iota_Psi phi)]
      (dS)^psi       = dS + oint_{dU} iota_Psi L

    Field-space 2-forms built from two 1-forms a, b act as
    (a ^ b)(d1, d2) = a(d1) b(d2) - a(d2) b(d1).
    """

    def __init__(self, ps: PhaseSpace, psi):
        self.ps = ps
        self.el = ps.el
        self.psi = as_field_dep_diffeo(psi)
        self.Xi = fs.vertical_map(self.psi)

    def Psi(self, phi, delta) -> VectorFieldM:
        return fs.diffeo_variation(self.psi, phi, delta)

    def _carry(self, phi, delta):
        return fs.vertical_pushforward(self.psi, phi, delta)

    # L
    def L_closed(self, phi) -> FormField:
        return geom.pullback(self.psi(phi), self.ps.L(phi))

    def L_generic(self, phi) -> FormField:
        return self.ps.L(self.Xi(phi))

    # E
    def E_closed(self, phi, delta) -> FormField:
        inner = self.el.E(phi, delta)
        if not self.psi.is_constant:
            inner = inner + geom.d(self.el.E_iota(phi, self.Psi(phi, delta)))
        return geom.pullback(self.psi(phi), inner)

    def E_generic(self, phi, delta) -> FormField:
        return self.el.E(self.Xi(phi), self._carry(phi, delta))

    # theta_Sigma
    def theta_sigma_closed(self, Sigma, phi, delta):
        P = self.Psi(phi, delta)
        bulk = self.ps.theta(phi, delta) + geom.interior(P, self.ps.L(phi)) - self.el.E_iota(phi, P)
        return geom.integrate(bulk, Sigma) + _bint(self.el.theta_iota(phi, P), Sigma)

    def theta_sigma_generic(self, Sigma, phi, delta):
        psi = self.psi(phi)
        val = self.ps.theta(self.Xi(phi), self._carry(phi, delta))
        return geom.integrate_preimage(val, Sigma, psi)

    # Theta_Sigma
    def Theta_sigma_generic(self, Sigma, phi, d1, d2):
        psi = self.psi(phi)
        val = self.ps.Theta_current()(self.Xi(phi), self._carry(phi, d1), self._carry(phi, d2))
        return geom.integrate_preimage(val, Sigma, psi)

    def theta_current_closed(self, phi, delta) -> FormField:
        """Pointwise theta^psi = psi^*(theta + d theta(iota_Psi phi) + iota_Psi L - E(iota_Psi phi))."""
        P = self.Psi(phi, delta)
        inner = self.ps.theta(phi, delta) + geom.interior(P, self.ps.L(phi)) - self.el.E_iota(phi, P)
        t = self.el.theta_iota(phi, P)
        if t is not None:
            inner = inner + geom.d(t)
        return geom.pullback(self.psi(phi), inner)

    def Theta_sigma_exterior(self, Sigma, phi, d1, d2):
        """int over psi^{-1}(Sigma) of d(theta^psi), the current-level exterior derivative.

        The slice is held at its base-point position: Theta_Sigma^psi is not
        d(theta_Sigma^psi) because psi^{-1}(Sigma) itself moves with phi.
        """
        form = FieldForm(1, self.theta_current_closed, self.ps.dim - 1)
        return geom.integrate_preimage(fs.exterior(form)(phi, d1, d2), Sigma, self.psi(phi))

    def Theta_sigma_closed(self, Sigma, phi, d1, d2, parts: bool = False):
        ps, el = self.ps, self.el
        P1, P2 = self.Psi(phi, d1), self.Psi(phi, d2)
        terms = {"bulk": ps.Theta_sigma(Sigma)(phi, d1, d2)}
        # boundary rows
        edge = 0.0
        if ps.dim == 2 and Sigma.boundary():
            beta = FieldForm(1, lambda q, d: el.theta_iota(q, self.Psi(q, d)))
            edge = fs.exterior(beta)(phi, d1, d2)
            edge = edge + geom.interior(P1, ps.theta(phi, d2)) - geom.interior(P2, ps.theta(phi, d1))
            edge = edge + geom.lie_derivative(P1, el.theta_iota(phi, P2)) - geom.lie_derivative(P2, el.theta_iota(phi, P1))
            edge = edge + geom.interior(P1, geom.interior(P2, ps.L(phi)))
            terms["boundary"] = _bint(edge, Sigma)
        else:
            terms["boundary"] = 0.0
        # bulk E rows
        e_form = FieldForm(1, lambda q, d: el.E_iota(q, self.Psi(q, d)))
        e_rows = geom.interior(P1, el.E(phi, d2)) - geom.interior(P2, el.E(phi, d1)) + fs.exterior(e_form)(phi, d1, d2)
        # invisible when Psi(d1) and Psi(d2) are parallel, and on-shell
        e_rows = e_rows + geom.lie_derivative(P1, el.E_iota(phi, P2)) - geom.lie_derivative(P2, el.E_iota(phi, P1))
        terms["field_equations"] = -geom.integrate(e_rows, Sigma)
        total = terms["bulk"] + terms["boundary"] + terms["field_equations"]
        return (total, terms) if parts else total

    # dS
    def dS_closed(self, U, phi, delta):
        dL = fs.directional_derivative(self.ps.L, phi, delta)
        return geom.integrate(dL, U) + _bint(geom.interior(self.Psi(phi, delta), self.ps.L(phi)), U)

    def dS_generic(self, U, phi, delta):
        psi = self.psi(phi)
        dL = fs.directional_derivative(self.ps.L, self.Xi(phi), self._carry(phi, delta))
        return geom.integrate_preimage(dL, U, psi)


# ---------------------------------------------------------------------------
# functional interface


def _ps(model, gamma: str) -> PhaseSpace:
    if isinstance(model, PhaseSpace):
        return model
    return PhaseSpace(model, gamma)


def noether_current(el, X, phi: FieldConfig, gamma: str = "zero") -> FormField:
    return _ps(el, gamma).current(X, phi)


def noether_current_exact_form(el, X, phi: FieldConfig, gamma: str = "zero") -> FormField:
    return _ps(el, gamma).current_exact(X, phi)


def charge(el, X, Sigma, phi: FieldConfig, gamma: str = "zero", on_shell: bool | None = None, name: str = "") -> ChargeReport:
    return _ps(el, gamma).charge(X, Sigma, phi, on_shell, name)


def presymplectic(el, Sigma, phi: FieldConfig, a, b=None, primed: bool = False):
    """theta_Sigma(a), or Theta_Sigma(a, b).

    Tangents are evaluated pointwise; field-space vector fields go through Koszul.
    """
    ps = _ps(el, "zero")
    if b is None:
        a = a(phi) if isinstance(a, fs.FieldVectorField) else a
        return ps.theta_sigma(Sigma, primed)(phi, a)
    if isinstance(a, fs.FieldVectorField) and isinstance(b, fs.FieldVectorField):
        return fs.ext_deriv(ps.theta_sigma(Sigma, primed), phi, a, b)
    return ps.Theta_sigma(Sigma, primed)(phi, a, b)


def moment_map_residual(el, X, Sigma, phi: FieldConfig, probe: FieldTangent, gamma: str = "zero") -> float:
    return _ps(el, gamma).moment_map_residual(X, Sigma, phi, probe)


def charge_bracket(el, X, Y, Sigma, phi: FieldConfig):
    return _ps(el, "zero").bracket(X, Y, Sigma, phi)


def cocycle_C(el, X, Y, Sigma, phi: FieldConfig, gamma: str = "zero", route: str = "concrete"):
    return _ps(el, gamma).cocycle(X, Y, Sigma, phi, route)


@dataclass
class CocycleConditionReport:
    cyclic_sum: float
    flux: float

    @property
    def residual(self) -> float:
        """|cyclic sum - flux obstruction|; equals |cyclic sum| when the generators vanish on the boundary."""
        return abs(self.cyclic_sum - self.flux)


def cocycle_condition_residual(el, X, Y, Z, Sigma, phi: FieldConfig, gamma: str = "zero", route: str = "concrete") -> CocycleConditionReport:
    lhs, rhs = _ps(el, gamma).cocycle_condition(X, Y, Z, Sigma, phi, route)
    return CocycleConditionReport(lhs, rhs)


def vertical_transform_suite(el, psi, phi: FieldConfig, Sigma, U, tangents, on_shell: bool = False) -> dict:
    """Residuals of every closed vertical-transformation formula against the generic route.

    With ``on_shell`` (phi a solution, tangents tangent to the solution space)
    the extra row ``Theta_boundary_only`` checks that Theta_Sigma^psi - Theta_Sigma
    is exhausted by the boundary rows.
    """
    ps = _ps(el, "zero")
    vt = VerticalTransforms(ps, psi)
    d1, d2 = tangents[0], tangents[1]
    out = {
        "L": ad.sup_norm(vt.L_closed(phi) - vt.L_generic(phi)),
        "E": ad.sup_norm(vt.E_closed(phi, d1) - vt.E_generic(phi, d1)),
        "theta_Sigma": abs(float(vt.theta_sigma_closed(Sigma, phi, d1) - vt.theta_sigma_generic(Sigma, phi, d1))),
    }
    closed, parts = vt.Theta_sigma_closed(Sigma, phi, d1, d2, parts=True)
    out["Theta_Sigma"] = abs(float(closed - vt.Theta_sigma_generic(Sigma, phi, d1, d2)))
    out["Theta_Sigma_exterior"] = abs(float(closed - vt.Theta_sigma_exterior(Sigma, phi, d1, d2)))
    out["dS"] = abs(float(vt.dS_closed(U, phi, d1) - vt.dS_generic(U, phi, d1)))
    if on_shell:
        moved = vt.Theta_sigma_generic(Sigma, phi, d1, d2)
        out["Theta_boundary_only"] = abs(float(moved - parts["bulk"] - parts["boundary"]))
        out["E_on_shell"] = ad.sup_norm(vt.E_generic(phi, d1))
    return out


__all__ = [
    "ChargeReport",
    "CocycleConditionReport",
    "PhaseSpace",
    "AnomalyCocycle",
    "VerticalTransforms",
    "anomaly_cocycle_check",
    "charge",
    "charge_bracket",
    "cocycle_C",
    "cocycle_condition_residual",
    "moment_map_residual",
    "noether_current",
    "noether_current_exact_form",
    "presymplectic",
    "vertical_transform_suite",
]
