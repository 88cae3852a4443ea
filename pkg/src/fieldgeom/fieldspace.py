"""Bundle geometry of field space.

Points of field space are ``FieldConfig`` objects (one ``FormField`` per
schema entry), tangent vectors are ``FieldTangent`` objects of the same
shape.  Field-space vector fields and forms are plain evaluators; every
derivative is a forward-mode directional derivative through the evaluator,
with a central-difference oracle available for cross-checks.

Scalar fields may carry an integer winding per axis.  They are stored as a
periodic part ``c`` with full value ``w . x + c``, which is how clock fields
of degree one are represented on the torus.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from . import dual as ad
from . import geom
from .errors import DifferentiationError, InvalidDataError, NearSingularDiffeoError, UnsupportedDegreeError
from .geom import Diffeo, FormField, VectorFieldM
from .grid import PeriodicGrid

AXES = "xy"


@dataclass(frozen=True)
class FieldSchema:
    grid: PeriodicGrid
    entries: tuple[tuple[str, int], ...]
    windings: tuple[tuple[str, tuple[int, ...]], ...] = ()

    @classmethod
    def build(cls, grid: PeriodicGrid, degrees: Mapping[str, int], windings: Mapping[str, Sequence[int]] | None = None):
        windings = dict(windings or {})
        for name, w in windings.items():
            if degrees.get(name) != 0:
                raise InvalidDataError(f"winding only makes sense for 0-form fields, not {name!r}")
            if len(w) != grid.dim:
                raise InvalidDataError(f"winding of {name!r} needs {grid.dim} integers")
        return cls(grid, tuple((n, int(k)) for n, k in degrees.items()),
                   tuple((n, tuple(int(v) for v in w)) for n, w in windings.items()))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.entries)

    def degree(self, name: str) -> int:
        return dict(self.entries)[name]

    def winding(self, name: str):
        return dict(self.windings).get(name)

    def symbols(self) -> list[tuple[str, str, int]]:
        """Component symbols (symbol, field, index); 1-forms get _x/_y suffixes."""
        out = []
        dim = self.grid.dim
        for name, k in self.entries:
            if k == 1 and dim == 2 or (k == 1 and dim == 1):
                for i in range(dim):
                    out.append((f"{name}_{AXES[i]}", name, i))
            else:
                out.append((name, name, 0))
        return out


class _FieldTuple:
    __slots__ = ("schema", "fields")

    def __init__(self, schema: FieldSchema, fields: Mapping[str, FormField]):
        missing = set(schema.names) - set(fields)
        if missing:
            raise InvalidDataError(f"missing fields {sorted(missing)}")
        for name, k in schema.entries:
            if fields[name].degree != k:
                raise InvalidDataError(f"field {name!r} must have degree {k}")
        self.schema = schema
        self.fields = {n: fields[n] for n in schema.names}

    def __getitem__(self, name: str) -> FormField:
        return self.fields[name]

    def _tree_map(self, fn, *others):
        return type(self)(self.schema, {n: f._tree_map(fn, *(o.fields[n] for o in others)) for n, f in self.fields.items()})

    def _combine(self, o, op, cls):
        return cls(self.schema, {n: op(self.fields[n], o.fields[n]) for n in self.schema.names})

    @property
    def grid(self) -> PeriodicGrid:
        return self.schema.grid


class FieldTangent(_FieldTuple):
    """A variation delta phi; always periodic."""

    def __add__(self, o):
        if isinstance(o, (int, float)) and o == 0:
            return self
        if isinstance(o, FieldConfig):
            return o + self
        return self._combine(o, lambda a, b: a + b, FieldTangent)

    __radd__ = __add__

    def __sub__(self, o):
        return self._combine(o, lambda a, b: a - b, FieldTangent)

    def __neg__(self):
        return FieldTangent(self.schema, {n: -f for n, f in self.fields.items()})

    def __mul__(self, s):
        return FieldTangent(self.schema, {n: f * s for n, f in self.fields.items()})

    __rmul__ = __mul__

    @classmethod
    def zeros(cls, schema: FieldSchema) -> "FieldTangent":
        return cls(schema, {n: FormField.zeros(schema.grid, k) for n, k in schema.entries})

    def __repr__(self) -> str:
        return f"FieldTangent({', '.join(self.schema.names)})"


class FieldConfig(_FieldTuple):
    """A point phi of field space."""

    def __add__(self, o):
        if not isinstance(o, FieldTangent):
            raise TypeError("a configuration can only be shifted by a tangent")
        return self._combine(o, lambda a, b: a + b, FieldConfig)

    def __sub__(self, o):
        cls = FieldConfig if isinstance(o, FieldTangent) else FieldTangent
        return self._combine(o, lambda a, b: a - b, cls)

    def as_tangent(self) -> FieldTangent:
        return FieldTangent(self.schema, self.fields)

    def full_d(self, name: str) -> FormField:
        """Exterior derivative of a field, winding included."""
        out = geom.d(self.fields[name])
        w = self.schema.winding(name)
        if w is not None:
            out = FormField(out.grid, 1, [c + float(wi) for c, wi in zip(out.comps, w)])
        return out

    def __repr__(self) -> str:
        return f"FieldConfig({', '.join(self.schema.names)})"


def _to_tangent(obj):
    if isinstance(obj, FieldConfig):
        return obj.as_tangent()
    if isinstance(obj, Diffeo):
        return obj.displacement()
    if isinstance(obj, tuple):
        return tuple(_to_tangent(o) for o in obj)
    return obj


# ---------------------------------------------------------------------------
# actions of diffeomorphisms on fields


def diff_action(psi: Diffeo, phi: FieldConfig) -> FieldConfig:
    """Right action R_psi phi = psi^* phi, winding-aware."""
    out = {}
    for name, form in phi.fields.items():
        pulled = geom.pullback(psi, form)
        w = phi.schema.winding(name)
        if w is not None:
            c = pulled.comps[0] + sum(float(wi) * f for wi, f in zip(w, psi.disp))
            pulled = FormField(pulled.grid, 0, [c])
        out[name] = pulled
    return FieldConfig(phi.schema, out)


def pullback_tangent(psi: Diffeo, delta: FieldTangent) -> FieldTangent:
    return FieldTangent(delta.schema, {n: geom.pullback(psi, f) for n, f in delta.fields.items()})


def field_lie(X: VectorFieldM, phi: FieldConfig) -> FieldTangent:
    """Componentwise spacetime Lie derivative of the fields."""
    out = {}
    for name, form in phi.fields.items():
        w = phi.schema.winding(name)
        if w is not None:
            grad = phi.full_d(name)
            out[name] = FormField(form.grid, 0, [sum(x * g for x, g in zip(X.comps, grad.comps))])
        else:
            out[name] = geom.lie_derivative(X, form)
    return FieldTangent(phi.schema, out)


def tangent_lie(X: VectorFieldM, delta: FieldTangent) -> FieldTangent:
    return FieldTangent(delta.schema, {n: geom.lie_derivative(X, f) for n, f in delta.fields.items()})


# ---------------------------------------------------------------------------
# evaluators


class FieldVectorField:
    """phi -> FieldTangent."""

    def __init__(self, fn: Callable[[FieldConfig], FieldTangent], name: str = ""):
        self.fn = fn
        self.name = name

    def __call__(self, phi: FieldConfig) -> FieldTangent:
        return self.fn(phi)

    @classmethod
    def constant(cls, delta: FieldTangent) -> "FieldVectorField":
        return cls(lambda phi: delta, "constant")


class FieldDepVectorM:
    """phi -> VectorFieldM; constant maps realize plain X in diff(M)."""

    def __init__(self, fn: Callable[[FieldConfig], VectorFieldM], name: str = "", constant: bool = False):
        self.fn = fn
        self.name = name
        self.is_constant = constant

    def __call__(self, phi: FieldConfig) -> VectorFieldM:
        return self.fn(phi)

    @classmethod
    def constant(cls, X: VectorFieldM) -> "FieldDepVectorM":
        return cls(lambda phi: X, "constant", constant=True)


class FieldDepDiffeo:
    """phi -> Diffeo, a vertical diffeomorphism of field space."""

    def __init__(self, fn: Callable[[FieldConfig], Diffeo], name: str = "", constant: bool = False):
        self.fn = fn
        self.name = name
        self.is_constant = constant

    def __call__(self, phi: FieldConfig) -> Diffeo:
        return self.fn(phi)

    @classmethod
    def constant(cls, psi: Diffeo) -> "FieldDepDiffeo":
        return cls(lambda phi: psi, "constant", constant=True)


def as_field_dep(X) -> FieldDepVectorM:
    if isinstance(X, FieldDepVectorM):
        return X
    if isinstance(X, VectorFieldM):
        return FieldDepVectorM.constant(X)
    raise TypeError(f"expected a vector field, got {type(X).__name__}")


def as_field_dep_diffeo(psi) -> FieldDepDiffeo:
    if isinstance(psi, FieldDepDiffeo):
        return psi
    if isinstance(psi, Diffeo):
        return FieldDepDiffeo.constant(psi)
    raise TypeError(f"expected a diffeomorphism, got {type(psi).__name__}")


def _tangent_of(v, phi):
    return v(phi) if callable(v) and not isinstance(v, _FieldTuple) else v


def directional_derivative(F: Callable, phi: FieldConfig, delta: FieldTangent, method: str = "dual", h: float = 1e-3):
    """D F[phi](delta) by dual numbers (default) or a Richardson central difference."""
    try:
        if method == "dual":
            out = ad.jvp(F, phi, delta)
        elif method == "fd":
            out = ad.fd_jvp(F, phi, delta, h)
        else:
            raise ValueError(f"unknown differentiation method {method!r}")
    except NearSingularDiffeoError as exc:
        raise DifferentiationError(f"evaluator not smooth along the ray: {exc}") from exc
    return _to_tangent(out)


D = directional_derivative


def vertical_vf(X) -> FieldVectorField:
    """X^v(phi) = L_{X(phi)} phi."""
    Xf = as_field_dep(X)
    return FieldVectorField(lambda phi: field_lie(Xf(phi), phi), "vertical")


def vf_bracket(A: FieldVectorField, B: FieldVectorField) -> FieldVectorField:
    """[A, B](phi) = DB[phi](A(phi)) - DA[phi](B(phi))."""

    def fn(phi):
        return D(B, phi, A(phi)) - D(A, phi, B(phi))

    return FieldVectorField(fn, "bracket")


def extended_bracket(X, Y) -> FieldDepVectorM:
    """{X, Y} = [X, Y]_diff + X^v(Y) - Y^v(X)."""
    Xf, Yf = as_field_dep(X), as_field_dep(Y)
    if Xf.is_constant and Yf.is_constant:
        XY = geom.lie_bracket_diff(Xf(None), Yf(None))
        return FieldDepVectorM.constant(XY)

    def fn(phi):
        Xp, Yp = Xf(phi), Yf(phi)
        out = geom.lie_bracket_diff(Xp, Yp)
        if not Yf.is_constant:
            out = out + D(Yf, phi, field_lie(Xp, phi))
        if not Xf.is_constant:
            out = out - D(Xf, phi, field_lie(Yp, phi))
        return out

    return FieldDepVectorM(fn, "extended-bracket")


# ---------------------------------------------------------------------------
# field-space forms


class FieldForm:
    """Alternating multilinear evaluator (phi, delta_1..delta_p) -> value.

    ``r`` records the spacetime degree of the values (``None`` for numbers).
    ``equivariance`` is one of "pullback", "invariant" or "unknown".
    """

    def __init__(self, p: int, fn: Callable, r: int | None = None, equivariance: str = "unknown", name: str = ""):
        self.p = p
        self.fn = fn
        self.r = r
        self.equivariance = equivariance
        self.name = name

    def __call__(self, phi: FieldConfig, *tangents):
        if len(tangents) != self.p:
            raise UnsupportedDegreeError(f"{self.name or 'form'} takes {self.p} tangents, got {len(tangents)}")
        return self.fn(phi, *tangents)

    def __add__(self, o: "FieldForm") -> "FieldForm":
        return FieldForm(self.p, lambda phi, *ts: ad.tadd(self(phi, *ts), o(phi, *ts)), self.r)

    def __sub__(self, o: "FieldForm") -> "FieldForm":
        return FieldForm(self.p, lambda phi, *ts: ad.tsub(self(phi, *ts), o(phi, *ts)), self.r)


def basis_1form(schema: FieldSchema | None = None) -> FieldForm:
    """The identity evaluator d phi(delta) = delta."""
    return FieldForm(1, lambda phi, delta: delta, equivariance="pullback", name="dphi")


def _accumulate(acc, term, sign):
    term = term if sign > 0 else ad.tscale(-1.0, term)
    return term if acc is None else ad.tadd(acc, term)


def exterior(alpha: FieldForm) -> FieldForm:
    """Field-space exterior derivative evaluated on tangent vectors.

    Tangents are extended as constant vector fields, which commute on the
    linear field space, so only the derivative terms of Koszul survive.
    """

    def fn(phi, *ts):
        acc = None
        for i, ti in enumerate(ts):
            rest = ts[:i] + ts[i + 1:]
            term = D(lambda q: alpha(q, *rest), phi, ti)
            acc = _accumulate(acc, term, (-1) ** i)
        return acc

    return FieldForm(alpha.p + 1, fn, alpha.r, alpha.equivariance, f"d{alpha.name}")


def ext_deriv(alpha: FieldForm, phi: FieldConfig, *vfs: FieldVectorField):
    """Koszul formula for d alpha on vector fields, for p <= 2."""
    p = alpha.p
    if p > 2:
        raise UnsupportedDegreeError("ext_deriv supports field-space degree p <= 2")
    if len(vfs) != p + 1:
        raise UnsupportedDegreeError(f"d of a {p}-form takes {p + 1} vector fields")
    acc = None
    for i, Xi in enumerate(vfs):
        rest = vfs[:i] + vfs[i + 1:]
        term = D(lambda q: alpha(q, *(R(q) for R in rest)), phi, Xi(phi))
        acc = _accumulate(acc, term, (-1) ** i)
    for i in range(len(vfs)):
        for j in range(i + 1, len(vfs)):
            rest = [vfs[k](phi) for k in range(len(vfs)) if k not in (i, j)]
            term = alpha(phi, vf_bracket(vfs[i], vfs[j])(phi), *rest)
            acc = _accumulate(acc, term, (-1) ** (i + j))
    return acc


def interior(A: FieldVectorField, alpha: FieldForm) -> FieldForm:
    if alpha.p == 0:
        raise UnsupportedDegreeError("interior product of a field-space 0-form")
    return FieldForm(alpha.p - 1, lambda phi, *ts: alpha(phi, A(phi), *ts), alpha.r, alpha.equivariance)


def lie(A: FieldVectorField, alpha: FieldForm) -> FieldForm:
    """L_A = iota_A d + d iota_A."""
    first = interior(A, exterior(alpha))
    if alpha.p == 0:
        return first
    return first + exterior(interior(A, alpha))


def nijenhuis_lie(X, alpha: FieldForm) -> FieldForm:
    """L_{X^v} for field-dependent X."""
    return lie(vertical_vf(X), alpha)


# ---------------------------------------------------------------------------
# vertical diffeomorphisms


def vertical_map(psi) -> Callable[[FieldConfig], FieldConfig]:
    """Xi(phi) = psi(phi)^* phi."""
    P = as_field_dep_diffeo(psi)
    return lambda phi: diff_action(P(phi), phi)


def diffeo_variation(psi, phi: FieldConfig, delta: FieldTangent) -> VectorFieldM:
    """d psi(delta) o psi^{-1} as a vector field on M."""
    P = as_field_dep_diffeo(psi)
    if P.is_constant:
        return VectorFieldM.zeros(phi.grid)
    g = D(lambda q: P(q).displacement(), phi, delta)
    return geom.compose_vf(g, P(phi).inverse())


def vertical_pushforward(psi, phi: FieldConfig, v) -> FieldTangent:
    """Xi_* v = psi^*(v + L_{d psi(v) o psi^{-1}} phi)."""
    P = as_field_dep_diffeo(psi)
    delta = _tangent_of(v, phi)
    inner = delta
    if not P.is_constant:
        inner = delta + field_lie(diffeo_variation(P, phi, delta), phi)
    return pullback_tangent(P(phi), inner)


def tangent_map(psi, phi: FieldConfig, v) -> FieldTangent:
    """DXi[phi](v) differentiated straight through phi -> psi(phi)^* phi."""
    return D(vertical_map(psi), phi, _tangent_of(v, phi))


def vertical_transform(alpha: FieldForm, psi, route: str = "pushforward") -> FieldForm:
    """alpha^psi = Xi^* alpha.

    ``route`` selects how tangents are carried: "pushforward" uses the closed
    pushforward formula, "tangent-map" differentiates Xi directly.
    """
    carry = {"pushforward": vertical_pushforward, "tangent-map": tangent_map}[route]
    Xi = vertical_map(psi)

    def fn(phi, *ts):
        return alpha(Xi(phi), *(carry(psi, phi, t) for t in ts))

    return FieldForm(alpha.p, fn, alpha.r, alpha.equivariance, f"{alpha.name}^psi")


def basis_1form_transform(psi) -> FieldForm:
    """Closed formula d phi^psi = psi^*(d phi + L_{d psi o psi^{-1}} phi)."""
    P = as_field_dep_diffeo(psi)

    def fn(phi, delta):
        V = diffeo_variation(P, phi, delta)
        return pullback_tangent(P(phi), delta + field_lie(V, phi))

    return FieldForm(1, fn, equivariance="pullback", name="dphi^psi")


def vertical_compose(first, second) -> FieldDepDiffeo:
    """The psi with Xi_psi = Xi_second o Xi_first, i.e. phi -> first(phi) o second(first(phi)^* phi)."""
    A, B = as_field_dep_diffeo(first), as_field_dep_diffeo(second)

    def fn(phi):
        a = A(phi)
        return a.compose(B(diff_action(a, phi)))

    return FieldDepDiffeo(fn, "twisted-composite", constant=A.is_constant and B.is_constant)


# ---------------------------------------------------------------------------
# covariance diagnostics


def _lie_values(X: VectorFieldM, value):
    if isinstance(value, FormField):
        return geom.lie_derivative(X, value)
    if isinstance(value, FieldTangent):
        return tangent_lie(X, value)
    return ad.tscale(0.0, value)


def anomaly_operator(X, alpha: FieldForm, phi: FieldConfig, tangents: Sequence[FieldTangent]) -> float:
    """Sup-norm of (L_{X^v} - L_X - iota_{{dX}^v}) alpha on the given tangents."""
    Xf = as_field_dep(X)
    Xp = Xf(phi)
    total = nijenhuis_lie(Xf, alpha)(phi, *tangents)
    total = ad.tsub(total, _lie_values(Xp, alpha(phi, *tangents)))
    if not Xf.is_constant:
        for i, t in enumerate(tangents):
            dX = D(Xf, phi, t)
            args = list(tangents)
            args[i] = field_lie(dX, phi)
            total = ad.tsub(total, alpha(phi, *args))
    return ad.sup_norm(total)


def _pull_value(psi: Diffeo, value):
    if isinstance(value, FormField):
        return geom.pullback(psi, value)
    if isinstance(value, FieldTangent):
        return pullback_tangent(psi, value)
    return value


def equivariance_residual(alpha: FieldForm, phi: FieldConfig, tangents: Sequence[FieldTangent], psi: Diffeo | None = None, X=None) -> float:
    """Finite (psi) or infinitesimal (X) test of R_psi^* alpha = psi^* alpha."""
    if psi is not None:
        lhs = alpha(diff_action(psi, phi), *(pullback_tangent(psi, t) for t in tangents))
        rhs = _pull_value(psi, alpha(phi, *tangents))
        return ad.sup_norm(ad.tsub(lhs, rhs))
    Xf = as_field_dep(X)
    lhs = nijenhuis_lie(Xf, alpha)(phi, *tangents)
    rhs = _lie_values(Xf(phi), alpha(phi, *tangents))
    return ad.sup_norm(ad.tsub(lhs, rhs))


def horizontality_residual(alpha: FieldForm, phi: FieldConfig, Xs: Sequence, tangents: Sequence[FieldTangent] = ()) -> float:
    """sup_X |iota_{X^v} alpha| with the remaining slots filled by ``tangents``."""
    if alpha.p == 0:
        return 0.0
    worst = 0.0
    for X in Xs:
        Xv = vertical_vf(X)(phi)
        worst = max(worst, ad.sup_norm(alpha(phi, Xv, *tangents[: alpha.p - 1])))
    return worst


def invariance_residual(alpha: FieldForm, phi: FieldConfig, psis: Sequence, tangents: Sequence[FieldTangent] = (), route: str = "pushforward") -> float:
    worst = 0.0
    base = alpha(phi, *tangents[: alpha.p])
    for psi in psis:
        moved = vertical_transform(alpha, psi, route)(phi, *tangents[: alpha.p])
        worst = max(worst, ad.sup_norm(ad.tsub(moved, base)))
    return worst


def basicity_check(alpha: FieldForm, phi: FieldConfig, Xs: Sequence, psis: Sequence, tangents: Sequence[FieldTangent] = ()) -> tuple[float, float]:
    """(horizontality residual, invariance residual)."""
    return (horizontality_residual(alpha, phi, Xs, tangents), invariance_residual(alpha, phi, psis, tangents))


__all__ = [
    "FieldSchema",
    "FieldConfig",
    "FieldTangent",
    "FieldVectorField",
    "FieldDepVectorM",
    "FieldDepDiffeo",
    "FieldForm",
    "diff_action",
    "pullback_tangent",
    "field_lie",
    "tangent_lie",
    "directional_derivative",
    "vertical_vf",
    "vf_bracket",
    "extended_bracket",
    "basis_1form",
    "exterior",
    "ext_deriv",
    "interior",
    "lie",
    "nijenhuis_lie",
    "vertical_map",
    "diffeo_variation",
    "vertical_pushforward",
    "tangent_map",
    "vertical_transform",
    "basis_1form_transform",
    "vertical_compose",
    "anomaly_operator",
    "equivariance_residual",
    "horizontality_residual",
    "invariance_residual",
    "basicity_check",
]
