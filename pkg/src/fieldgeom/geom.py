"""Geometry on the base torus: diffeomorphisms, vector fields, forms, regions.

Forms store raw component arrays (floats or duals).  A ``k``-form on a
``d``-torus has one component for k = 0 and k = d = 2, and ``d`` components
(the dx, dy coefficients) for k = 1.  Diffeomorphisms are displacement fields,
psi(x) = x + f(x) with f periodic.
"""

from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import dual as ad
from .errors import DegreeError, FlowTooLargeError, InvalidDataError, NearSingularDiffeoError
from .grid import (
    TWO_PI,
    GridFunction,
    PeriodicGrid,
    PointSampler,
    check_finite,
    contract,
    derivative_values,
    full_weights,
    point_weights,
    reduce_window,
    window_weights,
)

JACOBIAN_BOUND = 1.0


def _ncomp(dim: int, degree: int) -> int:
    if degree == 0 or degree == dim:
        return 1
    if degree == 1:
        return dim
    raise DegreeError(f"no {degree}-forms on a {dim}-dimensional torus")


class FormField:
    """A differential form sampled on a periodic grid."""

    __slots__ = ("grid", "degree", "comps")

    def __init__(self, grid: PeriodicGrid, degree: int, comps: Sequence):
        if not 0 <= degree <= grid.dim:
            raise DegreeError(f"degree {degree} outside 0..{grid.dim}")
        comps = tuple(c if ad.is_dual(c) else np.asarray(c, dtype=float) for c in comps)
        if len(comps) != _ncomp(grid.dim, degree):
            raise DegreeError(f"a {degree}-form in {grid.dim}D needs {_ncomp(grid.dim, degree)} components")
        for c in comps:
            if np.shape(ad.primal(c)) != grid.shape:
                raise InvalidDataError("component shape does not match grid")
        self.grid = grid
        self.degree = degree
        self.comps = comps

    @classmethod
    def zeros(cls, grid: PeriodicGrid, degree: int) -> "FormField":
        return cls(grid, degree, [np.zeros(grid.shape)] * _ncomp(grid.dim, degree))

    @classmethod
    def from_callables(cls, grid: PeriodicGrid, degree: int, *fns) -> "FormField":
        return cls(grid, degree, [f(*grid.mesh) * np.ones(grid.shape) for f in fns])

    @property
    def is_top(self) -> bool:
        return self.degree == self.grid.dim

    def component(self, i: int) -> GridFunction:
        return GridFunction(self.grid, self.comps[i])

    def _check(self, o: "FormField"):
        if not isinstance(o, FormField) or o.degree != self.degree or o.grid != self.grid:
            raise DegreeError("forms must share grid and degree")

    def __add__(self, o):
        if isinstance(o, (int, float)) and o == 0:
            return self
        self._check(o)
        return FormField(self.grid, self.degree, [a + b for a, b in zip(self.comps, o.comps)])

    __radd__ = __add__

    def __sub__(self, o):
        self._check(o)
        return FormField(self.grid, self.degree, [a - b for a, b in zip(self.comps, o.comps)])

    def __neg__(self):
        return FormField(self.grid, self.degree, [-a for a in self.comps])

    def __mul__(self, s):
        """Multiply by a scalar, a raw array or a 0-form."""
        if isinstance(s, FormField):
            if s.degree != 0:
                raise DegreeError("use wedge for products of positive-degree forms")
            s = s.comps[0]
        return FormField(self.grid, self.degree, [a * s for a in self.comps])

    __rmul__ = __mul__

    def _tree_map(self, fn, *others):
        return FormField(self.grid, self.degree, [fn(c, *(o.comps[i] for o in others)) for i, c in enumerate(self.comps)])

    def __repr__(self) -> str:
        return f"FormField(degree={self.degree}, grid={self.grid.sizes})"


class VectorFieldM:
    """Vector field on the base torus; components X^mu."""

    __slots__ = ("grid", "comps")

    def __init__(self, grid: PeriodicGrid, comps: Sequence):
        comps = tuple(c if ad.is_dual(c) else np.asarray(c, dtype=float) * np.ones(grid.shape) for c in comps)
        if len(comps) != grid.dim:
            raise InvalidDataError("vector field needs one component per axis")
        for c in comps:
            check_finite(c)
        self.grid = grid
        self.comps = comps

    @classmethod
    def zeros(cls, grid: PeriodicGrid) -> "VectorFieldM":
        return cls(grid, [np.zeros(grid.shape)] * grid.dim)

    @classmethod
    def coordinate(cls, grid: PeriodicGrid, axis: int) -> "VectorFieldM":
        return cls(grid, [np.full(grid.shape, float(a == axis)) for a in range(grid.dim)])

    @classmethod
    def from_callables(cls, grid: PeriodicGrid, *fns) -> "VectorFieldM":
        return cls(grid, [f(*grid.mesh) * np.ones(grid.shape) for f in fns])

    def __add__(self, o):
        if isinstance(o, (int, float)) and o == 0:
            return self
        return VectorFieldM(self.grid, [a + b for a, b in zip(self.comps, o.comps)])

    __radd__ = __add__

    def __sub__(self, o):
        return VectorFieldM(self.grid, [a - b for a, b in zip(self.comps, o.comps)])

    def __neg__(self):
        return VectorFieldM(self.grid, [-a for a in self.comps])

    def __mul__(self, s):
        return VectorFieldM(self.grid, [a * s for a in self.comps])

    __rmul__ = __mul__

    def _tree_map(self, fn, *others):
        return VectorFieldM(self.grid, [fn(c, *(o.comps[i] for o in others)) for i, c in enumerate(self.comps)])

    def at(self, points):
        sample = PointSampler(self.grid, points)
        return tuple(sample(c) for c in self.comps)

    def __repr__(self) -> str:
        return f"VectorFieldM(grid={self.grid.sizes})"


# ---------------------------------------------------------------------------
# exterior calculus


def d(omega: FormField) -> FormField:
    """Exterior derivative by spectral differentiation."""
    g = omega.grid
    if omega.is_top:
        raise DegreeError("exterior derivative of a top form overflows the degree")
    if omega.degree == 0:
        c = omega.comps[0]
        return FormField(g, 1, [derivative_values(g, c, mu) for mu in range(g.dim)])
    wx, wy = omega.comps
    return FormField(g, 2, [derivative_values(g, wy, 0) - derivative_values(g, wx, 1)])


def interior(X: VectorFieldM, omega: FormField) -> FormField:
    g = omega.grid
    if omega.degree == 0:
        raise DegreeError("interior product of a 0-form is not a form")
    if omega.degree == 1:
        total = sum(x * w for x, w in zip(X.comps, omega.comps))
        return FormField(g, 0, [total])
    # omega dx^dy: iota_X gives omega (X^x dy - X^y dx)
    w = omega.comps[0]
    return FormField(g, 1, [-w * X.comps[1], w * X.comps[0]])


def lie_derivative(X: VectorFieldM, omega: FormField) -> FormField:
    """Cartan formula iota_X d + d iota_X."""
    if omega.degree == 0:
        return interior(X, d(omega))
    if omega.is_top:
        return d(interior(X, omega))
    return interior(X, d(omega)) + d(interior(X, omega))


def wedge(a: FormField, b: FormField) -> FormField:
    if a.degree == 0:
        return b * a
    if b.degree == 0:
        return a * b
    if a.degree + b.degree > a.grid.dim:
        raise DegreeError("wedge product exceeds top degree")
    ax, ay = a.comps
    bx, by = b.comps
    return FormField(a.grid, 2, [ax * by - ay * bx])


def vf_derivative(X: VectorFieldM, mu: int, nu: int):
    """d X^mu / d x^nu as a raw array."""
    return derivative_values(X.grid, X.comps[mu], nu)


def lie_bracket_gamma(X: VectorFieldM, Y: VectorFieldM) -> VectorFieldM:
    """Vector-field bracket [X,Y]^mu = X^nu d_nu Y^mu - Y^nu d_nu X^mu."""
    g = X.grid
    comps = []
    for mu in range(g.dim):
        acc = 0.0
        for nu in range(g.dim):
            acc = acc + X.comps[nu] * vf_derivative(Y, mu, nu) - Y.comps[nu] * vf_derivative(X, mu, nu)
        comps.append(acc)
    return VectorFieldM(g, comps)


def lie_bracket_diff(X: VectorFieldM, Y: VectorFieldM) -> VectorFieldM:
    """Lie algebra bracket of diff(M), the negative of ``lie_bracket_gamma``."""
    return -lie_bracket_gamma(X, Y)


# ---------------------------------------------------------------------------
# diffeomorphisms


def _inv2(J):
    if len(J) == 1:
        return [[1.0 / J[0][0]]]
    (a, b), (c, e) = J
    det = a * e - b * c
    return [[e / det, -b / det], [-c / det, a / det]]


def _det(J):
    if len(J) == 1:
        return J[0][0]
    return J[0][0] * J[1][1] - J[0][1] * J[1][0]


class Diffeo:
    """psi(x) = x + f(x) on the torus, with a lazily cached inverse."""

    def __init__(self, grid: PeriodicGrid, disp: Sequence, check: bool = True):
        disp = tuple(c if ad.is_dual(c) else np.asarray(c, dtype=float) * np.ones(grid.shape) for c in disp)
        if len(disp) != grid.dim:
            raise InvalidDataError("displacement needs one component per axis")
        for c in disp:
            check_finite(c)
        self.grid = grid
        self.disp = disp
        self._inverse = None
        self._lock = threading.Lock()
        self._grad = None
        if check:
            bound = self.jacobian_bound()
            if not bound < JACOBIAN_BOUND:
                raise NearSingularDiffeoError(f"displacement gradient norm {bound:.3g} violates the bound < 1")

    @classmethod
    def identity(cls, grid: PeriodicGrid) -> "Diffeo":
        return cls(grid, [np.zeros(grid.shape)] * grid.dim)

    @classmethod
    def translation(cls, grid: PeriodicGrid, shift) -> "Diffeo":
        shift = np.atleast_1d(np.asarray(shift, dtype=float))
        return cls(grid, [np.full(grid.shape, s) for s in shift])

    @classmethod
    def from_callables(cls, grid: PeriodicGrid, *fns) -> "Diffeo":
        return cls(grid, [f(*grid.mesh) * np.ones(grid.shape) for f in fns])

    def _tree_map(self, fn, *others):
        return Diffeo(self.grid, [fn(c, *(o.disp[i] for o in others)) for i, c in enumerate(self.disp)], check=False)

    def displacement(self) -> VectorFieldM:
        return VectorFieldM(self.grid, self.disp)

    def grad(self):
        """Raw arrays G[mu][nu] = d f^mu / d x^nu at nodes."""
        if self._grad is None:
            g = self.grid
            self._grad = [[derivative_values(g, self.disp[m], n) for n in range(g.dim)] for m in range(g.dim)]
        return self._grad

    def jacobian(self):
        """J[mu][nu] = d psi^mu / d x^nu at nodes."""
        G = self.grad()
        return [[G[m][n] + (1.0 if m == n else 0.0) for n in range(self.grid.dim)] for m in range(self.grid.dim)]

    def jacobian_bound(self) -> float:
        G = np.array([[ad.primal(c) for c in row] for row in self.grad()])
        if self.grid.dim == 1:
            return float(np.max(np.abs(G[0, 0])))
        mats = np.moveaxis(G.reshape(2, 2, -1), -1, 0)
        return float(np.max(np.linalg.norm(mats, ord=2, axis=(1, 2))))

    def at_nodes(self):
        return tuple(m + f for m, f in zip(self.grid.mesh, self.disp))

    def apply(self, points):
        """psi at arbitrary points (not reduced mod 2 pi)."""
        pts = tuple(points)
        sample = PointSampler(self.grid, pts)
        return tuple(p + sample(f) for p, f in zip(pts, self.disp))

    def jacobian_at(self, points):
        G = self.grad()
        dim = self.grid.dim
        sample = PointSampler(self.grid, points)
        return [[sample(G[m][n]) + (1.0 if m == n else 0.0) for n in range(dim)] for m in range(dim)]

    def inverse(self) -> "Diffeo":
        if self._inverse is None:
            with self._lock:
                if self._inverse is None:
                    inv = _newton_inverse(self)
                    inv._inverse = self
                    self._inverse = inv
        return self._inverse

    def compose(self, other: "Diffeo") -> "Diffeo":
        """(self o other)(x) = self(other(x))."""
        sample = PointSampler(self.grid, other.at_nodes())
        return Diffeo(self.grid, [fo + sample(fs) for fo, fs in zip(other.disp, self.disp)])

    def __matmul__(self, other: "Diffeo") -> "Diffeo":
        return self.compose(other)

    def __repr__(self) -> str:
        return f"Diffeo(grid={self.grid.sizes})"


_PRIMAL_INVERSES: OrderedDict = OrderedDict()
_PRIMAL_LOCK = threading.Lock()


def _primal_inverse_points(prim: Diffeo, tol: float, maxiter: int):
    """Newton solution of prim(y) = x at the nodes, memoized on the displacement bytes.

    Dual-number evaluations around one configuration share the same primal
    solve, so a small cache spares repeated iterations.
    """
    key = (prim.grid.sizes, tol) + tuple(np.ascontiguousarray(c).tobytes() for c in prim.disp)
    with _PRIMAL_LOCK:
        hit = _PRIMAL_INVERSES.get(key)
        if hit is not None:
            _PRIMAL_INVERSES.move_to_end(key)
            return hit
    y = _newton_points(prim, tol, maxiter)
    with _PRIMAL_LOCK:
        _PRIMAL_INVERSES[key] = y
        while len(_PRIMAL_INVERSES) > 64:
            _PRIMAL_INVERSES.popitem(last=False)
    return y


def _newton_points(prim: Diffeo, tol: float, maxiter: int):
    grid = prim.grid
    dim = grid.dim
    x = grid.mesh
    y = tuple(xi - f for xi, f in zip(x, prim.disp))
    # the fields never change, only the points: transform once, resample per step
    fit = PointSampler(grid, y)
    disp_coef = [fit.coefficients(f) for f in prim.disp]
    G = prim.grad()
    grad_coef = [[fit.coefficients(G[m][n]) for n in range(dim)] for m in range(dim)]

    def residual(sample, q):
        return tuple(qi + sample.from_coefficients(c) - xi for qi, c, xi in zip(q, disp_coef, x))

    def jacobian(sample):
        return [[sample.from_coefficients(grad_coef[m][n]) + (1.0 if m == n else 0.0) for n in range(dim)] for m in range(dim)]

    sample = fit
    r = residual(sample, y)
    rn = max(np.max(np.abs(c)) for c in r)
    for _ in range(maxiter):
        if rn < tol:
            break
        Jinv = _inv2(jacobian(sample))
        step = [sum(Jinv[m][n] * r[n] for n in range(dim)) for m in range(dim)]
        lam = 1.0
        for _ in range(30):
            trial = tuple(a - lam * s for a, s in zip(y, step))
            st = PointSampler(grid, trial)
            rt = residual(st, trial)
            rtn = max(np.max(np.abs(c)) for c in rt)
            if rtn < rn or rtn < tol:
                break
            lam *= 0.5
        y, r, rn, sample = trial, rt, rtn, st
    else:
        if rn >= tol:
            raise NearSingularDiffeoError(f"Newton inversion stalled at residual {rn:.3g}")
    if rn >= 1e3 * tol:
        raise NearSingularDiffeoError(f"Newton inversion stalled at residual {rn:.3g}")
    return y


def compose_chain(*maps: Diffeo) -> Diffeo:
    """maps[0] o maps[1] o ... o maps[-1], evaluated pointwise right to left.

    Only the final composite must respect the Jacobian bound; intermediate
    stages may be steeper than the bound allows for a single Diffeo.
    """
    if not maps:
        raise InvalidDataError("compose_chain needs at least one diffeomorphism")
    grid = maps[-1].grid
    pts = maps[-1].at_nodes()
    for m in reversed(maps[:-1]):
        pts = m.apply(pts)
    return Diffeo(grid, [p - x for p, x in zip(pts, grid.mesh)])


def _newton_inverse(psi: Diffeo, tol: float = 1e-13, maxiter: int = 50) -> Diffeo:
    grid = psi.grid
    dim = grid.dim
    x = grid.mesh
    prim = Diffeo(grid, [ad.primal(c) for c in psi.disp], check=False)
    y = _primal_inverse_points(prim, tol, maxiter)
    # chord steps with the primal Jacobian: each gains one order in the dual parts
    extra = max(ad.depth(c) for c in psi.disp)
    if extra:
        Jinv = _inv2(prim.jacobian_at(y))
    for _ in range(extra + 1 if extra else 0):
        rr = tuple(a - b for a, b in zip(psi.apply(y), x))
        y = tuple(y[m] - sum(Jinv[m][n] * rr[n] for n in range(dim)) for m in range(dim))
    return Diffeo(grid, [yi - xi for yi, xi in zip(y, x)], check=False)


def pullback(psi: Diffeo, omega: FormField) -> FormField:
    """psi^* omega, with Jacobian factors per degree."""
    g = omega.grid
    sample = PointSampler(g, psi.at_nodes())
    vals = [sample(c) for c in omega.comps]
    if omega.degree == 0:
        return FormField(g, 0, vals)
    J = psi.jacobian()
    if omega.is_top:
        return FormField(g, omega.degree, [vals[0] * _det(J)])
    return FormField(g, 1, [sum(vals[nu] * J[nu][mu] for nu in range(g.dim)) for mu in range(g.dim)])


def compose_vf(X: VectorFieldM, psi: Diffeo) -> VectorFieldM:
    """Components of X evaluated at psi(x)."""
    return VectorFieldM(X.grid, X.at(psi.at_nodes()))


def pullback_vf(psi: Diffeo, X: VectorFieldM) -> VectorFieldM:
    """(psi^{-1})_* X o psi = Jpsi(x)^{-1} X(psi(x))."""
    Jinv = _inv2(psi.jacobian())
    Xp = X.at(psi.at_nodes())
    dim = X.grid.dim
    return VectorFieldM(X.grid, [sum(Jinv[m][n] * Xp[n] for n in range(dim)) for m in range(dim)])


def pushforward_vf(psi: Diffeo, X: VectorFieldM) -> VectorFieldM:
    """psi_* X = (Jpsi X) o psi^{-1}."""
    J = psi.jacobian()
    dim = X.grid.dim
    JX = VectorFieldM(X.grid, [sum(J[m][n] * X.comps[n] for n in range(dim)) for m in range(dim)])
    return compose_vf(JX, psi.inverse())


def flow(X: VectorFieldM, tau: float, steps: int | None = None) -> Diffeo:
    """Time-tau flow of X by fixed-step RK4 from every node."""
    g = X.grid
    if tau == 0:
        return Diffeo.identity(g)
    speed = max(float(np.max(np.abs(ad.primal(c)))) for c in X.comps)
    stiff = max(float(np.max(np.abs(ad.primal(vf_derivative(X, m, n))))) for m in range(g.dim) for n in range(g.dim))
    if steps is None:
        steps = max(16, int(np.ceil(abs(tau) * (speed + stiff) * 100)))
    h = tau / steps
    y = tuple(m for m in g.mesh)
    for _ in range(steps):
        k1 = X.at(y)
        k2 = X.at(tuple(a + 0.5 * h * b for a, b in zip(y, k1)))
        k3 = X.at(tuple(a + 0.5 * h * b for a, b in zip(y, k2)))
        k4 = X.at(tuple(a + h * b for a, b in zip(y, k3)))
        y = tuple(a + h / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4) for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4))
    try:
        return Diffeo(g, [a - m for a, m in zip(y, g.mesh)])
    except NearSingularDiffeoError as exc:
        raise FlowTooLargeError(f"flow time {tau} too large: {exc}") from exc


# ---------------------------------------------------------------------------
# regions, slices and integration


@dataclass(frozen=True)
class Point:
    coords: tuple[float, ...]
    dimension = 0

    @property
    def ambient(self) -> int:
        return len(self.coords)

    def boundary(self):
        return ()


@dataclass(frozen=True)
class Interval:
    """Region a <= x <= b on S^1."""

    a: float
    b: float
    dimension = 1
    ambient = 1

    def __post_init__(self):
        a, b = reduce_window(self.a, self.b)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def boundary(self):
        return ((1, Point((self.b,))), (-1, Point((self.a,))))


@dataclass(frozen=True)
class Band:
    """Region a <= y <= b on T^2."""

    a: float
    b: float
    dimension = 2
    ambient = 2

    def __post_init__(self):
        a, b = reduce_window(self.a, self.b)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def boundary(self):
        return ((1, Circle(self.a)), (-1, Circle(self.b)))


@dataclass(frozen=True)
class Whole:
    ambient: int

    @property
    def dimension(self) -> int:
        return self.ambient

    def boundary(self):
        return ()


@dataclass(frozen=True)
class Circle:
    """The slice {y = y0} on T^2, oriented along +x."""

    y0: float
    dimension = 1
    ambient = 2

    def boundary(self):
        return ()


@dataclass(frozen=True)
class Segment:
    """The slice {y = y0, a <= x <= b} on T^2, oriented along +x."""

    y0: float
    a: float
    b: float
    dimension = 1
    ambient = 2

    def __post_init__(self):
        a, b = reduce_window(self.a, self.b)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def boundary(self):
        return ((1, Point((self.b, self.y0))), (-1, Point((self.a, self.y0))))


Region = (Interval, Band, Whole)
Slice = (Point, Circle, Segment)


def slice_point(x0: float) -> Point:
    """The codimension-1 slice of S^1 is a point; its boundary is empty."""
    return Point((float(x0),))


def integrate(omega: FormField, D) -> object:
    """Oriented integral of a k-form over a k-dimensional domain."""
    g = omega.grid
    if D.ambient != g.dim:
        raise DegreeError("domain and form live on different dimensions")
    if omega.degree != D.dimension:
        raise DegreeError(f"cannot integrate a {omega.degree}-form over a {D.dimension}-dimensional domain")
    c = omega.comps[0]
    if isinstance(D, Point):
        return contract(c, tuple(point_weights(n, float(x)) for n, x in zip(g.sizes, D.coords)))
    if isinstance(D, Whole):
        return contract(c, tuple(full_weights(n) for n in g.sizes))
    if isinstance(D, Interval):
        return contract(c, (window_weights(g.sizes[0], D.a, D.b),))
    if isinstance(D, Band):
        return contract(c, (full_weights(g.sizes[0]), window_weights(g.sizes[1], D.a, D.b)))
    if isinstance(D, Circle):
        return contract(c, (full_weights(g.sizes[0]), point_weights(g.sizes[1], float(D.y0))))
    if isinstance(D, Segment):
        return contract(c, (window_weights(g.sizes[0], D.a, D.b), point_weights(g.sizes[1], float(D.y0))))
    raise DegreeError(f"unknown domain {D!r}")


def boundary_integrate(omega: FormField, D):
    """Sum of oriented integrals over the boundary pieces of D."""
    total = 0.0
    for sign, piece in D.boundary():
        total = total + sign * integrate(omega, piece)
    return total


def integrate_preimage(omega: FormField, D, psi: Diffeo):
    """Integral over psi^{-1}(D), computed as the integral of (psi^{-1})^* omega over D."""
    return integrate(pullback(psi.inverse(), omega), D)


def boundary_integrate_preimage(omega: FormField, D, psi: Diffeo):
    return boundary_integrate(pullback(psi.inverse(), omega), D)


def region_continuity_residual(X: VectorFieldM, omega: FormField, U):
    """Integral of L_X omega over U minus the boundary displacement flux."""
    if not omega.is_top:
        raise DegreeError("continuity residual needs a top form")
    return integrate(lie_derivative(X, omega), U) - boundary_integrate(interior(X, omega), U)


def sup(omega) -> float:
    return ad.sup_norm(omega)


__all__ = [
    "TWO_PI",
    "FormField",
    "VectorFieldM",
    "Diffeo",
    "compose_chain",
    "Point",
    "Interval",
    "Band",
    "Whole",
    "Circle",
    "Segment",
    "d",
    "interior",
    "lie_derivative",
    "wedge",
    "lie_bracket_gamma",
    "lie_bracket_diff",
    "pullback",
    "compose_vf",
    "pullback_vf",
    "pushforward_vf",
    "flow",
    "integrate",
    "boundary_integrate",
    "integrate_preimage",
    "boundary_integrate_preimage",
    "region_continuity_residual",
]
