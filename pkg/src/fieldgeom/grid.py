"""Periodic grids on S^1 and T^2 with Fourier calculus.

Values may be plain float arrays or nested ``Dual`` arrays; every operation
here is written so that perturbations flow through it.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from . import dual as ad
from .errors import InvalidDataError, InvalidRegionError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class PeriodicGrid:
    sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.sizes)
        object.__setattr__(self, "sizes", sizes)
        if len(sizes) not in (1, 2):
            raise InvalidDataError(f"grid dimension must be 1 or 2, got {len(sizes)}")
        for n in sizes:
            if n < 8 or n % 2:
                raise InvalidDataError(f"each grid size must be even and >= 8, got {n}")

    @property
    def dim(self) -> int:
        return len(self.sizes)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.sizes

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(TWO_PI / n for n in self.sizes)

    @cached_property
    def nodes(self) -> tuple[np.ndarray, ...]:
        return tuple(TWO_PI * np.arange(n) / n for n in self.sizes)

    @cached_property
    def mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.nodes, indexing="ij"))

    def wavenumbers(self, axis: int) -> np.ndarray:
        n = self.sizes[axis]
        return np.fft.fftfreq(n, 1.0 / n)

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)


def check_finite(values) -> None:
    if not np.all(np.isfinite(ad.primal(values))):
        raise InvalidDataError("grid values must be finite")


# ---------------------------------------------------------------------------
# raw-array kernels (these accept duals)

def _derivative_op(n: int, axis: int, ndim: int):
    k = np.fft.rfftfreq(n, 1.0 / n)
    k[-1] = 0.0  # the Nyquist mode has no odd partner
    shape = [1] * ndim
    shape[axis] = k.size
    mult = (1j * k).reshape(shape)

    def op(v):
        return np.fft.irfft(np.fft.rfft(v, axis=axis) * mult, n=n, axis=axis)

    return op


def derivative_values(grid: PeriodicGrid, values, axis: int):
    if not 0 <= axis < grid.dim:
        raise InvalidDataError(f"axis {axis} out of range for a {grid.dim}-D grid")
    check_finite(values)
    return ad.linear(_derivative_op(grid.sizes[axis], axis, grid.dim), values)


def _cis_table(n: int, p):
    """exp(i k p) for every FFT-order wavenumber k, by powers of exp(i p).

    Dual levels reuse the value table, so nesting stays linear in cost.
    """
    if isinstance(p, ad.Dual):
        v = _cis_table(n, p.re)
        k = np.fft.fftfreq(n, 1.0 / n)
        return ad.Dual(v, v * (1j * k[None, :]) * p.eps[:, None], p.tag)
    e1 = np.exp(1j * p)
    half = n // 2
    pos = np.ones((p.shape[0], half + 1), dtype=complex)
    pos[:, 1:] = np.cumprod(np.broadcast_to(e1[:, None], (p.shape[0], half)), axis=1)
    return np.concatenate([pos, np.conj(pos[:, half - 1 : 0 : -1])], axis=1)


def _real_nyquist(n: int):
    def fix(e):
        e = e.copy()
        e[:, n // 2] = e[:, n // 2].real
        return e

    return fix


def _basis(n: int, p):
    """Complex Fourier basis at points ``p`` (shape (M,)), columns in FFT order.

    The Nyquist column is cos(n/2 x) so the interpolant stays real.
    """
    return ad.linear(_real_nyquist(n), _cis_table(n, p))


def _node_hits(grid: PeriodicGrid, pts: list[np.ndarray]):
    idx, hit = [], None
    for axis, p in enumerate(pts):
        n = grid.sizes[axis]
        red = np.mod(p, TWO_PI)
        j = np.rint(red / grid.spacing[axis]).astype(int) % n
        h = grid.nodes[axis][j] == red
        idx.append(j)
        hit = h if hit is None else hit & h
    return idx, hit


class PointSampler:
    """Trigonometric interpolation at a fixed set of points.

    The Fourier basis at the points is built once, so several fields (or the
    same field across Newton iterations) can be sampled cheaply.  Float points
    that coincide with nodes return node values exactly.
    """

    def __init__(self, grid: PeriodicGrid, points):
        pts = [p if ad.is_dual(p) else np.asarray(p, dtype=float) for p in points]
        if len(pts) != grid.dim:
            raise InvalidDataError("need one coordinate array per axis")
        for p in pts:
            check_finite(p)
        self.grid = grid
        self.out_shape = np.shape(ad.primal(pts[0]))
        flat = [ad.linear(np.ravel, p) for p in pts]
        self.bases = [_basis(n, p) for n, p in zip(grid.sizes, flat)]
        self.norm = float(np.prod(grid.sizes))
        self.dual = any(ad.is_dual(p) for p in pts)
        self.hits = None if self.dual else _node_hits(grid, flat)

    def coefficients(self, values):
        check_finite(values)
        return ad.linear(np.fft.fft if self.grid.dim == 1 else np.fft.fft2, values)

    def from_coefficients(self, coef):
        if self.grid.dim == 1:
            res = ad.bilinear(np.matmul, self.bases[0], coef)
        else:
            rows = ad.bilinear(np.matmul, self.bases[0], coef)
            res = ad.bilinear(lambda a, b: np.sum(a * b, axis=1), rows, self.bases[1])
        res = ad.linear(np.real, res) / self.norm
        return ad.linear(lambda v: np.reshape(v, self.out_shape), res)

    def __call__(self, values, coef=None):
        res = self.from_coefficients(self.coefficients(values) if coef is None else coef)
        if self.hits is not None and not ad.is_dual(values):
            idx, hit = self.hits
            if np.any(hit):
                res = np.array(res, dtype=float).ravel()
                res[hit] = np.asarray(values)[tuple(j[hit] for j in idx)]
                res = res.reshape(self.out_shape)
        return res


def interp_values(grid: PeriodicGrid, values, points):
    """Evaluate the trigonometric interpolant of ``values`` at ``points``.

    ``points`` is a sequence of ``grid.dim`` coordinate arrays of a common
    shape.  Float points that coincide with nodes return node values exactly.
    """
    check_finite(values)
    return PointSampler(grid, points)(values)


@lru_cache(maxsize=256)
def point_weights(n: int, x0: float) -> np.ndarray:
    """Row vector w with w @ v equal to the interpolant of v at x0."""
    k = np.fft.fftfreq(n, 1.0 / n)
    b = np.exp(1j * k * x0)
    b[n // 2] = np.cos(n // 2 * x0)
    w = np.real(np.fft.fft(b)) / n
    return w


@lru_cache(maxsize=256)
def window_weights(n: int, a: float, b: float) -> np.ndarray:
    """Row vector w with w @ v equal to the exact integral of the interpolant over [a, b]."""
    k = np.fft.fftfreq(n, 1.0 / n)
    integ = np.empty(n, dtype=complex)
    integ[0] = b - a
    nz = np.arange(1, n)
    integ[nz] = (np.exp(1j * k[nz] * b) - np.exp(1j * k[nz] * a)) / (1j * k[nz])
    m = n // 2
    integ[m] = (np.sin(m * b) - np.sin(m * a)) / m
    return np.real(np.fft.fft(integ)) / n


def reduce_window(a: float, b: float) -> tuple[float, float]:
    if not (np.isfinite(a) and np.isfinite(b)):
        raise InvalidRegionError("window bounds must be finite")
    length = b - a
    if length <= 0 or length > TWO_PI + 1e-12:
        raise InvalidRegionError(f"window [{a}, {b}] does not reduce into one period")
    a0 = float(np.mod(a, TWO_PI))
    return a0, a0 + float(length)


def contract(values, weights: tuple[np.ndarray, ...]):
    """Apply one weight vector per axis and sum, giving a scalar."""
    if len(weights) == 1:
        return ad.linear(lambda v: weights[0] @ v, values)
    return ad.linear(lambda v: weights[0] @ v @ weights[1], values)


def full_weights(n: int) -> np.ndarray:
    return np.full(n, TWO_PI / n)


# ---------------------------------------------------------------------------
# GridFunction


class GridFunction:
    """Sampled real function on a ``PeriodicGrid``."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: PeriodicGrid, values):
        if not ad.is_dual(values):
            values = np.asarray(values, dtype=float)
        if np.shape(ad.primal(values)) != grid.shape:
            raise InvalidDataError(f"values of shape {np.shape(ad.primal(values))} do not match grid {grid.shape}")
        check_finite(values)
        self.grid = grid
        self.values = values

    @classmethod
    def from_callable(cls, grid: PeriodicGrid, fn) -> "GridFunction":
        return cls(grid, fn(*grid.mesh))

    @classmethod
    def constant(cls, grid: PeriodicGrid, c: float) -> "GridFunction":
        return cls(grid, np.full(grid.shape, float(c)))

    def _coerce(self, o):
        return o.values if isinstance(o, GridFunction) else o

    def __add__(self, o):
        return GridFunction(self.grid, self.values + self._coerce(o))

    __radd__ = __add__

    def __sub__(self, o):
        return GridFunction(self.grid, self.values - self._coerce(o))

    def __rsub__(self, o):
        return GridFunction(self.grid, self._coerce(o) - self.values)

    def __mul__(self, o):
        return GridFunction(self.grid, self.values * self._coerce(o))

    __rmul__ = __mul__

    def __truediv__(self, o):
        return GridFunction(self.grid, self.values / self._coerce(o))

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def _tree_map(self, fn, *others):
        return GridFunction(self.grid, fn(self.values, *(o.values for o in others)))

    def derivative(self, axis: int) -> "GridFunction":
        return spectral_derivative(self, axis)

    def __call__(self, *points):
        return interp(self, points)


def spectral_derivative(f: GridFunction, axis: int) -> GridFunction:
    return GridFunction(f.grid, derivative_values(f.grid, f.values, axis))


def interp(f: GridFunction, points):
    """Trigonometric interpolant of ``f`` at the given coordinate arrays."""
    if f.grid.dim == 1 and not (isinstance(points, tuple) and len(points) == 1):
        points = (points,)
    return interp_values(f.grid, f.values, points)


def quadrature(f: GridFunction):
    """Integral over the whole torus (trapezoid rule, spectrally exact)."""
    check_finite(f.values)
    return contract(f.values, tuple(full_weights(n) for n in f.grid.sizes))


def quadrature_on(f: GridFunction, window) -> float:
    """Integral over a coordinate window.

    ``window`` holds one entry per axis, each ``None`` (full period) or a
    pair ``(a, b)``; the exact antiderivative of the interpolant is used.
    """
    check_finite(f.values)
    if len(window) != f.grid.dim:
        raise InvalidRegionError("window needs one entry per axis")
    weights = []
    for n, w in zip(f.grid.sizes, window):
        if w is None:
            weights.append(full_weights(n))
        else:
            a, b = reduce_window(*w)
            weights.append(window_weights(n, a, b))
    return contract(f.values, tuple(weights))
