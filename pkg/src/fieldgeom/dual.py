"""Nested forward-mode dual numbers over numpy arrays.

A ``Dual`` is ``re + eps * e_tag`` where ``re`` and ``eps`` may themselves be
duals carrying smaller tags.  The largest tag always sits outermost, and any
operand whose tag differs from the outer one is a constant with respect to it.
Fresh tags come from a global counter, so a derivative started later can never
be confused with one started earlier.
"""

from __future__ import annotations

import itertools
from typing import Any, Callable

import numpy as np

_counter = itertools.count(1)


def new_tag() -> int:
    return next(_counter)


class Dual:
    __slots__ = ("re", "eps", "tag")
    # make ndarray defer to our reflected operators
    __array_ufunc__ = None

    def __init__(self, re, eps, tag: int):
        self.re = re
        self.eps = eps
        self.tag = tag

    def __repr__(self) -> str:
        return f"Dual(tag={self.tag}, re={self.re!r}, eps={self.eps!r})"

    # arithmetic
    def __add__(self, o):
        return _binary(self, o, _add_rule)

    def __radd__(self, o):
        return _binary(o, self, _add_rule)

    def __sub__(self, o):
        return _binary(self, o, _sub_rule)

    def __rsub__(self, o):
        return _binary(o, self, _sub_rule)

    def __mul__(self, o):
        return _binary(self, o, _mul_rule)

    def __rmul__(self, o):
        return _binary(o, self, _mul_rule)

    def __truediv__(self, o):
        return _binary(self, o, _div_rule)

    def __rtruediv__(self, o):
        return _binary(o, self, _div_rule)

    def __neg__(self):
        return Dual(-self.re, -self.eps, self.tag)

    def __pos__(self):
        return self

    def __pow__(self, n):
        if isinstance(n, Dual):
            return exp(n * log(self))
        if n == 0:
            return np.ones_like(primal(self)) if np.ndim(primal(self)) else 1.0
        return Dual(self.re**n, n * self.re ** (n - 1) * self.eps, self.tag)

    def __rpow__(self, base):
        return exp(self * np.log(base))

    def __getitem__(self, idx):
        return linear(lambda v: v[idx], self)

    @property
    def shape(self):
        return np.shape(primal(self))

    @property
    def ndim(self):
        return np.ndim(primal(self))

    def __len__(self):
        return len(primal(self))

    @property
    def real(self):
        return linear(np.real, self)


def tag_of(x) -> int:
    return x.tag if isinstance(x, Dual) else 0


def primal(x):
    while isinstance(x, Dual):
        x = x.re
    return x


def depth(x) -> int:
    """Number of distinct perturbation tags carried by ``x``."""
    if not isinstance(x, Dual):
        return 0
    return 1 + max(depth(x.re), depth(x.eps))


def _split(x, t):
    if isinstance(x, Dual) and x.tag == t:
        return x.re, x.eps
    return x, None


def _make(re, eps, t):
    return re if eps is None else Dual(re, eps, t)


def _plus(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a + b


def _binary(a, b, rule):
    t = max(tag_of(a), tag_of(b))
    ar, ae = _split(a, t)
    br, be = _split(b, t)
    re, eps = rule(ar, ae, br, be)
    return _make(re, eps, t)


def _add_rule(ar, ae, br, be):
    return ar + br, _plus(ae, be)


def _sub_rule(ar, ae, br, be):
    return ar - br, _plus(ae, None if be is None else -be)


def _mul_rule(ar, ae, br, be):
    return ar * br, _plus(None if ae is None else ae * br, None if be is None else ar * be)


def _div_rule(ar, ae, br, be):
    q = ar / br
    num = _plus(ae, None if be is None else -(q * be))
    return q, None if num is None else num / br


def _unary(f: Callable, df: Callable) -> Callable:
    def op(x):
        if isinstance(x, Dual):
            return Dual(op(x.re), df(x.re) * x.eps, x.tag)
        return f(x)

    return op


sin = _unary(np.sin, lambda r: cos(r))
cos = _unary(np.cos, lambda r: -sin(r))
exp = _unary(np.exp, lambda r: exp(r))
log = _unary(np.log, lambda r: 1.0 / r)
sqrt = _unary(np.sqrt, lambda r: 0.5 / sqrt(r))
tanh = _unary(np.tanh, lambda r: 1.0 - tanh(r) ** 2)


def linear(fn: Callable, *args):
    """Apply a map that is jointly linear in ``args`` to every dual part.

    Constant operands receive a zero tangent of matching shape, which is only
    correct for maps such as stacking, summing or transforms.  Use
    ``bilinear`` for products.
    """
    t = max(tag_of(a) for a in args)
    if t == 0:
        return fn(*args)
    parts = [_split(a, t) for a in args]
    re = linear(fn, *(p[0] for p in parts))
    eps_args = [p[1] if p[1] is not None else np.zeros_like(primal(p[0]), dtype=float) for p in parts]
    return Dual(re, linear(fn, *eps_args), t)


def bilinear(fn: Callable, a, b):
    """Apply ``fn`` that is linear in each argument separately (a product)."""
    t = max(tag_of(a), tag_of(b))
    if t == 0:
        return fn(a, b)
    ar, ae = _split(a, t)
    br, be = _split(b, t)
    re = bilinear(fn, ar, br)
    eps = _plus(None if ae is None else bilinear(fn, ae, br), None if be is None else bilinear(fn, ar, be))
    return _make(re, eps, t)


def stack(items, axis=0):
    return linear(lambda *xs: np.stack(xs, axis=axis), *items)


def perturb(x, dx, tag: int):
    return Dual(x, dx, tag)


def extract(y, tag: int):
    """Coefficient of ``e_tag`` in ``y``; zero when ``y`` does not carry the tag."""
    if isinstance(y, Dual) and y.tag == tag:
        return y.eps
    p = primal(y)
    return np.zeros_like(p, dtype=float) if np.ndim(p) else 0.0


# ---------------------------------------------------------------------------
# structured values

def tree_map(fn: Callable, obj, *rest):
    """Map ``fn`` over matching leaves of one or more structured values.

    Containers are tuples, lists, dicts and any object that implements
    ``_tree_map(fn, *others)``.  Everything else is a leaf.
    """
    if hasattr(obj, "_tree_map"):
        return obj._tree_map(fn, *rest)
    if isinstance(obj, (tuple, list)):
        return type(obj)(tree_map(fn, *xs) for xs in zip(obj, *rest))
    if isinstance(obj, dict):
        return {k: tree_map(fn, obj[k], *(r[k] for r in rest)) for k in obj}
    if obj is None:
        return None
    return fn(obj, *rest)


def tree_leaves(obj) -> list:
    out: list = []

    def keep(v):
        out.append(v)
        return v

    tree_map(keep, obj)
    return out


def tadd(a, b):
    return tree_map(lambda x, y: x + y, a, b)


def tsub(a, b):
    return tree_map(lambda x, y: x - y, a, b)


def tscale(s, a):
    return tree_map(lambda x: s * x, a)


def sup_norm(obj) -> float:
    leaves = [np.asarray(primal(v)) for v in tree_leaves(obj)]
    if not leaves:
        return 0.0
    return float(max(np.max(np.abs(v)) if v.size else 0.0 for v in leaves))


def jvp(fn: Callable, x, dx):
    """Directional derivative of ``fn`` at ``x`` along ``dx`` by dual numbers."""
    t = new_tag()
    xt = tree_map(lambda a, da: perturb(a, da, t), x, dx)
    y = fn(xt)
    return tree_map(lambda v: extract(v, t), y)


def fd_jvp(fn: Callable, x, dx, h: float = 1e-3):
    """Central difference with one Richardson step, an O(h^4) oracle."""

    def central(step):
        plus = fn(tree_map(lambda a, da: a + step * da, x, dx))
        minus = fn(tree_map(lambda a, da: a - step * da, x, dx))
        return tree_map(lambda p, m: (p - m) / (2.0 * step), plus, minus)

    coarse = central(h)
    fine = central(h / 2)
    return tree_map(lambda f, c: (4.0 * f - c) / 3.0, fine, coarse)


def is_dual(x: Any) -> bool:
    return isinstance(x, Dual)
