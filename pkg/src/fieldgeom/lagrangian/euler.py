"""Compiled Lagrangian densities and their Euler-Lagrange decomposition dL = E + d theta."""

from __future__ import annotations

from typing import Mapping

import numpy as np

from .. import dual as ad
from .. import fieldspace as fs
from .. import geom
from ..errors import InvalidDataError
from ..fieldspace import FieldConfig, FieldForm, FieldSchema, FieldTangent
from ..geom import FormField, VectorFieldM
from ..grid import derivative_values
from .nodes import ZERO, Deriv, Node, Sym, variables
from .parser import parse_expression, pretty
from .symbolic import diff, evaluate, simplify


class LagrangianSpec:
    """A parsed first-order density bound to a field schema.

    ``source`` is the coefficient of dx (1D) or dx^dy (2D).  ``boundary`` is an
    optional boundary Lagrangian: one expression in 1D (a 0-form) or a pair of
    expressions (its dx and dy components) in 2D.
    """

    def __init__(self, source: str, schema: FieldSchema, params: Mapping[str, float] | None = None, boundary=None):
        self.source = source
        self.schema = schema
        self.params = dict(params or {})
        self.dim = schema.grid.dim
        self.components = {sym: (name, i) for sym, name, i in schema.symbols()}
        clocks = {sym for sym, (name, _) in self.components.items() if schema.winding(name) is not None}
        self.clocks = clocks

        def parse(text):
            return parse_expression(text, self.components, self.params, self.dim, clocks)

        self.ast = parse(source)
        if boundary is None:
            self.boundary = None
        else:
            texts = (boundary,) if isinstance(boundary, str) else tuple(boundary)
            want = 1 if self.dim == 1 else 2
            if len(texts) != want:
                raise InvalidDataError(f"a boundary Lagrangian in {self.dim}D needs {want} component expression(s)")
            self.boundary = tuple(parse(t) for t in texts)

    def pretty(self) -> str:
        return pretty(self.ast)

    def jet(self, phi: FieldConfig) -> dict:
        """Values of every jet variable: components and their first derivatives."""
        env = {}
        g = self.schema.grid
        for sym, (name, i) in self.components.items():
            c = phi.fields[name].comps[i]
            env[Sym(sym)] = c
            w = self.schema.winding(name)
            for mu in range(self.dim):
                dv = derivative_values(g, c, mu)
                env[Deriv(mu, sym)] = dv + float(w[mu]) if w is not None else dv
        return env

    def _eval(self, node: Node, env: dict):
        # constants broadcast to the grid
        return evaluate(node, env, self.params) + np.zeros(self.schema.grid.shape)

    def density(self, phi: FieldConfig):
        return self._eval(self.ast, self.jet(phi))

    def __call__(self, phi: FieldConfig) -> FormField:
        return FormField(self.schema.grid, self.dim, [self.density(phi)])

    def boundary_form(self, phi: FieldConfig) -> FormField | None:
        if self.boundary is None:
            return None
        env = self.jet(phi)
        return FormField(self.schema.grid, self.dim - 1, [self._eval(n, env) for n in self.boundary])

    def with_boundary(self, boundary) -> "LagrangianSpec":
        return LagrangianSpec(self.source, self.schema, self.params, boundary)


def parse(source: str, schema: FieldSchema, params: Mapping[str, float] | None = None, boundary=None) -> LagrangianSpec:
    return LagrangianSpec(source, schema, params, boundary)


class EulerLagrange:
    """Symbolic partials of a density compiled to grid evaluators.

    For a component u_a with momenta P^mu_a = dL/d(d_mu u_a)::

        E_a     = dL/du_a - d_mu P^mu_a
        theta^mu = P^mu_a delta u_a

    E(delta) is the top form E_a delta u_a.  theta is the (n-1)-form with
    components theta^x in 1D and (-theta^y, theta^x) in 2D, so that
    d theta = d_mu theta^mu.
    """

    def __init__(self, spec: LagrangianSpec):
        self.spec = spec
        self.dim = spec.dim
        self.partial = {}
        self.momenta = {}
        for sym in spec.components:
            self.partial[sym] = simplify(diff(spec.ast, Sym(sym)))
            self.momenta[sym] = tuple(simplify(diff(spec.ast, Deriv(mu, sym))) for mu in range(self.dim))

    # -- coefficient evaluators

    def coefficients(self, phi: FieldConfig) -> dict:
        env = self.spec.jet(phi)
        g = self.spec.schema.grid
        out = {}
        for sym in self.spec.components:
            e = self.spec._eval(self.partial[sym], env)
            for mu, P in enumerate(self.momenta[sym]):
                if P != ZERO:
                    e = e - derivative_values(g, self.spec._eval(P, env), mu)
            out[sym] = e
        return out

    def momentum_values(self, phi: FieldConfig) -> dict:
        env = self.spec.jet(phi)
        return {sym: tuple(self.spec._eval(P, env) for P in Ps) for sym, Ps in self.momenta.items()}

    def _slot(self, delta: FieldTangent, sym: str):
        name, i = self.spec.components[sym]
        return delta.fields[name].comps[i]

    # -- forms

    def E(self, phi: FieldConfig, delta: FieldTangent) -> FormField:
        coef = self.coefficients(phi)
        total = 0.0
        for sym, e in coef.items():
            total = total + e * self._slot(delta, sym)
        return FormField(self.spec.schema.grid, self.dim, [total + np.zeros(self.spec.schema.grid.shape)])

    def theta_vector(self, phi: FieldConfig, delta: FieldTangent) -> list:
        P = self.momentum_values(phi)
        out = []
        for mu in range(self.dim):
            acc = np.zeros(self.spec.schema.grid.shape)
            for sym in self.spec.components:
                acc = acc + P[sym][mu] * self._slot(delta, sym)
            out.append(acc)
        return out

    def theta(self, phi: FieldConfig, delta: FieldTangent, boundary: bool = True) -> FormField:
        """Presymplectic potential current; shifted by d ell when a boundary Lagrangian is set."""
        t = self.theta_vector(phi, delta)
        comps = [t[0]] if self.dim == 1 else [-t[1], t[0]]
        out = FormField(self.spec.schema.grid, self.dim - 1, comps)
        if boundary and self.spec.boundary is not None:
            out = out + fs.directional_derivative(self.spec.boundary_form, phi, delta)
        return out

    @property
    def E_form(self) -> FieldForm:
        return FieldForm(1, self.E, self.dim, "pullback", "E")

    @property
    def theta_form(self) -> FieldForm:
        return FieldForm(1, self.theta, self.dim - 1, "pullback", "theta")

    @property
    def L_form(self) -> FieldForm:
        return FieldForm(0, lambda phi: self.lagrangian(phi), self.dim, "pullback", "L")

    def lagrangian(self, phi: FieldConfig) -> FormField:
        """L' = L + d ell."""
        L = self.spec(phi)
        ell = self.spec.boundary_form(phi)
        return L if ell is None else L + geom.d(ell)

    # -- substitution of iota_X phi into the tangent slots

    def E_iota(self, phi: FieldConfig, X: VectorFieldM) -> FormField:
        """E(iota_X phi; phi), an (n-1)-form; 0-form fields contribute nothing."""
        g = self.spec.schema.grid
        coef = self.coefficients(phi)
        out = FormField.zeros(g, self.dim - 1)
        for name, k in self.spec.schema.entries:
            if k == 0:
                continue
            iX = geom.interior(X, phi.fields[name])
            if self.dim == 1:
                out = out + iX * coef[f"{name}_x"]
            elif k == 1:
                calE = FormField(g, 1, [-coef[f"{name}_y"], coef[f"{name}_x"]])
                out = out + calE * iX
            else:
                out = out + iX * coef[name]
        return out

    def theta_iota(self, phi: FieldConfig, X: VectorFieldM) -> FormField | None:
        """theta(iota_X phi; phi), an (n-2)-form; ``None`` in 1D where it has negative degree.

        Exact when the density depends on first derivatives of 1-forms only
        through their exterior derivative; see ``theta_iota_defect``.
        """
        if self.dim == 1:
            return None
        g = self.spec.schema.grid
        P = self.momentum_values(phi)
        out = FormField.zeros(g, 0)
        for name, k in self.spec.schema.entries:
            if k != 1:
                continue
            t = 0.5 * (P[f"{name}_y"][0] - P[f"{name}_x"][1])
            out = out + FormField(g, 0, [t * geom.interior(X, phi.fields[name]).comps[0]])
        return out

    def theta_iota_defect(self, phi: FieldConfig) -> float:
        """How far theta restricted to 1-form slots is from delta A ^ t (0 when exact)."""
        if self.dim == 1:
            return 0.0
        P = self.momentum_values(phi)
        worst = 0.0
        for name, k in self.spec.schema.entries:
            if k != 1:
                continue
            px, py = P[f"{name}_x"], P[f"{name}_y"]
            for arr in (px[0], py[1], px[1] + py[0]):
                worst = max(worst, ad.sup_norm(arr))
        return worst

    def iota_L(self, phi: FieldConfig, X: VectorFieldM) -> FormField:
        return geom.interior(X, self.lagrangian(phi))


def euler_lagrange(spec: LagrangianSpec) -> EulerLagrange:
    return EulerLagrange(spec)


def check_decomposition(el: EulerLagrange, phi: FieldConfig, delta: FieldTangent) -> float:
    """sup |dL(delta) - E(delta) - d theta(delta)|."""
    dL = fs.directional_derivative(el.lagrangian, phi, delta)
    rhs = el.E(phi, delta) + geom.d(el.theta(phi, delta))
    return ad.sup_norm(dL - rhs)


def check_covariance(el: EulerLagrange, X: VectorFieldM, phi: FieldConfig) -> float:
    """sup |D L[phi](X^v) - d(iota_X L)|, zero for diffeomorphism-covariant densities."""
    lhs = fs.directional_derivative(el.lagrangian, phi, fs.field_lie(X, phi))
    return ad.sup_norm(lhs - geom.lie_derivative(X, el.lagrangian(phi)))


def jet_variables(spec: LagrangianSpec) -> list:
    return sorted(variables(spec.ast), key=repr)
