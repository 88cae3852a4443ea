import re

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from fieldgeom import dual as ad
from fieldgeom import geom
from fieldgeom.errors import NestedDerivativeError, ParseError, UnknownSymbolError
from fieldgeom.fieldspace import FieldConfig, FieldSchema, FieldTangent
from fieldgeom.geom import FormField
from fieldgeom.grid import PeriodicGrid
from fieldgeom.lagrangian import (
    EulerLagrange,
    bf2d,
    check_covariance,
    check_decomposition,
    get_model,
    noncovariant1d,
    parse,
    parse_expression,
    pretty,
    scalar1d,
)
from fieldgeom.lagrangian.models import BF_2D, NONCOVARIANT_1D, SCALAR_1D
from fieldgeom.lagrangian.nodes import Bin, Call, Deriv, Num, Param, Pow, Sym, Unary
from fieldgeom.lagrangian.symbolic import evaluate
from fieldgeom.sampling import random_config, random_tangent, random_vector_field, spawn

G1 = PeriodicGrid((32,))
G2 = PeriodicGrid((16, 16))
SCALAR = FieldSchema.build(G1, {"phi": 0, "eps": 1})
BF = FieldSchema.build(G2, {"B": 0, "A": 1})

BF_SYMBOLS = ("B", "A_x", "A_y")


# -- parser ---------------------------------------------------------------------


def test_parse_bf_density():
    ast = parse_expression("B*(dx(A_y)-dy(A_x))", BF_SYMBOLS)
    assert ast == Bin("*", Sym("B"), Bin("-", Deriv(0, "A_y"), Deriv(1, "A_x")))


def test_parse_scalar_density():
    ast = parse_expression("0.5*dx(phi)^2/eps_x", ("phi", "eps_x"), dim=1)
    assert ast == Bin("/", Bin("*", Num(0.5), Pow(Deriv(0, "phi"), 2)), Sym("eps_x"))


def test_parse_functions_params_and_unary_minus():
    ast = parse_expression("-lam*sin(B)^-2", BF_SYMBOLS, params=("lam",))
    assert ast == Bin("*", Unary(Param("lam")), Pow(Call("sin", Sym("B")), -2))


def test_nested_derivative_rejected():
    with pytest.raises(NestedDerivativeError):
        parse_expression("dx(dx(phi))", ("phi",), dim=1)


@pytest.mark.parametrize("src, line, col", [
    ("B*C", 1, 3),
    ("B +\n  Q", 2, 3),
])
def test_unknown_symbol_position(src, line, col):
    with pytest.raises(UnknownSymbolError) as err:
        parse_expression(src, BF_SYMBOLS)
    assert (err.value.line, err.value.col) == (line, col)


@pytest.mark.parametrize("src", ["B*", "(B", "B^1.5", "dx(B+B)", "B $ B", "foo(B)", "dx(3)"])
def test_syntax_errors(src):
    with pytest.raises(ParseError):
        parse_expression(src, BF_SYMBOLS)


def test_dy_unavailable_in_1d():
    with pytest.raises(UnknownSymbolError):
        parse_expression("dy(phi)", ("phi",), dim=1)


def test_clock_only_under_derivative():
    with pytest.raises(ParseError):
        parse_expression("chi*B", ("chi", "B"), winding=("chi",))
    parse_expression("dx(chi)*B", ("chi", "B"), winding=("chi",))


@pytest.mark.parametrize("src, symbols, dim", [
    (SCALAR_1D, ("phi", "eps_x"), 1),
    (NONCOVARIANT_1D, ("phi",), 1),
    (BF_2D, ("B", "A_x", "A_y", "chi1", "chi2"), 2),
    ("B^2*A_x", BF_SYMBOLS, 2),
    ("eps_x/dx(phi)", ("phi", "eps_x"), 1),
])
def test_pretty_round_trip_on_corpus(src, symbols, dim):
    params = ("lam",)
    ast = parse_expression(src, symbols, params, dim)
    text = pretty(ast)
    assert parse_expression(text, symbols, params, dim) == ast
    assert pretty(parse_expression(text, symbols, params, dim)) == text


# random well-formed sources from the grammar
leaves = st.sampled_from(["B", "A_x", "A_y", "dx(B)", "dy(A_x)", "2", "0.25", "1e-3", "lam"])


def _grow(children):
    return st.one_of(
        st.tuples(children, st.sampled_from(["+", "-", "*", "/"]), children).map(lambda t: f"({t[0]} {t[1]} {t[2]})"),
        st.tuples(children, st.integers(-3, 3)).map(lambda t: f"({t[0]})^{t[1]}"),
        st.tuples(st.sampled_from(["sin", "cos", "exp", "log", "sqrt"]), children).map(lambda t: f"{t[0]}({t[1]})"),
        children.map(lambda s: f"-{s}"),
    )


sources = st.recursive(leaves, _grow, max_leaves=8)


@settings(max_examples=100, deadline=None)
@given(src=sources)
def test_pretty_is_a_fixed_point(src):
    ast = parse_expression(src, BF_SYMBOLS, ("lam",))
    assert parse_expression(pretty(ast), BF_SYMBOLS, ("lam",)) == ast


# -- symbolic partials against sympy ---------------------------------------------


def _to_sympy(src):
    text = re.sub(r"d([xy])\((\w+)\)", r"D\1__\2", src).replace("^", "**")
    return sympy.sympify(text)


def _env_for(values):
    env = {}
    for k, v in values.items():
        m = re.fullmatch(r"D([xy])__(\w+)", k)
        env[Deriv("xy".index(m.group(1)), m.group(2)) if m else Sym(k)] = v
    return env


@pytest.mark.parametrize("src, variables", [
    ("B*(dx(A_y) - dy(A_x)) + sin(B)^2*dx(A_x)", ("B", "A_x", "Dx__A_y", "Dy__A_x", "Dx__A_x")),
    ("exp(B*A_y)/(2 + cos(dy(A_x))) - log(1 + B^2)", ("B", "A_y", "Dy__A_x")),
    ("sqrt(1 + dx(B)^2 + dy(B)^2)*A_x^3", ("B", "A_x", "Dx__B", "Dy__B")),
])
def test_partials_match_sympy(src, variables):
    from fieldgeom.lagrangian.symbolic import diff, simplify

    ast = parse_expression(src, BF_SYMBOLS)
    expr = _to_sympy(src)
    rng = np.random.default_rng(11)
    for _ in range(20):
        values = {v: float(rng.uniform(-0.9, 0.9)) for v in variables}
        env = _env_for(values)
        subs = {sympy.Symbol(k): v for k, v in values.items()}
        for v in variables:
            (key,) = _env_for({v: 0.0})
            ours = float(evaluate(simplify(diff(ast, key)), env))
            theirs = float(sympy.diff(expr, sympy.Symbol(v)).evalf(subs=subs))
            assert ours == pytest.approx(theirs, rel=1e-7, abs=1e-12), v


def test_partials_match_finite_differences():
    spec = parse(SCALAR_1D, SCALAR, {"lam": 0.5})
    el = EulerLagrange(spec)
    rng = np.random.default_rng(5)
    h = 1e-6
    for _ in range(20):
        env = {Sym("phi"): rng.uniform(-1, 1), Sym("eps_x"): rng.uniform(0.5, 1.5), Deriv(0, "phi"): rng.uniform(-1, 1)}
        for key, name in ((Sym("eps_x"), "eps_x"), (Deriv(0, "phi"), "phi")):
            hi, lo = dict(env), dict(env)
            hi[key] += h
            lo[key] -= h
            fd = (float(evaluate(spec.ast, hi, spec.params)) - float(evaluate(spec.ast, lo, spec.params))) / (2 * h)
            exact = el.partial[name] if key == Sym(name) else el.momenta[name][0]
            assert float(evaluate(exact, env, spec.params)) == pytest.approx(fd, rel=1e-7, abs=1e-9)


# -- Euler-Lagrange decomposition by hand ------------------------------------------


def _scalar_pair(rng):
    phi = random_config(SCALAR, rng, modes=2, offsets={"eps": 1.0})
    return phi, random_tangent(SCALAR, rng)


def test_scalar_E_and_theta_by_hand(rng):
    lam = 0.5
    el = EulerLagrange(parse(SCALAR_1D, SCALAR, {"lam": lam}))
    phi, delta = _scalar_pair(rng)
    p = geom.d(phi["phi"]).comps[0]
    e = phi["eps"].comps[0]
    dp, de = delta["phi"].comps[0], delta["eps"].comps[0]
    m = p / e
    dm = geom.d(FormField(G1, 0, [m])).comps[0]
    E_hand = -dm * dp + (-0.5 * p**2 / e**2 + lam) * de
    assert np.max(np.abs(el.E(phi, delta).comps[0] - E_hand)) <= 1e-10
    assert np.max(np.abs(el.theta(phi, delta).comps[0] - m * dp)) <= 1e-12


def test_bf_E_and_theta_by_hand(rng):
    el = EulerLagrange(parse("B*(dx(A_y) - dy(A_x))", BF))
    phi = random_config(BF, rng, modes=2)
    delta = random_tangent(BF, rng, modes=2)
    dA = geom.d(phi["A"]).comps[0]
    dB = geom.d(phi["B"])
    # dA delta B - dB ^ delta A
    E_hand = dA * delta["B"].comps[0] - geom.wedge(dB, delta["A"]).comps[0]
    assert np.max(np.abs(el.E(phi, delta).comps[0] - E_hand)) <= 1e-10
    theta = el.theta(phi, delta)
    B = phi["B"].comps[0]
    for got, dAc in zip(theta.comps, delta["A"].comps):
        assert np.max(np.abs(got - B * dAc)) <= 1e-12


def test_constant_lagrangian(rng):
    el = EulerLagrange(parse("2.5", BF))
    phi, delta = random_config(BF, rng), random_tangent(BF, rng)
    assert geom.sup(el.E(phi, delta)) == 0.0
    assert geom.sup(el.theta(phi, delta)) == 0.0


def test_E_and_theta_linear_in_tangent(rng):
    el = bf2d(n=16).euler_lagrange()
    model = bf2d(n=16)
    phi = model.off_shell(rng)
    a, b = random_tangent(model.schema, rng), random_tangent(model.schema, rng)
    for form in (el.E, el.theta):
        lhs = form(phi, 2.0 * a + b)
        rhs = form(phi, a) * 2.0 + form(phi, b)
        assert geom.sup(lhs - rhs) <= 1e-10


def test_boundary_lagrangian_arity():
    with pytest.raises(Exception):
        parse("B*(dx(A_y) - dy(A_x))", BF, boundary="B")


# -- decomposition and covariance ---------------------------------------------------


@pytest.mark.parametrize("factory", [lambda: scalar1d(n=64, boundary="eps_x/dx(phi)"), lambda: bf2d(boundary=("B^2*A_x", "B^2*A_y"))])
def test_decomposition_on_shipped_models(factory):
    model = factory()
    el = model.euler_lagrange()
    for rng in spawn(1, 5):
        phi = model.off_shell(rng)
        delta = random_tangent(model.schema, rng, modes=model.modes)
        assert check_decomposition(el, phi, delta) <= 1e-8


def test_decomposition_trivial_cases(rng):
    model = scalar1d(n=32)
    el = model.euler_lagrange()
    phi = model.off_shell(rng)
    assert check_decomposition(el, phi, FieldTangent.zeros(model.schema)) == 0.0
    zero = EulerLagrange(parse("0", model.schema))
    assert check_decomposition(zero, phi, random_tangent(model.schema, rng)) == 0.0


@pytest.mark.parametrize("name", ["scalar1d", "bf2d"])
def test_shipped_models_are_covariant(name):
    model = get_model(name)
    el = model.euler_lagrange()
    for rng in spawn(2, 5):
        assert check_covariance(el, random_vector_field(model.grid, rng), model.off_shell(rng)) <= 1e-8


def test_noncovariant_control_matches_hand_term(rng):
    model = noncovariant1d()
    el = model.euler_lagrange()
    phi = model.off_shell(rng)
    X = random_vector_field(model.grid, rng)
    p = geom.d(phi["phi"]).comps[0]
    dX = geom.d(FormField(model.grid, 0, [X.comps[0]])).comps[0]
    # D L(X^v) - d(iota_X L) = X' phi'^2 / 2
    hand = np.max(np.abs(0.5 * dX * p**2))
    assert check_covariance(el, X, phi) == pytest.approx(hand, rel=1e-9)
    assert hand > 1e-3


def test_clock_field_equations_vanish(rng):
    model = bf2d(n=16)
    el = model.euler_lagrange()
    coef = el.coefficients(model.off_shell(rng))
    assert max(ad.sup_norm(coef[c]) for c in ("chi1", "chi2")) <= 1e-10


def test_on_shell_families_solve_the_equations():
    for model in (scalar1d(n=64), bf2d()):
        el = model.euler_lagrange()
        for rng in spawn(4, 3):
            coef = el.coefficients(model.on_shell(rng))
            assert max(ad.sup_norm(v) for v in coef.values()) <= 1e-10


def test_unknown_model():
    with pytest.raises(KeyError):
        get_model("maxwell")


def test_winding_enters_the_jet():
    model = bf2d(n=16)
    phi = FieldConfig(model.schema, {n: FormField.zeros(model.grid, k) for n, k in model.schema.entries})
    jet = model.spec.jet(phi)
    # a periodic part of zero still has unit slope along its own axis
    assert np.all(jet[Deriv(0, "chi1")] == 1.0) and np.all(jet[Deriv(1, "chi1")] == 0.0)
