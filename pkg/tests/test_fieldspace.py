import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fieldgeom import dual as ad
from fieldgeom import fieldspace as fs
from fieldgeom import geom
from fieldgeom.errors import DifferentiationError, InvalidDataError, UnsupportedDegreeError
from fieldgeom.fieldspace import FieldConfig, FieldForm, FieldSchema, FieldTangent
from fieldgeom.geom import Diffeo, FormField, VectorFieldM
from fieldgeom.grid import PeriodicGrid, PointSampler
from fieldgeom.sampling import (
    gauge_diffeo,
    random_config,
    random_field_dep_diffeo,
    random_field_dep_vf,
    random_tangent,
    random_vector_field,
)

GRID = PeriodicGrid((32,))
SCHEMA = FieldSchema.build(GRID, {"f": 0, "e": 1})


def sup(x):
    return ad.sup_norm(x)


def gap(a, b):
    return sup(ad.tsub(a, b))


@pytest.fixture
def data(rng):
    phi = random_config(SCHEMA, rng, modes=2, offsets={"e": 1.0})
    return phi, rng


def density():
    # f^2 e: a scalar times the top-form slot, so a density
    return lambda phi: FormField(GRID, 1, [phi["f"].comps[0] ** 2 * phi["e"].comps[0]])


# -- schema and containers ----------------------------------------------------


def test_schema_rejects_winding_on_forms():
    with pytest.raises(InvalidDataError):
        FieldSchema.build(GRID, {"e": 1}, {"e": (1,)})
    with pytest.raises(InvalidDataError):
        FieldSchema.build(PeriodicGrid((8, 8)), {"c": 0}, {"c": (1,)})


def test_config_checks_shape():
    with pytest.raises(InvalidDataError):
        FieldConfig(SCHEMA, {"f": FormField.zeros(GRID, 0)})
    with pytest.raises(InvalidDataError):
        FieldConfig(SCHEMA, {"f": FormField.zeros(GRID, 1), "e": FormField.zeros(GRID, 1)})


def test_symbols_suffix_one_forms():
    s = FieldSchema.build(PeriodicGrid((8, 8)), {"B": 0, "A": 1})
    assert [sym for sym, _, _ in s.symbols()] == ["B", "A_x", "A_y"]


def test_tangent_arithmetic(data):
    phi, rng = data
    t = random_tangent(SCHEMA, rng)
    zero = FieldTangent.zeros(SCHEMA)
    assert gap(t + zero, t) == 0.0
    assert gap(2.0 * t - t, t) == 0.0
    assert gap((phi + t) - phi, t) <= 1e-15


# -- directional derivatives ----------------------------------------------------


def test_derivative_of_identity(data):
    phi, rng = data
    t = random_tangent(SCHEMA, rng)
    assert gap(fs.directional_derivative(lambda q: q, phi, t), t) == 0.0


def test_derivative_closed_form():
    (x,) = GRID.mesh
    s = FieldSchema.build(GRID, {"f": 0})
    phi = FieldConfig(s, {"f": FormField(GRID, 0, [np.sin(x)])})
    t = FieldTangent(s, {"f": FormField(GRID, 0, [np.cos(x)])})
    F = lambda q: geom.integrate(FormField(GRID, 1, [q["f"].comps[0] ** 2]), geom.Whole(1))
    assert abs(fs.directional_derivative(F, phi, t)) <= 1e-10


def test_dual_agrees_with_finite_differences(data):
    phi, rng = data
    t = random_tangent(SCHEMA, rng, amp=0.3)
    X = random_vector_field(GRID, rng)
    # a nonlinear evaluator mixing pullback, Lie derivative and products
    F = lambda q: geom.lie_derivative(X, FormField(GRID, 1, [q["e"].comps[0] * ad.sin(q["f"].comps[0])]))
    a = fs.directional_derivative(F, phi, t)
    b = fs.directional_derivative(F, phi, t, method="fd")
    assert gap(a, b) <= 1e-6 * max(sup(a), 1.0)


def test_nonsmooth_evaluator_raises(data):
    phi, rng = data
    F = lambda q: Diffeo(GRID, [3.0 * q["f"].comps[0]])
    with pytest.raises(DifferentiationError):
        fs.directional_derivative(F, phi, random_tangent(SCHEMA, rng))


# -- the right action ---------------------------------------------------------------


def test_identity_action(data):
    phi, _ = data
    assert gap(fs.diff_action(Diffeo.identity(GRID), phi), phi) <= 1e-12


def test_scalar_slot_is_composition(data):
    phi, _ = data
    psi = Diffeo.from_callables(GRID, lambda x: 0.3 * np.sin(x))
    moved = fs.diff_action(psi, phi)
    (y,) = psi.at_nodes()
    direct = PointSampler(GRID, (y,))(phi["f"].comps[0])
    assert np.max(np.abs(moved["f"].comps[0] - direct)) <= 1e-12


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_right_action_law(seed):
    rng = np.random.default_rng(seed)
    phi = random_config(SCHEMA, rng, modes=2)
    psi, psi2 = gauge_diffeo(GRID, rng), gauge_diffeo(GRID, rng)
    lhs = fs.diff_action(psi2, fs.diff_action(psi, phi))
    rhs = fs.diff_action(psi.compose(psi2), phi)
    assert gap(lhs, rhs) <= 1e-8


def test_winding_carried_by_action():
    s = FieldSchema.build(GRID, {"c": 0}, {"c": (1,)})
    (x,) = GRID.mesh
    phi = FieldConfig(s, {"c": FormField(GRID, 0, [0.2 * np.cos(x)])})
    psi = Diffeo.translation(GRID, 0.5)
    moved = fs.diff_action(psi, phi)
    # full value x + c(x) pulled back: (x + 0.5) + c(x + 0.5)
    full = x + moved["c"].comps[0]
    assert np.max(np.abs(full - (x + 0.5 + 0.2 * np.cos(x + 0.5)))) <= 1e-12


# -- vertical vector fields and brackets ------------------------------------------


def test_vertical_of_zero(data):
    phi, _ = data
    assert sup(fs.vertical_vf(VectorFieldM.zeros(GRID))(phi)) == 0.0


def test_vertical_of_translation():
    (x,) = GRID.mesh
    s = FieldSchema.build(GRID, {"f": 0})
    phi = FieldConfig(s, {"f": FormField(GRID, 0, [np.sin(x)])})
    got = fs.vertical_vf(VectorFieldM.coordinate(GRID, 0))(phi)
    assert np.max(np.abs(got["f"].comps[0] - np.cos(x))) <= 1e-12


def test_pushforward_of_fundamental_field(data):
    # psi^* (L_X phi) = L_{(psi^-1)_* X o psi} (psi^* phi)
    phi, rng = data
    X = random_vector_field(GRID, rng)
    psi = gauge_diffeo(GRID, rng)
    lhs = fs.pullback_tangent(psi, fs.vertical_vf(X)(phi))
    rhs = fs.vertical_vf(geom.pullback_vf(psi, X))(fs.diff_action(psi, phi))
    assert gap(lhs, rhs) <= 1e-7


def test_bracket_with_itself(data):
    phi, rng = data
    A = fs.vertical_vf(random_field_dep_vf(SCHEMA, rng))
    assert sup(fs.vf_bracket(A, A)(phi)) <= 1e-12


def test_constant_morphism(data):
    phi, rng = data
    X, Y = random_vector_field(GRID, rng), random_vector_field(GRID, rng)
    lhs = fs.vf_bracket(fs.vertical_vf(X), fs.vertical_vf(Y))(phi)
    rhs = fs.vertical_vf(-geom.lie_bracket_gamma(X, Y))(phi)
    assert gap(lhs, rhs) <= 1e-6 * max(sup(lhs), 1.0)


def test_extended_bracket_on_constants(data):
    phi, rng = data
    X, Y = random_vector_field(GRID, rng), random_vector_field(GRID, rng)
    assert gap(fs.extended_bracket(X, Y)(phi), geom.lie_bracket_diff(X, Y)) == 0.0


def test_extended_bracket_matches_vertical_bracket(data):
    phi, rng = data
    X, Y = random_field_dep_vf(SCHEMA, rng), random_field_dep_vf(SCHEMA, rng)
    lhs = fs.vf_bracket(fs.vertical_vf(X), fs.vertical_vf(Y))(phi)
    rhs = fs.vertical_vf(fs.extended_bracket(X, Y))(phi)
    assert gap(lhs, rhs) <= 1e-6 * max(sup(lhs), 1.0)


def test_extended_bracket_antisymmetry_and_jacobi(data):
    phi, rng = data
    X, Y, Z = (random_field_dep_vf(SCHEMA, rng) for _ in range(3))
    br = fs.extended_bracket
    assert sup(br(X, X)(phi)) <= 1e-12
    jac = br(X, br(Y, Z))(phi) + br(Y, br(Z, X))(phi) + br(Z, br(X, Y))(phi)
    assert sup(jac) <= 1e-6


# -- field-space forms -------------------------------------------------------------


def test_koszul_degree_zero(data):
    phi, rng = data
    F = FieldForm(0, lambda q: geom.integrate(FormField(GRID, 1, [q["e"].comps[0] ** 3]), geom.Whole(1)))
    A = fs.FieldVectorField.constant(random_tangent(SCHEMA, rng))
    want = fs.directional_derivative(lambda q: F(q), phi, A(phi))
    assert abs(fs.ext_deriv(F, phi, A) - want) <= 1e-14


def test_d_squared_vanishes(data):
    phi, rng = data
    F = FieldForm(0, lambda q: FormField(GRID, 0, [ad.sin(q["f"].comps[0]) * q["e"].comps[0]]), r=0)
    ts = [random_tangent(SCHEMA, rng) for _ in range(3)]
    dd0 = fs.exterior(fs.exterior(F))(phi, ts[0], ts[1])
    alpha = FieldForm(1, lambda q, t: FormField(GRID, 0, [q["f"].comps[0] ** 2 * t["e"].comps[0]]), r=0)
    dd1 = fs.exterior(fs.exterior(alpha))(phi, *ts)
    assert sup(dd0) <= 1e-6 and sup(dd1) <= 1e-6


def test_koszul_with_vector_fields_agrees(data):
    # Koszul with non-constant vector fields must match the constant-extension exterior
    phi, rng = data
    alpha = FieldForm(1, lambda q, t: FormField(GRID, 0, [q["f"].comps[0] ** 2 * t["e"].comps[0]]), r=0)
    A = fs.vertical_vf(random_vector_field(GRID, rng))
    B = fs.vertical_vf(random_field_dep_vf(SCHEMA, rng))
    lhs = fs.ext_deriv(alpha, phi, A, B)
    rhs = fs.exterior(alpha)(phi, A(phi), B(phi))
    assert gap(lhs, rhs) <= 1e-8 * max(sup(lhs), 1.0)


def test_ext_deriv_degree_limit(data):
    phi, _ = data
    F = FieldForm(3, lambda q, a, b, c: 0.0)
    with pytest.raises(UnsupportedDegreeError):
        fs.ext_deriv(F, phi, *([fs.FieldVectorField.constant(FieldTangent.zeros(SCHEMA))] * 4))
    with pytest.raises(UnsupportedDegreeError):
        F(phi)


def test_exterior_is_alternating(data):
    phi, rng = data
    alpha = FieldForm(1, lambda q, t: FormField(GRID, 0, [ad.exp(q["f"].comps[0]) * t["e"].comps[0]]), r=0)
    Theta = fs.exterior(alpha)
    a, b = random_tangent(SCHEMA, rng), random_tangent(SCHEMA, rng)
    assert gap(Theta(phi, a, b), ad.tscale(-1.0, Theta(phi, b, a))) <= 1e-9
    assert gap(Theta(phi, 2.5 * a, b), ad.tscale(2.5, Theta(phi, a, b))) <= 1e-9


def test_lie_derivatives_close_on_extended_bracket(data):
    phi, rng = data
    X, Y = random_field_dep_vf(SCHEMA, rng), random_field_dep_vf(SCHEMA, rng)
    alpha = FieldForm(0, lambda q: FormField(GRID, 0, [q["f"].comps[0] * q["e"].comps[0]]), r=0)
    LX = lambda a: fs.nijenhuis_lie(X, a)
    LY = lambda a: fs.nijenhuis_lie(Y, a)
    lhs = ad.tsub(LX(LY(alpha))(phi), LY(LX(alpha))(phi))
    rhs = fs.nijenhuis_lie(fs.extended_bracket(X, Y), alpha)(phi)
    # L_{X^v} L_{Y^v} - L_{Y^v} L_{X^v} = L_{[X^v, Y^v]} and [X^v, Y^v] = {X, Y}^v
    assert gap(lhs, rhs) <= 1e-5 * max(sup(lhs), 1.0)


# -- vertical diffeomorphisms --------------------------------------------------


def test_vertical_pushforward_constant_psi(data):
    phi, rng = data
    psi = gauge_diffeo(GRID, rng)
    t = random_tangent(SCHEMA, rng)
    assert gap(fs.vertical_pushforward(psi, phi, t), fs.pullback_tangent(psi, t)) == 0.0
    P = random_field_dep_diffeo(SCHEMA, rng)
    assert sup(fs.vertical_pushforward(P, phi, FieldTangent.zeros(SCHEMA))) <= 1e-14


def test_vertical_pushforward_against_finite_differences(data):
    phi, rng = data
    P = random_field_dep_diffeo(SCHEMA, rng)
    t = random_tangent(SCHEMA, rng, amp=0.3)
    closed = fs.vertical_pushforward(P, phi, t)
    fd = fs.directional_derivative(fs.vertical_map(P), phi, t, method="fd")
    assert gap(closed, fd) <= 1e-6 * max(sup(closed), 1.0)


def test_vertical_transform_identity(data):
    phi, rng = data
    alpha = fs.basis_1form()
    t = random_tangent(SCHEMA, rng)
    got = fs.vertical_transform(alpha, Diffeo.identity(GRID))(phi, t)
    assert gap(got, t) <= 1e-12


def test_basis_transform_two_routes(data):
    phi, rng = data
    P = random_field_dep_diffeo(SCHEMA, rng)
    t = random_tangent(SCHEMA, rng)
    generic = fs.vertical_transform(fs.basis_1form(), P, route="tangent-map")(phi, t)
    closed = fs.basis_1form_transform(P)(phi, t)
    assert gap(generic, closed) <= 1e-7 * max(sup(closed), 1.0)


def test_twisted_composition_law(data):
    phi, rng = data
    P, Q = random_field_dep_diffeo(SCHEMA, rng), random_field_dep_diffeo(SCHEMA, rng)
    twice = fs.vertical_map(Q)(fs.vertical_map(P)(phi))
    once = fs.vertical_map(fs.vertical_compose(P, Q))(phi)
    assert gap(twice, once) <= 1e-7


def test_transform_of_transform(data):
    phi, rng = data
    P, Q = random_field_dep_diffeo(SCHEMA, rng), random_field_dep_diffeo(SCHEMA, rng)
    alpha = FieldForm(1, lambda q, t: FormField(GRID, 1, [q["e"].comps[0] * t["e"].comps[0]]), r=1)
    t = random_tangent(SCHEMA, rng)
    # pulling back by Xi_P and then by Xi_Q is pulling back by Xi_Q o Xi_P
    nested = fs.vertical_transform(fs.vertical_transform(alpha, Q), P)(phi, t)
    direct = fs.vertical_transform(alpha, fs.vertical_compose(P, Q))(phi, t)
    assert gap(nested, direct) <= 1e-6 * max(sup(direct), 1.0)


def test_pullback_representation_lemma(data):
    # d(psi^* a) = psi^*(d a + L_{d psi o psi^-1} a) for a pullback-valued 0-form
    phi, rng = data
    P = random_field_dep_diffeo(SCHEMA, rng)
    a = lambda q: FormField(GRID, 1, [q["e"].comps[0] * ad.cos(q["f"].comps[0])])
    t = random_tangent(SCHEMA, rng)
    lhs = fs.directional_derivative(lambda q: geom.pullback(P(q), a(q)), phi, t)
    V = fs.diffeo_variation(P, phi, t)
    rhs = geom.pullback(P(phi), fs.directional_derivative(a, phi, t) + geom.lie_derivative(V, a(phi)))
    assert gap(lhs, rhs) <= 1e-6 * max(sup(lhs), 1.0)


# -- equivariance diagnostics ----------------------------------------------------


def test_anomaly_of_basis_form(data):
    phi, rng = data
    t = random_tangent(SCHEMA, rng)
    for X in (random_vector_field(GRID, rng), random_field_dep_vf(SCHEMA, rng)):
        assert fs.anomaly_operator(X, fs.basis_1form(), phi, [t]) <= 1e-6


def test_anomaly_positive_control(data):
    phi, rng = data
    (x,) = GRID.mesh
    frozen = 1.0 + 0.5 * np.cos(x)
    alpha = FieldForm(0, lambda q: FormField(GRID, 1, [frozen * q["e"].comps[0]]), r=1, equivariance="pullback")
    assert fs.anomaly_operator(random_vector_field(GRID, rng), alpha, phi, []) > 1e-3


def test_basis_form_not_horizontal(data):
    phi, rng = data
    X = random_vector_field(GRID, rng)
    t = random_tangent(SCHEMA, rng)
    h = fs.horizontality_residual(fs.basis_1form(), phi, [X], [t])
    assert h == pytest.approx(sup(fs.field_lie(X, phi)))
    assert h > 0


def test_integrated_density_is_basic(data):
    phi, rng = data
    F = FieldForm(0, lambda q: geom.integrate(density()(q), geom.Whole(1)), equivariance="invariant")
    Xs = [random_vector_field(GRID, rng) for _ in range(2)]
    psis = [random_field_dep_diffeo(SCHEMA, rng) for _ in range(2)]
    hor, inv = fs.basicity_check(F, phi, Xs, psis)
    assert hor <= 1e-7 and inv <= 1e-7


def test_equivariance_finite_and_infinitesimal(data):
    phi, rng = data
    alpha = FieldForm(1, lambda q, t: FormField(GRID, 1, [q["e"].comps[0] * t["f"].comps[0]]), r=1, equivariance="pullback")
    t = random_tangent(SCHEMA, rng)
    assert fs.equivariance_residual(alpha, phi, [t], psi=gauge_diffeo(GRID, rng)) <= 1e-8
    assert fs.equivariance_residual(alpha, phi, [t], X=random_vector_field(GRID, rng)) <= 1e-8
