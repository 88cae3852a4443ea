import numpy as np
import pytest

from fieldgeom import dfm, geom
from fieldgeom import fieldspace as fs
from fieldgeom.errors import DressingDegenerateError
from fieldgeom.fieldspace import FieldConfig, FieldSchema
from fieldgeom.geom import Diffeo, FormField
from fieldgeom.lagrangian import bf2d, scalar1d
from fieldgeom.sampling import gauge_diffeo, random_tangent, random_vector_field
from fieldgeom.suites import run_suite

from conftest import shipped_context


@pytest.fixture(scope="module")
def bf():
    return bf2d(n=32)


def _disp_sup(D: Diffeo) -> float:
    return max(float(np.max(np.abs(c))) for c in D.disp)


def _with_clocks(model, phi, *parts):
    fields = dict(phi.fields)
    for name, values in zip(model.clocks, parts):
        fields[name] = FormField(model.grid, 0, [values])
    return FieldConfig(model.schema, fields)


def test_trivial_clocks_give_the_identity(bf, rng):
    zero = np.zeros(bf.grid.shape)
    phi = _with_clocks(bf, bf.off_shell(rng), zero, zero)
    u = dfm.clock_dressing(bf.schema)(phi)
    assert _disp_sup(u) == 0.0
    dressed = dfm.dress_field(phi, dfm.clock_dressing(bf.schema))
    for name in bf.schema.names:
        assert geom.sup(dressed[name] - phi[name]) <= 1e-12


def test_clocks_dress_to_coordinates(bf, rng):
    phi = bf.off_shell(rng)
    phi_u = dfm.dress_field(phi, dfm.clock_dressing(bf.schema))
    # the periodic parts of the dressed clocks vanish: chi o u = id
    for name in bf.clocks:
        assert float(np.max(np.abs(phi_u[name].comps[0]))) <= 1e-8


def test_scalar_clock_is_found_from_the_winding(rng):
    model = scalar1d(n=128)
    u = dfm.clock_dressing(model.schema)
    assert u.clocks == ("phi",)
    assert u.describe() == {"construction": "clock", "clocks": ["phi"]}
    phi_u = dfm.dress_field(model.off_shell(rng), u)
    assert float(np.max(np.abs(phi_u["phi"].comps[0]))) <= 1e-8


def test_clock_order_follows_the_axes(bf):
    assert dfm.clock_dressing(bf.schema, ["chi2", "chi1"]).clocks == ("chi1", "chi2")


@pytest.mark.parametrize("clocks, match", [
    (["chi1"], "needs 2 clock fields"),
    (["chi1", "B"], "no winding"),
    (["chi1", "chi1"], "distinct axes"),
])
def test_bad_clock_choices(bf, clocks, match):
    with pytest.raises(DressingDegenerateError, match=match):
        dfm.clock_dressing(bf.schema, clocks)


def test_clock_winding_twice_rejected():
    grid = bf2d(n=16).grid
    schema = FieldSchema.build(grid, {"a": 0, "b": 0}, {"a": (2, 0), "b": (0, 1)})
    with pytest.raises(DressingDegenerateError, match="wind once"):
        dfm.clock_dressing(schema)


def test_folded_clocks_are_degenerate(bf, rng):
    x, y = bf.grid.mesh
    # d/dx (x + 1.5 sin x) changes sign, so chi is not a diffeomorphism
    phi = _with_clocks(bf, bf.off_shell(rng), 1.5 * np.sin(x), np.zeros_like(y))
    with pytest.raises(DressingDegenerateError, match="not monotone"):
        dfm.clock_dressing(phi)


def test_dressing_is_equivariant(bf, rng):
    phi = bf.off_shell(rng)
    psis = [gauge_diffeo(bf.grid, rng) for _ in range(2)]
    assert dfm.equivariance_residual(dfm.clock_dressing(bf.schema), phi, psis) <= 1e-8


def test_dressed_field_is_invariant(bf, rng):
    u = dfm.clock_dressing(bf.schema)
    phi = bf.off_shell(rng)
    psi = gauge_diffeo(bf.grid, rng)
    a = dfm.dress_field(phi, u)
    b = dfm.dress_field(fs.diff_action(psi, phi), u)
    for name in bf.schema.names:
        assert geom.sup(a[name] - b[name]) <= 1e-8


def test_user_dressing_contract(bf, rng):
    phi = bf.off_shell(rng)
    psis = [gauge_diffeo(bf.grid, rng)]
    clock = dfm.clock_dressing(bf.schema)
    accepted = dfm.user_dressing(lambda q: clock(q), phi, psis)
    assert accepted.construction == "user-supplied"
    # a field-independent map cannot absorb the transformation
    fixed = Diffeo(bf.grid, [0.1 * np.sin(bf.grid.mesh[1]), np.zeros(bf.grid.shape)])
    with pytest.raises(DressingDegenerateError, match="not equivariant"):
        dfm.user_dressing(lambda q: fixed, phi, psis)


def test_flat_connection(bf, rng):
    omega = dfm.flat_connection(dfm.clock_dressing(bf.schema))
    phi = bf.off_shell(rng)
    X = random_vector_field(bf.grid, rng)
    assert omega.vertical_residual(phi, [X]) <= 1e-8
    delta = random_tangent(bf.schema, rng, modes=1, amp=0.3)
    assert omega.equivariance_residual(phi, delta, gauge_diffeo(bf.grid, rng)) <= 1e-7


def test_connection_is_flat(bf, rng):
    omega = dfm.flat_connection(dfm.clock_dressing(bf.schema))
    phi = bf.off_shell(rng)
    a = random_tangent(bf.schema, rng, modes=1, amp=0.3)
    b = random_tangent(bf.schema, rng, modes=1, amp=0.3)
    assert dfm.curvature_residual(omega, a, b, phi) <= 1e-6


def test_horizontal_projection_kills_vertical_vectors(bf, rng):
    omega = dfm.flat_connection(dfm.clock_dressing(bf.schema))
    phi = bf.off_shell(rng)
    basis = fs.basis_1form(bf.schema)
    X = random_vector_field(bf.grid, rng)
    assert fs.horizontality_residual(basis, phi, [X]) > 1e-3
    assert fs.horizontality_residual(dfm.horizontalize(basis, omega), phi, [X]) <= 1e-8


def test_residual_classification(bf, rng):
    phi = bf.off_shell(rng)
    psis = [gauge_diffeo(bf.grid, rng) for _ in range(2)]
    label, eq, conj, coc = dfm.classify_residual(dfm.clock_dressing(bf.schema), phi, psis)
    assert label.startswith("complete elimination")
    assert eq <= 1e-8 and conj > 1e-3


def test_constant_reparametrization_keeps_the_law(bf, rng):
    phi = bf.off_shell(rng)
    v = gauge_diffeo(bf.grid, rng)
    u2 = dfm.reparametrized(dfm.clock_dressing(bf.schema), v)
    assert dfm.equivariance_residual(u2, phi, [gauge_diffeo(bf.grid, rng)]) <= 1e-8
    beta = dfm.shift_form(dfm.clock_dressing(bf.schema), v)
    assert geom.sup(beta(phi, random_tangent(bf.schema, rng))) == 0.0


@pytest.mark.parametrize("suite", ["dfm", "residual"])
def test_suites_pass_on_scalar(suite):
    res = run_suite(suite, shipped_context("scalar1d"), seed=5, draws=2)
    assert res.passed, [r for r in res.rows if not r.passed]


def test_residual_suite_passes_on_bf():
    res = run_suite("residual", shipped_context("bf2d"), seed=5, draws=1)
    assert res.passed, [r for r in res.rows if not r.passed]
