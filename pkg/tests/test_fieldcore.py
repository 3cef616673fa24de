import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bonnetlab.errors import CapacityError, DomainError, StencilError
from bonnetlab.fieldcore import (
    Grid2,
    Grid3,
    NormPair,
    ResidualReport,
    ScalarField2,
    SeparableField,
    array_norms,
    field_norms,
    grid_refine,
    partial,
    partial2,
    read_field_csv,
    write_field_csv,
)


def test_grid_validation():
    with pytest.raises(DomainError):
        Grid2(0, 1, 4, 0, 1, 5)
    with pytest.raises(DomainError):
        Grid2(1, 0, 5, 0, 1, 5)
    g = Grid2(0, 1, 5, 0, 2, 9)
    assert g.h1 == pytest.approx(0.25) and g.h2 == pytest.approx(0.25)


def test_grid3_rejects_nonpositive_sigma():
    g = Grid2(0, 1, 5, 0, 1, 5)
    with pytest.raises(DomainError) as exc:
        Grid3(g, -1.0, 1.0, 9)
    assert exc.value.code == "DOMAIN_S_ZERO"
    with pytest.raises(DomainError):
        Grid3(g, 0.0, 1.0, 9)


def test_scalar_field_rejects_nonfinite():
    g = Grid2(0, 1, 5, 0, 1, 5)
    v = np.ones(g.shape)
    v[2, 2] = np.nan
    with pytest.raises(DomainError):
        ScalarField2(g, v)


def test_partial_of_constant_is_zero():
    g = Grid2(0, 1, 9, 0, 1, 9)
    f = ScalarField2.constant(g, 3.5)
    for axis in (1, 2):
        for order in (2, 4):
            assert np.all(partial(f, axis, order).values == 0.0)


def test_partial_sin_error_bound():
    g = Grid2(0, math.pi, 65, 0, 1, 5)
    f = ScalarField2.from_function(g, lambda x1, x2: np.sin(x1))
    X1, _ = g.mesh()
    err = np.abs(partial(f, 1).values - np.cos(X1)).max()
    assert err <= 1e-3


def _interior_error(n, order):
    g = Grid2(0, math.pi, n, 0, 1, 5)
    f = ScalarField2.from_function(g, lambda x1, x2: np.sin(x1))
    X1, _ = g.mesh()
    err = partial(f, 1, order).values - np.cos(X1)
    k = 1 if order == 2 else 2
    return np.abs(err[k:-k]).max()


def test_partial_order_two_refinement_ratio():
    ratio = _interior_error(65, 2) / _interior_error(129, 2)
    assert 4 * 0.8 <= ratio <= 4 * 1.2


def test_partial_order_four_refinement_ratio():
    ratio = _interior_error(33, 4) / _interior_error(65, 4)
    assert 16 * 0.75 <= ratio <= 16 * 1.25


def test_second_derivative_order():
    def err(n):
        g = Grid2(0, 1, n, 0, 1, 5)
        f = ScalarField2.from_function(g, lambda x1, x2: np.exp(x1))
        X1, _ = g.mesh()
        return np.abs(partial2(f, 1).values - np.exp(X1))[1:-1].max()

    assert 4 * 0.75 <= err(33) / err(65) <= 4 * 1.25


def test_stencil_errors():
    g = Grid2(0, 1, 5, 0, 1, 5)
    f = ScalarField2.constant(g, 1.0)
    with pytest.raises(StencilError):
        partial(f, 1, order=6)


@given(
    a=st.floats(-5, 5),
    b=st.floats(-5, 5),
    c=st.floats(-5, 5),
)
def test_partial_exact_on_affine(a, b, c):
    g = Grid2(-1, 2, 7, 0, 1, 6)
    f = ScalarField2.from_function(g, lambda x1, x2: a + b * x1 + c * x2)
    assert np.allclose(partial(f, 1).values, b, atol=1e-12, rtol=0)
    assert np.allclose(partial(f, 2).values, c, atol=1e-12, rtol=0)


@settings(max_examples=30)
@given(
    a=st.floats(-3, 3),
    b=st.floats(-3, 3),
    seed=st.integers(0, 2**31 - 1),
)
def test_partial_is_linear(a, b, seed):
    rng = np.random.default_rng(seed)
    g = Grid2(0, 1, 8, 0, 1, 9)
    f = ScalarField2(g, rng.standard_normal(g.shape))
    h = ScalarField2(g, rng.standard_normal(g.shape))
    for axis in (1, 2):
        lhs = partial(f * a + h * b, axis).values
        rhs = partial(f, axis).values * a + partial(h, axis).values * b
        assert np.allclose(lhs, rhs, atol=1e-10 * (1 + abs(a) + abs(b)), rtol=1e-12)


def test_mixed_partials_commute_to_second_order():
    def err(n):
        g = Grid2(0, 1, n, 0, 1, n)
        f = ScalarField2.from_function(g, lambda x1, x2: np.sin(2 * x1) * np.exp(x2) + x1**3 * x2**2)
        d12 = partial(partial(f, 1), 2).values
        d21 = partial(partial(f, 2), 1).values
        return np.abs(d12 - d21)[1:-1, 1:-1].max()

    # centered stencils commute exactly on the interior
    assert err(17) <= 1e-10 and err(33) <= 1e-10


def test_grid_refine_examples():
    g = Grid2(0, 1, 5, 0, 1, 5)
    assert grid_refine(g, 2).n1 == 9
    assert grid_refine(Grid2(0, 1, 33, 0, 1, 33), 4).n1 == 129
    with pytest.raises(CapacityError):
        grid_refine(g, 1 << 15)
    with pytest.raises(DomainError):
        grid_refine(g, 1)


@given(n1=st.integers(5, 20), n2=st.integers(5, 20), factor=st.integers(2, 4))
def test_grid_refine_nests(n1, n2, factor):
    g = Grid2(-0.3, 1.7, n1, 2.0, 5.0, n2)
    r = grid_refine(g, factor)
    fn = lambda x1, x2: np.sin(3 * x1) + x2**2  # noqa: E731
    coarse = ScalarField2.from_function(g, fn).values
    fine = ScalarField2.from_function(r, fn).values
    assert np.array_equal(fine[::factor, ::factor], coarse)
    assert np.array_equal(r.x1[::factor], g.x1)


def test_norm_examples():
    g = Grid2(0, 1, 11, 0, 1, 11)
    assert field_norms(ScalarField2.constant(g, 0.0)) == NormPair(0.0, 0.0)
    ones = field_norms(ScalarField2.constant(g, 1.0))
    assert ones.linf == 1.0 and ones.l2 == pytest.approx(1.0, abs=1e-15)
    x = ScalarField2.from_function(g, lambda x1, x2: x1 + 0 * x2)
    assert field_norms(x).linf == 1.0
    assert field_norms(x, interior_only=True).linf == pytest.approx(0.9)


@given(seed=st.integers(0, 2**31 - 1))
def test_norm_relation(seed):
    v = np.random.default_rng(seed).standard_normal((7, 9))
    nrm = array_norms(v)
    assert nrm.linf >= nrm.l2 / math.sqrt(v.size) - 1e-15
    assert nrm.linf >= 0 and nrm.l2 >= 0


def test_separable_field_algebra():
    g = Grid2(0, 1, 5, 0, 1, 5)
    f = SeparableField(ScalarField2.constant(g, 3.0), 2)
    assert np.allclose(f.at(np.array([2.0]))[..., 0], 12.0)
    d = f.d_s()
    assert d.s_power == 1 and np.allclose(d.base.values, 6.0)
    prod = f * SeparableField(ScalarField2.constant(g, 0.5), -1)
    assert prod.s_power == 1 and np.allclose(prod.base.values, 1.5)


@settings(max_examples=25)
@given(seed=st.integers(0, 2**31 - 1))
def test_csv_roundtrip_is_exact(tmp_path_factory, seed):
    rng = np.random.default_rng(seed)
    g = Grid2(-1.25, 0.1, 6, 3.0, 7.5, 5)
    f = ScalarField2(g, rng.standard_normal(g.shape) * 10.0 ** rng.integers(-8, 8))
    p = tmp_path_factory.mktemp("csv") / "f.csv"
    write_field_csv(p, f, ["component g11 s_power=2"])
    back, ann = read_field_csv(p)
    assert back.grid == g
    assert np.array_equal(back.values, f.values)
    assert ann == ["component g11 s_power=2"]


def test_csv_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("")
    with pytest.raises(DomainError) as exc:
        read_field_csv(p)
    assert exc.value.code == "CSV_EMPTY"
    p.write_text("# nonsense\n")
    with pytest.raises(DomainError) as exc:
        read_field_csv(p)
    assert exc.value.code == "CSV_HEADER"
    p.write_text("# grid n1=5 n2=5 x1=[0,1] x2=[0,1]\n0,0,1.0\n")
    with pytest.raises(DomainError) as exc:
        read_field_csv(p)
    assert exc.value.code == "CSV_ROWS"


def test_residual_report_json_roundtrip():
    rep = ResidualReport(interior_only=True)
    rep.add("a", np.arange(25.0).reshape(5, 5) * 1e-3, tol=1e-2)
    rep.add_scalar("flag", 0.0, tol=0.0)
    back = ResidualReport.from_json(rep.to_json())
    assert back.names() == ["a", "flag"]
    assert back["a"].norm(True) == rep["a"].norm(True)
    assert back.passed == rep.passed
    assert rep.failures() == ["a"]
