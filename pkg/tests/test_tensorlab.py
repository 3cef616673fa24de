import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bonnetlab import Grid2, Grid3, ScalarField2, construct_pair
from bonnetlab.errors import MetricError, PositivityError, RatioError, ShapeError
from bonnetlab.exprlang import parse, sample
from bonnetlab.fieldcore import SeparableField
from bonnetlab.tensorlab import (
    ChartTensors,
    FundamentalData,
    bianchi_residual,
    christoffel,
    codazzi_general_residual,
    detect_anet,
    gauss_general_residual,
    principal_curvatures,
    principal_fields,
    rescale_coordinates,
)

from conftest import const_fields, sphere_data


def _const(grid, v, p=0):
    return SeparableField(ScalarField2.constant(grid, v), p)


def test_flat_metric_has_zero_christoffels(example_A):
    M = construct_pair(example_A).M
    assert np.all(christoffel(M) == 0)


def test_example_B_christoffel(example_B):
    M = construct_pair(example_B).M
    G = christoffel(M, example_B.grid3)
    sig = example_B.grid3.sigma
    # Gamma^1_{13} = 1/s, symmetric in the lower indices
    assert np.allclose(G[..., 0, 0, 2], 1 / sig[None, None, :], atol=1e-13)
    assert np.array_equal(G, np.swapaxes(G, -1, -2))
    k = int(np.argmin(np.abs(sig - 2.0)))
    assert G[5, 5, k, 0, 0, 2] == pytest.approx(0.5, abs=1e-13)


def test_sphere_christoffel_matches_closed_form():
    def err(n):
        c = sphere_data(n)
        G = christoffel(c)[:, :, 0]
        X1, X2 = c.grid.mesh()
        want = {
            (0, 1, 1): -np.sin(X1) * np.cos(X1),
            (1, 0, 1): np.cos(X1) / np.sin(X1),
            (0, 2, 2): -np.sin(X1) * np.cos(X1) * np.sin(X2) ** 2,
            (1, 2, 2): -np.sin(X2) * np.cos(X2),
            (2, 0, 2): np.cos(X1) / np.sin(X1),
            (2, 1, 2): np.cos(X2) / np.sin(X2),
        }
        return max(np.abs(G[1:-1, 1:-1][..., a, b, c_] - w[1:-1, 1:-1]).max() for (a, b, c_), w in want.items())

    e33, e65 = err(33), err(65)
    assert e65 < 1e-3
    assert 3.0 <= e33 / e65 <= 5.0


def test_christoffel_symmetry_on_sphere():
    G = christoffel(sphere_data(17))
    assert np.array_equal(G, np.swapaxes(G, -1, -2))


def test_oracle_on_fixtures(example_A, example_B):
    for F in (example_A, example_B):
        M = construct_pair(F).M
        assert gauss_general_residual(M, F.grid3)["gauss_general"].full.linf <= 1e-10
        assert codazzi_general_residual(M, F.grid3)["codazzi_general"].full.linf <= 1e-10


def test_as_printed_rejected_by_gauss(example_A):
    M = construct_pair(example_A, "as-printed").M
    assert M.b11.base.values[0, 0] == pytest.approx(2.0)
    assert M.b22.base.values[0, 0] == pytest.approx(0.0, abs=1e-15)
    assert gauss_general_residual(M)["gauss_general"].full.linf == pytest.approx(1.0, abs=1e-6)


def test_tampered_b12_breaks_gauss_not_codazzi(example_B):
    # Codazzi is linear in b and c*s*dx1dx2 is compatible on its own
    M = construct_pair(example_B).M
    bad = dataclasses.replace(M, b12=SeparableField(M.b12.base * 1.1, M.b12.s_power))
    g3 = example_B.grid3
    assert gauss_general_residual(bad, g3)["gauss_general"].full.linf >= 0.01
    assert codazzi_general_residual(bad, g3)["codazzi_general"].full.linf <= 1e-10


def test_sphere_gauss_codazzi_second_order():
    worst = []
    for n in (33, 65, 129):
        c = sphere_data(n)
        worst.append(
            max(
                gauss_general_residual(c)["gauss_general"].interior.linf,
                codazzi_general_residual(c)["codazzi_general"].interior.linf,
            )
        )
    assert worst[1] <= 1e-3
    for a, b in zip(worst, worst[1:]):
        assert 3.0 <= a / b <= 5.0


@pytest.mark.parametrize("which", ["A", "B", "sphere"])
def test_first_bianchi_identity(which, example_A, example_B):
    if which == "sphere":
        assert bianchi_residual(sphere_data(33)) <= 1e-10
    else:
        F = example_A if which == "A" else example_B
        assert bianchi_residual(construct_pair(F).M, F.grid3) <= 1e-10


def test_bianchi_on_random_conformal_metric():
    g = Grid2(0, 1, 17, 0, 1, 17)
    g11 = sample(parse("exp(0.3*sin(2*x1)*cos(x2))"), g)
    M = FundamentalData(3, None, SeparableField(g11, 0), _const(g, 1.0), _const(g, 1.0), _const(g, 1.0), 1)
    assert bianchi_residual(M) <= 1e-10


def test_principal_curvature_examples(example_A, example_B):
    pc = principal_curvatures(construct_pair(example_A).M, (4, 4))
    assert np.allclose(pc.eigenvalues, [2, 0, 0], atol=1e-12)
    assert pc.H == pytest.approx(1.0) and pc.J == pytest.approx(1.0)
    assert pc.rank2 and not pc.umbilic

    sig = example_B.grid3.sigma
    k = int(np.argmin(np.abs(sig - 1.0)))
    pc = principal_curvatures(construct_pair(example_B).M, (3, 7, k), example_B.grid3)
    r2 = math.sqrt(2)
    assert np.allclose(pc.eigenvalues, [1 + r2, 0, 1 - r2], atol=1e-10)
    assert pc.H == pytest.approx(1.0, abs=1e-10) and pc.J == pytest.approx(r2, abs=1e-10)

    pc = principal_curvatures(sphere_data(17), (5, 5))
    assert np.allclose(pc.eigenvalues, 0.5, atol=1e-12)
    assert pc.umbilic


@settings(max_examples=25, deadline=None)
@given(
    H=st.floats(0.1, 3),
    J=st.floats(0.1, 3),
    th=st.floats(0.05, math.pi - 0.05),
    neg=st.booleans(),
)
def test_principal_fields_identities(H, J, th, neg):
    g = Grid2(0, 1, 5, 0, 1, 5)
    J = -J if neg else J
    F = const_fields(g, H, J, th)
    pair = construct_pair(F)
    pf = principal_fields(pair.M)
    pfp = principal_fields(pair.Mprime)
    assert np.allclose(pf["k1"] + pf["k2"], 2 * pf["H"], atol=1e-12, rtol=0)
    assert np.allclose(pf["H"], H, atol=1e-10 * (1 + H))
    assert np.allclose(pf["J"], J, atol=1e-10 * (1 + abs(J)))
    assert np.allclose(np.sort([pf["k1"], pf["k2"]], axis=0), np.sort([pfp["k1"], pfp["k2"]], axis=0), atol=1e-12)


def test_detect_anet_examples(example_A, example_B):
    MA = construct_pair(example_A).M
    v = detect_anet(MA)
    assert v.is_anet and v.case == "two"
    MB = construct_pair(example_B).M
    v = detect_anet(MB, MB.linfac, grid3=example_B.grid3)
    assert v.is_anet and v.case == "one"

    chart = MA.as_chart()
    scaled = ChartTensors(
        chart.n,
        dict(chart.g, **{}) | {(0, 0): SeparableField(chart.g[(0, 0)].base * 1.01, 0)},
        chart.b,
    )
    v = detect_anet(scaled)
    assert not v.is_anet
    assert v.diagnostics["g11-g22"]["deviation"] == pytest.approx(0.01, rel=1e-9)

    chartB = MB.as_chart()
    bad = ChartTensors(chartB.n, chartB.g, chartB.b | {(0, 2): _const(MB.grid, 0.1)}, chartB.linfac)
    v = detect_anet(bad, MB.linfac, grid3=example_B.grid3)
    assert not v.is_anet and not v.diagnostics["b_iq"]["passed"]


def test_metric_errors():
    g = Grid2(0, 1, 5, 0, 1, 5)
    with pytest.raises(MetricError):
        FundamentalData(3, None, _const(g, -1.0), _const(g, 1), _const(g, 1), _const(g, 1), 1)
    with pytest.raises(ShapeError):
        ChartTensors(9, {(0, 0): _const(g, 1.0)}, {})


def test_rescale_closed_form():
    g = Grid2(0, 1, 33, 0, 1, 33)
    phi = sample(parse("1 + 0.5*x1*x2"), g)
    r = rescale_coordinates(phi * 4.0, phi * 9.0, parse("4"), parse("9"))
    assert np.allclose(r.x1_map, 2 * g.x1, atol=1e-14)
    assert np.allclose(r.x2_map, 3 * g.x2, atol=1e-14)
    # resampled onto the new uniform grid, which is a dilation of the old one
    X1, X2 = r.grid.mesh()
    assert np.allclose(r.g11.values, 1 + 0.5 * (X1 / 2) * (X2 / 3), atol=1e-12)
    assert np.allclose(r.g11.values, r.g22.values, atol=1e-12)
    assert r.gpp == 1.0


def test_rescale_identity_and_transverse_map():
    g = Grid2(0, 1, 9, 0, 1, 9)
    phi = sample(parse("2 + x1"), g)
    r = rescale_coordinates(phi, phi, parse("1"), parse("1"), [(parse("x1^2"), (1.0, 2.0, 65))])
    assert np.allclose(r.x1_map, g.x1) and np.allclose(r.x2_map, g.x2)
    assert np.allclose(r.g11.values, phi.values, atol=1e-12)
    xs, xbar = r.xp_maps[0]
    assert np.allclose(xbar, (xs**2 - 1) / 2 + 1.0, atol=1e-12)


def test_rescale_errors():
    g = Grid2(0, 1, 9, 0, 1, 9)
    phi = sample(parse("2 + x1"), g)
    with pytest.raises(RatioError):
        rescale_coordinates(phi * 4.0, phi * 9.0, parse("1"), parse("1"))
    with pytest.raises(PositivityError):
        rescale_coordinates(phi, phi, parse("-1"), parse("-1"))
