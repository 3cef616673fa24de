import math
from pathlib import Path

import numpy as np
import pytest

from bonnetlab import BonnetFields, Grid2, Grid3, LinearFactor, ScalarField2

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"


def const_fields(grid, H, J, theta, linfac=None, n=3, grid3=None):
    return BonnetFields(
        ScalarField2.constant(grid, H),
        ScalarField2.constant(grid, J),
        ScalarField2.constant(grid, theta),
        linfac,
        n,
        grid3,
    )


@pytest.fixture
def grid33():
    return Grid2(0.0, 1.0, 33, 0.0, 1.0, 33)


@pytest.fixture
def grid3_B(grid33):
    return Grid3(grid33, 1.0, 2.0, 17)


@pytest.fixture
def example_A(grid33):
    return const_fields(grid33, 1.0, 1.0, math.pi / 2)


@pytest.fixture
def example_B(grid33, grid3_B):
    return const_fields(grid33, 1.0, math.sqrt(2.0), math.pi / 2, LinearFactor((1.0,)), 3, grid3_B)


@pytest.fixture
def kappa_violated(grid33, grid3_B):
    return const_fields(grid33, 1.0, 1.0, math.pi / 2, LinearFactor((1.0,)), 3, grid3_B)


def sphere_data(n_nodes, R=2.0, lo=1.0, hi=2.0):
    """Round 3-sphere chart g = diag(R^2, R^2 sin^2 x1, R^2 sin^2 x1 sin^2 x2), b = g / R."""
    from bonnetlab.fieldcore import SeparableField
    from bonnetlab.tensorlab import ChartTensors

    g = Grid2(lo, hi, n_nodes, lo, hi, n_nodes)
    X1, X2 = g.mesh()
    metric = {
        (0, 0): np.full(g.shape, R * R),
        (1, 1): R * R * np.sin(X1) ** 2,
        (2, 2): R * R * np.sin(X1) ** 2 * np.sin(X2) ** 2,
    }
    gd = {k: SeparableField(ScalarField2(g, v), 0) for k, v in metric.items()}
    bd = {k: SeparableField(ScalarField2(g, v / R), 0) for k, v in metric.items()}
    return ChartTensors(3, gd, bd)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
