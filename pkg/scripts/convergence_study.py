"""Refinement study of the Gauss-Codazzi oracle on a round 3-sphere chart.

Prints the interior residual for 33, 65, 129 nodes per axis and the ratio
between successive refinements (about 4 for a second-order scheme).
"""

import argparse

import numpy as np

from bonnetlab.fieldcore import Grid2, ScalarField2, SeparableField
from bonnetlab.tensorlab import ChartTensors, codazzi_general_residual, gauss_general_residual


def sphere(n: int, R: float, lo: float, hi: float) -> ChartTensors:
    g = Grid2(lo, hi, n, lo, hi, n)
    X1, X2 = g.mesh()
    metric = {
        (0, 0): np.full(g.shape, R * R),
        (1, 1): R * R * np.sin(X1) ** 2,
        (2, 2): R * R * np.sin(X1) ** 2 * np.sin(X2) ** 2,
    }
    gd = {k: SeparableField(ScalarField2(g, v), 0) for k, v in metric.items()}
    bd = {k: SeparableField(ScalarField2(g, v / R), 0) for k, v in metric.items()}
    return ChartTensors(3, gd, bd)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--radius", type=float, default=2.0)
    ap.add_argument("--box", type=float, nargs=2, default=(1.0, 2.0))
    ap.add_argument("--nodes", type=int, nargs="+", default=(33, 65, 129))
    a = ap.parse_args()
    prev = None
    print(f"{'n':>5} {'gauss':>12} {'codazzi':>12} {'ratio':>8}")
    for n in a.nodes:
        c = sphere(n, a.radius, *a.box)
        gr = gauss_general_residual(c)["gauss_general"].interior.linf
        cr = codazzi_general_residual(c)["codazzi_general"].interior.linf
        worst = max(gr, cr)
        ratio = f"{prev / worst:8.3f}" if prev else f"{'':>8}"
        print(f"{n:5d} {gr:12.4e} {cr:12.4e} {ratio}")
        prev = worst


if __name__ == "__main__":
    main()
