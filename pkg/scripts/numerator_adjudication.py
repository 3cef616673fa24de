"""Compare the cos and sin numerators of b11, b22 on the constant fixture.

Only the cos form gives tensors that satisfy the Gauss equation.
"""

import math

from bonnetlab import BonnetFields, Grid2, ScalarField2, Variant, construct_pair
from bonnetlab.tensorlab import codazzi_general_residual, gauss_general_residual


def main():
    g = Grid2(0.0, 1.0, 33, 0.0, 1.0, 33)
    for theta in (math.pi / 2, math.pi / 3):
        F = BonnetFields(
            ScalarField2.constant(g, 1.0),
            ScalarField2.constant(g, 1.0),
            ScalarField2.constant(g, theta),
        )
        for v in Variant:
            M = construct_pair(F, v).M
            gr = gauss_general_residual(M)["gauss_general"].full.linf
            cr = codazzi_general_residual(M)["codazzi_general"].full.linf
            print(f"theta={theta:.4f} {v.value:>22}: gauss {gr:.3e}  codazzi {cr:.3e}")


if __name__ == "__main__":
    main()
