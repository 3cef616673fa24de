"""Bonnet hypersurface pairs: construction, checks and constraint solving."""

from .bonnet import (
    BonnetFields,
    FundamentalPair,
    Variant,
    associate,
    constraint_residuals,
    construct_pair,
    full_check,
    theorem_roundtrip,
    verify_pair,
)
from .fieldcore import Grid2, Grid3, ResidualReport, ScalarField2
from .framegeom import LinearFactor
from .solver import Anchor, SolveConfig, SolveResult, integrate_mean_field, least_squares_solve, reduce_1d_solve

__version__ = "0.1.0"
