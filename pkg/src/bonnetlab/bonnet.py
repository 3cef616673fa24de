"""Bonnet pairs from the generating fields (frakH, frakJ, theta).

In an A-net the fundamental tensors of M are

    g11 = g22 = s^2 / (|J| sin th),   g_pp = 1,
    b11 = s (H + J cos th) / (|J| sin th),
    b22 = s (H - J cos th) / (|J| sin th),
    b12 = eps s,                      eps = sgn J,

with s = sum_p C^p x^p (Case 1) or s = 1 (Case 2). The associate M' only
flips b12. Here H, J, th stand for frakH, frakJ, theta, which depend on
(x1, x2) alone.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvariantError, ShapeError
from .fieldcore import (
    Grid3,
    ResidualReport,
    ScalarField2,
    SeparableField,
    diff2_array,
    diff_array,
)
from .framegeom import (
    FrameScalars,
    LinearFactor,
    PrincipalData,
    codazzi_reduced_residuals,
    connection_scalars,
    gauss_reduced_residuals,
    log_t_compatibility,
)
from .tensorlab import (
    FundamentalData,
    codazzi_general_residual,
    detect_anet,
    gauss_general_residual,
    principal_fields,
)

FIELD_MIN = 1e-9
ROUNDTRIP_K = 10.0
REVERSE_DELTA = 0.1
REVERSE_GAUSS_MIN = 0.01


class Variant(str, enum.Enum):
    DERIVATION_CONSISTENT = "derivation-consistent"
    AS_PRINTED = "as-printed"


@dataclass(frozen=True, eq=False)
class BonnetFields:
    """Generating data of a Bonnet pair.

    ``linfac`` selects Case 1 (and then ``grid3`` samples s); ``None`` is Case 2.
    """

    frakH: ScalarField2
    frakJ: ScalarField2
    theta: ScalarField2
    linfac: LinearFactor | None = None
    n: int = 3
    grid3: Grid3 | None = None

    def __post_init__(self):
        if not (self.frakH.grid == self.frakJ.grid == self.theta.grid):
            raise ShapeError("frakH, frakJ and theta must share one grid")
        H, J, th = self.frakH.values, self.frakJ.values, self.theta.values
        if np.any(np.abs(H) < FIELD_MIN):
            raise InvariantError("frakH vanishes somewhere (minimal point)", code="INVARIANT_H_ZERO")
        if np.any(np.abs(J) < FIELD_MIN):
            raise InvariantError("frakJ vanishes somewhere (umbilical point)", code="INVARIANT_J_ZERO")
        if not (np.all(J > 0) or np.all(J < 0)):
            raise InvariantError("frakJ must keep one sign", code="INVARIANT_J_SIGN")
        if np.any(th <= 0) or np.any(th >= math.pi) or np.any(np.sin(th) < FIELD_MIN):
            raise InvariantError("theta must lie in (0, pi)", code="INVARIANT_THETA_RANGE")
        if self.linfac is not None:
            if self.grid3 is None:
                raise ShapeError("Case 1 needs a Grid3 sampling s")
            if self.grid3.grid != self.grid:
                raise ShapeError("Grid3 does not match the field grid")
            if self.linfac.r > self.n:
                raise InvariantError("linear factor needs r <= n", code="INVARIANT_R_GT_N")
        if self.n < 2:
            raise InvariantError("n must be at least 2")

    @property
    def grid(self):
        return self.frakH.grid

    @property
    def epsilon(self) -> int:
        return 1 if self.frakJ.values.flat[0] > 0 else -1

    @property
    def kappa(self) -> float:
        return self.linfac.kappa if self.linfac is not None else 0.0

    @property
    def sigma(self):
        return self.grid3.sigma if self.linfac is not None else None

    def with_values(self, frakH=None, frakJ=None, theta=None) -> BonnetFields:
        g = self.grid
        return replace(
            self,
            frakH=self.frakH if frakH is None else ScalarField2(g, frakH),
            frakJ=self.frakJ if frakJ is None else ScalarField2(g, frakJ),
            theta=self.theta if theta is None else ScalarField2(g, theta),
        )


@dataclass
class FundamentalPair:
    M: FundamentalData
    Mprime: FundamentalData
    provenance: BonnetFields
    variant: Variant = Variant.DERIVATION_CONSISTENT


def construct_pair(F: BonnetFields, variant: Variant | str = Variant.DERIVATION_CONSISTENT) -> FundamentalPair:
    variant = Variant(variant)
    grid = F.grid
    H, J, th = F.frakH.values, F.frakJ.values, F.theta.values
    eps = F.epsilon
    P = np.abs(J) * np.sin(th)
    trig = np.cos(th) if variant is Variant.DERIVATION_CONSISTENT else np.sin(th)
    pg, pb = (2, 1) if F.linfac is not None else (0, 0)

    def sep(v, p):
        return SeparableField(ScalarField2(grid, v), p)

    g11 = sep(1.0 / P, pg)
    b11 = sep((H + J * trig) / P, pb)
    b22 = sep((H - J * trig) / P, pb)
    b12 = sep(np.full(grid.shape, float(eps)), pb)
    M = FundamentalData(F.n, F.linfac, g11, b11, b22, b12, eps)
    return FundamentalPair(M, associate(M), F, variant)


def associate(M: FundamentalData) -> FundamentalData:
    """Same metric, b11 and b22; b12 and epsilon negated."""
    return replace(M, b12=-M.b12, epsilon=-M.epsilon)


# -- master constraints ------------------------------------------------------

def constraint_arrays(H, J, th, h1, h2, kappa):
    """Pointwise residuals of the three master constraints (full arrays).

    c1 = H_x2 / J - th_x2 / sin th
    c2 = H_x1 / J + th_x1 / sin th
    c3 = |J| sin th * lap ln(|J| sin th) - 2 kappa - 2 (H^2 - J^2)
    """
    sin = np.sin(th)
    c1 = diff_array(H, h2, 1) / J - diff_array(th, h2, 1) / sin
    c2 = diff_array(H, h1, 0) / J + diff_array(th, h1, 0) / sin
    P = np.abs(J) * sin
    lp = np.log(P)
    lap = diff2_array(lp, h1, 0) + diff2_array(lp, h2, 1)
    c3 = P * lap - 2.0 * kappa - 2.0 * (H * H - J * J)
    return c1, c2, c3


class ConstraintResiduals(ResidualReport):
    @property
    def c1(self):
        return self.entries["c1"]

    @property
    def c2(self):
        return self.entries["c2"]

    @property
    def c3(self):
        return self.entries["c3"]


def constraint_residuals(F: BonnetFields, tol: float | None = None, interior_only: bool = False) -> ConstraintResiduals:
    g = F.grid
    c1, c2, c3 = constraint_arrays(F.frakH.values, F.frakJ.values, F.theta.values, g.h1, g.h2, F.kappa)
    rep = ConstraintResiduals(interior_only=interior_only)
    rep.add("c1", c1, tol, note="H_x2/J - theta_x2/sin(theta)")
    rep.add("c2", c2, tol, note="H_x1/J + theta_x1/sin(theta)")
    rep.add("c3", c3, tol, note="|J|sin(theta) lap ln(|J|sin(theta)) - 2 kappa - 2(H^2 - J^2)")
    return rep


# -- frame-level views of the construction -----------------------------------

def frame_scalars_from_tensors(M: FundamentalData) -> FrameScalars:
    """k = b11/g11, kbar = b22/g22, t = b12/sqrt(g11 g22) in the coordinate frame."""
    g = M.g11.base.values
    grid = M.grid
    p = M.b11.s_power - M.g11.s_power

    def ratio(b):
        return SeparableField(ScalarField2(grid, b.base.values / g), p)

    return FrameScalars(ratio(M.b11), ratio(M.b22), ratio(M.b12))


def principal_data(F: BonnetFields) -> PrincipalData:
    """H = frakH/s, J = frakJ/s and the principal curvatures k1, k2 = H +- J."""
    p = -1 if F.linfac is not None else 0
    H = SeparableField(F.frakH, p)
    J = SeparableField(F.frakJ, p)
    return PrincipalData(H + J, H - J, H, J, F.theta)


def reduced_checks(F: BonnetFields, M: FundamentalData, tol: float | None = None) -> ResidualReport:
    """Reduced Codazzi, reduced Gauss and log-t checks on constructed tensors."""
    fs = frame_scalars_from_tensors(M)
    cs = connection_scalars(M.g11, M.linfac, M.n)
    pd = principal_data(F)
    rep = ResidualReport()
    rep.merge(codazzi_reduced_residuals(fs, cs, pd, sigma=F.sigma), "codazzi_reduced.")
    rep.merge(gauss_reduced_residuals(fs, cs, pd, sigma=F.sigma), "gauss_reduced.")
    rep.merge(log_t_compatibility(fs, cs, sigma=F.sigma), "log_t.")
    if tol is not None:
        rep.set_tol(tol)
    return rep


def oracle_checks(M: FundamentalData, grid3: Grid3 | None, tol: float | None = None) -> ResidualReport:
    rep = ResidualReport()
    rep.merge(gauss_general_residual(M, grid3, tol))
    rep.merge(codazzi_general_residual(M, grid3, tol))
    return rep


def full_check(
    F: BonnetFields,
    variant: Variant | str = Variant.DERIVATION_CONSISTENT,
    tol: float | None = None,
    interior_only: bool = False,
) -> ResidualReport:
    """Every residual this package knows about for one set of generating fields."""
    pair = construct_pair(F, variant)
    rep = ResidualReport(interior_only=interior_only)
    rep.merge(constraint_residuals(F), "constraints.")
    rep.merge(reduced_checks(F, pair.M))
    rep.merge(oracle_checks(pair.M, F.grid3))
    rep.merge(oracle_checks(pair.Mprime, F.grid3), "associate.")
    verdict = detect_anet(pair.M, F.linfac, grid3=F.grid3)
    rep.add_scalar("anet", 0.0 if verdict.is_anet else 1.0, note="0 when the chart is an A-net")
    if tol is not None:
        rep.set_tol(tol)
        rep["anet"].tol = 0.0
    rep.meta["anet"] = verdict.to_json()
    rep.meta["variant"] = Variant(variant).value
    return rep


# -- pair verification ---------------------------------------------------------

def verify_pair(pair: FundamentalPair, tol: float = 1e-10, grid3: Grid3 | None = None, exact_tol: float = 1e-12) -> ResidualReport:
    """Isometric, mean-curvature preserving and nontrivial, checked numerically.

    (i) metrics bitwise equal; (ii) H equal nodewise; (iii) b differs with
    |delta b12| >= 2 min |b12|; (iv) eigenvalue multisets equal nodewise;
    (v) both tensors pass the Gauss-Codazzi oracle.
    """
    M, Mp = pair.M, pair.Mprime
    if grid3 is None:
        grid3 = pair.provenance.grid3 if pair.provenance is not None else None
    rep = ResidualReport()
    same_g = M.g11.s_power == Mp.g11.s_power and np.array_equal(M.g11.base.values, Mp.g11.base.values) and M.n == Mp.n
    rep.add_scalar("metric_identical", 0.0 if same_g else 1.0, tol=0.0)

    pf = principal_fields(M, grid3)
    pfp = principal_fields(Mp, grid3)
    rep.add("H_equal", pf["H"] - pfp["H"], tol=exact_tol)
    e = np.sort(np.stack([pf["k1"], pf["k2"]]), axis=0)
    ep = np.sort(np.stack([pfp["k1"], pfp["k2"]]), axis=0)
    rep.add("eigenvalues_equal", np.abs(e - ep).max(axis=0), tol=exact_tol)

    sig = grid3.sigma if M.linfac is not None else np.array([1.0])
    b12 = M.b12.at(sig)
    db12 = b12 - Mp.b12.at(sig)
    dmax = float(np.max(np.abs(db12)))
    nontrivial = dmax > 0 and dmax >= 2 * float(np.min(np.abs(b12)))
    rep.add_scalar("nontrivial", 0.0 if nontrivial else 1.0, tol=0.0, note=f"max |delta b12| = {dmax:.6g}")
    rep.merge(oracle_checks(M, grid3, tol), "M.")
    rep.merge(oracle_checks(Mp, grid3, tol), "Mprime.")
    return rep


# -- Theorem round trip ----------------------------------------------------------

def theorem_roundtrip(F: BonnetFields, tol: float | None = None, K: float = ROUNDTRIP_K, interior_only: bool = True) -> ResidualReport:
    """Numerical check of "Bonnet iff A-net" on one set of generating fields.

    Forward: constraint residual eps <= REVERSE_DELTA implies oracle
    residuals <= K (eps + h^2) (or ``tol`` if given) and an A-net chart.
    Reverse probe: eps > REVERSE_DELTA implies the Gauss oracle sees at
    least REVERSE_GAUSS_MIN, i.e. the tensors are not a hypersurface.
    """
    cons = constraint_residuals(F)
    eps = max(e.norm(interior_only).linf for e in cons)
    h = max(F.grid.h1, F.grid.h2)
    pair = construct_pair(F)
    oracle = oracle_checks(pair.M, F.grid3)
    rep = ResidualReport(interior_only=interior_only)
    rep.merge(cons, "constraints.")
    rep.merge(oracle)
    if eps <= REVERSE_DELTA:
        bound = K * (eps + h * h) if tol is None else tol
        for name in ("gauss_general", "codazzi_general"):
            rep[name].tol = bound
        verdict = detect_anet(pair.M, F.linfac, grid3=F.grid3)
        rep.add_scalar("anet", 0.0 if verdict.is_anet else 1.0, tol=0.0)
        rep.meta.update(mode="forward", bound=bound, anet=verdict.to_json())
    else:
        g = rep["gauss_general"].norm(interior_only).linf
        rep.add_scalar("reverse_probe", 0.0 if g >= REVERSE_GAUSS_MIN else 1.0, tol=0.0, note=f"gauss_general linf = {g:.6g}")
        rep.meta.update(mode="reverse")
    rep.meta["constraint_linf"] = eps
    return rep
