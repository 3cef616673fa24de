"""Solving the master constraints for (frakH, frakJ, theta).

Three routes:

* :func:`integrate_mean_field` integrates frakH from its prescribed gradient
  once theta and frakJ are fixed;
* :func:`reduce_1d_solve` does the same for x1-only profiles;
* :func:`least_squares_solve` runs damped Gauss-Newton (Levenberg-Marquardt)
  on the stacked interior residuals of all three constraints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.integrate
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .bonnet import FIELD_MIN, BonnetFields, constraint_arrays, constraint_residuals
from .errors import ConfigError, IncompatibleGradient, InvariantBreach, NoProgress
from .exprlang import compile_1d, parse, variables
from .fieldcore import Grid2, Grid3, NormPair, ScalarField2, array_norms, diff_array, partial
from .framegeom import LinearFactor
from .tensorlab import _map_slices

FIELDS = ("frakH", "frakJ", "theta")
FD_STEP = 1e-7
DAMPING_MAX = 1e16
DAMPING_MIN = 1e-15


@dataclass(frozen=True)
class Anchor:
    node: tuple[int, int]
    field: str
    value: float


@dataclass
class SolveConfig:
    unknowns: tuple[str, ...] = FIELDS
    anchors: list[Anchor] = field(default_factory=list)
    tol: float = 1e-8
    max_iter: int = 50
    damping: float = 1e-3
    anchor_weight: float = 1.0
    smoothing: float = 0.1
    smoothing_decay: float = 3.0

    def validate(self, grid: Grid2) -> None:
        bad = [u for u in self.unknowns if u not in FIELDS]
        if bad:
            raise ConfigError(f"unknown field(s) {bad}", code="CONFIG_UNKNOWN_FIELD")
        if not self.tol > 0:
            raise ConfigError("tol must be positive", code="CONFIG_TOL")
        if self.smoothing < 0:
            raise ConfigError("smoothing must be non-negative", code="CONFIG_SMOOTHING")
        if self.max_iter < 0:
            raise ConfigError("max_iter must be non-negative", code="CONFIG_MAX_ITER")
        for a in self.anchors:
            if a.field not in FIELDS:
                raise ConfigError(f"anchor on unknown field {a.field!r}", code="CONFIG_UNKNOWN_FIELD")
            i, j = a.node
            if not (0 <= i < grid.n1 and 0 <= j < grid.n2):
                raise ConfigError(f"anchor node {a.node} outside the grid", code="CONFIG_ANCHOR_NODE")
        anchored = {a.field for a in self.anchors}
        missing = [u for u in self.unknowns if u not in anchored]
        if missing:
            raise ConfigError(f"no anchor for unknown field(s) {missing}", code="CONFIG_NO_ANCHOR")


@dataclass
class SolveResult:
    fields: BonnetFields
    history: list[float]
    converged: bool
    iterations: int
    history_l2: list[float] = field(default_factory=list)

    def history_csv(self) -> str:
        rows = ["iteration,linf,l2"]
        for k, (a, b) in enumerate(zip(self.history, self.history_l2)):
            rows.append(f"{k},{a!r},{b!r}")
        return "\n".join(rows) + "\n"


# -- mean-field quadrature --------------------------------------------------

def _cumulative_from(x: np.ndarray, y: np.ndarray, k0: int) -> np.ndarray:
    """Trapezoidal integral of y along the last axis, zero at index k0."""
    c = scipy.integrate.cumulative_trapezoid(y, x, axis=-1, initial=0.0)
    return c - c[..., k0 : k0 + 1]


def mean_field_gradient(theta: ScalarField2, frakJ: ScalarField2):
    sin = np.sin(theta.values)
    if np.any(sin < FIELD_MIN):
        raise ConfigError("sin(theta) too small for the mean-field gradient", code="INVARIANT_THETA_RANGE")
    g1 = -frakJ.values * partial(theta, 1).values / sin
    g2 = frakJ.values * partial(theta, 2).values / sin
    return g1, g2


def integrate_mean_field(theta: ScalarField2, frakJ: ScalarField2, anchor, max_compat: float | None = None):
    """frakH with gradient (-J th_x1 / sin th, J th_x2 / sin th) through an anchor.

    Integrates along the anchor row in x1, then along each column in x2.
    Returns ``(frakH, compat)`` where ``compat`` measures the mixed-partial
    mismatch of the prescribed gradient; a large value means no frakH exists.
    """
    grid = theta.grid
    (i0, j0), value = anchor
    g1, g2 = mean_field_gradient(theta, frakJ)
    row = value + _cumulative_from(grid.x1, g1[:, j0], i0)
    H = row[:, None] + _cumulative_from(grid.x2, g2, j0)
    mixed = diff_array(g1, grid.h2, 1) - diff_array(g2, grid.h1, 0)
    compat = array_norms(mixed)
    if max_compat is not None and compat.linf > max_compat:
        raise IncompatibleGradient(f"gradient is not closed: mixed-partial mismatch {compat.linf:.3g}")
    return ScalarField2(grid, H), compat


def _profile(p, x):
    if callable(p):
        return np.broadcast_to(p(x), x.shape).astype(float)
    if isinstance(p, str):
        p = parse(p)
    vs = variables(p)
    if vs - {"x1"}:
        raise ConfigError("1D profiles may only use x1", code="CONFIG_PROFILE")
    return np.broadcast_to(compile_1d(p, "x1")(x), x.shape).astype(float)


def reduce_1d_solve(
    theta_profile,
    frakJ_profile,
    anchor: float,
    grid: Grid2,
    linfac: LinearFactor | None = None,
    n: int = 3,
    grid3: Grid3 | None = None,
    refine: SolveConfig | None = None,
    interior_only: bool = False,
):
    """Fields depending on x1 alone: frakH' = -frakJ theta' / sin(theta).

    frakH is anchored at the first x1 node and all fields are broadcast
    along x2. Returns ``(fields, constraint_residuals)``; with ``refine``
    the fields are first polished by :func:`least_squares_solve`, which only
    constrains interior nodes, so the report then uses interior norms.
    """
    x = grid.x1
    th = _profile(theta_profile, x)
    J = _profile(frakJ_profile, x)
    sin = np.sin(th)
    if np.any(sin < FIELD_MIN):
        raise ConfigError("sin(theta) too small", code="INVARIANT_THETA_RANGE")
    dth = diff_array(th, grid.h1, 0)
    H = anchor + _cumulative_from(x, -J * dth / sin, 0)

    def bcast(v):
        return ScalarField2(grid, np.repeat(v[:, None], grid.n2, axis=1))

    F = BonnetFields(bcast(H), bcast(J), bcast(th), linfac, n, grid3)
    if refine is not None:
        F = least_squares_solve(refine, F).fields
        interior_only = True
    return F, constraint_residuals(F, interior_only=interior_only)


# -- damped Gauss-Newton -------------------------------------------------------

class _Problem:
    """Residual vector and sparse finite-difference Jacobian for one config."""

    def __init__(self, config: SolveConfig, initial: BonnetFields):
        self.config = config
        self.initial = initial
        self.grid = g = initial.grid
        self.kappa = initial.kappa
        self.base = {
            "frakH": initial.frakH.values.copy(),
            "frakJ": initial.frakJ.values.copy(),
            "theta": initial.theta.values.copy(),
        }
        self.unknowns = [f for f in FIELDS if f in config.unknowns]
        self.nn = g.n1 * g.n2
        self.anchors = [a for a in config.anchors if a.field in self.unknowns]
        self.ni = (g.n1 - 2) * (g.n2 - 2)
        self.m = 3 * self.ni + len(self.anchors)
        self.N = self.nn * len(self.unknowns)
        self.sign = 1.0 if initial.frakJ.values.flat[0] > 0 else -1.0
        self._pattern = self._build_pattern()

    def fields(self, u):
        out = dict(self.base)
        for k, f in enumerate(self.unknowns):
            out[f] = u[k * self.nn : (k + 1) * self.nn].reshape(self.grid.shape)
        return out

    def pack(self):
        return np.concatenate([self.base[f].ravel() for f in self.unknowns]) if self.unknowns else np.zeros(0)

    def residual(self, u):
        f = self.fields(u)
        g = self.grid
        with np.errstate(all="ignore"):
            cs = constraint_arrays(f["frakH"], f["frakJ"], f["theta"], g.h1, g.h2, self.kappa)
        parts = [c[1:-1, 1:-1].ravel() for c in cs]
        w = self.config.anchor_weight
        parts.append(np.array([w * (f[a.field][a.node] - a.value) for a in self.anchors]))
        return np.concatenate(parts)

    def admissible(self, u) -> bool:
        f = self.fields(u)
        H, J, th = f["frakH"], f["frakJ"], f["theta"]
        return bool(
            np.all(np.isfinite(u))
            and np.all(np.abs(H) >= FIELD_MIN)
            and np.all(self.sign * J >= FIELD_MIN)
            and np.all((th > 0) & (th < math.pi))
            and np.all(np.sin(th) >= FIELD_MIN)
        )

    def _build_pattern(self):
        g = self.grid
        n1, n2 = g.n1, g.n2
        rows, cols = [], []
        I, Jn = np.meshgrid(np.arange(n1), np.arange(n2), indexing="ij")
        node = (I * n2 + Jn).ravel()
        I, Jn = I.ravel(), Jn.ravel()
        for di, dj in ((0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)):
            ri, rj = I + di, Jn + dj
            ok = (ri >= 1) & (ri <= n1 - 2) & (rj >= 1) & (rj <= n2 - 2)
            rnode = (ri[ok] - 1) * (n2 - 2) + (rj[ok] - 1)
            for eq in range(3):
                rows.append(eq * self.ni + rnode)
                cols.append(node[ok])
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        all_rows, all_cols = [], []
        for k, f in enumerate(self.unknowns):
            all_rows.append(rows)
            all_cols.append(cols + k * self.nn)
            for a_idx, a in enumerate(self.anchors):
                if a.field == f:
                    all_rows.append(np.array([3 * self.ni + a_idx]))
                    all_cols.append(np.array([k * self.nn + a.node[0] * n2 + a.node[1]]))
        if not all_rows:
            return sp.csc_matrix((self.m, self.N))
        r = np.concatenate(all_rows)
        c = np.concatenate(all_cols)
        P = sp.csc_matrix((np.ones(len(r)), (r, c)), shape=(self.m, self.N))
        P.sum_duplicates()
        P.data[:] = 1.0
        return P

    def curvature_operator(self):
        """Second differences along each axis of every unknown field, boundary rows one-sided."""
        g = self.grid

        def d2(n):
            D = sp.lil_matrix((n, n))
            for k in range(n):
                c = min(max(k, 1), n - 2)
                D[k, c - 1], D[k, c], D[k, c + 1] = 1.0, -2.0, 1.0
            return D.tocsr()

        one = sp.vstack([sp.kron(d2(g.n1), sp.identity(g.n2)), sp.kron(sp.identity(g.n1), d2(g.n2))])
        return sp.block_diag([one] * len(self.unknowns), format="csr")

    def colors(self):
        """Column groups sharing no residual row: (i + 2j) mod 5 per field."""
        g = self.grid
        I, Jn = np.meshgrid(np.arange(g.n1), np.arange(g.n2), indexing="ij")
        color = ((I + 2 * Jn) % 5).ravel()
        for k in range(len(self.unknowns)):
            for c in range(5):
                yield k * self.nn + np.flatnonzero(color == c)

    def jacobian(self, u, r0):
        def column_block(group):
            step = FD_STEP * np.maximum(1.0, np.abs(u[group]))
            up = u.copy()
            up[group] += step
            dr = self.residual(up) - r0
            sub = self._pattern[:, group].tocoo()
            return sub.row, group[sub.col], dr[sub.row] / step[sub.col]

        rows, cols, vals = zip(*_map_slices(column_block, list(self.colors())))
        return sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(self.m, self.N)
        )


def _lm_step(Jm, r, mu, smooth=None):
    """Damped Gauss-Newton step.

    Without ``smooth`` uses the smaller of the two normal systems (the dual
    form gives the minimum-norm step). With ``smooth`` = (lam, D) the step
    also pays lam * |D step|^2, which fixes the directions the constraints
    leave free by preferring low curvature.
    """
    m, N = Jm.shape
    if smooth is not None:
        lam, D = smooth
        A = (Jm.T @ Jm).tocsc()
        scale = max(float(A.diagonal().mean()), 1e-300)
        A = A + (mu * scale) * sp.identity(N, format="csc") + (lam * scale) * (D.T @ D).tocsc()
        return spla.splu(A.tocsc()).solve(-(Jm.T @ r))
    if m <= N:
        A = (Jm @ Jm.T).tocsc()
        scale = max(float(A.diagonal().mean()), 1e-300)
        A = A + (mu * scale) * sp.identity(m, format="csc")
        y = spla.splu(A).solve(-r)
        return Jm.T @ y
    A = (Jm.T @ Jm).tocsc()
    scale = max(float(A.diagonal().mean()), 1e-300)
    A = A + (mu * scale) * sp.identity(N, format="csc")
    return spla.splu(A).solve(-(Jm.T @ r))


def _norms(r):
    if r.size == 0:
        return 0.0, 0.0
    a = np.abs(r)
    return float(a.max()), float(np.sqrt(np.dot(a, a)))


def least_squares_solve(config: SolveConfig, initial: BonnetFields) -> SolveResult:
    """Levenberg-Marquardt on the interior constraint residuals plus anchors.

    A step is accepted only if it keeps the sign invariants, lowers the
    2-norm and does not raise the max-norm, so the recorded history is
    monotone. Raises :class:`NoProgress` when the damping is exhausted above
    ``config.tol`` (and when there is nothing to optimize).
    """
    config.validate(initial.grid)
    prob = _Problem(config, initial)
    u = prob.pack()
    r = prob.residual(u)
    linf, l2 = _norms(r)
    hist, hist2 = [linf], [l2]

    def result(conv, it):
        f = prob.fields(u)
        F = initial.with_values(f["frakH"], f["frakJ"], f["theta"])
        return SolveResult(F, hist, conv, it, hist2)

    if linf <= config.tol:
        return result(True, 0)
    if not prob.unknowns:
        raise NoProgress(f"all fields frozen; residual fixed at {linf:.6g}", result(False, 0))

    mu = config.damping
    smooth = (config.smoothing, prob.curvature_operator()) if config.smoothing > 0 else None
    it = 0
    while it < config.max_iter:
        Jm = prob.jacobian(u, r)
        invariant_rejects = 0
        while True:
            try:
                du = _lm_step(Jm, r, mu, smooth)
            except RuntimeError:
                du = None
            if du is not None:
                un = u + du
                if not prob.admissible(un):
                    invariant_rejects += 1
                else:
                    rn = prob.residual(un)
                    ln, l2n = _norms(rn)
                    if np.isfinite(l2n) and l2n < l2 and ln <= linf:
                        u, r, linf, l2 = un, rn, ln, l2n
                        mu = max(mu / 10.0, DAMPING_MIN)
                        if smooth is not None:
                            smooth = (smooth[0] / config.smoothing_decay, smooth[1])
                        break
            mu *= 10.0
            if mu > DAMPING_MAX:
                res = result(False, it)
                if invariant_rejects:
                    raise InvariantBreach(f"no admissible step keeps the sign invariants (residual {linf:.6g})", res)
                raise NoProgress(f"damping exhausted with residual {linf:.6g}", res)
        it += 1
        hist.append(linf)
        hist2.append(l2)
        if linf <= config.tol:
            return result(True, it)
    return result(False, it)


def solve_norms(result: SolveResult) -> NormPair:
    return NormPair(result.history[-1], result.history_l2[-1] if result.history_l2 else 0.0)
