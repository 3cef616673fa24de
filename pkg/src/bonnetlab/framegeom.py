"""Frame scalars and the reduced Codazzi/Gauss systems in the bisecting frame.

Fields are :class:`~bonnetlab.fieldcore.SeparableField` values, i.e.
``base(x1, x2) * s**power`` with ``s = C^3 x^3 + ... + C^r x^r``. The frame
derivatives are

* ``E1 f = d_x1 f / sqrt(g11)`` and ``E2 f = d_x2 f / sqrt(g22)`` (finite
  differences on the base),
* ``E_p f = d_xp f = C^p * d_s f`` (exact power rule).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvariantError, MetricError, ShapeError, UmbilicError, VanishingT
from .fieldcore import ResidualReport, ScalarField2, SeparableField, partial

H_MIN = 1e-9
J_MIN = 1e-9
T_MIN = 1e-12


@dataclass(frozen=True)
class LinearFactor:
    """``s = sum_p C^p x^p`` over p = 3..r, with every C^p nonzero."""

    coefficients: tuple[float, ...]

    def __post_init__(self):
        c = tuple(float(x) for x in self.coefficients)
        if not c:
            raise InvariantError("a linear factor needs at least one coefficient")
        if any(x == 0 or not math.isfinite(x) for x in c):
            raise InvariantError("linear factor coefficients must be finite and nonzero", code="INVARIANT_C_ZERO")
        object.__setattr__(self, "coefficients", c)

    @property
    def r(self) -> int:
        return 2 + len(self.coefficients)

    @property
    def kappa(self) -> float:
        return float(sum(c * c for c in self.coefficients))

    def coefficient(self, p: int) -> float:
        """C^p for a 1-based transverse index p >= 3 (zero beyond r)."""
        if p < 3:
            raise IndexError("transverse indices start at 3")
        return self.coefficients[p - 3] if p <= self.r else 0.0

    def value(self, xp) -> np.ndarray:
        """s at points whose transverse coordinates (x^3..x^r) are the last axis of ``xp``."""
        return np.asarray(xp, dtype=float) @ np.asarray(self.coefficients)


@dataclass(frozen=True)
class FrameScalars:
    k: SeparableField
    kbar: SeparableField
    t: SeparableField


@dataclass(frozen=True)
class PrincipalData:
    k1: SeparableField
    k2: SeparableField
    H: SeparableField
    J: SeparableField
    theta: ScalarField2


@dataclass(frozen=True)
class ConnectionScalars:
    h: SeparableField
    hbar: SeparableField
    T: tuple[SeparableField, ...]
    sqrt_g11: SeparableField
    linfac: LinearFactor | None
    n: int

    @property
    def grid(self):
        return self.h.grid


def _as_sep(x, grid=None) -> SeparableField:
    if isinstance(x, SeparableField):
        return x
    if isinstance(x, ScalarField2):
        return SeparableField(x, 0)
    raise TypeError(f"expected a field, got {type(x).__name__}")


def _theta_values(theta):
    if isinstance(theta, SeparableField):
        if theta.s_power != 0:
            raise ShapeError("theta cannot depend on s")
        return theta.base.values
    if isinstance(theta, ScalarField2):
        return theta.values
    return np.asarray(theta, dtype=float)


def _base_values(x):
    if isinstance(x, SeparableField):
        return x.base.values
    if isinstance(x, ScalarField2):
        return x.values
    return np.asarray(x, dtype=float)


def check_principal(H, J, theta) -> None:
    th = _theta_values(theta)
    if np.any(np.abs(_base_values(H)) < H_MIN):
        raise InvariantError("mean curvature vanishes (minimal point)", code="INVARIANT_H_ZERO")
    if np.any(np.abs(_base_values(J)) < J_MIN):
        raise InvariantError("J vanishes (umbilical point)", code="INVARIANT_J_ZERO")
    if np.any(th <= 0) or np.any(th >= math.pi):
        raise InvariantError("theta must lie in (0, pi)", code="INVARIANT_THETA_RANGE")


def frame_scalars(H, J, theta, check: bool = True):
    """k = H + J cos(theta), kbar = H - J cos(theta), t = J sin(theta).

    Accepts floats/arrays or fields; ``H`` and ``J`` must carry the same s-power.
    """
    if check:
        check_principal(H, J, theta)
    th = _theta_values(theta)
    if isinstance(H, (SeparableField, ScalarField2)):
        H, J = _as_sep(H), _as_sep(J)
        grid = H.grid
        cos = ScalarField2(grid, np.cos(th))
        sin = ScalarField2(grid, np.sin(th))
        return FrameScalars(H + J * cos, H - J * cos, J * sin)
    H = np.asarray(H, dtype=float)
    J = np.asarray(J, dtype=float)
    out = (H + J * np.cos(th), H - J * np.cos(th), J * np.sin(th))
    if all(np.ndim(v) == 0 for v in out):
        out = tuple(float(v) for v in out)
    return FrameScalars(*out)


def _fold(d, t):
    J = np.hypot(d, t)
    theta = np.arctan2(t, d)
    neg = theta < 0
    J = np.where(neg, -J, J)
    theta = np.where(neg, theta + math.pi, theta)
    # t == 0 with d < 0 lands exactly on pi; fold it to 0 as well.
    at_pi = theta >= math.pi
    J = np.where(at_pi, -J, J)
    theta = np.where(at_pi, theta - math.pi, theta)
    return J, theta


def principal_from_frame(fs: FrameScalars):
    """Invert :func:`frame_scalars`; returns ``(H, J, theta)`` with theta in [0, pi).

    The sign of J follows the sign of t, which keeps theta in the branch
    where sin(theta) >= 0.
    """
    if isinstance(fs.k, SeparableField):
        k, kb, t = fs.k, fs.kbar, fs.t
        if not (k.s_power == kb.s_power == t.s_power):
            raise ShapeError("frame scalars must share one s-power")
        d = 0.5 * (k.base.values - kb.base.values)
        J, theta = _fold(d, t.base.values)
        if np.any(np.abs(J) < J_MIN):
            raise UmbilicError("J vanishes: umbilical point")
        grid = k.grid
        H = SeparableField(ScalarField2(grid, 0.5 * (k.base.values + kb.base.values)), k.s_power)
        return H, SeparableField(ScalarField2(grid, J), k.s_power), ScalarField2(grid, theta)
    k, kb, t = (np.asarray(v, dtype=float) for v in (fs.k, fs.kbar, fs.t))
    J, theta = _fold(0.5 * (k - kb), t)
    if np.any(np.abs(J) < J_MIN):
        raise UmbilicError("J vanishes: umbilical point")
    H = 0.5 * (k + kb)
    if np.ndim(H) == 0:
        return float(H), float(J), float(theta)
    return H, J, theta


def bisector_shape_operators(k1: float, k2: float, theta: float, n: int):
    """Shape operators of M and its associate in the bisecting frame E1..En."""
    if n < 2:
        raise ValueError("n must be at least 2")
    c, s = math.cos(theta), math.sin(theta)
    L = np.zeros((n, n))
    L[0, 0] = 0.5 * (k1 * (1 + c) + k2 * (1 - c))
    L[1, 1] = 0.5 * (k1 * (1 - c) + k2 * (1 + c))
    L[0, 1] = L[1, 0] = 0.5 * (k1 - k2) * s
    Lp = L.copy()
    Lp[0, 1] = Lp[1, 0] = -L[0, 1]
    return L, Lp


def connection_scalars(g11: SeparableField, linfac: LinearFactor | None, n: int | None = None) -> ConnectionScalars:
    """h, hbar and T_p for a normalized metric g11 = g22, g_pp = 1."""
    if g11.s_power % 2:
        raise MetricError("g11 must carry an even s-power")
    base = g11.base.values
    if np.any(base <= 0):
        raise MetricError("g11 must be positive", code="METRIC_NONPOSITIVE")
    if n is None:
        n = linfac.r if linfac is not None else 3
    grid = g11.grid
    half = g11.s_power // 2
    sqrt_base = ScalarField2(grid, np.sqrt(base))
    log_sqrt = ScalarField2(grid, 0.5 * np.log(base))
    h = SeparableField(ScalarField2(grid, partial(log_sqrt, 2).values / sqrt_base.values), -half)
    hbar = SeparableField(ScalarField2(grid, partial(log_sqrt, 1).values / sqrt_base.values), -half)
    T = []
    for p in range(3, n + 1):
        if linfac is None:
            T.append(SeparableField(ScalarField2.constant(grid, 0.0), 0))
        else:
            T.append(SeparableField(ScalarField2.constant(grid, linfac.coefficient(p)), -1))
    return ConnectionScalars(h, hbar, tuple(T), SeparableField(sqrt_base, half), linfac, n)


# -- frame derivatives ----------------------------------------------------

def _check_grid(cs: ConnectionScalars, *fields):
    for f in fields:
        if f.grid != cs.grid:
            raise ShapeError("fields and connection scalars live on different grids")


def E_i(f: SeparableField, cs: ConnectionScalars, axis: int) -> SeparableField:
    """E1 (axis=1) or E2 (axis=2) applied to ``f``; g11 = g22."""
    d = partial(f.base, axis)
    return SeparableField(ScalarField2(f.grid, d.values / cs.sqrt_g11.base.values), f.s_power - cs.sqrt_g11.s_power)


def E_p(f: SeparableField, cs: ConnectionScalars, p: int) -> SeparableField:
    c = cs.linfac.coefficient(p) if cs.linfac is not None else 0.0
    return f.d_s() * c


def _ep_residual(f: SeparableField, cs: ConnectionScalars, sigma):
    """Stack of E_p(f) + f T_p over p, evaluated at the sigma nodes."""
    parts = [_values(E_p(f, cs, p) + f * T, sigma) for p, T in zip(range(3, cs.n + 1), cs.T)]
    if not parts:
        return _values(f * 0.0, sigma)
    return np.max(np.abs(np.stack(parts)), axis=0)


def _values(f: SeparableField, sigma):
    if sigma is None or cs_is_case2(f):
        return f.base.values
    return f.at(sigma)


def cs_is_case2(f: SeparableField) -> bool:
    return f.s_power == 0


def codazzi_reduced_residuals(fs: FrameScalars, cs: ConnectionScalars, pd: PrincipalData | None = None, sigma=None) -> ResidualReport:
    """The seven reduced Codazzi equations satisfied by a Bonnet hypersurface.

    ``sigma`` lists the s-values to evaluate s-dependent residuals at (Case 1).
    """
    _check_grid(cs, fs.k, fs.kbar, fs.t)
    k, kb, t, h, hb = fs.k, fs.kbar, fs.t, cs.h, cs.hbar
    rep = ResidualReport()
    rep.add("Ep(k)+k*Tp", _ep_residual(k, cs, sigma))
    rep.add("Ep(kbar)+kbar*Tp", _ep_residual(kb, cs, sigma))
    rep.add("Ep(t)+t*Tp", _ep_residual(t, cs, sigma))
    rep.add("E2(k)+(k-kbar)*h", _values(E_i(k, cs, 2) + (k - kb) * h, sigma))
    rep.add("E1(kbar)+(kbar-k)*hbar", _values(E_i(kb, cs, 1) + (kb - k) * hb, sigma))
    rep.add("E1(t)+2t*hbar", _values(E_i(t, cs, 1) + t * hb * 2.0, sigma))
    rep.add("E2(t)+2t*h", _values(E_i(t, cs, 2) + t * h * 2.0, sigma))
    if pd is not None:
        rep.add("k+kbar-2H", _values(k + kb - pd.H * 2.0, sigma))
    return rep


def gauss_reduced_residuals(fs: FrameScalars, cs: ConnectionScalars, pd: PrincipalData | None = None, kappa: float | None = None, sigma=None) -> ResidualReport:
    """First three reduced Gauss equations.

    The remaining ones only involve connection forms among the transverse
    directions, which vanish in the normalized coordinates; the general
    tensor oracle covers them.
    """
    _check_grid(cs, fs.k, fs.kbar, fs.t)
    k, kb, t, h, hb = fs.k, fs.kbar, fs.t, cs.h, cs.hbar
    if kappa is None:
        sumT2 = None
        for T in cs.T:
            sumT2 = T * T if sumT2 is None else sumT2 + T * T
    else:
        p = -2 if cs.linfac is not None else 0
        sumT2 = SeparableField(ScalarField2.constant(cs.grid, kappa), p)
    lhs = E_i(hb, cs, 1) + E_i(h, cs, 2) + h * h + hb * hb
    if sumT2 is not None:
        lhs = lhs + sumT2
    rhs = t * t - k * kb
    rep = ResidualReport()
    rep.add("E1(hbar)+E2(h)+sumTp^2+h^2+hbar^2-(t^2-k*kbar)", _values(lhs - rhs, sigma))
    rep.add("Ep(h)+Tp*h", _ep_residual(h, cs, sigma))
    rep.add("Ep(hbar)+Tp*hbar", _ep_residual(hb, cs, sigma))
    return rep


def log_t_compatibility(fs: FrameScalars, cs: ConnectionScalars, sigma=None) -> ResidualReport:
    """E1(ln|t|) + 2 hbar, E2(ln|t|) + 2 h and E1(h) - E2(hbar)."""
    _check_grid(cs, fs.t)
    tb = fs.t.base.values
    if np.any(np.abs(tb) < T_MIN):
        raise VanishingT("t vanishes on the patch")
    # d/dx^i ln|t| ignores the s-power factor of t.
    log_t = SeparableField(ScalarField2(cs.grid, np.log(np.abs(tb))), 0)
    e1 = E_i(log_t, cs, 1)
    e2 = E_i(log_t, cs, 2)
    rep = ResidualReport()
    rep.add("E1(ln|t|)+2hbar", _values(e1 + cs.hbar * 2.0, sigma))
    rep.add("E2(ln|t|)+2h", _values(e2 + cs.h * 2.0, sigma))
    rep.add("E1(h)-E2(hbar)", _values(E_i(cs.h, cs, 1) - E_i(cs.hbar, cs, 2), sigma))
    return rep
