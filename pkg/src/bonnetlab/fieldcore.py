"""Uniform grids, sampled scalar fields, finite differences and norms."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CapacityError, DomainError, ShapeError, StencilError

MAX_NODES_PER_AXIS = 1 << 16
MIN_NODES = 5


def _nodes(lo: float, hi: float, n: int) -> np.ndarray:
    # i/(n-1) is the same rational on every refinement, so nested grids share node bits
    x = lo + (hi - lo) * (np.arange(n) / (n - 1))
    x[-1] = hi
    return x


@dataclass(frozen=True)
class Grid2:
    x1_min: float
    x1_max: float
    n1: int
    x2_min: float
    x2_max: float
    n2: int

    def __post_init__(self):
        if self.n1 < MIN_NODES or self.n2 < MIN_NODES:
            raise DomainError(f"grid needs at least {MIN_NODES} nodes per axis, got {self.n1}x{self.n2}")
        if not (self.x1_max > self.x1_min and self.x2_max > self.x2_min):
            raise DomainError("grid bounds must be increasing")
        if self.n1 > MAX_NODES_PER_AXIS or self.n2 > MAX_NODES_PER_AXIS:
            raise CapacityError(f"node count exceeds {MAX_NODES_PER_AXIS} per axis")

    @property
    def h1(self) -> float:
        return (self.x1_max - self.x1_min) / (self.n1 - 1)

    @property
    def h2(self) -> float:
        return (self.x2_max - self.x2_min) / (self.n2 - 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n1, self.n2)

    @property
    def x1(self) -> np.ndarray:
        return _nodes(self.x1_min, self.x1_max, self.n1)

    @property
    def x2(self) -> np.ndarray:
        return _nodes(self.x2_min, self.x2_max, self.n2)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinate arrays of shape (n1, n2), ``indexing='ij'``."""
        return np.meshgrid(self.x1, self.x2, indexing="ij")

    def spacing(self, axis: int) -> float:
        if axis == 1:
            return self.h1
        if axis == 2:
            return self.h2
        raise ValueError(f"axis must be 1 or 2, got {axis}")


@dataclass(frozen=True)
class Grid3:
    """A Grid2 plus an axis sampling the linear factor value s."""

    grid: Grid2
    sigma_min: float
    sigma_max: float
    n3: int

    def __post_init__(self):
        if self.sigma_min <= 0:
            raise DomainError("sigma_min must be positive: s = 0 is excluded", code="DOMAIN_S_ZERO")
        if self.n3 < MIN_NODES:
            raise DomainError(f"sigma axis needs at least {MIN_NODES} nodes")
        if not self.sigma_max > self.sigma_min:
            raise DomainError("sigma bounds must be increasing")

    @property
    def sigma(self) -> np.ndarray:
        return np.linspace(self.sigma_min, self.sigma_max, self.n3)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.grid.n1, self.grid.n2, self.n3)


@dataclass(frozen=True)
class NormPair:
    linf: float
    l2: float

    def to_json(self) -> dict:
        return {"linf": self.linf, "l2": self.l2}

    @classmethod
    def from_json(cls, obj: dict) -> NormPair:
        return cls(float(obj["linf"]), float(obj["l2"]))


@dataclass(frozen=True, eq=False)
class ScalarField2:
    grid: Grid2
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ShapeError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise DomainError("scalar field contains non-finite values")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, grid: Grid2, c: float) -> ScalarField2:
        return cls(grid, np.full(grid.shape, float(c)))

    @classmethod
    def from_function(cls, grid: Grid2, fn) -> ScalarField2:
        x1, x2 = grid.mesh()
        return cls(grid, np.broadcast_to(fn(x1, x2), grid.shape))

    def _other(self, other):
        if isinstance(other, ScalarField2):
            if other.grid != self.grid:
                raise ShapeError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return ScalarField2(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return ScalarField2(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return ScalarField2(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return ScalarField2(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField2(self.grid, -self.values)


# -- finite differences on raw arrays -------------------------------------

def diff_array(values: np.ndarray, h: float, axis: int, order: int = 2) -> np.ndarray:
    """First derivative along ``axis`` of an array sampled with spacing ``h``.

    Centered stencil of the requested order in the interior, one-sided
    second-order stencils on the boundary. With ``order=4`` the nodes one
    step in from the boundary fall back to the centered second-order stencil.
    """
    if order not in (2, 4):
        raise StencilError(f"unsupported stencil order {order}")
    f = np.moveaxis(np.asarray(values, dtype=float), axis, 0)
    n = f.shape[0]
    if n < (3 if order == 2 else 5):
        raise StencilError(f"{n} nodes is too few for an order-{order} stencil")
    d = np.empty_like(f)
    d[1:-1] = (f[2:] - f[:-2]) / (2 * h)
    if order == 4:
        d[2:-2] = (-f[4:] + 8 * f[3:-1] - 8 * f[1:-3] + f[:-4]) / (12 * h)
    d[0] = (-3 * f[0] + 4 * f[1] - f[2]) / (2 * h)
    d[-1] = (3 * f[-1] - 4 * f[-2] + f[-3]) / (2 * h)
    return np.moveaxis(d, 0, axis)


def diff2_array(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Second derivative along ``axis``; second order everywhere."""
    f = np.moveaxis(np.asarray(values, dtype=float), axis, 0)
    if f.shape[0] < 4:
        raise StencilError("second derivative needs at least 4 nodes")
    d = np.empty_like(f)
    d[1:-1] = (f[2:] - 2 * f[1:-1] + f[:-2]) / h**2
    d[0] = (2 * f[0] - 5 * f[1] + 4 * f[2] - f[3]) / h**2
    d[-1] = (2 * f[-1] - 5 * f[-2] + 4 * f[-3] - f[-4]) / h**2
    return np.moveaxis(d, 0, axis)


def partial(f: ScalarField2, axis: int, order: int = 2) -> ScalarField2:
    """Coordinate derivative of ``f`` along x1 (``axis=1``) or x2 (``axis=2``)."""
    return ScalarField2(f.grid, diff_array(f.values, f.grid.spacing(axis), axis - 1, order))


def partial2(f: ScalarField2, axis: int) -> ScalarField2:
    return ScalarField2(f.grid, diff2_array(f.values, f.grid.spacing(axis), axis - 1))


def grid_refine(grid: Grid2, factor: int) -> Grid2:
    if factor < 2:
        raise DomainError("refinement factor must be at least 2", code="REFINE_FACTOR")
    n1 = (grid.n1 - 1) * factor + 1
    n2 = (grid.n2 - 1) * factor + 1
    if max(n1, n2) > MAX_NODES_PER_AXIS:
        raise CapacityError(f"refined grid would need {max(n1, n2)} nodes per axis")
    return Grid2(grid.x1_min, grid.x1_max, n1, grid.x2_min, grid.x2_max, n2)


def array_norms(values: np.ndarray, interior_only: bool = False) -> NormPair:
    """L-infinity and RMS norms; the first two axes are (x1, x2)."""
    v = np.asarray(values, dtype=float)
    if interior_only:
        v = v[1:-1, 1:-1]
    if v.size == 0:
        raise DomainError("no nodes left to take a norm over")
    a = np.abs(v).ravel()
    return NormPair(float(a.max()), float(math.sqrt(np.dot(a, a) / a.size)))


def field_norms(field: ScalarField2, interior_only: bool = False) -> NormPair:
    return array_norms(field.values, interior_only)


# -- separable fields: base(x1, x2) * s**power ------------------------------

@dataclass(frozen=True, eq=False)
class SeparableField:
    """Value at (x1, x2, s) is ``base(x1, x2) * s**s_power``.

    Every quantity built from the fundamental tensors is a monomial in the
    linear factor s, so derivatives along s are taken exactly by the power
    rule while x1, x2 derivatives use finite differences on ``base``.
    """

    base: ScalarField2
    s_power: int = 0

    @property
    def grid(self) -> Grid2:
        return self.base.grid

    def at(self, sigma) -> np.ndarray:
        """Values on (n1, n2, len(sigma)), or (n1, n2) for scalar sigma."""
        sigma = np.asarray(sigma, dtype=float)
        if sigma.ndim == 0:
            return self.base.values * float(sigma) ** self.s_power
        return self.base.values[:, :, None] * sigma[None, None, :] ** self.s_power

    def __mul__(self, other):
        if isinstance(other, SeparableField):
            return SeparableField(self.base * other.base, self.s_power + other.s_power)
        return SeparableField(self.base * other, self.s_power)

    __rmul__ = __mul__

    def __neg__(self):
        return SeparableField(-self.base, self.s_power)

    def _same_power(self, other: SeparableField):
        if self.s_power != other.s_power:
            if np.all(other.base.values == 0):
                return other.base * 0.0
            if np.all(self.base.values == 0):
                return None
            raise ShapeError(f"cannot add s-powers {self.s_power} and {other.s_power}")
        return other.base

    def __add__(self, other: SeparableField):
        b = self._same_power(other)
        if b is None:
            return other
        return SeparableField(self.base + b, self.s_power)

    def __sub__(self, other: SeparableField):
        return self + (-other)

    def d_s(self) -> SeparableField:
        """Exact derivative with respect to s."""
        return SeparableField(self.base * float(self.s_power), self.s_power - 1)


def separable_norms(f: SeparableField, sigma=None, interior_only: bool = False) -> NormPair:
    """Norms of a separable field over the (x1, x2[, sigma]) nodes."""
    values = f.base.values if sigma is None or f.s_power == 0 else f.at(sigma)
    return array_norms(values, interior_only)


# -- CSV interchange -------------------------------------------------------

_HEADER = re.compile(
    r"#\s*grid\s+n1=(\d+)\s+n2=(\d+)\s+x1=\[([^,\]]+),([^\]]+)\]\s+x2=\[([^,\]]+),([^\]]+)\]"
)


def grid_header(grid: Grid2) -> str:
    return (
        f"# grid n1={grid.n1} n2={grid.n2} "
        f"x1=[{grid.x1_min!r},{grid.x1_max!r}] x2=[{grid.x2_min!r},{grid.x2_max!r}]"
    )


def write_field_csv(path, field: ScalarField2, annotations: list[str] = ()) -> None:
    lines = [grid_header(field.grid)]
    lines.extend(f"# {a}" for a in annotations)
    v = field.values
    for i in range(field.grid.n1):
        for j in range(field.grid.n2):
            lines.append(f"{i},{j},{float(v[i, j])!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_field_csv(path) -> tuple[ScalarField2, list[str]]:
    """Read a grid CSV; returns the field and its extra ``#`` annotation lines."""
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text:
        raise DomainError(f"{path}: empty grid file", code="CSV_EMPTY")
    m = _HEADER.match(text[0].strip())
    if m is None:
        raise DomainError(f"{path}: malformed grid header", code="CSV_HEADER")
    n1, n2 = int(m.group(1)), int(m.group(2))
    grid = Grid2(float(m.group(3)), float(m.group(4)), n1, float(m.group(5)), float(m.group(6)), n2)
    annotations = []
    values = np.full((n1, n2), np.nan)
    seen = 0
    for lineno, line in enumerate(text[1:], start=2):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            annotations.append(line[1:].strip())
            continue
        try:
            i, j, v = line.split(",")
            values[int(i), int(j)] = float(v)
        except (ValueError, IndexError) as exc:
            raise DomainError(f"{path}:{lineno}: bad row {line!r}", code="CSV_ROW") from exc
        seen += 1
    if seen != n1 * n2 or np.isnan(values).any():
        raise DomainError(f"{path}: expected {n1 * n2} rows, got {seen}", code="CSV_ROWS")
    return ScalarField2(grid, values), annotations


# -- residual reports ------------------------------------------------------

@dataclass
class ResidualEntry:
    name: str
    full: NormPair
    interior: NormPair | None = None
    tol: float | None = None
    field: np.ndarray | None = None
    note: str = ""

    def norm(self, interior_only: bool = False) -> NormPair:
        if interior_only and self.interior is not None:
            return self.interior
        return self.full

    def passed(self, interior_only: bool = False) -> bool:
        if self.tol is None:
            return True
        return self.norm(interior_only).linf <= self.tol

    def to_json(self, interior_only: bool = False, with_field: bool = True) -> dict:
        out = {"full": self.full.to_json()}
        if self.interior is not None:
            out["interior"] = self.interior.to_json()
        if self.tol is not None:
            out["tol"] = self.tol
        out["passed"] = self.passed(interior_only)
        if self.note:
            out["note"] = self.note
        if with_field and self.field is not None:
            out["field"] = [[float(x) for x in row] for row in np.asarray(self.field)]
        return out

    @classmethod
    def from_json(cls, name: str, obj: dict) -> ResidualEntry:
        return cls(
            name=name,
            full=NormPair.from_json(obj["full"]),
            interior=NormPair.from_json(obj["interior"]) if "interior" in obj else None,
            tol=obj.get("tol"),
            field=np.array(obj["field"], dtype=float) if "field" in obj else None,
            note=obj.get("note", ""),
        )


@dataclass
class ResidualReport:
    """Named residual norms with pass/fail verdicts."""

    entries: dict[str, ResidualEntry] = field(default_factory=dict)
    interior_only: bool = False
    meta: dict = field(default_factory=dict)

    def add(self, name, values, tol=None, note="", keep_field=True, sigma_axis=True) -> ResidualEntry:
        """Record the residual array ``values`` (first two axes x1, x2)."""
        values = np.asarray(values, dtype=float)
        heat = values
        if values.ndim == 3 and sigma_axis:
            heat = np.abs(values).max(axis=2)
        entry = ResidualEntry(
            name,
            array_norms(values),
            array_norms(values, interior_only=True),
            tol,
            heat if keep_field else None,
            note,
        )
        self.entries[name] = entry
        return entry

    def add_scalar(self, name, value, tol=None, note="") -> ResidualEntry:
        v = abs(float(value))
        entry = ResidualEntry(name, NormPair(v, v), NormPair(v, v), tol, None, note)
        self.entries[name] = entry
        return entry

    def merge(self, other: ResidualReport, prefix: str = "") -> ResidualReport:
        for name, e in other.entries.items():
            self.entries[prefix + name] = e
        for k, v in other.meta.items():
            self.meta.setdefault(prefix + k, v)
        return self

    def set_tol(self, tol: float) -> ResidualReport:
        for e in self.entries.values():
            e.tol = tol
        return self

    def __getitem__(self, name) -> ResidualEntry:
        return self.entries[name]

    def __contains__(self, name) -> bool:
        return name in self.entries

    def __iter__(self):
        return iter(self.entries.values())

    def names(self) -> list[str]:
        return list(self.entries)

    @property
    def passed(self) -> bool:
        return all(e.passed(self.interior_only) for e in self.entries.values())

    def failures(self) -> list[str]:
        return [n for n, e in self.entries.items() if not e.passed(self.interior_only)]

    def max_linf(self) -> float:
        return max((e.norm(self.interior_only).linf for e in self.entries.values()), default=0.0)

    def to_json(self, with_fields: bool = True) -> dict:
        return {
            "interior_only": self.interior_only,
            "passed": self.passed,
            "meta": self.meta,
            "residuals": {
                n: e.to_json(self.interior_only, with_fields) for n, e in self.entries.items()
            },
        }

    @classmethod
    def from_json(cls, obj: dict) -> ResidualReport:
        rep = cls(interior_only=bool(obj.get("interior_only", False)), meta=dict(obj.get("meta", {})))
        for name, e in obj["residuals"].items():
            rep.entries[name] = ResidualEntry.from_json(name, e)
        return rep
