"""Command line front end: construct, check, solve, report.

Exit codes: 0 pass, 1 quantitative failure, 2 input or configuration error.
Input errors are printed to stderr as ``{"error": CODE, "message": ...}``.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import exprlang
from .bonnet import (
    BonnetFields,
    FundamentalPair,
    Variant,
    constraint_residuals,
    construct_pair,
    full_check,
    verify_pair,
)
from .errors import BonnetlabError, NoProgress
from .fieldcore import Grid2, Grid3, ResidualReport, ScalarField2, SeparableField, read_field_csv, write_field_csv
from .framegeom import LinearFactor
from .solver import Anchor, SolveConfig, least_squares_solve
from .tensorlab import FundamentalData, detect_anet

EXIT_PASS, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
COMPONENTS = ("g11", "b11", "b22", "b12")
FIELD_NAMES = ("frakH", "frakJ", "theta")

_range3 = {
    "type": "array",
    "prefixItems": [{"type": "number"}, {"type": "number"}, {"type": "integer", "minimum": 5}],
    "minItems": 3,
    "maxItems": 3,
}
_field_def = {
    "oneOf": [
        {"type": "string", "minLength": 1},
        {"type": "object", "properties": {"csv": {"type": "string"}}, "required": ["csv"], "additionalProperties": False},
    ]
}

SCENARIO_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["schema", "name", "n", "case", "grid", "fields"],
    "properties": {
        "schema": {"const": 1},
        "name": {"type": "string"},
        "description": {"type": "string"},
        "n": {"type": "integer", "minimum": 2, "maximum": 8},
        "case": {
            "oneOf": [
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["type", "C"],
                    "properties": {
                        "type": {"const": "one"},
                        "C": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                    },
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["type"],
                    "properties": {"type": {"const": "two"}},
                },
            ]
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "required": ["x1", "x2"],
            "properties": {"x1": _range3, "x2": _range3, "sigma": _range3},
        },
        "fields": {
            "type": "object",
            "additionalProperties": False,
            "required": list(FIELD_NAMES),
            "properties": {k: _field_def for k in FIELD_NAMES},
        },
        "variant": {"enum": [v.value for v in Variant]},
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "check": {"type": "number", "exclusiveMinimum": 0},
                "interior_only": {"type": "boolean"},
            },
        },
        "solve": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "unknowns": {"type": "array", "items": {"enum": list(FIELD_NAMES)}, "uniqueItems": True},
                "anchors": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["node", "field", "value"],
                        "properties": {
                            "node": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
                            "field": {"enum": list(FIELD_NAMES)},
                            "value": {"type": "number"},
                        },
                    },
                },
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "max_iter": {"type": "integer", "minimum": 0},
                "damping": {"type": "number", "exclusiveMinimum": 0},
                "smoothing": {"type": "number", "minimum": 0},
            },
        },
    },
}


class InputError(BonnetlabError):
    pass


# -- scenario loading ----------------------------------------------------------

def _read_json(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"{path}: no such file", code="INPUT_NOT_FOUND")
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})", code="INPUT_JSON") from exc


def load_scenario(path) -> dict:
    sc = _read_json(path)
    try:
        jsonschema.validate(sc, SCENARIO_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise InputError(f"scenario invalid at {where}: {exc.message}", code="SCENARIO_SCHEMA") from exc
    sc["_dir"] = str(Path(path).resolve().parent)
    return sc


def scenario_grids(sc) -> tuple[Grid2, Grid3 | None]:
    g = sc["grid"]
    grid = Grid2(g["x1"][0], g["x1"][1], g["x1"][2], g["x2"][0], g["x2"][1], g["x2"][2])
    if sc["case"]["type"] == "two":
        return grid, None
    if "sigma" not in g:
        raise InputError("Case 1 needs grid.sigma", code="SCENARIO_SIGMA")
    a, b, n3 = g["sigma"]
    return grid, Grid3(grid, a, b, n3)


def _field(sc, name, grid) -> ScalarField2:
    src_def = sc["fields"][name]
    if isinstance(src_def, str):
        return exprlang.sample(exprlang.parse(src_def), grid)
    path = Path(src_def["csv"])
    if not path.is_absolute():
        path = Path(sc["_dir"]) / path
    if not path.is_file():
        raise InputError(f"{path}: no such file", code="INPUT_NOT_FOUND")
    f, _ = read_field_csv(path)
    if f.grid != grid:
        raise InputError(f"{path}: grid does not match the scenario grid", code="CSV_GRID_MISMATCH")
    return f


def scenario_fields(sc) -> BonnetFields:
    grid, grid3 = scenario_grids(sc)
    linfac = LinearFactor(tuple(sc["case"]["C"])) if sc["case"]["type"] == "one" else None
    H, J, th = (_field(sc, k, grid) for k in FIELD_NAMES)
    return BonnetFields(H, J, th, linfac, sc["n"], grid3)


def scenario_solve_config(sc) -> SolveConfig:
    s = sc.get("solve")
    if s is None:
        raise InputError("scenario has no solve section", code="CONFIG_NO_SOLVE")
    kw = {k: s[k] for k in ("tol", "max_iter", "damping", "smoothing") if k in s}
    anchors = [Anchor((a["node"][0], a["node"][1]), a["field"], float(a["value"])) for a in s.get("anchors", [])]
    return SolveConfig(unknowns=tuple(s.get("unknowns", FIELD_NAMES)), anchors=anchors, **kw)


def default_tol(grid: Grid2) -> float:
    return max(1e-10, 10.0 * max(grid.h1, grid.h2) ** 2)


def _grid_meta(grid: Grid2, grid3: Grid3 | None) -> dict:
    out = {"x1": [grid.x1_min, grid.x1_max, grid.n1], "x2": [grid.x2_min, grid.x2_max, grid.n2]}
    if grid3 is not None:
        out["sigma"] = [grid3.sigma_min, grid3.sigma_max, grid3.n3]
    return out


# -- commands ----------------------------------------------------------------

def cmd_construct(args) -> int:
    sc = load_scenario(args.scenario)
    F = scenario_fields(sc)
    variant = args.variant or sc.get("variant", Variant.DERIVATION_CONSISTENT.value)
    pair = construct_pair(F, variant)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for label, fd in (("M", pair.M), ("Mprime", pair.Mprime)):
        for comp in COMPONENTS:
            sf: SeparableField = getattr(fd, comp)
            name = f"{label}_{comp}.csv"
            write_field_csv(out / name, sf.base, [f"component {comp} s_power={sf.s_power}"])
            files.append(name)
    manifest = {
        "schema": 1,
        "name": sc["name"],
        "n": F.n,
        "case": sc["case"],
        "grid": _grid_meta(F.grid, F.grid3),
        "variant": Variant(variant).value,
        "epsilon": F.epsilon,
        "files": files,
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    print(json.dumps({"out": str(out), "files": files + ["manifest.json"]}))
    return EXIT_PASS


def _load_dump(path: Path) -> tuple[FundamentalPair, Grid3 | None, dict]:
    man = _read_json(path / "manifest.json")
    case = man.get("case", {})
    linfac = LinearFactor(tuple(case["C"])) if case.get("type") == "one" else None
    tensors = {}
    grid = None
    for label in ("M", "Mprime"):
        comps = {}
        for comp in COMPONENTS:
            p = path / f"{label}_{comp}.csv"
            if not p.is_file():
                raise InputError(f"{p}: no such file", code="INPUT_NOT_FOUND")
            f, ann = read_field_csv(p)
            power = 0
            for a in ann:
                for tok in a.split():
                    if tok.startswith("s_power="):
                        power = int(tok.split("=", 1)[1])
            comps[comp] = SeparableField(f, power)
            grid = f.grid
        tensors[label] = FundamentalData(man["n"], linfac, epsilon=int(man["epsilon"]), **comps)
    grid3 = None
    if linfac is not None:
        a, b, n3 = man["grid"]["sigma"]
        grid3 = Grid3(grid, a, b, n3)
    return FundamentalPair(tensors["M"], tensors["Mprime"], None, man.get("variant")), grid3, man


def cmd_check(args) -> int:
    src = Path(args.input)
    interior = bool(args.interior_only)
    if src.is_dir():
        pair, grid3, man = _load_dump(src)
        tol = args.tol if args.tol is not None else default_tol(pair.M.grid)
        rep = ResidualReport(interior_only=interior)
        rep.merge(verify_pair(pair, tol=tol, grid3=grid3))
        verdict = detect_anet(pair.M, pair.M.linfac, grid3=grid3)
        rep.add_scalar("anet", 0.0 if verdict.is_anet else 1.0, tol=0.0, note="0 when the chart is an A-net")
        rep.meta.update(name=man.get("name"), source="tensor-dump", anet=verdict.to_json(), grid=_grid_meta(pair.M.grid, grid3))
    else:
        sc = load_scenario(src)
        F = scenario_fields(sc)
        tols = sc.get("tolerances", {})
        tol = args.tol if args.tol is not None else tols.get("check", default_tol(F.grid))
        interior = interior or bool(tols.get("interior_only", False))
        variant = args.variant or sc.get("variant", Variant.DERIVATION_CONSISTENT.value)
        rep = full_check(F, variant, tol, interior)
        rep.meta.update(name=sc["name"], source="scenario", grid=_grid_meta(F.grid, F.grid3))
    rep.meta["tol"] = tol
    text = json.dumps(rep.to_json(), indent=1)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_PASS if rep.passed else EXIT_FAIL


def cmd_solve(args) -> int:
    sc = load_scenario(args.scenario)
    F = scenario_fields(sc)
    config = scenario_solve_config(sc)
    if args.tol is not None:
        config.tol = args.tol
    out = Path(args.out)
    try:
        res = least_squares_solve(config, F)
        status = "converged" if res.converged else "max_iter"
    except NoProgress as exc:
        res = exc.result
        status = exc.code or type(exc).__name__
        print(json.dumps({"error": status, "message": str(exc)}), file=sys.stderr)
        if res is None:
            return EXIT_FAIL
    out.mkdir(parents=True, exist_ok=True)
    for name in FIELD_NAMES:
        write_field_csv(out / f"{name}.csv", getattr(res.fields, name), [f"field {name}"])
    (out / "history.csv").write_text(res.history_csv(), encoding="utf-8")
    rep = constraint_residuals(res.fields, config.tol, interior_only=True)
    rep.meta.update(
        name=sc["name"],
        status=status,
        converged=res.converged,
        iterations=res.iterations,
        final_linf=res.history[-1],
        grid=_grid_meta(F.grid, F.grid3),
    )
    (out / "report.json").write_text(json.dumps(rep.to_json(), indent=1) + "\n", encoding="utf-8")
    print(json.dumps({"status": status, "iterations": res.iterations, "final_linf": res.history[-1]}))
    return EXIT_PASS if res.converged else EXIT_FAIL


# -- SVG heatmaps --------------------------------------------------------------

_RAMP = np.array(
    [
        [0.267, 0.005, 0.329],
        [0.230, 0.322, 0.546],
        [0.128, 0.567, 0.551],
        [0.369, 0.789, 0.383],
        [0.993, 0.906, 0.144],
    ]
)


def _color(t: float) -> str:
    t = min(max(t, 0.0), 1.0) * (len(_RAMP) - 1)
    k = min(int(t), len(_RAMP) - 2)
    c = _RAMP[k] + (t - k) * (_RAMP[k + 1] - _RAMP[k])
    return "#%02x%02x%02x" % tuple(int(round(255 * v)) for v in c)


def heatmap_svg(name: str, values: np.ndarray, grid_meta: dict | None = None, cell: int = 8) -> str:
    """Standalone SVG of a 2D field, x1 down the rows, x2 across, linear scale."""
    v = np.asarray(values, dtype=float)
    if v.ndim == 1:
        v = v[None, :]
    n1, n2 = v.shape
    lo, hi = float(np.min(v)), float(np.max(v))
    span = hi - lo
    w, h = n2 * cell, n1 * cell
    top, pad = 40, 10
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w + 2 * pad}" height="{h + top + 40}" '
        f'viewBox="0 0 {w + 2 * pad} {h + top + 40}">',
        f'<text x="{pad}" y="16" font-family="monospace" font-size="12">{name}</text>',
        f'<text x="{pad}" y="32" font-family="monospace" font-size="11">min={lo:.6e} max={hi:.6e}</text>',
    ]
    for i in range(n1):
        for j in range(n2):
            t = 0.5 if span == 0 or not math.isfinite(span) else (v[i, j] - lo) / span
            out.append(
                f'<rect x="{pad + j * cell}" y="{top + i * cell}" width="{cell}" height="{cell}" fill="{_color(t)}"/>'
            )
    if grid_meta:
        x1, x2 = grid_meta["x1"], grid_meta["x2"]
        out.append(
            f'<text x="{pad}" y="{top + h + 16}" font-family="monospace" font-size="10">'
            f"rows x1 in [{x1[0]}, {x1[1]}], columns x2 in [{x2[0]}, {x2[1]}]</text>"
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _safe(name: str) -> str:
    return "".join(c if c.isalnum() or c in "._-" else "_" for c in name)


def cmd_report(args) -> int:
    p = Path(args.input)
    if not p.is_file():
        raise InputError(f"{p}: no such file", code="INPUT_NOT_FOUND")
    text = p.read_text(encoding="utf-8")
    if not text.strip():
        raise InputError(f"{p}: empty residual file", code="REPORT_EMPTY")
    try:
        rep = ResidualReport.from_json(json.loads(text))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{p}: not a residual report ({exc})", code="REPORT_FORMAT") from exc
    if not rep.entries:
        raise InputError(f"{p}: report has no residuals", code="REPORT_EMPTY")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    grid_meta = rep.meta.get("grid")
    lines = [f"report: {rep.meta.get('name', p.stem)}", f"interior_only: {rep.interior_only}", ""]
    width = max(len(n) for n in rep.entries)
    for name, e in rep.entries.items():
        nrm = e.norm(rep.interior_only)
        verdict = "pass" if e.passed(rep.interior_only) else "FAIL"
        tol = "-" if e.tol is None else f"{e.tol:.3e}"
        lines.append(f"{name:<{width}}  linf={nrm.linf:.6e}  l2={nrm.l2:.6e}  tol={tol}  {verdict}")
        if e.field is not None:
            (out / f"{_safe(name)}.svg").write_text(heatmap_svg(name, e.field, grid_meta), encoding="utf-8")
    lines += ["", f"overall: {'pass' if rep.passed else 'FAIL'}"]
    (out / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print("\n".join(lines))
    return EXIT_PASS if rep.passed else EXIT_FAIL


# -- entry point ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bonnetlab", description="Bonnet hypersurface pairs on grids.")
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("construct", help="build M and its associate from a scenario")
    c.add_argument("scenario")
    c.add_argument("--out", required=True)
    c.add_argument("--variant", choices=[v.value for v in Variant])
    c.set_defaults(func=cmd_construct)

    c = sub.add_parser("check", help="residual report for a scenario or tensor dump")
    c.add_argument("input")
    c.add_argument("--tol", type=float)
    c.add_argument("--interior-only", action="store_true")
    c.add_argument("--variant", choices=[v.value for v in Variant])
    c.add_argument("--out", help="also write the report JSON here")
    c.set_defaults(func=cmd_check)

    c = sub.add_parser("solve", help="solve the constraints from a scenario's solve section")
    c.add_argument("scenario")
    c.add_argument("--out", required=True)
    c.add_argument("--tol", type=float)
    c.set_defaults(func=cmd_solve)

    c = sub.add_parser("report", help="SVG heatmaps and a text summary of a check report")
    c.add_argument("input")
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_PASS
    try:
        return args.func(args)
    except BonnetlabError as exc:
        code = exc.code or type(exc).__name__
        print(json.dumps({"error": code, "message": str(exc)}), file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
