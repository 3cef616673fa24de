"""Solve a perturbed constant fixture and print the iteration history and final residuals."""

import argparse
import time
from pathlib import Path

from bonnetlab import full_check, least_squares_solve
from bonnetlab.cli import load_scenario, scenario_fields, scenario_solve_config

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("scenario", nargs="?", default=ROOT / "scenarios" / "perturbed-A.json")
    a = ap.parse_args()
    sc = load_scenario(a.scenario)
    F0 = scenario_fields(sc)
    cfg = scenario_solve_config(sc)
    t0 = time.perf_counter()
    res = least_squares_solve(cfg, F0)
    dt = time.perf_counter() - t0
    print(res.history_csv(), end="")
    print(f"converged={res.converged} iterations={res.iterations} time={dt:.2f}s")
    rep = full_check(res.fields, interior_only=True)
    for name, e in rep.entries.items():
        print(f"{name:<60} interior linf {e.norm(True).linf:.3e}")


if __name__ == "__main__":
    main()
