"""Exit-code matrix of the command line: pass / fail / input error per command."""

import contextlib
import io
import json
from pathlib import Path

from bonnetlab.cli import main

from conftest import SCENARIOS


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main([str(a) for a in argv])
    return code, out.getvalue(), err.getvalue()


def cases(tmp: Path):
    """(command, outcome, argv builder, expected exit, expected error code or None)."""
    sc = SCENARIOS
    empty = tmp / "empty.json"
    empty.write_text("")

    def check_report(name):
        path = tmp / f"{name}-check.json"
        run(["check", sc / f"{name}.json", "--out", path])
        return path

    return [
        ("construct", "pass", lambda: ["construct", sc / "example-A.json", "--out", tmp / "cA"], 0, None),
        ("construct", "input", lambda: ["construct", sc / "j-zero.json", "--out", tmp / "cJ"], 2, "INVARIANT_J_ZERO"),
        ("construct", "input", lambda: ["construct", sc / "sigma-crossing-zero.json", "--out", tmp / "cS"], 2, "DOMAIN_S_ZERO"),
        ("check", "pass", lambda: ["check", sc / "example-A.json"], 0, None),
        ("check", "pass", lambda: ["check", sc / "example-B.json"], 0, None),
        ("check", "fail", lambda: ["check", sc / "kappa-violated.json"], 1, None),
        ("check", "fail", lambda: ["check", sc / "as-printed.json"], 1, None),
        ("check", "fail", lambda: ["check", sc / "broken-J.json"], 1, None),
        ("check", "input", lambda: ["check", tmp / "missing.json"], 2, "INPUT_NOT_FOUND"),
        ("solve", "pass", lambda: ["solve", sc / "perturbed-A.json", "--out", tmp / "sP"], 0, None),
        ("solve", "fail", lambda: ["solve", sc / "frozen-infeasible.json", "--out", tmp / "sF"], 1, None),
        ("solve", "input", lambda: ["solve", sc / "missing-anchor.json", "--out", tmp / "sM"], 2, "CONFIG_NO_ANCHOR"),
        ("report", "pass", lambda: ["report", check_report("example-A"), "--out", tmp / "rA"], 0, None),
        ("report", "fail", lambda: ["report", check_report("broken-J"), "--out", tmp / "rB"], 1, None),
        ("report", "input", lambda: ["report", empty, "--out", tmp / "rE"], 2, "REPORT_EMPTY"),
    ]


def run_matrix(tmp: Path):
    rows = []
    for cmd, outcome, argv, want, err_code in cases(tmp):
        code, out, err = run(argv())
        got_err = None
        if code == 2:
            try:
                got_err = json.loads(err.strip().splitlines()[-1])["error"]
            except (ValueError, IndexError, KeyError):
                got_err = "?"
        ok = code == want and (err_code is None or got_err == err_code)
        rows.append(dict(command=cmd, outcome=outcome, expected=want, got=code, error=got_err, ok=ok))
    return rows
