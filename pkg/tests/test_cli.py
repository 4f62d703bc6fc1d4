import json
import subprocess
import sys
from pathlib import Path

import pytest

from approxc.cli import main

REPO = Path(__file__).resolve().parents[1]


def _write_pi(tmp_path: Path) -> Path:
    p = tmp_path / "pi.ax"
    p.write_text("3.14159265358979323846264338327950288419716939937511\n")
    return p


def test_compile_emits_three_files(tmp_path, capsys):
    p = _write_pi(tmp_path)
    rc = main(["compile", str(p), "--trials", "5"])
    assert rc == 0
    approx = (tmp_path / "pi.approx.ax").read_text().strip()
    assert approx == "3.141592653589793"
    err = (tmp_path / "pi.err.ax").read_text().strip()
    assert err.startswith("(err ") and "/" in err
    doc = json.loads((tmp_path / "pi.derivation.json").read_text())
    assert doc["schema"] == "derivation/v1"
    assert doc["derivation"]["rule"] == "R-Lit"


def test_check_writes_report_and_exits_zero(tmp_path):
    p = _write_pi(tmp_path)
    rc = main(["check", str(p), "--trials", "3", "--json"])
    assert rc == 0
    rep = json.loads((tmp_path / "pi.report.json").read_text())
    assert rep["schema"] == "check-report/v1"
    assert rep["failures"] == []


def test_perforation_flag(tmp_path):
    p = tmp_path / "sum8.ax"
    p.write_text("(redseq +r 8 (lam (i Nat) (nat2real i)))\n")
    rc = main(["check", str(p), "--perforate", "L0=2", "--trials", "100"])
    assert rc == 0
    rep = json.loads((tmp_path / "sum8.report.json").read_text())
    assert rep["passes"] == rep["trials"]
    approx = (tmp_path / "sum8.approx.ax").read_text()
    assert "(*n j 2)" in approx  # every second element


def test_subst_sin_flag(tmp_path):
    p = tmp_path / "s.ax"
    p.write_text("(lam (x Real) (sinr x))\n")
    rc = main(["compile", str(p), "--subst-sin"])
    assert rc == 0
    approx = (tmp_path / "s.approx.ax").read_text()
    assert "sinf" not in approx


def test_byte_identical_outputs_across_runs(tmp_path):
    p1 = tmp_path / "a"
    p2 = tmp_path / "b"
    src = tmp_path / "prog.ax"
    src.write_text("(lam (x Real) (+r (sinr x) x))\n")
    for out in (p1, p2):
        rc = main(["check", str(src), "--out", str(out),
                   "--trials", "25", "--seed", "7"])
        assert rc == 0
    for name in ("prog.approx.ax", "prog.err.ax", "prog.derivation.json",
                 "prog.report.json"):
        assert (p1 / name).read_bytes() == (p2 / name).read_bytes(), name


def test_config_errors_exit_two(tmp_path, capsys):
    rc = main(["compile", str(tmp_path / "missing.ax")])
    assert rc == 2
    bad = tmp_path / "bad.ax"
    bad.write_text("(lam (x Real)")
    rc = main(["compile", str(bad)])
    assert rc == 2
    err = capsys.readouterr().err
    assert "ParseError" in err


def test_bad_perforate_value_exit_two(tmp_path):
    p = _write_pi(tmp_path)
    rc = main(["check", str(p), "--perforate", "L0"])
    assert rc == 2


def test_axioms_subcommand_small(tmp_path):
    rc = main(["axioms", "--trials", "40", "--seed", "42",
               "--out", str(tmp_path), "--json"])
    assert rc == 0
    docs = [json.loads(f.read_text())
            for f in sorted(tmp_path.glob("axioms.*.json"))]
    assert len(docs) == 4
    for d in docs:
        assert all(v["status"] == "pass" for v in d["axioms"].values())


def test_installed_entry_point_runs(tmp_path):
    p = _write_pi(tmp_path)
    proc = subprocess.run(
        [sys.executable, "-m", "approxc.cli", "compile", str(p)],
        capture_output=True, text=True, cwd=str(REPO))
    assert proc.returncode == 0, proc.stderr
