"""End-to-end checks of the ocitune command-line tool."""

import csv
import json
import os
import subprocess
from pathlib import Path

import pytest
import sympy as sp

ROOT = Path(__file__).resolve().parents[2]
CLI = os.environ.get("OCITUNE_CLI", str(ROOT / "build" / "ocitune"))
CONFIGS = ROOT / "configs"


def run(*args, cwd):
    return subprocess.run([CLI, *map(str, args)], cwd=cwd, capture_output=True, text=True)


def read_batch(path):
    lines = Path(path).read_text().splitlines()
    assert lines[0] == "# ocitune-batch v1"
    body = [l for l in lines if not l.startswith("#")]
    return body[0].split(","), [list(map(float, l.split(","))) for l in body[1:]]


def block_config(**overrides):
    cfg = json.loads((CONFIGS / "block_triangular.json").read_text())
    cfg.update(overrides)
    return cfg


def write(path, obj):
    Path(path).write_text(json.dumps(obj))
    return path


q = sp.symbols("q")


def entry(expr):
    num, den = sp.fraction(sp.cancel(sp.together(expr)))
    lead = sp.Poly(den, q).LC()
    return {
        "num": [float(c / lead) for c in sp.Poly(num, q).all_coeffs()],
        "den": [float(c / lead) for c in sp.Poly(den, q).all_coeffs()],
    }


def ideal_pair():
    g0 = sp.Matrix(
        [
            [(q - sp.Rational(7, 10)) / ((q - sp.Rational(9, 10)) * (q - sp.Rational(4, 5))), 2 / (q - sp.Rational(4, 5))],
            [sp.Rational(5, 4) / (q - sp.Rational(4, 5)), sp.Rational(3, 2) / (q - sp.Rational(4, 5))],
        ]
    )
    t = -sp.Rational(2, 5) * (q - sp.Rational(6, 5)) / ((q - sp.Rational(3, 5)) * (q - sp.Rational(4, 5)))
    td = sp.diag(t, t)
    cd = (g0.inv() * td * (sp.eye(2) - td).inv()).applyfunc(sp.cancel)
    as_grid = lambda m: [[entry(m[i, j]) for j in range(2)] for i in range(2)]
    return {"controller": as_grid(cd), "reference": as_grid(td)}


def test_collect_writes_documented_batch(tmp_path):
    r = run("collect", CONFIGS / "block_triangular.json", "--out", "d.csv", cwd=tmp_path)
    assert r.returncode == 0, r.stderr
    header, rows = read_batch(tmp_path / "d.csv")
    assert header == ["t", "r1", "r2", "u1", "u2", "y1", "y2"]
    assert len(rows) == 1260 and all(len(row) == 7 for row in rows)
    assert [row[0] for row in rows[:3]] == [1.0, 2.0, 3.0]
    manifest = json.loads((tmp_path / "d.csv.manifest.json").read_text())
    assert manifest["artifacts"] == ["d.csv"]
    assert manifest["seeds"] == [1]
    assert len(manifest["config_hash"]) == 16

    again = run("collect", "d.csv.manifest.json", "--out", "e.csv", cwd=tmp_path)
    assert again.returncode == 0, again.stderr
    assert (tmp_path / "d.csv").read_bytes() == (tmp_path / "e.csv").read_bytes()
    other = run("collect", CONFIGS / "block_triangular.json", "--seed", "2", "--out", "f.csv", cwd=tmp_path)
    assert other.returncode == 0
    assert (tmp_path / "d.csv").read_bytes() != (tmp_path / "f.csv").read_bytes()


def test_config_errors_exit_2(tmp_path):
    r = run("collect", "missing.json", "--out", "x.csv", cwd=tmp_path)
    assert r.returncode == 2
    cfg = block_config()
    del cfg["reference_model"]
    r = run("collect", write(tmp_path / "c.json", cfg), "--out", "x.csv", cwd=tmp_path)
    assert r.returncode == 2
    assert "reference_model" in r.stderr
    assert not (tmp_path / "x.csv").exists()
    assert run("collect", cwd=tmp_path).returncode == 2


def test_unstable_initial_loop_exits_3(tmp_path):
    cfg = block_config(initial_controller={"template": "identity", "dim": 2, "gain": -3.0})
    r = run("collect", write(tmp_path / "c.json", cfg), "--out", "x.csv", cwd=tmp_path)
    assert r.returncode == 3
    assert not (tmp_path / "x.csv").exists()


def test_identify_noise_free_matched(tmp_path):
    cfg = write(tmp_path / "c.json", block_config(noise_covariance=[[0, 0], [0, 0]]))
    assert run("collect", cfg, "--out", "d.csv", cwd=tmp_path).returncode == 0
    r = run("identify", cfg, "d.csv", "--out", "rep.json", "--audit-gradient", cwd=tmp_path)
    assert r.returncode == 0, r.stderr
    rep = json.loads((tmp_path / "rep.json").read_text())
    assert rep["jmr"] < 1e-8
    assert abs(rep["z_nm"] - 1.2) < 1e-3
    assert rep["gradient_audit"]["max_relative_deviation"] < 1e-5
    assert len(rep["controller_parameters"]) == 12
    assert set(rep["reference_parameters"]) == {"T11[gain]", "T12[q^1]", "T12[q^0]"}


def test_identify_failure_exits_4(tmp_path):
    cfg = CONFIGS / "block_triangular.json"
    assert run("collect", cfg, "--out", "d.csv", cwd=tmp_path).returncode == 0
    text = (tmp_path / "d.csv").read_text().splitlines()
    cells = text[-1].split(",")
    cells[-1] = "nan"
    text[-1] = ",".join(cells)
    (tmp_path / "bad.csv").write_text("\n".join(text) + "\n")
    r = run("identify", cfg, "bad.csv", "--out", "rep.json", cwd=tmp_path)
    assert r.returncode == 4
    assert run("identify", cfg, "nothere.csv", "--out", "rep.json", cwd=tmp_path).returncode == 2


def test_montecarlo_outputs(tmp_path):
    cfg = CONFIGS / "block_triangular.json"
    r = run("montecarlo", cfg, "--runs", "1", "--out", "one", cwd=tmp_path)
    assert r.returncode == 0, r.stderr
    with open(tmp_path / "one" / "boxplot.csv") as f:
        rows = list(csv.reader(f))
    assert rows[0][:7] == ["metric", "count", "q1", "median", "q3", "lo_whisker", "hi_whisker"]
    for row in rows[1:]:
        assert len(set(row[2:7])) == 1

    for name in ("a", "b"):
        r = run("montecarlo", cfg, "--runs", "3", "--out", name, cwd=tmp_path)
        assert r.returncode == 0, r.stderr
    for f in ("boxplot.csv", "runs.csv", "summary.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    with open(tmp_path / "a" / "runs.csv") as f:
        runs = list(csv.DictReader(f))
    assert [r["seed"] for r in runs] == ["1", "2", "3"]
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["seeds"] == [1, 2, 3]
    assert len(manifest["artifacts"]) == 3


def read_steps(path):
    lines = Path(path).read_text().splitlines()
    assert lines[0] == "# ocitune-step v1"
    assert lines[1] == "t,channel,y_closedloop,y_refmodel"
    out = {}
    for line in lines[2:]:
        t, ch, ycl, ytd = line.split(",")
        out.setdefault(int(ch), []).append((float(ycl), float(ytd)))
    return out


def test_stepresponse_ideal_controller(tmp_path):
    ctrl = write(tmp_path / "ideal.json", ideal_pair())
    r = run("stepresponse", CONFIGS / "block_triangular.json", ctrl, "--out", "s.csv", cwd=tmp_path)
    assert r.returncode == 0, r.stderr
    steps = read_steps(tmp_path / "s.csv")
    assert sorted(steps) == [1, 2] and len(steps[1]) == 120
    assert max(abs(a - b) for ch in steps.values() for a, b in ch) < 1e-8


def test_stepresponse_identified_moves_inverse_response(tmp_path):
    cfg = CONFIGS / "block_triangular.json"
    assert run("collect", cfg, "--out", "d.csv", cwd=tmp_path).returncode == 0
    assert run("identify", cfg, "d.csv", "--out", "rep.json", cwd=tmp_path).returncode == 0
    r = run("stepresponse", cfg, "rep.json", "--out", "s.csv", cwd=tmp_path)
    assert r.returncode == 0, r.stderr
    steps = read_steps(tmp_path / "s.csv")
    y1 = [a for a, _ in steps[1]]
    y2 = [a for a, _ in steps[2]]
    assert min(y1[:10]) < -0.2
    assert min(y2[60:]) > -0.02
    assert y2[-1] > 0.9


def test_stepresponse_unstable_candidate_exits_3(tmp_path):
    bad = {
        "controller": {"template": "identity", "dim": 2, "gain": -5.0},
        "reference": {"template": "identity", "dim": 2, "gain": 0.0},
    }
    r = run("stepresponse", CONFIGS / "block_triangular.json", write(tmp_path / "c.json", bad), "--out", "s.csv", cwd=tmp_path)
    assert r.returncode == 3
    assert not (tmp_path / "s.csv").exists()


def test_audit_command(tmp_path):
    r = run("audit", CONFIGS / "mismatched.json", "--out", "a.json", cwd=tmp_path)
    assert r.returncode == 0, r.stderr
    rep = json.loads((tmp_path / "a.json").read_text())
    assert len(rep["points"]) == 3
    assert rep["max_relative_deviation"] < 1e-5
