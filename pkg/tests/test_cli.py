"""Command-line harness: exit codes, report shapes, determinism."""

import json
import subprocess
import sys

import pytest

_CLI = [sys.executable, "-m", "slogcensus.cli"]


def _run(*args):
    return subprocess.run(_CLI + list(args), capture_output=True, text=True)


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    docs = {
        "circle_line.json": {
            "vars": ["x1", "x2"],
            "equations": ["x1*x1 + x2*x2 - 1", "x1 - x2"],
            "radius": 2.0,
        },
        "lonely_square.json": {"vars": 1, "equations": ["x1*x1"],
                               "radius": 1.0},
        "phi_level.json": {"vars": 1, "equations": ["phi(x1) - 0.5"]},
        "const_path.json": {"breakpoints": [0.0, 1.0], "steps": 6},
        "circle_formula.json": {
            "vars": 2,
            "dnf": [[{"term": "x1*x1 + x2*x2 - 1", "rel": "="}]],
            "radius": 2.0,
        },
        "broken.json": {"vars": 2, "equations": ["x1 + * x2", "x1"]},
    }
    for name, doc in docs.items():
        (root / name).write_text(json.dumps(doc))
    return root


# ---------------------------------------------------------------------------
# slog-check

def test_slog_check_passes(files):
    out = files / "check.json"
    r = _run("slog-check", "--out", str(out))
    assert r.returncode == 0
    lines = [ln for ln in r.stdout.splitlines() if ln]
    assert len(lines) == 9
    assert all(ln.startswith("PASS") for ln in lines)
    doc = json.loads(out.read_text())
    assert doc["passed"] is True
    assert len(doc["checks"]) == 9


def test_slog_check_rejects_corrupt_seed(files, abel):
    doc = json.loads(abel.to_json())
    doc["coeffs"][2] += 1e-3
    bad = files / "bad_seed.json"
    bad.write_text(json.dumps(doc))
    r = _run("slog-check", "--abel", str(bad))
    assert r.returncode == 1
    assert "FAIL" in r.stdout


def test_slog_check_accepts_saved_seed(files, abel):
    good = files / "good_seed.json"
    abel.save(str(good))
    r = _run("slog-check", "--abel", str(good))
    assert r.returncode == 0


# ---------------------------------------------------------------------------
# eval

def test_eval_value_and_gradient():
    r = _run("eval", "x1*x1 + x2", "--at", "2,3", "--grad")
    assert r.returncode == 0
    doc = json.loads(r.stdout)
    assert doc["value"] == 7.0
    assert doc["gradient"] == [4.0, 1.0]


def test_eval_syntax_error():
    r = _run("eval", "x1 + * x2", "--at", "1,2")
    assert r.returncode == 2
    assert "error" in r.stderr


def test_eval_short_point():
    r = _run("eval", "x1 + x2", "--at", "1")
    assert r.returncode == 2


# ---------------------------------------------------------------------------
# zeros

def test_zeros_certified(files):
    r = _run("zeros", str(files / "circle_line.json"))
    assert r.returncode == 0
    doc = json.loads(r.stdout)
    assert doc["report"]["certified_count"] == 2
    assert doc["radius_source"] == "file"


def test_zeros_radius_flag_overrides(files):
    r = _run("zeros", str(files / "circle_line.json"), "--radius", "3.0")
    doc = json.loads(r.stdout)
    assert doc["radius"] == 3.0
    assert doc["radius_source"] == "flag"


def test_zeros_growth_radius(files):
    r = _run("zeros", str(files / "phi_level.json"))
    assert r.returncode == 0
    doc = json.loads(r.stdout)
    assert doc["radius_source"] == "growth"
    assert doc["report"]["certified_count"] == 1


def test_zeros_singular_exits_three(files):
    r = _run("zeros", str(files / "lonely_square.json"))
    assert r.returncode == 3
    doc = json.loads(r.stdout)
    assert doc["report"]["certified_count"] == 0
    assert doc["report"]["unknown_boxes"]


def test_zeros_missing_file():
    r = _run("zeros", "/nonexistent/system.json")
    assert r.returncode == 2


def test_zeros_bad_term(files):
    r = _run("zeros", str(files / "broken.json"))
    assert r.returncode == 2


# ---------------------------------------------------------------------------
# track

def test_track_constant(files):
    r = _run("track", str(files / "circle_line.json"),
             str(files / "const_path.json"))
    assert r.returncode == 0
    doc = json.loads(r.stdout)
    assert doc["report"]["verdict"] == "constant"
    assert doc["steps"] == 6


def test_track_steps_flag(files):
    r = _run("track", str(files / "circle_line.json"),
             str(files / "const_path.json"), "--steps", "4")
    doc = json.loads(r.stdout)
    assert doc["steps"] == 4
    assert len(doc["report"]["counts"]) == 5


# ---------------------------------------------------------------------------
# components and gamma

def test_components_circle(files):
    r = _run("components", str(files / "circle_formula.json"))
    assert r.returncode == 0
    doc = json.loads(r.stdout)
    assert doc["report"]["component_bound"] == 2
    assert doc["report"]["critical_count"] == 4
    assert doc["report"]["oracle_components"] == 1


def test_gamma_small(files):
    r = _run("gamma", str(files / "circle_formula.json"),
             "--trials", "2", "--seed", "3")
    assert r.returncode == 0
    doc = json.loads(r.stdout)
    assert doc["report"]["estimate"] == 1
    assert doc["trials"] == 2


# ---------------------------------------------------------------------------
# determinism and version

def test_zeros_byte_identical(files):
    a = files / "za.json"
    b = files / "zb.json"
    ra = _run("zeros", str(files / "circle_line.json"), "--out", str(a))
    rb = _run("zeros", str(files / "circle_line.json"), "--out", str(b))
    assert ra.returncode == rb.returncode == 0
    assert a.read_bytes() == b.read_bytes()
    assert ra.stdout == rb.stdout


def test_version_flag():
    r = _run("--version")
    assert r.returncode == 0
    assert r.stdout.strip()
