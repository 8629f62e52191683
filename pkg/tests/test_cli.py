"""Driver-level tests: configs in, exit codes and deterministic artifacts out.

Everything runs in-process through pqsing.cli.run / main so coverage tools
see it and failures carry tracebacks instead of subprocess noise.
"""
import json
from pathlib import Path

import numpy as np
import pytest

from pqsing.cli import main, run

ROOT = Path(__file__).resolve().parent.parent
SMALL = ROOT / "scripts" / "cfg_small.json"
REFERENCE = ROOT / "scripts" / "cfg_reference.json"


def small_cfg(**sections):
    cfg = json.loads(SMALL.read_text())
    for name, val in sections.items():
        if isinstance(val, dict) and isinstance(cfg.get(name), dict):
            cfg[name] = {**cfg[name], **val}
        else:
            cfg[name] = val
    return cfg


def write_cfg(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def read_csv(path):
    lines = Path(path).read_text().strip().split("\n")
    header = lines[0].split(",")
    data = np.array([[float(x) for x in line.split(",")] for line in lines[1:]])
    return header, data


# ---------------------------------------------------------------- config guard

def test_window_via_main(tmp_path, capsys):
    code = main(["window", "--config", str(SMALL), "--out", str(tmp_path)])
    assert code == 0
    report = json.loads((tmp_path / "window.json").read_text())
    assert report["nonempty"] is True
    assert 0.0 < report["lambda_star"] < report["lambda_upper"]
    assert report["midpoint"] == pytest.approx(
        0.5 * (report["lambda_star"] + report["lambda_upper"]))
    # the same report goes to stdout
    assert json.loads(capsys.readouterr().out) == report


@pytest.mark.parametrize("mangle", [
    {"schema": "v2"},                                   # wrong schema tag
    {"extra_section": {}},                              # unknown top level key
    {"params": {"p": True}},                            # bool is not a number
    {"params": {"smoothness": 3.0}},                    # unknown param key
    {"params": {"dim": 2.5}},                           # non-integer dimension
    {"grid": {"n": 4}},                                 # grid too coarse
    {"seed": 1.5},                                      # fractional seed
    {"nonlinearity": {"kind": "mystery"}},              # unsupported family
    {"tolerances": {"solver": None}},                   # null where number due
])
def test_config_rejections_exit_2(tmp_path, mangle, capsys):
    path = write_cfg(tmp_path, small_cfg(**mangle))
    assert run("window", path, out=str(tmp_path)) == 2
    capsys.readouterr()


def test_missing_or_broken_file_exit_2(tmp_path, capsys):
    assert run("window", str(tmp_path / "nope.json"), out=str(tmp_path)) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2, 3]")
    assert run("window", str(bad), out=str(tmp_path)) == 2
    bad.write_text("{not json")
    assert run("window", str(bad), out=str(tmp_path)) == 2
    capsys.readouterr()


def test_missing_sections_exit_2(tmp_path, capsys):
    cfg = small_cfg()
    del cfg["nonlinearity"]
    assert run("window", write_cfg(tmp_path, cfg), out=str(tmp_path)) == 2
    capsys.readouterr()


def test_unknown_command_exit_2(tmp_path, capsys):
    assert run("frobnicate", str(SMALL), out=str(tmp_path)) == 2
    capsys.readouterr()


def test_negative_lambda_flag_exit_2(tmp_path, capsys):
    assert run("window", str(SMALL), out=str(tmp_path), lam=-0.1) == 2
    capsys.readouterr()


def test_empty_window_exit_1(tmp_path, capsys):
    # theta1 above the capped ceiling leaves no admissible theta at all
    cfg = small_cfg(nonlinearity={"theta1": 880.0})
    code = run("window", write_cfg(tmp_path, cfg), out=str(tmp_path))
    assert code == 1
    out = json.loads(capsys.readouterr().out)
    assert out["kind"] == "empty_window"


def test_bad_theta_override_exit_2(tmp_path, capsys):
    cfg = small_cfg(window={"theta": 880.0})   # beyond min(theta2, F(theta2))
    assert run("window", write_cfg(tmp_path, cfg), out=str(tmp_path)) == 2
    capsys.readouterr()


# ---------------------------------------------------------------- commands

def test_radial_lambda_resolution(tmp_path, capsys):
    # flag beats config value beats window midpoint
    cfg = small_cfg(params={"lambda": 0.05})
    path = write_cfg(tmp_path, cfg)
    assert run("radial", path, out=str(tmp_path / "a")) == 0
    assert json.loads((tmp_path / "a" / "radial.json").read_text())["lambda"] == 0.05
    assert run("radial", path, out=str(tmp_path / "b"), lam=0.2) == 0
    assert json.loads((tmp_path / "b" / "radial.json").read_text())["lambda"] == 0.2
    assert run("radial", str(SMALL), out=str(tmp_path / "c")) == 0
    rep = json.loads((tmp_path / "c" / "radial.json").read_text())
    assert rep["lambda"] == pytest.approx(0.15825952111377303, rel=1e-12)
    header, data = read_csv(tmp_path / "c" / "radial.csv")
    assert header == ["r", "phi", "phi_prime", "v", "v_prime"]
    assert data.shape == (257, 5)
    assert data[0, 0] == 0.0 and data[-1, 0] == 1.0
    assert data[-1, 1] == 0.0                     # phi vanishes on the boundary
    capsys.readouterr()


def test_solve_small_all_green(tmp_path, capsys):
    code = run("solve", str(SMALL), out=str(tmp_path))
    assert code == 0
    rep = json.loads((tmp_path / "solve.json").read_text())
    assert rep["all_passed"] is True
    assert rep["from_lower"]["converged"] and rep["from_upper"]["converged"]
    assert rep["from_lower"]["monotone"] and rep["from_upper"]["monotone"]
    assert rep["distinctness"] is True
    assert rep["gap"] >= 0.1 * 1.0
    # descending leg needed a positive shift, ascending leg did not
    assert rep["from_upper"]["khat"] > 0.0
    assert rep["from_lower"]["khat"] == 0.0
    assert rep["third_solution"]["found_distinct"] in (True, False)
    for name in ("solution_lower.csv", "solution_upper.csv"):
        header, data = read_csv(tmp_path / name)
        assert header == ["r", "u"]
        assert data.shape == (257, 2)
        assert np.all(np.diff(data[:, 0]) > 0)
        assert data[-1, 1] == 0.0
    capsys.readouterr()


def test_solve_outputs_deterministic(tmp_path, capsys):
    run("solve", str(SMALL), out=str(tmp_path / "a"))
    run("solve", str(SMALL), out=str(tmp_path / "b"))
    for name in ("solve.json", "solution_lower.csv", "solution_upper.csv"):
        assert (tmp_path / "a" / name).read_bytes() == \
               (tmp_path / "b" / name).read_bytes(), name
    capsys.readouterr()


def test_solve_budget_exhaustion_exit_3(tmp_path, capsys):
    # the steep reference problem freezes the descending leg short of its
    # stopping rule (the step falls below one ulp of the huge endpoint)
    code = run("solve", str(REFERENCE), out=str(tmp_path), nodes=512)
    assert code == 3
    rep = json.loads((tmp_path / "solve.json").read_text())
    assert rep["from_lower"]["converged"] is True
    assert rep["from_upper"]["converged"] is False
    assert rep["from_upper"]["monotone"] is True   # stalls, never overshoots
    capsys.readouterr()


def test_pairs_then_certify_roundtrip(tmp_path, capsys):
    assert run("pairs", str(SMALL), out=str(tmp_path)) == 0
    rep = json.loads((tmp_path / "pairs.json").read_text())
    assert rep["all_passed"] is True
    assert set(rep["certificates"]) >= {"sub_u0", "super_u_up", "order_u0_vup"}
    # pairs.csv leads with (r, u0); feeding it back certifies the subsolution
    code = run("certify", str(SMALL), out=str(tmp_path / "c"),
               input_path=str(tmp_path / "pairs.csv"), kind="subsolution")
    assert code == 0
    cert = json.loads((tmp_path / "c" / "certify.json").read_text())
    assert cert["certificate"]["passed"] is True
    assert cert["certificate"]["min_margin"] > 0.0
    capsys.readouterr()


def test_certify_zero_profile_exit_1(tmp_path, capsys):
    nodes = np.linspace(0.0, 1.0, 33)
    lines = ["r,u"] + ["%.17g,%.17g" % (r, 0.0) for r in nodes]
    path = tmp_path / "zeros.csv"
    path.write_text("\n".join(lines) + "\n")
    code = run("certify", str(SMALL), out=str(tmp_path),
               input_path=str(path), kind="subsolution")
    assert code == 1
    rep = json.loads((tmp_path / "certify.json").read_text())
    assert rep["certificate"]["passed"] is False
    assert "positivity_loss" in rep["certificate"]
    capsys.readouterr()


def test_certify_input_validation(tmp_path, capsys):
    assert run("certify", str(SMALL), out=str(tmp_path)) == 2   # no --input
    short = tmp_path / "short.csv"
    short.write_text("r,u\n0,1\n1,0\n")
    assert run("certify", str(SMALL), out=str(tmp_path),
               input_path=str(short), kind="subsolution") == 2
    onecol = tmp_path / "onecol.csv"
    onecol.write_text("r\n0\n0.5\n0.75\n1\n")
    assert run("certify", str(SMALL), out=str(tmp_path),
               input_path=str(onecol), kind="subsolution") == 2
    capsys.readouterr()


def test_sweep_rows_ascend(tmp_path, capsys):
    cfg = small_cfg(sweep={"count": 3})
    code = run("sweep", write_cfg(tmp_path, cfg), out=str(tmp_path))
    assert code == 0
    header, data = read_csv(tmp_path / "sweep.csv")
    assert header[0] == "lambda" and header[1] == "all_passed"
    assert data.shape[0] == 3
    assert np.all(np.diff(data[:, 0]) > 0)        # ascending in lambda
    assert np.all(data[:, 1] == 1.0)
    rep = json.loads((tmp_path / "sweep.json").read_text())
    assert rep["all_passed"] is True
    assert data[0, 0] == pytest.approx(rep["lambda_star"], rel=1e-15)
    assert data[-1, 0] == pytest.approx(rep["lambda_upper"], rel=1e-15)
    capsys.readouterr()


def test_barrier_command(tmp_path, capsys):
    code = run("barrier", str(SMALL), out=str(tmp_path))
    assert code == 0
    rep = json.loads((tmp_path / "barrier.json").read_text())
    assert rep["R_tau"] == pytest.approx(0.2, rel=1e-6)
    assert rep["conservation_residual"] <= 1e-6
    assert rep["smallest_exponent"]["passed"] is True
    assert rep["supersolution"]["passed"] is True
    header, data = read_csv(tmp_path / "barrier.csv")
    assert header == ["s", "xi", "xi_prime"]
    assert np.all(data[:, 1] >= 0.0)
    capsys.readouterr()


def test_output_dir_from_config(tmp_path, capsys):
    sub = tmp_path / "artifacts" / "deep"
    cfg = small_cfg(output={"dir": str(sub)})
    assert run("window", write_cfg(tmp_path, cfg)) == 0
    assert (sub / "window.json").exists()
    capsys.readouterr()
