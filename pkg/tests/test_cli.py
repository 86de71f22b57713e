"""Exit codes and output paths of the command line interface."""

import json
import os

import pytest

from mhdvs.cli import main

RUN_CFG = """
[grid]
nx = 16
ny = 16
nz = 9
[physics]
sigma = 0.1
[init]
preset = capillary
amplitude = 1e-4
mode_k1 = 3
mode_k2 = 0
[time]
dt = 0.1
t_end = 6
report_interval = 0.25
[output]
directory = {out}
figures = false
probe_modes = 3,0
[solver]
# nz=9 cannot resolve algebraic residuals below the operator floor
tol = 1e-7
"""

SWEEP_CFG = """
[grid]
nx = 16
ny = 16
nz = 9
[physics]
sigma = 0.1
[init]
preset = stable
amplitude = 1e-3
[time]
dt = 0.05
t_end = 0.2
report_interval = 0.1
[output]
directory = {out}
figures = false
"""


def _write(tmp_path, text):
    p = tmp_path / "run.cfg"
    p.write_text(text.format(out=tmp_path / "out"))
    return str(p)


def test_run_success(tmp_path, capsys):
    code = main(["run", _write(tmp_path, RUN_CFG)])
    assert code == 0
    out = capsys.readouterr().out
    assert "completed" in out
    assert os.path.exists(str(tmp_path / "out" / "series.csv"))


def test_run_missing_config(tmp_path, capsys):
    code = main(["run", str(tmp_path / "nope.cfg")])
    assert code == 2
    assert "config error" in capsys.readouterr().err


def test_run_invalid_config(tmp_path, capsys):
    p = tmp_path / "bad.cfg"
    p.write_text("[grid]\nnx = 7\n")
    assert main(["run", str(p)]) == 2


def test_dispersion_fit(tmp_path, capsys):
    code = main(["dispersion", _write(tmp_path, RUN_CFG), "--mode", "3,0"])
    assert code == 0
    out = capsys.readouterr().out
    assert "omega" in out and "mode (3,0)" in out


def test_dispersion_unprobed_mode(tmp_path, capsys):
    code = main(["dispersion", _write(tmp_path, RUN_CFG), "--mode", "5,5"])
    assert code == 2


def test_sweep_success(tmp_path, capsys):
    code = main(["sweep", _write(tmp_path, SWEEP_CFG),
                 "--sigmas", "0.1,0.01"])
    assert code == 0
    out = capsys.readouterr().out
    assert "d(sigma=0.1, sigma=0.01)" in out
    assert os.path.exists(str(tmp_path / "out" / "sweep.csv"))


def test_sweep_gate_refusal(tmp_path, capsys):
    cfg = SWEEP_CFG.replace("preset = stable", "preset = kh")
    code = main(["sweep", _write(tmp_path, cfg), "--sigmas", "0.1,0.01"])
    assert code == 2
    assert "stability gate" in capsys.readouterr().err


def test_sweep_bad_sigma_list(tmp_path):
    assert main(["sweep", _write(tmp_path, SWEEP_CFG),
                 "--sigmas", "a,b"]) == 2


def test_verify_suite_and_json(tmp_path, capsys):
    jpath = str(tmp_path / "report.json")
    code = main(["verify", "jacobian", "--json", jpath])
    assert code == 0
    out = capsys.readouterr().out
    assert "PASSED" in out
    rep = json.load(open(jpath))
    assert rep["passed"] is True
    assert all(c["passed"] for c in rep["checks"])


def test_verify_unknown_suite(capsys):
    assert main(["verify", "warpdrive"]) == 2
