import json

import numpy as np
import pytest

from eptorus import runio
from eptorus.cli import main
from eptorus.diagnostics import BlowupCertificate
from eptorus.dynamics import SimState
from eptorus.spectral import Grid


def _zero_run(tmp_path):
    g = Grid((16, 16), 1.0)
    runio.write_snapshot(SimState(g, 0.0, np.zeros((2, 16, 16))), tmp_path / "zero.snap")
    (tmp_path / "c.cfg").write_text(
        "grid.n = 16,16\nsim.t_end = 0.05\nscenario.initial = zero.snap\n")
    return tmp_path / "c.cfg"


def test_simulate_zero_data(tmp_path):
    cfg = _zero_run(tmp_path)
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    rows = runio.read_series(tmp_path / "o" / "series.csv")
    assert all(r.H == 0.0 for r in rows) and rows[-1].t == 0.05
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["outcome"] == "completed"


def test_simulate_snapshots(tmp_path):
    cfg = _zero_run(tmp_path)
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o"),
                 "--snapshot-every", "2"]) == 0
    assert (tmp_path / "o" / "snap_000000.snap").exists()


def test_usage_errors(capsys):
    assert main(["bogus"]) == 1
    assert "usage" in capsys.readouterr().err
    assert main([]) == 1
    assert main(["simulate"]) == 1


def test_config_errors(tmp_path, capsys):
    (tmp_path / "bad.cfg").write_text("grid.n = 16,16\nsim.cfl = fast\n")
    assert main(["simulate", "--config", str(tmp_path / "bad.cfg")]) == 2
    assert "line 2" in capsys.readouterr().err
    assert main(["simulate", "--config", str(tmp_path / "missing.cfg")]) == 2
    (tmp_path / "nosnap.cfg").write_text("grid.n = 16,16\nsim.t_end = 1\nscenario.initial = x.snap\n")
    assert main(["simulate", "--config", str(tmp_path / "nosnap.cfg")]) == 2
    assert main(["scenario", "blowup2d", "--margin", "5", "--K-max", "4", "--grid", "32",
                 "--out", str(tmp_path / "s")]) == 2


def test_scenario_and_simulate_blowup(tmp_path):
    out = tmp_path / "sc"
    assert main(["scenario", "blowup2d", "--margin", "1.5", "--grid", "64", "--out", str(out)]) == 0
    cert = runio.read_certificate(out / "certificate.json")
    state = runio.read_snapshot(out / "initial.snap")
    again = BlowupCertificate.from_field(state.u, state.grid, cert.direction)
    assert again.g0 == pytest.approx(cert.g0, rel=1e-10)
    assert again.E == pytest.approx(cert.E, rel=1e-10)
    assert again.T_bound == pytest.approx(cert.T_bound, rel=1e-10)
    code = main(["simulate", "--config", str(out / "config.cfg"), "--out", str(tmp_path / "run")])
    assert code == 3
    rep = json.loads((tmp_path / "run" / "report.json").read_text())
    assert rep["outcome"] == "blowup_detected" and rep["t_final"] <= cert.T_bound


def test_trace_command(tmp_path):
    out = tmp_path / "sc"
    main(["scenario", "blowup2d", "--margin", "1.5", "--grid", "32", "--out", str(out)])
    assert main(["trace", "--config", str(out / "config.cfg"), "--out", str(tmp_path / "t")]) == 3
    lines = (tmp_path / "t" / "trace.csv").read_text().splitlines()
    assert lines[0] == "t,x1,x2,g" and len(lines) > 3


def test_besov_command(tmp_path, capsys):
    out = tmp_path / "sc"
    main(["scenario", "peakon", "--grid", "32", "--sigma", "0.05", "--out", str(out)])
    capsys.readouterr()
    assert main(["besov", "--snapshot", str(out / "initial.snap"), "--s", "1"]) == 0
    text = capsys.readouterr().out
    assert "j= -1" in text and "besov(s=1" in text


def test_inflation_scenario(tmp_path, capsys):
    out = tmp_path / "inf"
    assert main(["scenario", "inflation", "--N", "4", "--out", str(out)]) == 0
    assert "hypothesis unmet" in capsys.readouterr().out
    doc = runio.read_config(out / "config.cfg")
    assert doc["grid.n"] == (128, 8)


def test_peakon_check_jobs_deterministic(capsys):
    args = ["peakon-check", "--fields", "2", "--cells", "4,8,16"]
    assert main(args) == 0
    serial = capsys.readouterr().out
    assert main(args + ["--jobs", "2"]) == 0
    assert capsys.readouterr().out == serial
    assert serial.count("\n") == 3
