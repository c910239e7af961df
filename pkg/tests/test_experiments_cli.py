import csv
import math

import pytest

from risisac.cli import main, parse_seeds
from risisac.config_io import parse_config_text
from risisac.experiments import apply_parameter, grid_points
from risisac.scenario import desk_config

SMALL = """\
profile: desk
scenario:
  n_ris_elements: 2
experiment:
  kind: {kind}
  grid:
    {param}: {values}
  schemes: [{schemes}]
  seeds: [0, 1]
  options: {{max_outer: 4}}
"""


def _write(tmp_path, **kw):
    p = tmp_path / "exp.yaml"
    p.write_text(SMALL.format(**kw))
    return p


def _body(path):
    return "".join(l for l in path.read_text().splitlines(True) if not l.startswith("#"))


def test_parse_seeds():
    assert parse_seeds("0-3,7") == [0, 1, 2, 3, 7]
    for bad in ("1,1", "3-1", ""):
        with pytest.raises(Exception):
            parse_seeds(bad)


def test_apply_parameter():
    c = desk_config(target_velocity=(0.0, 30.0))
    assert apply_parameter(c, "speed", 60).target_velocity == pytest.approx((0.0, 60.0))
    v = apply_parameter(c, "direction_deg", 0).target_velocity
    assert v == pytest.approx((30.0, 0.0))
    assert [p[1] for p in apply_parameter(c, "ris_y", 33).ris_positions] == [33.0, 33.0]
    assert apply_parameter(c, "n_ris", 1).ris_positions == [(-12.0, 45.0)]
    assert apply_parameter(c, "qos_gamma_db", 10).qos_gamma == pytest.approx(10.0)
    with pytest.raises(ValueError):
        apply_parameter(c, "n_ris", 5)


def test_grid_product():
    spec = parse_config_text(
        "experiment:\n  kind: power_sweep\n  grid: {total_power: [1.0, 2.0], a_max: [1.0, 3.0]}\n"
    ).experiment
    assert len(grid_points(spec)) == 4


def test_run_writes_reproducible_csv(tmp_path, capsys):
    cfg = _write(tmp_path, kind="power_sweep", param="total_power", values="[40.0]",
                 schemes="proposed, no_ris, radar_only")
    assert main(["run", str(cfg), "--out-dir", str(tmp_path / "a")]) == 0
    assert main(["run", str(cfg), "--out-dir", str(tmp_path / "b"), "--jobs", "2"]) == 0
    a, b = tmp_path / "a" / "results.csv", tmp_path / "b" / "results.csv"
    assert _body(a) == _body(b)
    header = [l for l in a.read_text().splitlines() if l.startswith("#")]
    assert any(l.startswith("# columns: point,total_power,scheme,seed,status,scnr") for l in header)
    assert any(l.startswith("# seeds: 0,1") for l in header)
    assert any(l.startswith("# git: ") for l in header)
    rows = list(csv.DictReader(l for l in a.read_text().splitlines() if not l.startswith("#")))
    assert len(rows) == 6
    assert [(r["scheme"], r["seed"]) for r in rows] == sorted((r["scheme"], r["seed"]) for r in rows)
    for r in rows:
        assert r["status"] == "ok" and not math.isnan(float(r["ber"]))
    assert (tmp_path / "a" / "power_sweep.gp").read_text().startswith("set datafile")
    assert (tmp_path / "a" / "timings.csv").exists()


def test_seed_flag_and_roc(tmp_path):
    cfg = _write(tmp_path, kind="roc", param="speed", values="[30.0]", schemes="proposed")
    assert main(["run", str(cfg), "--out-dir", str(tmp_path), "--seeds", "3"]) == 0
    text = (tmp_path / "roc.csv").read_text()
    assert "# seeds: 3" in text
    assert len([l for l in text.splitlines() if l.startswith("0,")]) == 1  # default p_fa grid


def test_convergence_traces(tmp_path):
    cfg = _write(tmp_path, kind="convergence", param="total_power", values="[50.0]",
                 schemes="proposed")
    assert main(["run", str(cfg), "--out-dir", str(tmp_path), "--seeds", "0"]) == 0
    assert "iteration,scnr_db" in (tmp_path / "traces.csv").read_text()


def test_infeasible_rows_kept(tmp_path):
    cfg = _write(tmp_path, kind="qos_tradeoff", param="qos_gamma_db", values="[120.0]",
                 schemes="proposed")
    assert main(["run", str(cfg), "--out-dir", str(tmp_path), "--seeds", "0"]) == 0
    rows = [l for l in (tmp_path / "results.csv").read_text().splitlines()
            if l and not l.startswith(("#", "point"))]
    assert len(rows) == 1 and ",infeasible," in rows[0]


def test_validate_and_errors(tmp_path, capsys):
    cfg = _write(tmp_path, kind="roc", param="speed", values="[30.0]", schemes="proposed")
    assert main(["validate", str(cfg)]) == 0
    assert "kind: roc" in capsys.readouterr().out
    bad = tmp_path / "bad.yaml"
    bad.write_text("experiment:\n  kind: roc\n  grid: {speed: [1.0]}\n  colour: red\n")
    assert main(["validate", str(bad)]) == 2
    assert "line 4: experiment.colour" in capsys.readouterr().err


def test_oracle_command(capsys):
    assert main(["oracle", "psi-grid"]) == 0
    out = capsys.readouterr().out
    assert "max_phase_err" in out
    with pytest.raises(SystemExit):
        main(["oracle", "unknown"])
