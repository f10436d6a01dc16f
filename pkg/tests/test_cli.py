import csv
import json
import os
import stat

import numpy as np
import pytest

from ftq.cli import EXIT_BAD_CONFIG, EXIT_BAD_OUTPUT, EXIT_OK, EXIT_UNKNOWN_SCENARIO, main
from ftq.config import ConfigError, load_config, scenario_config
from ftq.export import CSV_COLUMNS, export_csv, read_csv
from ftq.quadmodel import FaultStatus, QuadParams, State
from ftq.simkit import TrajectoryLog, compute_metrics, scenario, simulate

P = QuadParams()
SHORT = ["--scenario", "hover_fail", "--fault-time", "0.5", "--duration", "1.5"]


def test_empty_log_writes_header_only(tmp_path):
    export_csv(TrajectoryLog(), tmp_path / "e.csv")
    lines = (tmp_path / "e.csv").read_text().splitlines()
    assert lines == [",".join(CSV_COLUMNS)]
    assert len(read_csv(tmp_path / "e.csv")) == 0


def test_single_step_hover_row(tmp_path):
    cfg = scenario("hover_fail", fault=FaultStatus(None), duration=4.0)
    log = simulate(cfg)
    one = TrajectoryLog(**{f: getattr(log, f)[:1] for f in
                           ("time", "states", "inputs", "ref_p", "kkt", "solve_ms",
                            "fault_active", "qp_iterations", "u_nmpc")})
    export_csv(one, tmp_path / "one.csv", record_latency=False)
    with (tmp_path / "one.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1
    r = rows[0]
    assert float(r["time_s"]) == 0.0
    for i in range(1, 5):
        assert float(r[f"u_{i}"]) == pytest.approx(P.hover_thrust, abs=1e-6)
    assert r["solve_ms"] == "nan" and r["fault_active"] == "0"
    assert float(r["p_z"]) == 5.0


def test_csv_column_order():
    assert CSV_COLUMNS[:4] == ("time_s", "p_x", "p_y", "p_z")
    assert CSV_COLUMNS[7:11] == ("q_w", "q_x", "q_y", "q_z")
    assert CSV_COLUMNS[-3:] == ("kkt", "solve_ms", "fault_active")
    assert len(CSV_COLUMNS) == 28


def test_csv_roundtrip_reproduces_metrics(tmp_path):
    cfg = scenario("hover_fail", fault=FaultStatus(1, 0.5), duration=2.0)
    log = simulate(cfg)
    export_csv(log, tmp_path / "t.csv")
    back = read_csv(tmp_path / "t.csv")
    np.testing.assert_array_equal(back.states, log.states)
    np.testing.assert_array_equal(back.time, log.time)
    a, b = compute_metrics(log, cfg), compute_metrics(back, cfg)
    assert a == b


# --- config -------------------------------------------------------------------

def test_config_overrides(tmp_path):
    f = tmp_path / "c.json"
    f.write_text(json.dumps({"weights": {"Q_xy": 10.0}, "hover_fail.fault_rotor": 3}))
    cfg = load_config(f, ["indi.enabled=true", "sim.altitude=3"])
    sc = scenario_config(cfg, "hover_fail")
    assert sc.fault.failed_rotor == 3 and sc.use_indi and sc.altitude == 3.0
    assert sc.weights.Q_xy == 10.0 and sc.weights.Q_xy_N == 20.0


@pytest.mark.parametrize("bad", [["nosection=1"], ["quad.bogus=1"], ["quad.mass=-1"],
                                 ["hover_fail.fault_rotor=7"]])
def test_bad_overrides_rejected(bad):
    with pytest.raises(ConfigError):
        scenario_config(load_config(None, bad), "hover_fail")


# --- command line -------------------------------------------------------------

def test_unknown_scenario_exit_code(tmp_path, capsys):
    assert main(["--scenario", "loop_the_loop", "--out-dir", str(tmp_path)]) == EXIT_UNKNOWN_SCENARIO
    assert "unknown scenario" in capsys.readouterr().err


def test_malformed_config_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["--config", str(bad), "--out-dir", str(tmp_path / "o")]) == EXIT_BAD_CONFIG
    assert main(["--set", "quad.mass=oops", "--out-dir", str(tmp_path / "o")]) == EXIT_BAD_CONFIG
    assert main(["--scenario", "hover_fail", "--omega", "1.0", "--out-dir", str(tmp_path / "o")]) == EXIT_BAD_CONFIG
    assert not (tmp_path / "o").exists()


@pytest.mark.skipif(os.geteuid() == 0, reason="root ignores directory permissions")
def test_unwritable_output_exit_code(tmp_path):
    d = tmp_path / "ro"
    d.mkdir()
    d.chmod(stat.S_IRUSR | stat.S_IXUSR)
    try:
        assert main(SHORT + ["--out-dir", str(d / "x")]) == EXIT_BAD_OUTPUT
    finally:
        d.chmod(stat.S_IRWXU)


def test_output_path_is_a_file(tmp_path):
    f = tmp_path / "file"
    f.write_text("")
    assert main(SHORT + ["--out-dir", str(f)]) == EXIT_BAD_OUTPUT


def test_single_run_outputs(tmp_path):
    out = tmp_path / "run"
    assert main(SHORT + ["--out-dir", str(out)]) == EXIT_OK
    for name in ("manifest.json", "trajectory.csv", "metrics.json", "timeseries.png", "xy.png"):
        assert (out / name).stat().st_size > 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["scenario"] == "hover_fail" and man["seed"] == 0
    assert man["config"]["hover_fail"]["fault_time"] == 0.5
    assert "wall_clock_s" not in man
    m = json.loads((out / "metrics.json").read_text())
    assert m["success"] and m["mean_solver_latency"] is None
    assert len(read_csv(out / "trajectory.csv")) == 225


def test_manifest_written_before_simulation(tmp_path, monkeypatch):
    import ftq.cli as cli

    seen = {}

    def boom(cfg):
        seen["manifest"] = (tmp_path / "m" / "manifest.json").exists()
        raise RuntimeError("stop")

    monkeypatch.setattr(cli, "run_scenario", boom)
    with pytest.raises(RuntimeError):
        main(SHORT + ["--out-dir", str(tmp_path / "m")])
    assert seen["manifest"]


def _tree(d):
    return {p.relative_to(d).as_posix(): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()}


def test_outputs_byte_identical(tmp_path):
    args = SHORT + ["--seed", "5", "--indi", "on"]
    main(args + ["--out-dir", str(tmp_path / "a")])
    main(args + ["--out-dir", str(tmp_path / "b")])
    a, b = _tree(tmp_path / "a"), _tree(tmp_path / "b")
    assert a.keys() == b.keys() and a == b


def test_campaign_outputs_byte_identical(tmp_path):
    args = ["--scenario", "random_attitude", "--runs", "2", "--seed", "9", "--duration", "1.0"]
    main(args + ["--out-dir", str(tmp_path / "a")])
    main(args + ["--out-dir", str(tmp_path / "b")])
    a, b = _tree(tmp_path / "a"), _tree(tmp_path / "b")
    assert {"campaign.json", "runs/run_000.csv", "runs/run_001.csv", "manifest.json",
            "altitude_profiles.png", "histograms.png"} <= a.keys()
    assert a == b


def test_record_latency_adds_wall_clock(tmp_path):
    out = tmp_path / "lat"
    main(SHORT + ["--record-latency", "--no-figures", "--out-dir", str(out)])
    man = json.loads((out / "manifest.json").read_text())
    assert man["wall_clock_s"]["simulation"] > 0
    assert not (out / "xy.png").exists()
    log = read_csv(out / "trajectory.csv")
    assert np.all(np.isfinite(log.solve_ms))


def test_runs_requires_random_attitude(tmp_path):
    assert main(["--scenario", "hover_fail", "--runs", "3", "--out-dir", str(tmp_path)]) == EXIT_BAD_CONFIG
