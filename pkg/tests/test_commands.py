import json
import os

import numpy as np
import pytest

from willmore import flow
from willmore.commands import run as run_command
from willmore.commands.converge import cmd_converge, format_table, pivot, table_header, table_rows
from willmore.commands.odecheck import cmd_odecheck
from willmore.commands.run import Run, cmd_run, load_config
from willmore.dgcore import DegreeMap, Discretization
from willmore.exceptions import EXIT_CONFIG, EXIT_OK, EXIT_SOLVER, ConfigError, SolverFailure
from willmore.grid import COPY_TRACE, build_mesh
from willmore.main import main
from willmore.mgsolve import SolveReport
from willmore.presets import PRESETS, preset_names, resolve_config
from willmore.problems.studies import ConvergenceRow
from willmore.utils.output import read_field


def _tiny_ellipse(tmp_path, **overrides):
    raw = {"preset": "ellipse", "n": 16, "final_time": 7.5e-4, "snapshot_times": [0.0, 7.5e-4],
           "output_dir": str(tmp_path)}
    raw.update(overrides)
    return resolve_config(raw)


def _write_config(path, raw):
    with open(path, "w") as f:
        json.dump(raw, f)
    return str(path)


def test_presets_resolve():
    for name in preset_names():
        cfg = resolve_config({"preset": name})
        assert cfg.scenario == PRESETS[name]["scenario"]
    circle = resolve_config({"preset": "circle"})
    assert circle.resolved_eps() == pytest.approx(0.1 * (4.0 / 96) ** 2)
    assert resolve_config({"preset": "singular-h2"}).eps_scaling == "h2"


def test_overrides_win_over_the_preset():
    cfg = resolve_config({"preset": "ellipse", "n": 32, "eps_scaling": "constant", "eps": 0.5})
    assert cfg.n == 32 and cfg.resolved_eps() == 0.5
    assert cfg.semi_axes == [1.2, 0.6]


@pytest.mark.parametrize("raw", [{"preset": "hexagon"}, {"preset": "ellipse", "n": "many"}])
def test_bad_config_is_rejected(raw):
    with pytest.raises(ConfigError):
        resolve_config(raw)


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.json"))
    path = tmp_path / "list.json"
    path.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_config(str(path))


@pytest.mark.parametrize("overrides", [
    {"scenario": "hexagon"},
    {"dim": 1},
    {"eps": -1.0},
    {"snapshot_times": [1.0]},
    {"tableau": "rk4"},
])
def test_invalid_runs_fail_before_any_output(tmp_path, overrides):
    with pytest.raises(ConfigError):
        cmd_run(_tiny_ellipse(tmp_path, **overrides))
    assert not os.path.exists(tmp_path / "report.json")


def test_main_maps_config_errors_to_exit_codes(tmp_path):
    bad = _write_config(tmp_path / "bad.json", {"preset": "hexagon"})
    assert main(["run", "--config", bad]) == EXIT_CONFIG
    ok = _write_config(tmp_path / "ok.json", {"preset": "ellipse", "n": 8, "final_time": 0.0,
                                              "snapshot_times": [0.0]})
    assert main(["run", "--config", ok, "--out", str(tmp_path / "out")]) == EXIT_OK
    assert os.path.exists(tmp_path / "out" / "report.json")


def test_zero_final_time_writes_only_the_initial_snapshot(tmp_path):
    report = cmd_run(_tiny_ellipse(tmp_path, final_time=0.0, snapshot_times=[0.0]))
    assert report.status == "ok" and report.steps == 0
    files = sorted(os.listdir(tmp_path))
    assert [f for f in files if f.startswith("field_")] == ["field_00_t0.000000e+00.csv"]
    assert set(report.manifest) == set(files)
    assert report.diagnostics["snapshots"][0]["regions"] == 1
    assert report.diagnostics["distance_defect"] < 0.05


def test_short_ellipse_run(tmp_path):
    report = cmd_run(_tiny_ellipse(tmp_path))
    assert report.status == "ok"
    assert report.steps == 3
    assert all(np.isfinite(s.energy) for s in report.step_stats)
    assert report.max_mass_rate() < 1e-4
    assert report.step_stats[-1].time == pytest.approx(7.5e-4)
    assert all(len(s.cycles) == 2 for s in report.step_stats)

    with open(tmp_path / "report.json") as f:
        saved = json.load(f)
    assert saved["status"] == "ok"
    assert "history.csv" in saved["manifest"] and "report.json" in saved["manifest"]


def test_runs_are_deterministic(tmp_path):
    cmd_run(_tiny_ellipse(tmp_path / "a"))
    cmd_run(_tiny_ellipse(tmp_path / "b"))
    names = sorted(f for f in os.listdir(tmp_path / "a") if f.endswith(".csv"))
    assert names == sorted(f for f in os.listdir(tmp_path / "b") if f.endswith(".csv"))
    assert "history.csv" in names
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_adaptive_run_matches_uniform_when_every_cell_is_flagged(tmp_path, monkeypatch):
    monkeypatch.setattr(run_command, "assign_degrees",
                        lambda u, h: DegreeMap.uniform(u.space.ncells, 2))
    adaptive = cmd_run(_tiny_ellipse(tmp_path / "a", adaptive=True))
    uniform = cmd_run(_tiny_ellipse(tmp_path / "u", adaptive=False, degree=2))
    np.testing.assert_allclose([s.energy for s in adaptive.step_stats],
                               [s.energy for s in uniform.step_stats], rtol=1e-12)


def test_adaptive_run_uses_fewer_dofs(tmp_path):
    adaptive = cmd_run(_tiny_ellipse(tmp_path / "a", n=32, final_time=2.5e-4, snapshot_times=[]))
    full = 32 * 32 * 9
    assert adaptive.step_stats[0].dofs < full


def test_restart_continues_from_a_dump(tmp_path):
    dt = 2.5e-4
    cmd_run(_tiny_ellipse(tmp_path / "first", final_time=dt, snapshot_times=[dt]))
    dumps = [f for f in os.listdir(tmp_path / "first") if f.startswith("field_")]
    assert len(dumps) == 1

    restarted = cmd_run(_tiny_ellipse(tmp_path / "second", restart_from=str(tmp_path / "first" / dumps[0]),
                                      start_time=dt, final_time=2 * dt, snapshot_times=[2 * dt]))
    straight = cmd_run(_tiny_ellipse(tmp_path / "straight", final_time=2 * dt, snapshot_times=[2 * dt]))
    assert restarted.steps == 1
    assert restarted.step_stats[-1].energy == pytest.approx(straight.step_stats[-1].energy, rel=1e-10)


def test_run_object_lands_on_snapshot_times(tmp_path):
    cfg = _tiny_ellipse(tmp_path, final_time=6e-4, snapshot_times=[0.0, 1e-4, 6e-4])
    run = Run(cfg, str(tmp_path))
    run.evolve()
    times = [snap["time"] for snap in run.report.diagnostics["snapshots"]]
    np.testing.assert_allclose(times, [0.0, 1e-4, 6e-4], atol=1e-15)


def test_odecheck_orders(capsys):
    orders = cmd_odecheck()
    assert 0.9 <= orders["sirk1"] <= 1.1
    assert 1.85 <= orders["sirk2"] <= 2.15
    assert "sirk2" in capsys.readouterr().out


def test_converge_writes_the_table(tmp_path):
    rows = cmd_converge(str(tmp_path), degrees=(1,), columns=(("constant", 1.0),), meshes=(8, 16))
    assert len(rows) == 2
    assert rows[0].l2_order is None and rows[1].l2_order is not None
    assert rows[1].l2 < rows[0].l2
    assert os.path.exists(tmp_path / "convergence.csv")
    table = (tmp_path / "convergence.txt").read_text()
    assert table == format_table(rows)
    assert table.splitlines()[0].split() == ["|", "eps=1"]

    with open(tmp_path / "convergence.csv") as f:
        header = f.readline().strip().split(",")
    assert header == ["degree", "n", "eps=1_l2", "eps=1_l2_order", "eps=1_linf", "eps=1_linf_order"]


def _synthetic_rows():
    rows = []
    for degree in (1, 2):
        for label in ("eps=1", "eps=5h", "eps=5h^2"):
            for i, n in enumerate((16, 32, 64)):
                order = None if i == 0 else 2.0
                rows.append(ConvergenceRow(degree, label, n, 1e-3, 4.0 ** -i, 4.0 ** -i, order, order))
    return rows


def test_table_has_one_line_per_degree_and_mesh():
    rows = _synthetic_rows()
    labels, _ = pivot(rows)
    assert labels == ["eps=1", "eps=5h", "eps=5h^2"]
    assert len(table_header(labels)) == 2 + 12

    body = table_rows(rows)
    assert [tuple(r[:2]) for r in body] == [(1, 16), (1, 32), (1, 64), (2, 16), (2, 32), (2, 64)]
    assert all(len(r) == 14 for r in body)
    assert body[1][2:6] == [0.25, 2.0, 0.25, 2.0]
    assert body[0][3] is None

    lines = format_table(rows).splitlines()
    assert len(lines) == 2 + 6
    assert "eps=5h^2" in lines[0]
    assert lines[3].count("2.00") == 6


def test_truncated_dump_is_a_config_error(tmp_path):
    cmd_run(_tiny_ellipse(tmp_path / "first", final_time=0.0, snapshot_times=[0.0]))
    lines = (tmp_path / "first" / "field_00_t0.000000e+00.csv").read_text().splitlines()
    truncated = tmp_path / "truncated.csv"
    truncated.write_text("\n".join(lines[:len(lines) // 2]) + "\n")

    with pytest.raises(ConfigError):
        read_field(str(truncated), Discretization(build_mesh(2, [0.0, 4.0], 16, COPY_TRACE)))
    config_path = _write_config(tmp_path / "restart.json",
                                {"preset": "ellipse", "n": 16, "final_time": 0.0, "snapshot_times": [0.0],
                                 "restart_from": str(truncated)})
    assert main(["run", "--config", config_path, "--out", str(tmp_path / "second")]) == EXIT_CONFIG


def test_solver_failure_writes_a_failed_report(tmp_path, monkeypatch):
    def failing_solve(*args, **kwargs):
        raise SolverFailure("Stage solve did not converge", SolveReport(iterations=3))

    monkeypatch.setattr(flow, "solve", failing_solve)
    with pytest.raises(SolverFailure):
        cmd_run(_tiny_ellipse(tmp_path))
    with open(tmp_path / "report.json") as f:
        saved = json.load(f)
    assert saved["status"] == "failed"
    assert "did not converge" in saved["error"]

    config_path = _write_config(tmp_path / "cfg.json", {"preset": "ellipse", "n": 16, "final_time": 2.5e-4,
                                                         "snapshot_times": []})
    assert main(["run", "--config", config_path, "--out", str(tmp_path / "cli")]) == EXIT_SOLVER
