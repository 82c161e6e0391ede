"""Full-size scenario checks. Run with `pytest -m slow`."""

import numpy as np
import pytest

from willmore.commands.run import Run, cmd_run
from willmore.ldg import apply_linear
from willmore.mgsolve import fallback_solve, solve
from willmore.presets import resolve_config
from willmore.problems import diagnostics
from willmore.problems.mms import radius_law
from willmore.problems.studies import EPS_COLUMNS, convergence_study

pytestmark = pytest.mark.slow

# Reference (L2, Linf) errors of the manufactured solution at T = 0.5, the same in every eps column
REFERENCE_ERRORS = {
    (1, 16): (4.16e-3, 3.52e-3), (1, 32): (1.03e-3, 9.07e-4), (1, 64): (2.58e-4, 2.27e-4),
    (2, 16): (2.60e-4, 2.07e-4), (2, 32): (3.25e-5, 2.69e-5), (2, 64): (4.06e-6, 3.40e-6),
}


def test_ellipse_mass_identity_and_energy_decay(tmp_path):
    cfg = resolve_config({"preset": "ellipse", "snapshot_times": [0.1], "output_dir": str(tmp_path)})
    run = Run(cfg, str(tmp_path))
    run.evolve()
    report = run.report
    assert run.t == pytest.approx(0.1)
    assert report.max_mass_rate() <= 1e-9 * run.u.l2_norm() / run.dt
    energies = [s.energy for s in report.step_stats]
    assert all(b <= a * (1 + 1e-8) for a, b in zip(energies[5:], energies[6:]))
    assert all(s.dissipation >= 0 for s in report.step_stats)


def test_circle_follows_the_radius_law(tmp_path):
    cfg = resolve_config({"preset": "circle", "output_dir": str(tmp_path)})
    report = cmd_run(cfg)
    for snap in report.diagnostics["snapshots"]:
        expected = radius_law(1.0, snap["time"])
        assert abs(snap["radius"] - expected) <= 0.02 * expected


def test_adaptive_matches_uniform_within_a_cell(tmp_path):
    raw = {"preset": "ellipse", "final_time": 0.01, "snapshot_times": [0.01]}
    runs = {}
    for name, adaptive in (("adaptive", True), ("uniform", False)):
        cfg = resolve_config({**raw, "adaptive": adaptive, "degree": 2, "output_dir": str(tmp_path / name)})
        run = Run(cfg, str(tmp_path / name))
        run.evolve()
        runs[name] = run
    distance = diagnostics.hausdorff_distance(diagnostics.extract_contour(runs["adaptive"].u),
                                              diagnostics.extract_contour(runs["uniform"].u))
    assert distance <= runs["adaptive"].h
    assert runs["adaptive"].report.total_dofs < runs["uniform"].report.total_dofs


def test_two_squares_merge(tmp_path):
    report = cmd_run(resolve_config({"preset": "two-squares", "output_dir": str(tmp_path)}))
    assert report.steps >= 700
    assert all(np.isfinite(s.energy) for s in report.step_stats)
    regions = [snap["regions"] for snap in report.diagnostics["snapshots"]]
    assert regions[0] == 2
    assert regions[-1] == 1


def test_circle_in_ellipse_pinches_off(tmp_path):
    report = cmd_run(resolve_config({"preset": "circle-in-ellipse", "output_dir": str(tmp_path)}))
    regions = [snap["regions"] for snap in report.diagnostics["snapshots"]]
    assert regions[0] == 1
    assert max(regions[1:]) > 1


def test_multigrid_contracts_on_the_ellipse(tmp_path):
    report = cmd_run(resolve_config({"preset": "ellipse", "final_time": 0.002, "snapshot_times": [],
                                     "output_dir": str(tmp_path)}))
    assert all(max(s.cycles) <= 30 for s in report.step_stats)
    assert np.median([s.contraction for s in report.step_stats]) <= 0.5
    assert not any(s.fallback for s in report.step_stats)


def test_multigrid_matches_the_fallback_on_an_ellipse_stage(tmp_path):
    cfg = resolve_config({"preset": "ellipse", "final_time": 0.0, "snapshot_times": [],
                          "output_dir": str(tmp_path)})
    run = Run(cfg, str(tmp_path))
    frozen = run.problem.freeze(run.u, 0.0)
    op = run.problem.operator(frozen, run.dt * run.pair.a[0, 0])
    b = apply_linear(frozen, run.u).active_vector()

    x_mg, report = solve(op, b, tol=1e-9, max_cycles=30)
    assert report.converged and not report.fallback_used
    assert report.median_factor <= 0.5

    # both solved well below the agreement threshold
    x_mg, _ = solve(op, b, x_mg, tol=1e-12, max_cycles=30)
    x_fallback, fallback_report = fallback_solve(op, b, tol=1e-12)
    assert fallback_report.converged
    np.testing.assert_allclose(x_mg, x_fallback, atol=1e-8 * max(1.0, np.abs(x_fallback).max()))


@pytest.mark.parametrize("scaling,coefficient", EPS_COLUMNS)
@pytest.mark.parametrize("degree", [1, 2])
def test_manufactured_convergence(degree, scaling, coefficient):
    rows = convergence_study(degree, scaling, coefficient)
    assert rows[-1].l2_order == pytest.approx(degree + 1, abs=0.25)
    assert rows[-1].linf_order == pytest.approx(degree + 1, abs=0.25)
    for row in rows:
        l2, linf = REFERENCE_ERRORS[(degree, row.n)]
        assert l2 / 3 <= row.l2 <= 3 * l2
        assert linf / 3 <= row.linf <= 3 * linf


def test_ellipse_tends_to_a_circle(tmp_path):
    report = cmd_run(resolve_config({"preset": "ellipse", "output_dir": str(tmp_path)}))
    snapshots = report.diagnostics["snapshots"]
    assert len(snapshots) == 4
    assert snapshots[-1]["isoperimetric_ratio"] >= 0.95
    assert len([f for f in report.manifest if f.startswith("contour_")]) == 4
