"""`run`: evolve one scenario and write its snapshots, histories and report."""

import json
import logging
import os
import time
from typing import Callable, List, Optional

import numpy as np

from .. import config
from ..dgcore import (MAX_DEGREE, DgScalarField, Discretization, assign_degrees, change_degree,
                      error_norms, l2_project)
from ..exceptions import BlowUpError, ConfigError, WillmoreException
from ..flow import WillmoreProblem
from ..grid import build_mesh
from ..models import RunConfig, RunReport, StepStats
from ..presets import resolve_config
from ..problems import diagnostics
from ..problems.mms import MMSCase
from ..problems.shapes import SHAPES, build_shape, distance_defect
from ..sirk import get_tableau, step
from ..utils import validators
from ..utils.output import OutputWriter, read_field

SCENARIOS = tuple(SHAPES) + ("mms",)
TIME_SLACK = 1e-12


def load_config(path: str) -> RunConfig:
    """Read a flat JSON config file and merge it over its preset"""
    try:
        with open(path) as f:
            raw = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"Cannot read config {path}: {str(e)}")
    if not isinstance(raw, dict):
        raise ConfigError("Config must be a flat JSON object")
    return resolve_config(raw)


def initial_condition(cfg: RunConfig) -> Callable[[np.ndarray], np.ndarray]:
    if cfg.scenario == "mms":
        return MMSCase(eps=cfg.resolved_eps()).initial
    return build_shape(cfg.scenario, **cfg.shape_params()).signed_distance


def _snapshot_name(prefix: str, index: int, t: float) -> str:
    return f"{prefix}_{index:02d}_t{t:.6e}.csv"


class Run:
    """State of one evolution: field, time, step counter and output."""

    def __init__(self, cfg: RunConfig, out_dir: str):
        self.cfg = cfg
        self.eps = cfg.resolved_eps()
        self.dt = cfg.resolved_dt()
        self.pair = get_tableau(cfg.tableau)
        self.writer = OutputWriter(out_dir)
        self.report = RunReport(scenario=cfg.scenario, eps=self.eps, dt=self.dt)
        self.history: List[tuple] = []
        self.solver_rows: List[tuple] = []
        self.snapshot_rows: List[tuple] = []

        mesh = build_mesh(cfg.dim, cfg.domain, cfg.n, cfg.boundary_mode)
        self.h = float(np.min(mesh.h))
        self.disc = Discretization(mesh)

        source = None
        if cfg.scenario == "mms":
            source = MMSCase(eps=self.eps).source()
        self.problem = WillmoreProblem(self.eps, source=source, tol=cfg.solver_tol,
                                       max_cycles=cfg.solver_max_cycles, multigrid=cfg.multigrid)
        self.u = self._initial_field()
        self.t = cfg.start_time
        self.steps = 0

    def _initial_field(self) -> DgScalarField:
        cfg = self.cfg
        if cfg.restart_from:
            logging.info(f"Restarting from {cfg.restart_from} at t={cfg.start_time}")
            return self._adapt(read_field(cfg.restart_from, self.disc))
        phi0 = initial_condition(cfg)
        if cfg.dim == 2 and cfg.scenario != "mms":
            defect = distance_defect(build_shape(cfg.scenario, **cfg.shape_params()),
                                     cfg.domain, seed=cfg.seed)
            self.report.diagnostics["distance_defect"] = defect
            logging.info(f"Initial data: mean ||grad phi| - 1| = {defect:.3e}")
        u = l2_project(phi0, self.disc.uniform_space(MAX_DEGREE if cfg.adaptive else cfg.degree))
        return self._adapt(u)

    def _adapt(self, u: DgScalarField) -> DgScalarField:
        """Degree map for the next step, assigned from the current field"""
        if self.cfg.adaptive:
            return change_degree(u, assign_degrees(u, self.h))
        return change_degree(u, self.disc.uniform_space(self.cfg.degree).degree_map)

    def advance(self, dt: float):
        self.u = self._adapt(self.u)
        self.problem.reset_diagnostics()
        reports = []
        try:
            self.u = step(self.u, self.t, dt, self.pair, self.problem, reports)
        except BlowUpError as e:
            raise BlowUpError(e.detail, step=self.steps + 1)
        if not self.problem.is_finite(self.u):
            raise BlowUpError(f"Non-finite field after step {self.steps + 1}", step=self.steps + 1)
        self.t += dt
        self.steps += 1

        energy = diagnostics.energy(self.u, self.eps)
        rates = self.problem.stage_mass_rates
        mass = float(max(rates, key=abs)) if rates else 0.0
        dissipation = float(np.dot(self.pair.b, self.problem.stage_dissipation)) if rates else 0.0
        stats = StepStats(
            step=self.steps, time=self.t, dofs=self.u.space.ndofs, energy=energy,
            mass_rate=mass, dissipation=dissipation,
            cycles=[r.iterations for r in reports],
            residual=max(r.final_residual for r in reports),
            contraction=max(r.median_factor for r in reports),
            fallback=any(r.fallback_used for r in reports),
        )
        self.report.step_stats.append(stats)
        self.report.total_dofs += stats.dofs
        self.history.append((stats.step, stats.time, stats.energy, stats.mass_rate,
                             stats.dissipation, stats.dofs))
        for stage, r in enumerate(reports, start=1):
            self.solver_rows.append((self.steps, stage, r.iterations, r.final_residual))
        logging.info(f"step {stats.step} t={stats.time:.6e} dofs={stats.dofs} "
                     f"energy={stats.energy:.6e} mass_rate={stats.mass_rate:.3e} cycles={stats.cycles}")
        if not np.isfinite(energy):
            raise BlowUpError(f"Non-finite energy at step {self.steps}", step=self.steps)

    def snapshot(self, index: int):
        u = self.u
        self.writer.write_field(_snapshot_name("field", index, self.t), u)
        summary = diagnostics.summarize(u, self.eps)
        if self.cfg.dim == 2:
            polylines = diagnostics.extract_contour(u)
            self.writer.write_contours(_snapshot_name("contour", index, self.t), polylines)
            if self.cfg.scenario == "circle":
                summary["radius"] = diagnostics.fitted_radius(u)
        else:
            case = MMSCase(eps=self.eps)
            summary["l2_error"], summary["linf_error"] = error_norms(u, case.exact, self.t)
        self.snapshot_rows.append((index, self.t, self.steps, summary.get("energy"),
                                   summary.get("contours", ""), summary.get("regions", ""),
                                   summary.get("isoperimetric_ratio", ""), summary.get("radius", "")))
        self.report.diagnostics.setdefault("snapshots", []).append({"time": self.t, **summary})
        logging.info(f"Snapshot {index} at t={self.t:.6e}: {summary}")

    def evolve(self):
        """Step to every snapshot time and on to the final time, landing on each exactly"""
        targets = sorted(set(s for s in self.cfg.snapshot_times) | {self.cfg.final_time})
        index = 0
        for target in targets:
            while self.t < target - TIME_SLACK:
                self.advance(min(self.dt, target - self.t))
            if target in self.cfg.snapshot_times:
                self.snapshot(index)
                index += 1

    def finish(self, status: str, error: Optional[str] = None):
        self.writer.write_rows("history.csv", ["step", "time", "energy", "mass_rate", "dissipation", "dofs"],
                               self.history)
        self.writer.write_rows("solver.csv", ["step", "stage", "cycles", "final_residual"], self.solver_rows)
        self.writer.write_rows("snapshots.csv", ["index", "time", "step", "energy", "contours", "regions",
                                                 "isoperimetric_ratio", "radius"], self.snapshot_rows)
        self.report.status = status
        self.report.error = error
        self.report.steps = self.steps
        self.writer.write_report(self.report)


def cmd_run(cfg: RunConfig, out_dir: Optional[str] = None) -> RunReport:
    """
    Evolve one scenario

    Args:
        cfg: Run configuration
        out_dir: Output directory, falls back to the config and then WILLMORE_OUTPUT_DIR

    Returns:
        RunReport: written last as report.json; on failure the partial report is written
        with status "failed" before the error propagates
    """
    is_valid, error_msg = validators.validate_run_config(cfg, SCENARIOS)
    if not is_valid:
        raise ConfigError(error_msg)

    out_dir = out_dir or cfg.output_dir or os.path.join(config.OUTPUT_DIR, cfg.preset or cfg.scenario)
    started = time.perf_counter()
    run = Run(cfg, out_dir)
    logging.info(f"Running {cfg.scenario}: n={cfg.n}, eps={run.eps:.3e}, dt={run.dt:.3e}, "
                 f"tableau={cfg.tableau}, adaptive={cfg.adaptive}")
    try:
        run.evolve()
    except WillmoreException as e:
        logging.error(f"Run failed after {run.steps} steps: {e.detail}")
        run.report.wall_time = time.perf_counter() - started
        run.finish("failed", e.detail)
        raise
    run.report.wall_time = time.perf_counter() - started
    run.finish("ok")
    logging.info(f"Finished {run.steps} steps in {run.report.wall_time:.1f}s, "
                 f"{run.report.total_dofs} dof-steps")
    return run.report


def register(subparsers):
    parser = subparsers.add_parser("run", help="Evolve a scenario from a config file")
    parser.add_argument("--config", required=True, help="Flat JSON config, may name a preset")
    parser.add_argument("--out", default=None, help="Output directory")
    parser.set_defaults(handler=lambda args: cmd_run(load_config(args.config), args.out))
