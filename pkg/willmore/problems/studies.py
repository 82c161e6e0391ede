"""Refinement studies: spatial accuracy on the manufactured solution, SIRK order, radius law."""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..dgcore import DegreeMap, Discretization, error_norms, l2_project
from ..flow import WillmoreProblem
from ..grid import PERIODIC, build_mesh
from ..sirk import SIRK2, ButcherPair, ScalarSplitProblem, integrate
from .diagnostics import fitted_radius
from .mms import MMSCase

# Regularization columns of the accuracy table: (scaling, coefficient)
EPS_COLUMNS = (("constant", 1.0), ("h", 5.0), ("h2", 5.0))
MESHES = (16, 32, 64)
DEGREES = (1, 2)
DT_FACTOR = 0.1
DT_AGREEMENT = 0.05
MAX_HALVINGS = 2


def resolve_eps(scaling: str, coefficient: float, h: float) -> float:
    if scaling == "h":
        return coefficient * h
    if scaling == "h2":
        return coefficient * h * h
    return coefficient


def eps_label(scaling: str, coefficient: float) -> str:
    if scaling == "constant":
        return f"eps={coefficient:g}"
    return f"eps={coefficient:g}{'h' if scaling == 'h' else 'h^2'}"


@dataclass
class ConvergenceRow:
    degree: int
    eps_label: str
    n: int
    dt: float
    l2: float
    linf: float
    l2_order: Optional[float] = None
    linf_order: Optional[float] = None


def mms_errors(n: int, degree: int, eps: float, dt: float, pair: ButcherPair = SIRK2,
               final_time: float = 0.5) -> Tuple[float, float]:
    """Run the manufactured solution on n periodic cells and return (L2, Linf) errors at final_time"""
    case = MMSCase(eps=eps, final_time=final_time)
    mesh = build_mesh(1, case.domain, n, PERIODIC)
    space = Discretization(mesh).space(DegreeMap.uniform(n, degree))
    u = l2_project(case.initial, space)
    problem = WillmoreProblem(eps, source=case.source())
    u = integrate(u, 0.0, final_time, dt, pair, problem)
    return error_norms(u, case.exact, final_time)


def _order(coarse: float, fine: float) -> float:
    return float(np.log2(coarse / fine))


def convergence_study(degree: int, eps_scaling: str, eps_coefficient: float,
                      meshes: Sequence[int] = MESHES, pair: ButcherPair = SIRK2,
                      final_time: float = 0.5) -> List[ConvergenceRow]:
    """
    Error table of one (degree, eps) column under mesh refinement

    Each mesh starts from dt = 0.1 h^((k+1)/2) and halves dt until the L2 error
    changes by less than 5%, at most twice.
    """
    rows = []
    for n in meshes:
        h = 2 * np.pi / n
        eps = resolve_eps(eps_scaling, eps_coefficient, h)
        dt = DT_FACTOR * h ** ((degree + 1) / 2.0)
        l2, linf = mms_errors(n, degree, eps, dt, pair, final_time)
        for _ in range(MAX_HALVINGS):
            l2_half, linf_half = mms_errors(n, degree, eps, dt / 2, pair, final_time)
            changed = abs(l2_half - l2) / l2
            dt, l2, linf = dt / 2, l2_half, linf_half
            if changed < DT_AGREEMENT:
                break
        row = ConvergenceRow(degree, eps_label(eps_scaling, eps_coefficient), n, dt, l2, linf)
        if rows:
            row.l2_order = _order(rows[-1].l2, l2)
            row.linf_order = _order(rows[-1].linf, linf)
        logging.info(f"P{degree} {row.eps_label} n={n}: L2={l2:.3e} Linf={linf:.3e} "
                     f"orders=({row.l2_order}, {row.linf_order})")
        rows.append(row)
    return rows


def ode_order_study(pair: ButcherPair, lam_explicit: float = -1.0, lam_implicit: float = -2.0,
                    final_time: float = 1.0, steps: Sequence[int] = (20, 40, 80, 160)) -> List[Tuple[float, float, Optional[float]]]:
    """
    Endpoint errors of the split scalar ODE under step halving

    Returns:
        list: (dt, error, observed order) per step count, order None on the first row
    """
    problem = ScalarSplitProblem(lam_explicit, lam_implicit)
    u0 = np.array([1.0])
    exact = problem.exact(u0, final_time)
    rows = []
    for count in steps:
        dt = final_time / count
        u = integrate(u0, 0.0, final_time, dt, pair, problem)
        error = float(np.abs(u - exact)[0])
        order = _order(rows[-1][1], error) if rows else None
        rows.append((dt, error, order))
    return rows


def radius_history(snapshots: Sequence[Tuple[float, object]]) -> List[Tuple[float, float]]:
    """(t, fitted radius) for each (t, field) snapshot of a single circle run"""
    return [(t, fitted_radius(u)) for t, u in snapshots]
