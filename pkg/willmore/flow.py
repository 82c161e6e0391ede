"""Willmore flow right-hand side in the form the SIRK stepper consumes."""

import logging
from typing import Callable, List, Optional

import numpy as np

from . import config
from .dgcore import DgScalarField
from .ldg import (FrozenCoefficients, apply_linear, apply_linear_vector, assemble_linear,
                  build_frozen, project_source)
from .mgsolve import MGHierarchy, OperatorHandle, solve
from .problems.diagnostics import energy_dissipation_rate, mass_rate

Source = Callable[[np.ndarray, float], np.ndarray]


class WillmoreProblem:
    """
    Frozen-coefficient splitting of the regularized Willmore flow

    Args:
        eps: Regularization parameter
        source: Optional f(points, t) added to the right-hand side
        tol: Stage solver tolerance
        max_cycles: Stage solver V-cycle budget
        multigrid: Coarsen for the stage solves; False solves on a single level
    """

    def __init__(self, eps: float, source: Optional[Source] = None,
                 tol: float = config.MG_TOL, max_cycles: int = config.MG_MAX_CYCLES,
                 multigrid: bool = True):
        self.eps = eps
        self.source = source
        self.tol = tol
        self.max_cycles = max_cycles
        self.multigrid = multigrid
        self.stage_mass_rates: List[float] = []
        self.stage_dissipation: List[float] = []

    def freeze(self, u: DgScalarField, t: float) -> FrozenCoefficients:
        return build_frozen(u, self.eps)

    def apply(self, frozen: FrozenCoefficients, v: DgScalarField) -> DgScalarField:
        return apply_linear(frozen, v)

    def explicit(self, frozen: FrozenCoefficients, t: float) -> Optional[DgScalarField]:
        if self.source is None:
            return None
        return project_source(frozen.space, self.source, t)

    def operator(self, frozen: FrozenCoefficients, shift: float) -> OperatorHandle:
        """Stage operator with its multigrid hierarchy attached"""
        op = OperatorHandle(frozen.space, shift, assemble_linear(frozen),
                            apply_linear=lambda x: apply_linear_vector(frozen, x))
        if self.multigrid:
            op.hierarchy = MGHierarchy.build(op)
        return op

    def solve_stage(self, frozen: FrozenCoefficients, shift: float,
                    rhs: DgScalarField, guess: DgScalarField):
        op = self.operator(frozen, shift)
        x, report = solve(op, rhs.active_vector(), guess.active_vector(), self.tol, self.max_cycles)
        k = DgScalarField.from_active(frozen.space, x)

        # Every stage derivative must integrate to zero against 1/Q of its own frozen state
        if self.source is None:
            self.stage_mass_rates.append(mass_rate(frozen.state, k, self.eps, frozen.qeps))
            self.stage_dissipation.append(energy_dissipation_rate(frozen.state, k, self.eps, frozen.qeps))
        logging.debug(f"Stage solve: {report.iterations} cycles, residual {report.final_residual:.3e}")
        return k, report

    def is_finite(self, x: DgScalarField) -> bool:
        return bool(np.all(np.isfinite(x.coeffs)))

    def reset_diagnostics(self):
        self.stage_mass_rates = []
        self.stage_dissipation = []
