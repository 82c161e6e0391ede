from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field

from . import config


class RunConfig(BaseModel):
    preset: Optional[str] = None
    scenario: str = "ellipse"
    dim: int = 2
    n: int = 64
    domain: List[float] = [0.0, 4.0]
    boundary_mode: str = "copy-trace"

    # Shape parameters, each shape reads the ones it takes
    center: Optional[List[float]] = None
    radius: Optional[float] = None
    semi_axes: Optional[List[float]] = None
    side: Optional[float] = None
    gap: Optional[float] = None
    scale: Optional[float] = None
    amplitude: Optional[float] = None
    petals: Optional[int] = None

    eps: float = 1.0
    eps_scaling: str = "h"
    dt: float = 0.001
    dt_scaling: str = "h"
    tableau: str = "sirk2"
    final_time: float = 0.1
    snapshot_times: List[float] = Field(default_factory=list)
    adaptive: bool = True
    degree: int = 2
    multigrid: bool = True
    solver_tol: float = config.MG_TOL
    solver_max_cycles: int = config.MG_MAX_CYCLES
    output_dir: Optional[str] = None
    seed: int = 0
    restart_from: Optional[str] = None
    start_time: float = 0.0

    @property
    def h(self) -> float:
        return (self.domain[1] - self.domain[0]) / self.n

    def resolved_eps(self) -> float:
        if self.eps_scaling == "h":
            return self.eps * self.h
        if self.eps_scaling == "h2":
            return self.eps * self.h ** 2
        return self.eps

    def resolved_dt(self) -> float:
        return self.dt * self.h if self.dt_scaling == "h" else self.dt

    def shape_params(self) -> Dict:
        keys = ("center", "radius", "semi_axes", "side", "gap", "scale", "amplitude", "petals")
        return {k: getattr(self, k) for k in keys if getattr(self, k) is not None}


class StepStats(BaseModel):
    step: int
    time: float
    dofs: int
    energy: float
    mass_rate: float
    dissipation: float
    cycles: List[int]
    residual: float
    contraction: float = 0.0
    fallback: bool = False


class RunReport(BaseModel):
    status: str = "running"
    scenario: str
    steps: int = 0
    wall_time: float = 0.0
    eps: float
    dt: float
    total_dofs: int = 0
    step_stats: List[StepStats] = Field(default_factory=list)
    manifest: List[str] = Field(default_factory=list)
    diagnostics: Dict = Field(default_factory=dict)
    error: Optional[str] = None

    def max_mass_rate(self) -> float:
        if not self.step_stats:
            return 0.0
        return float(np.max([abs(s.mass_rate) for s in self.step_stats]))
