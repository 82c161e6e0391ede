"""
Semi-implicit partitioned Runge-Kutta stepping.

The right-hand side H(t, u, v) is linear in v once the u-dependence is frozen.
Each stage freezes at the explicit argument U_i and solves one linear system
for k_i with the implicit argument V_i carrying the unknown.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Protocol, Tuple

import numpy as np

from .exceptions import BlowUpError, ConfigError

TOLERANCE = 1e-12


@dataclass(frozen=True)
class ButcherPair:
    """Explicit tableau (a_hat, b_hat, c_hat) coupled with an implicit one (a, b, c)."""

    name: str
    a_hat: np.ndarray
    b_hat: np.ndarray
    c_hat: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    order: int = 1

    def __post_init__(self):
        for key in ("a_hat", "b_hat", "c_hat", "a", "b", "c"):
            object.__setattr__(self, key, np.asarray(getattr(self, key), dtype=float))
        is_valid, error_msg = validate_pair(self)
        if not is_valid:
            raise ConfigError(f"Tableau '{self.name}': {error_msg}")

    @property
    def stages(self) -> int:
        return self.b.size


def validate_pair(pair: ButcherPair) -> Tuple[bool, str]:
    """
    Check the structural and order conditions of a tableau pair

    Returns:
        tuple: (is_valid, error_message)
    """
    s = pair.b.size
    shapes = [pair.a_hat.shape, pair.a.shape, pair.b_hat.shape, pair.c_hat.shape, pair.c.shape]
    if shapes != [(s, s), (s, s), (s,), (s,), (s,)]:
        return False, "Inconsistent stage counts"

    if np.any(np.triu(pair.a_hat) != 0):
        return False, "Explicit matrix must be strictly lower triangular"

    if np.any(np.triu(pair.a, 1) != 0):
        return False, "Implicit matrix must be lower triangular"

    if np.any(np.diag(pair.a) == 0):
        return False, "Implicit matrix needs a nonzero diagonal"

    # Stage times must be the row sums
    if not np.allclose(pair.c_hat, pair.a_hat.sum(axis=1), atol=TOLERANCE):
        return False, "c_hat differs from the row sums of a_hat"
    if not np.allclose(pair.c, pair.a.sum(axis=1), atol=TOLERANCE):
        return False, "c differs from the row sums of a"

    if abs(pair.b_hat.sum() - 1) > TOLERANCE or abs(pair.b.sum() - 1) > TOLERANCE:
        return False, "Weights do not sum to one"

    if pair.order >= 2:
        products = [pair.b_hat @ pair.c_hat, pair.b @ pair.c, pair.b_hat @ pair.c, pair.b @ pair.c_hat]
        if any(abs(p - 0.5) > TOLERANCE for p in products):
            return False, f"Second order coupling conditions fail: {products}"

    return True, ""


SIRK1 = ButcherPair(
    name="sirk1",
    a_hat=[[0.0]], b_hat=[1.0], c_hat=[0.0],
    a=[[1.0]], b=[1.0], c=[1.0],
    order=1,
)

# Implicit-explicit midpoint pair
SIRK2 = ButcherPair(
    name="sirk2",
    a_hat=[[0.0, 0.0], [0.5, 0.0]], b_hat=[0.0, 1.0], c_hat=[0.0, 0.5],
    a=[[0.5, 0.0], [0.0, 0.5]], b=[0.0, 1.0], c=[0.5, 0.5],
    order=2,
)


def registered_tableaus() -> Dict[str, ButcherPair]:
    return {SIRK1.name: SIRK1, SIRK2.name: SIRK2}


def get_tableau(name: str) -> ButcherPair:
    tableaus = registered_tableaus()
    if name not in tableaus:
        raise ConfigError(f"Unknown tableau '{name}', expected one of {sorted(tableaus)}")
    return tableaus[name]


class SplitProblem(Protocol):
    """What a right-hand side must provide to be advanced by `step`."""

    def freeze(self, u: Any, t: float) -> Any:
        """Frozen coefficients built from the explicit argument"""

    def apply(self, frozen: Any, v: Any) -> Any:
        """Linear part L v for the frozen coefficients"""

    def explicit(self, frozen: Any, t: float) -> Optional[Any]:
        """Additive term independent of v (source, explicit part), or None"""

    def solve_stage(self, frozen: Any, shift: float, rhs: Any, guess: Any) -> Tuple[Any, Any]:
        """Solve (I - shift L) k = rhs; returns (k, solver report)"""

    def is_finite(self, x: Any) -> bool:
        ...


@dataclass
class StageState:
    U: Any
    V_known: Any
    k: Any = None
    report: Any = None


def _copy(u):
    return u.copy()


def step(u, t: float, dt: float, pair: ButcherPair, problem: SplitProblem,
         reports: Optional[List] = None):
    """
    Advance one step of size dt

    Args:
        u: State at time t
        t: Current time
        dt: Step size, 0 returns a copy of u
        pair: Tableau pair
        problem: SplitProblem implementation
        reports: Optional list receiving one solver report per stage

    Returns:
        State at time t + dt
    """
    if dt < 0:
        raise ConfigError(f"Time step must be non-negative, got {dt}")
    if dt == 0:
        return _copy(u)

    ks = []
    for i in range(pair.stages):
        # Explicit argument U_i and the known part of the implicit argument V_i
        U = _copy(u)
        V_known = _copy(u)
        for j in range(i):
            if pair.a_hat[i, j] != 0:
                U = U + float(dt * pair.a_hat[i, j]) * ks[j]
            if pair.a[i, j] != 0:
                V_known = V_known + float(dt * pair.a[i, j]) * ks[j]
        stage = StageState(U, V_known)

        t_stage = t + pair.c_hat[i] * dt
        frozen = problem.freeze(stage.U, t_stage)
        rhs = problem.apply(frozen, stage.V_known)
        extra = problem.explicit(frozen, t_stage)
        if extra is not None:
            rhs = rhs + extra

        guess = ks[i - 1] if i > 0 else rhs
        stage.k, stage.report = problem.solve_stage(frozen, float(dt * pair.a[i, i]), rhs, guess)
        if not problem.is_finite(stage.k):
            raise BlowUpError(f"Non-finite stage derivative in stage {i + 1} at t={t:.6e}")
        if reports is not None:
            reports.append(stage.report)
        ks.append(stage.k)

    u_next = _copy(u)
    for i in range(pair.stages):
        if pair.b[i] != 0:
            u_next = u_next + float(dt * pair.b[i]) * ks[i]
    return u_next


class ScalarSplitProblem:
    """u' = lam_explicit u + lam_implicit u with the first term explicit."""

    def __init__(self, lam_explicit: float, lam_implicit: float):
        self.lam_explicit = lam_explicit
        self.lam_implicit = lam_implicit

    def freeze(self, u, t):
        return np.array(u, dtype=float)

    def apply(self, frozen, v):
        return self.lam_implicit * v

    def explicit(self, frozen, t):
        if self.lam_explicit == 0:
            return None
        return self.lam_explicit * frozen

    def solve_stage(self, frozen, shift, rhs, guess):
        return rhs / (1.0 - shift * self.lam_implicit), None

    def is_finite(self, x):
        return bool(np.all(np.isfinite(x)))

    def exact(self, u0, t):
        return u0 * np.exp((self.lam_explicit + self.lam_implicit) * t)


def integrate(u, t0: float, t1: float, dt: float, pair: ButcherPair, problem: SplitProblem):
    """Fixed-step integration from t0 to t1; the last step is shortened to land on t1"""
    t = t0
    nsteps = 0
    while t < t1 - 1e-14 * max(1.0, abs(t1)):
        h = min(dt, t1 - t)
        u = step(u, t, h, pair, problem)
        t += h
        nsteps += 1
    logging.debug(f"Integrated {nsteps} steps of {pair.name} to t={t:.6e}")
    return u
