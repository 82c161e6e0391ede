"""
Geometric multigrid for the stage systems (I - gamma L) x = b.

Coarse levels halve the cell count per axis. Each coarse cell takes the lowest
degree of its children, so every coarse space is contained in the fine one and
prolongation is the exact embedding. Coarse operators are the Galerkin products
P^T A P of the level above.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
import scipy.sparse as sp
from scipy.linalg import lu_factor, lu_solve
from scipy.sparse.linalg import splu, spsolve_triangular

from . import config
from .dgcore import DegreeMap, DgSpace, Discretization
from .exceptions import SolverFailure

STALL_FACTOR = 0.95
STALL_CYCLES = 3
JACOBI_DAMPING = 2.0 / 3.0
FALLBACK_DIVERGENCE = 1e6  # residual growth that ends the block-Jacobi fallback
DENSE_COARSE_LIMIT = 2000


@dataclass
class SolveReport:
    iterations: int = 0
    initial_residual: float = 0.0
    final_residual: float = 0.0
    converged: bool = False
    fallback_used: bool = False
    direct_used: bool = False
    factors: List[float] = field(default_factory=list)

    @property
    def median_factor(self) -> float:
        return float(np.median(self.factors)) if self.factors else 0.0


def cell_offsets(space: DgSpace) -> np.ndarray:
    """Start of every cell's block in the active vector, plus the total"""
    counts = space.mask.sum(axis=1)
    return np.concatenate([[0], np.cumsum(counts)])


class OperatorHandle:
    """
    Stage operator A = I - shift L on the active modes of a space

    Args:
        space: Space the operator acts on
        shift: dt * a_ii
        linear: Assembled sparse L
        apply_linear: Optional matrix-free L used by `apply` instead of the matrix
    """

    def __init__(self, space: DgSpace, shift: float, linear: Optional[sp.spmatrix],
                 apply_linear: Optional[Callable[[np.ndarray], np.ndarray]] = None):
        self.space = space
        self.mesh = space.mesh
        self.degree_map = space.degree_map
        self.shift = float(shift)
        n = space.ndofs
        if linear is None:
            linear = sp.csr_matrix((n, n))
        self.linear = sp.csr_matrix(linear)
        self.matrix = (sp.identity(n, format="csr") - self.shift * linear).tocsr()
        self._apply_linear = apply_linear
        self.offsets = cell_offsets(space)
        self.hierarchy: Optional["MGHierarchy"] = None
        self._sweep = None

    @property
    def size(self) -> int:
        return self.space.ndofs

    def apply(self, x: np.ndarray) -> np.ndarray:
        if self._apply_linear is not None:
            return x - self.shift * self._apply_linear(x)
        return self.matrix @ x

    def block_diagonal(self) -> List[np.ndarray]:
        """Dense diagonal block of every cell"""
        o = self.offsets
        A = self.matrix
        return [A[o[c]:o[c + 1], o[c]:o[c + 1]].toarray() for c in range(self.space.ncells)]

    def sweep_data(self):
        """Splitting A = D + L + U into block diagonal and strict block triangles"""
        if self._sweep is None:
            cell_of = np.repeat(np.arange(self.space.ncells), np.diff(self.offsets))
            A = self.matrix.tocoo()
            lower = cell_of[A.row] > cell_of[A.col]
            upper = cell_of[A.row] < cell_of[A.col]
            n = self.size
            L = sp.csr_matrix((A.data[lower], (A.row[lower], A.col[lower])), shape=(n, n))
            U = sp.csr_matrix((A.data[upper], (A.row[upper], A.col[upper])), shape=(n, n))
            try:
                inverses = [np.linalg.inv(block) for block in self.block_diagonal()]
            except np.linalg.LinAlgError:
                raise SolverFailure("Singular diagonal block; the time step is too large for the frozen operator")
            Dinv = sp.block_diag(inverses, format="csr")
            eye = sp.identity(n, format="csr")
            self._sweep = {
                "L": L, "U": U, "Dinv": Dinv,
                "forward": (eye + Dinv @ L).tocsr(),
                "backward": (eye + Dinv @ U).tocsr(),
            }
        return self._sweep


def smoother_sweep(op: OperatorHandle, x: np.ndarray, b: np.ndarray, direction: str = "forward") -> np.ndarray:
    """One block Gauss-Seidel pass over the cells in lexicographic (or reversed) order"""
    data = op.sweep_data()
    if direction == "forward":
        rhs = data["Dinv"] @ (b - data["U"] @ x)
        return spsolve_triangular(data["forward"], rhs, lower=True, unit_diagonal=True)
    if direction == "backward":
        rhs = data["Dinv"] @ (b - data["L"] @ x)
        return spsolve_triangular(data["backward"], rhs, lower=False, unit_diagonal=True)
    raise ValueError(f"Unknown sweep direction '{direction}'")


def jacobi_sweep(op: OperatorHandle, x: np.ndarray, b: np.ndarray, damping: float = JACOBI_DAMPING) -> np.ndarray:
    data = op.sweep_data()
    return x + damping * (data["Dinv"] @ (b - op.matrix @ x))


def coarse_degree_map(fine: DgSpace) -> DegreeMap:
    """Minimum degree over the children of every coarse cell"""
    parent = fine.mesh.parent_of()
    ncoarse = fine.mesh.ncells // 2 ** fine.mesh.dim
    degrees = np.full(ncoarse, np.iinfo(int).max)
    np.minimum.at(degrees, parent, fine.degree_map.degrees)
    return DegreeMap(degrees)


def coarse_discretization(disc: Discretization) -> Discretization:
    coarse = getattr(disc, "_coarse", None)
    if coarse is None:
        coarse = Discretization(disc.mesh.coarsen(), disc.basis.k_max, disc.quad.n_q)
        disc._coarse = coarse
    return coarse


def prolongation(fine: DgSpace, coarse: DgSpace) -> sp.csr_matrix:
    """Embedding of the coarse space into the fine one on active modes"""
    disc = fine.disc
    mesh = fine.mesh
    quad = disc.quad
    psi = disc.basis.values(quad.points)
    blocks = {}
    offsets = mesh.child_offsets()
    for o in {tuple(row) for row in offsets}:
        # Fine reference point xi sits at (xi + o) / 2 in the parent
        inner = disc.basis.values((quad.points + np.asarray(o)[None, :]) / 2.0)
        blocks[o] = psi.T @ (quad.weights[:, None] * inner) * 2.0 ** (-mesh.dim / 2.0)

    nm = disc.nm
    parent = mesh.parent_of()
    modes = np.arange(nm)
    rows, cols, data = [], [], []
    for f in range(mesh.ncells):
        block = blocks[tuple(offsets[f])]
        rows.append(np.repeat(f * nm + modes, nm))
        cols.append(np.tile(parent[f] * nm + modes, nm))
        data.append(block.ravel())
    full = sp.csr_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(mesh.ncells * nm, coarse.ncells * nm))
    P = full[fine.active][:, coarse.active]
    P.data[np.abs(P.data) < 1e-14] = 0.0
    P.eliminate_zeros()
    return P.tocsr()


class MGHierarchy:
    """Levels from fine to coarse with prolongations between consecutive levels."""

    def __init__(self, levels: List[OperatorHandle], prolongations: List[sp.csr_matrix]):
        self.levels = levels
        self.prolongations = prolongations
        self._coarse_lu = None

    @classmethod
    def build(cls, fine: OperatorHandle, min_cells: int = config.MG_COARSEST_CELLS) -> "MGHierarchy":
        """
        Coarsen until a mesh axis cannot be halved

        Args:
            fine: Finest level operator
            min_cells: Smallest admissible cell count per axis on the coarsest level
        """
        levels = [fine]
        prolongations = []
        op = fine
        while op.mesh.can_coarsen(min_cells):
            coarse_space = coarse_discretization(op.space.disc).space(coarse_degree_map(op.space))
            P = prolongation(op.space, coarse_space)
            # P^T P = I, so P^T (I - shift L) P = I - shift P^T L P
            op = OperatorHandle(coarse_space, fine.shift, (P.T @ op.linear @ P).tocsr())
            levels.append(op)
            prolongations.append(P)
        logging.debug(f"Multigrid hierarchy with {len(levels)} levels, "
                      f"coarsest {levels[-1].mesh.shape}")
        return cls(levels, prolongations)

    def coarse_solve(self, b: np.ndarray) -> np.ndarray:
        """Dense LU on the coarsest level, sparse LU when a single large level is all there is"""
        if self._coarse_lu is None:
            A = self.levels[-1].matrix
            if A.shape[0] <= DENSE_COARSE_LIMIT:
                factors = lu_factor(A.toarray())
                # non-finite input comes back non-finite and is caught by the residual check
                self._coarse_lu = lambda rhs: lu_solve(factors, rhs, check_finite=False)
            else:
                try:
                    self._coarse_lu = splu(A.tocsc()).solve
                except RuntimeError as e:
                    raise SolverFailure(f"Coarsest level is singular: {str(e)}")
        return self._coarse_lu(b)

    def vcycle(self, b: np.ndarray, x: np.ndarray, level: int = 0,
               pre: int = config.MG_PRE_SWEEPS, post: int = config.MG_POST_SWEEPS) -> np.ndarray:
        if level == len(self.levels) - 1:
            return self.coarse_solve(b)
        op = self.levels[level]
        for _ in range(pre):
            x = smoother_sweep(op, x, b, "forward")
        P = self.prolongations[level]
        residual = b - op.matrix @ x
        correction = self.vcycle(P.T @ residual, np.zeros(P.shape[1]), level + 1, pre, post)
        x = x + P @ correction
        for _ in range(post):
            x = smoother_sweep(op, x, b, "backward")
        return x


def _converged(res: float, bnorm: float, tol: float) -> bool:
    return res <= tol * max(1.0, bnorm)


def _residual(op: OperatorHandle, b: np.ndarray, x: np.ndarray) -> float:
    with np.errstate(over="ignore", invalid="ignore"):
        return float(np.linalg.norm(b - op.matrix @ x))


def direct_solve(op: OperatorHandle, b: np.ndarray) -> np.ndarray:
    """Sparse LU solve of the full stage system"""
    try:
        return splu(op.matrix.tocsc()).solve(b)
    except RuntimeError as e:
        raise SolverFailure(f"Stage matrix is singular: {str(e)}")


def fallback_solve(op: OperatorHandle, b: np.ndarray, x0: Optional[np.ndarray] = None,
                   tol: float = config.MG_TOL, max_iterations: int = config.MG_MAX_CYCLES,
                   report: Optional[SolveReport] = None):
    """
    Damped block-Jacobi iteration to tol, finished by a sparse direct solve when it falls short

    The iteration stops early once its residual turns non-finite or grows by FALLBACK_DIVERGENCE.

    Returns:
        tuple: (x, SolveReport) with fallback_used set
    """
    x = np.zeros_like(b) if x0 is None else x0.copy()
    res = _residual(op, b, x)
    if report is None:
        report = SolveReport(initial_residual=res)
    report.fallback_used = True
    bnorm = float(np.linalg.norm(b))
    start = res
    try:
        for _ in range(max_iterations):
            if _converged(res, bnorm, tol):
                break
            with np.errstate(over="ignore", invalid="ignore"):
                trial = jacobi_sweep(op, x, b)
            trial_res = _residual(op, b, trial)
            report.iterations += 1
            if not np.isfinite(trial_res) or trial_res > FALLBACK_DIVERGENCE * max(start, tol):
                logging.warning(f"Block Jacobi diverged after {report.iterations} iterations")
                break
            x, res = trial, trial_res
    except SolverFailure as e:
        logging.warning(f"Block Jacobi unavailable: {e.detail}")

    if not _converged(res, bnorm, tol):
        logging.info(f"Finishing the stage solve directly (residual {res:.3e})")
        report.direct_used = True
        try:
            x = direct_solve(op, b)
        except SolverFailure as e:
            raise SolverFailure(e.detail, report)
        res = _residual(op, b, x)
    report.final_residual = res
    report.converged = _converged(res, bnorm, tol)
    return x, report


def solve(op: OperatorHandle, b: np.ndarray, x0: Optional[np.ndarray] = None,
          tol: float = config.MG_TOL, max_cycles: int = config.MG_MAX_CYCLES):
    """
    V(2,2) multigrid iteration for op x = b

    A stall (factor > STALL_FACTOR for STALL_CYCLES cycles), a non-finite iterate, a singular
    smoother block or an exhausted cycle budget hands the best iterate to fallback_solve.

    Args:
        op: Operator with an attached hierarchy (a single level is solved directly)
        b: Right-hand side on the active modes
        x0: Initial guess, zero when omitted
        tol: Stop once ||b - A x|| <= tol * max(1, ||b||)
        max_cycles: V-cycle budget before giving up

    Returns:
        tuple: (x, SolveReport)
    """
    if not np.all(np.isfinite(b)):
        raise SolverFailure("Non-finite right-hand side in the stage solve", SolveReport())
    bnorm = float(np.linalg.norm(b))

    # gamma = 0 is the identity
    if op.shift == 0.0:
        return b.copy(), SolveReport(converged=True)

    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    if not np.all(np.isfinite(x)):
        x = np.zeros_like(b)
    res = _residual(op, b, x)
    report = SolveReport(initial_residual=res, final_residual=res)
    if _converged(res, bnorm, tol):
        report.converged = True
        return x, report

    hierarchy = op.hierarchy or MGHierarchy([op], [])
    best_x, best_res = x, res
    stalled = 0
    reason = f"used its budget of {max_cycles} cycles"
    while report.iterations < max_cycles:
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                x = hierarchy.vcycle(b, x)
        except SolverFailure as e:
            reason = e.detail
            break
        except ValueError as e:
            # triangular solves may refuse an overflowed iterate
            reason = f"failed ({str(e)})"
            break
        new_res = _residual(op, b, x)
        report.iterations += 1
        if not np.isfinite(new_res):
            reason = "produced a non-finite iterate"
            break
        factor = new_res / res if res > 0 else 0.0
        report.factors.append(factor)
        res = new_res
        if res < best_res:
            best_x, best_res = x, res
        if _converged(res, bnorm, tol):
            report.final_residual = res
            report.converged = True
            return x, report
        stalled = stalled + 1 if factor > STALL_FACTOR else 0
        if stalled >= STALL_CYCLES:
            reason = f"stalled (factor {factor:.3f})"
            break

    logging.warning(f"Multigrid {reason} after {report.iterations} cycles; switching to the fallback")
    x, report = fallback_solve(op, b, best_x, tol, max_cycles, report)
    if not report.converged:
        raise SolverFailure(f"Stage solve did not converge: residual {report.final_residual:.3e} "
                            f"after {report.iterations} iterations", report)
    return x, report


def probe_dense(op: OperatorHandle) -> np.ndarray:
    """Dense matrix of op.apply built column by column from unit vectors"""
    n = op.size
    out = np.empty((n, n))
    e = np.zeros(n)
    for j in range(n):
        e[j] = 1.0
        out[:, j] = op.apply(e)
        e[j] = 0.0
    return out
