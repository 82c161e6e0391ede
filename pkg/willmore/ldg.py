"""
LDG spatial operator for the regularized level-set Willmore flow.

The fourth-order equation is split into the chain
    r = grad(phi), q = r / Q, H = div(q), omega = Q H, p = grad(omega),
    s = E p, v = omega^2 / (2 Q^3) r, (1/Q) phi_t = -div(s - v)
with one-sided traces: phi and q from the right cell, omega, s and v from the left.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Optional

import numpy as np
import scipy.sparse as sp

from .dgcore import DgScalarField, DgSpace, DgVectorField, Discretization
from .exceptions import BlowUpError, StateError


class FluxSide(Enum):
    FROM_LEFT = "left"
    FROM_RIGHT = "right"


class BoundaryFlux(Enum):
    COPY = "copy"      # exterior trace := interior trace
    NONE = "none"      # zero normal flux on the domain boundary


FLUX_TABLE: Dict[str, FluxSide] = {
    "s": FluxSide.FROM_LEFT,
    "v": FluxSide.FROM_LEFT,
    "q": FluxSide.FROM_RIGHT,
    "omega": FluxSide.FROM_LEFT,
    "phi": FluxSide.FROM_RIGHT,
}


def check_flux_table(table: Dict[str, FluxSide]):
    """phi and q must come from the side opposite to omega, s and v"""
    for a in ("phi", "q"):
        for b in ("omega", "s", "v"):
            if table[a] == table[b]:
                raise StateError(f"Numerical fluxes for {a} and {b} are taken from the same side")


check_flux_table(FLUX_TABLE)


def _block_matrix(nblocks: int, nm: int, rows: np.ndarray, cols: np.ndarray,
                  blocks: np.ndarray) -> sp.csr_matrix:
    """Sparse matrix from dense (nm x nm) blocks placed at (rows[k], cols[k]); duplicates add up"""
    blocks = np.asarray(blocks)
    if blocks.ndim == 2:
        blocks = np.broadcast_to(blocks, (rows.size, nm, nm))
    modes = np.arange(nm)
    r = np.broadcast_to(rows[:, None, None] * nm + modes[None, :, None], blocks.shape)
    c = np.broadcast_to(cols[:, None, None] * nm + modes[None, None, :], blocks.shape)
    n = nblocks * nm
    return sp.coo_matrix((blocks.ravel(), (r.ravel(), c.ravel())), shape=(n, n)).tocsr()


def block_diagonal(blocks: np.ndarray) -> sp.csr_matrix:
    ncells, nm, _ = blocks.shape
    return sp.bsr_matrix((blocks, np.arange(ncells), np.arange(ncells + 1)),
                         shape=(ncells * nm, ncells * nm)).tocsr()


class TraceOperators:
    """Full-size weak derivative matrices of one discretization, one per axis/side/boundary rule."""

    def __init__(self, disc: Discretization):
        self.disc = disc
        mesh = disc.mesh
        quad = disc.quad
        nm = disc.nm
        self._matrices = {}

        self.volume = []
        self.face = []
        for d in range(mesh.dim):
            # V[i, j] = int_K b_j d_d b_i
            self.volume.append(disc.dphi[d].T @ (disc.weights[:, None] * disc.phi))
            fw = quad.face_weights * disc.jacobian * 2.0 / mesh.h[d]
            traces = {s: disc.basis_at(quad.face_points(d, s)) for s in (-1, +1)}
            self.face.append({(a, b): traces[a].T @ (fw[:, None] * traces[b])
                              for a in (-1, +1) for b in (-1, +1)})
        self.nm = nm

    def matrix(self, axis: int, side: FluxSide, boundary: BoundaryFlux) -> sp.csr_matrix:
        key = (axis, side, boundary)
        if key not in self._matrices:
            self._matrices[key] = self._assemble(axis, side, boundary)
        return self._matrices[key]

    def _assemble(self, axis: int, side: FluxSide, boundary: BoundaryFlux) -> sp.csr_matrix:
        mesh = self.disc.mesh
        T = self.face[axis]
        cells = np.arange(mesh.ncells)
        rows, cols, blocks = [cells], [cells], [np.broadcast_to(-self.volume[axis], (mesh.ncells, self.nm, self.nm))]

        # Interior faces: the left cell is the upper one (its lower face, normal -e),
        # the right cell is the lower one (its upper face, normal +e)
        left, right = mesh.interior_faces(axis)
        if side is FluxSide.FROM_RIGHT:
            pairs = [(left, right, -T[(-1, +1)]), (right, right, T[(+1, +1)])]
        else:
            pairs = [(left, left, -T[(-1, -1)]), (right, left, T[(+1, -1)])]

        if boundary is BoundaryFlux.COPY:
            bcells, bsides = mesh.boundary_cells(axis)
            for s in (-1, +1):
                sel = bcells[bsides == s]
                pairs.append((sel, sel, s * T[(s, s)]))

        for r, c, blk in pairs:
            if r.size == 0:
                continue
            rows.append(r)
            cols.append(c)
            blocks.append(np.broadcast_to(blk, (r.size, self.nm, self.nm)))

        return _block_matrix(mesh.ncells, self.nm, np.concatenate(rows), np.concatenate(cols),
                             np.concatenate(blocks))


def trace_operators(disc: Discretization) -> TraceOperators:
    ops = getattr(disc, "_trace_operators", None)
    if ops is None:
        ops = TraceOperators(disc)
        disc._trace_operators = ops
    return ops


def derivative_matrix(space: DgSpace, axis: int, side: FluxSide,
                      boundary: BoundaryFlux = BoundaryFlux.COPY) -> sp.csr_matrix:
    """Weak derivative along axis restricted to the active modes of a space"""
    cache = space.__dict__.setdefault("_derivatives", {})
    key = (axis, side, boundary)
    if key not in cache:
        full = trace_operators(space.disc).matrix(axis, side, boundary)
        cache[key] = full[space.active][:, space.active].tocsr()
    return cache[key]


def weak_gradient(f: DgScalarField, side: FluxSide,
                  boundary: BoundaryFlux = BoundaryFlux.COPY) -> DgVectorField:
    """Componentwise weak derivative with the trace of f taken from `side` on every face"""
    space = f.space
    x = f.active_vector()
    return DgVectorField([DgScalarField.from_active(space, derivative_matrix(space, d, side, boundary) @ x)
                          for d in range(space.mesh.dim)])


def weak_divergence(F: DgVectorField, side: FluxSide,
                    boundary: BoundaryFlux = BoundaryFlux.COPY) -> DgScalarField:
    space = F.space
    out = np.zeros(space.ndofs)
    for d in range(space.mesh.dim):
        out += derivative_matrix(space, d, side, boundary) @ F[d].active_vector()
    return DgScalarField.from_active(space, out)


def conserved_boundary(space: DgSpace) -> BoundaryFlux:
    """
    Boundary rule of omega-hat and of the flux in the phi equation: nothing crosses a copy-trace
    boundary. grad_L under this rule is minus the adjoint of div_R with copied traces, so the
    frozen fourth order part stays non-positive.
    """
    return BoundaryFlux.COPY if space.mesh.periodic else BoundaryFlux.NONE


# Pointwise closures

def regularized_norm(r: DgVectorField, eps: float) -> np.ndarray:
    """Q_eps = sqrt(eps + |r|^2) at volume quadrature points"""
    r_values = r.values()
    qeps = np.sqrt(eps + np.sum(r_values ** 2, axis=0))
    _check_qeps(qeps, eps)
    return qeps


def _check_qeps(qeps: np.ndarray, eps: float):
    if not np.all(np.isfinite(qeps)):
        raise BlowUpError("Non-finite Q_eps; the level set function has blown up")
    if np.min(qeps) < np.sqrt(eps) * (1.0 - 1e-12):
        raise StateError(f"Q_eps fell below sqrt(eps) = {np.sqrt(eps):.3e}")


def tangential_projector(r_values: np.ndarray, qeps: np.ndarray) -> np.ndarray:
    """E = (I - r (x) r / Q^2) / Q at every quadrature point, shape (ncells, nq, dim, dim)"""
    dim = r_values.shape[0]
    r = np.moveaxis(r_values, 0, -1)
    eye = np.eye(dim)[None, None, :, :]
    outer = r[..., :, None] * r[..., None, :]
    return (eye - outer / qeps[..., None, None] ** 2) / qeps[..., None, None]


def closure_q(r: DgVectorField, eps: float, qeps: Optional[np.ndarray] = None) -> DgVectorField:
    """Projection of r / Q_eps"""
    if qeps is None:
        qeps = regularized_norm(r, eps)
    space = r.space
    return DgVectorField([DgScalarField(space, space.project(c.values() / qeps)) for c in r.components])


def closure_omega(H: DgScalarField, qeps: np.ndarray) -> DgScalarField:
    """Projection of Q_eps H"""
    return DgScalarField(H.space, H.space.project(qeps * H.values()))


def closure_s(p: DgVectorField, E: np.ndarray) -> DgVectorField:
    """Projection of E p"""
    space = p.space
    p_values = np.moveaxis(p.values(), 0, -1)
    s_values = np.einsum("cqab,cqb->acq", E, p_values)
    return DgVectorField([DgScalarField(space, space.project(s_values[a])) for a in range(len(p))])


def closure_v(omega_values: np.ndarray, r: DgVectorField, qeps: np.ndarray) -> DgVectorField:
    """Projection of omega^2 / (2 Q_eps^3) r, omega given at quadrature points"""
    space = r.space
    drift = 0.5 * omega_values ** 2 / qeps ** 3
    return DgVectorField([DgScalarField(space, space.project(drift * c.values())) for c in r.components])


@dataclass
class AuxChain:
    r: DgVectorField
    qeps: np.ndarray
    q: DgVectorField
    H: DgScalarField
    omega: DgScalarField
    p: DgVectorField
    E: np.ndarray
    s: DgVectorField
    v: DgVectorField


def aux_chain(u: DgScalarField, eps: float) -> AuxChain:
    """All auxiliary fields of the first order system for a given level set function"""
    r = weak_gradient(u, FLUX_TABLE["phi"])
    qeps = regularized_norm(r, eps)
    q = closure_q(r, eps, qeps)
    H = weak_divergence(q, FLUX_TABLE["q"])
    omega = closure_omega(H, qeps)
    p = weak_gradient(omega, FLUX_TABLE["omega"], conserved_boundary(u.space))
    E = tangential_projector(r.values(), qeps)
    s = closure_s(p, E)
    v = closure_v(omega.values(), r, qeps)
    return AuxChain(r, qeps, q, H, omega, p, E, s, v)


@dataclass
class FrozenCoefficients:
    """u-dependent data of the semi-implicit splitting, sampled at volume quadrature points."""

    space: DgSpace
    eps: float
    qeps: np.ndarray
    E: np.ndarray
    omega: np.ndarray
    drift: np.ndarray
    H: Optional[DgScalarField] = None
    state: Optional[DgScalarField] = None
    _cache: dict = field(default_factory=dict, repr=False)

    def mass(self, name: str) -> sp.csr_matrix:
        """Active-space weighted mass matrices: 'inv_q' (1/Q), 'q' (Q), 'drift', 'weight_inv'"""
        if name not in self._cache:
            if name == "inv_q":
                blocks = self.space.mass_blocks(1.0 / self.qeps)
            elif name == "q":
                blocks = self.space.mass_blocks(self.qeps)
            elif name == "drift":
                blocks = self.space.mass_blocks(self.drift)
            elif name == "weight_inv":
                blocks = np.linalg.inv(self.space.mass_blocks(1.0 / self.qeps))
            else:
                raise KeyError(name)
            full = block_diagonal(blocks)
            self._cache[name] = full[self.space.active][:, self.space.active].tocsr()
        return self._cache[name]

    def tensor_mass(self) -> sp.csr_matrix:
        """Block matrix [M_{E_ab}] acting on stacked vector components"""
        if "E" not in self._cache:
            dim = self.E.shape[-1]
            act = self.space.active
            rows = []
            for a in range(dim):
                row = []
                for b in range(dim):
                    full = block_diagonal(self.space.mass_blocks(self.E[..., a, b]))
                    row.append(full[act][:, act])
                rows.append(row)
            self._cache["E"] = sp.bmat(rows, format="csr")
        return self._cache["E"]


def build_frozen(u: DgScalarField, eps: float) -> FrozenCoefficients:
    """
    Freeze Q_eps(u), E(u), omega(u) and the drift coefficient omega(u)^2 / (2 Q_eps(u)^3)
    """
    r = weak_gradient(u, FLUX_TABLE["phi"])
    qeps = regularized_norm(r, eps)
    q = closure_q(r, eps, qeps)
    H = weak_divergence(q, FLUX_TABLE["q"])
    omega = closure_omega(H, qeps)
    omega_values = omega.values()
    E = tangential_projector(r.values(), qeps)
    drift = 0.5 * omega_values ** 2 / qeps ** 3
    if not (np.all(np.isfinite(E)) and np.all(np.isfinite(drift))):
        raise BlowUpError("Non-finite frozen coefficients")
    return FrozenCoefficients(u.space, eps, qeps, E, omega_values, drift, H, u)


def _check_space(fc: FrozenCoefficients, v: DgScalarField):
    if not fc.space.same_as(v.space):
        raise StateError("Frozen coefficients and argument live on different meshes or degree maps")


def apply_linear(fc: FrozenCoefficients, v: DgScalarField) -> DgScalarField:
    """
    Frozen-coefficient operator L v = -M_{1/Q}^{-1} div_L(E grad_L omega_v - drift grad_R v),
    omega_v = Q div_R(grad_R v / Q)
    """
    _check_space(fc, v)
    return DgScalarField.from_active(v.space, apply_linear_vector(fc, v.active_vector()))


def apply_linear_vector(fc: FrozenCoefficients, x: np.ndarray) -> np.ndarray:
    """apply_linear on active coefficient vectors"""
    space = fc.space
    dim = space.mesh.dim
    grad_r = [derivative_matrix(space, d, FLUX_TABLE["phi"]) for d in range(dim)]
    div_q = [derivative_matrix(space, d, FLUX_TABLE["q"]) for d in range(dim)]
    grad_l = [derivative_matrix(space, d, FLUX_TABLE["omega"], conserved_boundary(space)) for d in range(dim)]
    div_flux = [derivative_matrix(space, d, FLUX_TABLE["s"], conserved_boundary(space)) for d in range(dim)]

    r = [g @ x for g in grad_r]
    m_inv_q = fc.mass("inv_q")
    H = sum(div_q[d] @ (m_inv_q @ r[d]) for d in range(dim))
    omega = fc.mass("q") @ H
    p = np.concatenate([g @ omega for g in grad_l])
    flux = fc.tensor_mass() @ p - np.concatenate([fc.mass("drift") @ rd for rd in r])
    n = space.ndofs
    div = sum(div_flux[d] @ flux[d * n:(d + 1) * n] for d in range(dim))
    return -(fc.mass("weight_inv") @ div)


def assemble_linear(fc: FrozenCoefficients) -> sp.csr_matrix:
    """Sparse matrix of apply_linear on the active modes"""
    if "L" in fc._cache:
        return fc._cache["L"]
    space = fc.space
    dim = space.mesh.dim
    grad_r = sp.vstack([derivative_matrix(space, d, FLUX_TABLE["phi"]) for d in range(dim)], format="csr")
    div_q = sp.hstack([derivative_matrix(space, d, FLUX_TABLE["q"]) for d in range(dim)], format="csr")
    grad_l = sp.vstack([derivative_matrix(space, d, FLUX_TABLE["omega"], conserved_boundary(space))
                        for d in range(dim)], format="csr")
    div_flux = sp.hstack([derivative_matrix(space, d, FLUX_TABLE["s"], conserved_boundary(space))
                          for d in range(dim)], format="csr")
    m_inv_q = sp.block_diag([fc.mass("inv_q")] * dim, format="csr")
    m_drift = sp.block_diag([fc.mass("drift")] * dim, format="csr")

    curvature = div_q @ (m_inv_q @ grad_r)
    omega = fc.mass("q") @ curvature
    flux = fc.tensor_mass() @ (grad_l @ omega) - m_drift @ grad_r
    L = -(fc.mass("weight_inv") @ (div_flux @ flux))
    fc._cache["L"] = L.tocsr()
    logging.debug(f"Assembled frozen operator: {space.ndofs} dofs, {L.nnz} nonzeros")
    return fc._cache["L"]


def project_source(space: DgSpace, source: Callable[[np.ndarray, float], np.ndarray],
                   t: float) -> DgScalarField:
    return DgScalarField(space, space.project(source(space.disc.points, t)))


def rhs(u: DgScalarField, eps: float,
        source: Optional[Callable[[np.ndarray, float], np.ndarray]] = None,
        t: float = 0.0) -> DgScalarField:
    """Fully explicit residual apply_linear(build_frozen(u), u) plus the projected source"""
    out = apply_linear(build_frozen(u, eps), u)
    if source is not None:
        out = out + project_source(u.space, source, t)
    return out
