"""
Orthonormal modal DG spaces with per-cell degree.

Coefficients are stored at the maximal mode count for every cell; modes above a
cell's degree are held at zero. Basis functions are orthonormal on each physical
cell, so unweighted mass matrices are the identity and changing degree is a
pad/truncate of coefficients.
"""

import logging
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import legendre

from . import config
from .exceptions import StateError
from .grid import StructuredMesh
from .utils import validators

MAX_DEGREE = 2
ALLOWED_DEGREES = (1, 2)
FLAG_WIDTH = 1.5  # cells within FLAG_WIDTH * h of the zero set get the high degree


def _legendre_1d(k: int, s: np.ndarray, derivative: bool = False) -> np.ndarray:
    """Orthonormal Legendre polynomial of degree k on [-1, 1]"""
    coef = np.zeros(k + 1)
    coef[k] = np.sqrt((2 * k + 1) / 2.0)
    if derivative:
        coef = legendre.legder(coef) if k > 0 else np.zeros(1)
    return legendre.legval(s, coef)


class Basis:
    """Tensor-product orthonormal Legendre modes, ordered so degree-k modes form a prefix."""

    def __init__(self, dim: int, k_max: int = MAX_DEGREE):
        self.dim = dim
        self.k_max = k_max
        if dim == 1:
            self.modes = [(i,) for i in range(k_max + 1)]
        else:
            modes = []
            for k in range(k_max + 1):
                shell = [(i, j) for i in range(k + 1) for j in range(k + 1) if max(i, j) == k]
                # (k,0) before (0,k) keeps a stable lexicographic-by-degree order
                modes.extend(sorted(shell, key=lambda m: (max(m), min(m), -m[0])))
            self.modes = modes
        self.size = len(self.modes)

    def mode_count(self, degree: int) -> int:
        return (degree + 1) ** self.dim

    def values(self, points: np.ndarray) -> np.ndarray:
        """Mode values at reference points, shape (npoints, nmodes)"""
        points = np.atleast_2d(points)
        out = np.ones((points.shape[0], self.size))
        for i, mode in enumerate(self.modes):
            for d, k in enumerate(mode):
                out[:, i] *= _legendre_1d(k, points[:, d])
        return out

    def derivatives(self, points: np.ndarray, axis: int) -> np.ndarray:
        """Reference derivative along axis of every mode, shape (npoints, nmodes)"""
        points = np.atleast_2d(points)
        out = np.ones((points.shape[0], self.size))
        for i, mode in enumerate(self.modes):
            for d, k in enumerate(mode):
                out[:, i] *= _legendre_1d(k, points[:, d], derivative=(d == axis))
        return out


class Quadrature:
    """Tensor Gauss-Legendre rule on the reference cell and its faces."""

    def __init__(self, dim: int, n_q: int = config.QUADRATURE_POINTS):
        self.dim = dim
        self.n_q = n_q
        s, w = legendre.leggauss(n_q)
        self.points_1d, self.weights_1d = s, w
        if dim == 1:
            self.points = s[:, None]
            self.weights = w.copy()
            self.face_points_1d = np.zeros((1, 0))
            self.face_weights = np.ones(1)
        else:
            grid = np.stack(np.meshgrid(s, s, indexing="ij"), axis=-1).reshape(-1, 2)
            self.points = grid
            self.weights = np.outer(w, w).ravel()
            self.face_points_1d = s[:, None]
            self.face_weights = w.copy()

    def face_points(self, axis: int, side: int) -> np.ndarray:
        """Reference points on the face xi_axis = side"""
        npts = self.face_weights.size
        pts = np.zeros((npts, self.dim))
        pts[:, axis] = side
        others = [d for d in range(self.dim) if d != axis]
        for j, d in enumerate(others):
            pts[:, d] = self.face_points_1d[:, j]
        return pts


class DegreeMap:
    """Per-cell polynomial degree."""

    def __init__(self, degrees: Sequence[int]):
        degrees = np.array(degrees, dtype=int)
        is_valid, error_msg = validators.validate_degrees(degrees, ALLOWED_DEGREES)
        if not is_valid:
            raise StateError(error_msg)
        self.degrees = degrees
        self.degrees.setflags(write=False)

    @classmethod
    def uniform(cls, ncells: int, degree: int) -> "DegreeMap":
        return cls(np.full(ncells, degree, dtype=int))

    def __len__(self):
        return self.degrees.size

    def __eq__(self, other):
        return isinstance(other, DegreeMap) and np.array_equal(self.degrees, other.degrees)

    def __hash__(self):
        return hash(self.degrees.tobytes())

    def count(self, degree: int) -> int:
        return int(np.count_nonzero(self.degrees == degree))


class Discretization:
    """Mesh-level data shared by every degree map: basis, quadrature and point sets."""

    def __init__(self, mesh: StructuredMesh, k_max: int = MAX_DEGREE,
                 n_q: int = config.QUADRATURE_POINTS):
        self.mesh = mesh
        self.dim = mesh.dim
        self.basis = Basis(mesh.dim, k_max)
        self.quad = Quadrature(mesh.dim, n_q)
        self.nm = self.basis.size

        # Physical cell = reference cell scaled by h/2 per axis
        self.jacobian = float(np.prod(mesh.h / 2.0))
        self.scale = 1.0 / np.sqrt(self.jacobian)
        self.phi = self.basis.values(self.quad.points) * self.scale
        self.dphi = [self.basis.derivatives(self.quad.points, d) * self.scale * (2.0 / mesh.h[d])
                     for d in range(mesh.dim)]
        self.weights = self.quad.weights * self.jacobian
        self.points = self.to_physical(self.quad.points)
        self._spaces = {}

    def to_physical(self, ref_points: np.ndarray) -> np.ndarray:
        """Physical coordinates of reference points in every cell, shape (ncells, npts, dim)"""
        ref_points = np.atleast_2d(ref_points)
        corners = self.mesh.cell_lower_corners()
        return corners[:, None, :] + 0.5 * (ref_points[None, :, :] + 1.0) * self.mesh.h[None, None, :]

    def basis_at(self, ref_points: np.ndarray) -> np.ndarray:
        """Physical basis values at reference points, shape (npts, nmodes)"""
        return self.basis.values(ref_points) * self.scale

    def space(self, degree_map: DegreeMap) -> "DgSpace":
        key = hash(degree_map)
        space = self._spaces.get(key)
        if space is None or space.degree_map != degree_map:
            space = DgSpace(self, degree_map)
            # Keep the cache small; adaptive runs change the map almost every step
            if len(self._spaces) > 8:
                self._spaces.clear()
            self._spaces[key] = space
        return space

    def uniform_space(self, degree: int) -> "DgSpace":
        return self.space(DegreeMap.uniform(self.mesh.ncells, degree))


class DgSpace:
    """Discretization restricted to a degree map."""

    def __init__(self, disc: Discretization, degree_map: DegreeMap):
        if len(degree_map) != disc.mesh.ncells:
            raise StateError(f"Degree map has {len(degree_map)} cells, mesh has {disc.mesh.ncells}")
        self.disc = disc
        self.mesh = disc.mesh
        self.degree_map = degree_map
        counts = (degree_map.degrees + 1) ** disc.dim
        self.mask = np.arange(disc.nm)[None, :] < counts[:, None]
        self.active = np.flatnonzero(self.mask.ravel())
        self.ndofs = int(self.active.size)

    @property
    def nm(self) -> int:
        return self.disc.nm

    @property
    def ncells(self) -> int:
        return self.mesh.ncells

    def same_as(self, other: "DgSpace") -> bool:
        return self.disc is other.disc and self.degree_map == other.degree_map

    def evaluate(self, coeffs: np.ndarray) -> np.ndarray:
        """Values at volume quadrature points, shape (ncells, nq)"""
        return coeffs @ self.disc.phi.T

    def evaluate_gradient(self, coeffs: np.ndarray) -> np.ndarray:
        """Pointwise gradient of the cell polynomials, shape (dim, ncells, nq)"""
        return np.stack([coeffs @ dp.T for dp in self.disc.dphi])

    def project(self, values: np.ndarray) -> np.ndarray:
        """L2 projection of values given at volume quadrature points"""
        coeffs = (values * self.disc.weights[None, :]) @ self.disc.phi
        return coeffs * self.mask

    def mass_blocks(self, weights: np.ndarray) -> np.ndarray:
        """Weighted mass blocks restricted to each cell's degree, inactive modes set to identity"""
        wq = weights * self.disc.weights[None, :]
        blocks = np.einsum("qi,cq,qj->cij", self.disc.phi, wq, self.disc.phi)
        inactive = ~self.mask
        blocks[inactive[:, :, None] | inactive[:, None, :]] = 0.0
        idx = np.arange(self.nm)
        blocks[:, idx, idx] = np.where(inactive, 1.0, blocks[:, idx, idx])
        return blocks

    def to_active(self, coeffs: np.ndarray) -> np.ndarray:
        return coeffs.ravel()[self.active]

    def from_active(self, vector: np.ndarray) -> np.ndarray:
        coeffs = np.zeros(self.ncells * self.nm)
        coeffs[self.active] = vector
        return coeffs.reshape(self.ncells, self.nm)

    def zeros(self) -> "DgScalarField":
        return DgScalarField(self, np.zeros((self.ncells, self.nm)))


class DgScalarField:
    """Modal coefficients (ncells, nmodes) on a DgSpace."""

    # numpy scalars must defer to __rmul__
    __array_ufunc__ = None

    def __init__(self, space: DgSpace, coeffs: np.ndarray):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (space.ncells, space.nm):
            raise StateError(f"Coefficient array {coeffs.shape} does not fit space "
                             f"({space.ncells}, {space.nm})")
        self.space = space
        self.coeffs = coeffs * space.mask

    @classmethod
    def from_active(cls, space: DgSpace, vector: np.ndarray) -> "DgScalarField":
        return cls(space, space.from_active(vector))

    @property
    def mesh(self) -> StructuredMesh:
        return self.space.mesh

    @property
    def degree_map(self) -> DegreeMap:
        return self.space.degree_map

    def block(self, cell: int) -> np.ndarray:
        """Coefficients of one cell, length equal to its degree's mode count"""
        count = self.space.disc.basis.mode_count(int(self.degree_map.degrees[cell]))
        return self.coeffs[cell, :count]

    def active_vector(self) -> np.ndarray:
        return self.space.to_active(self.coeffs)

    def values(self) -> np.ndarray:
        return self.space.evaluate(self.coeffs)

    def values_at(self, ref_points: np.ndarray) -> np.ndarray:
        return self.coeffs @ self.space.disc.basis_at(ref_points).T

    def l2_norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def copy(self) -> "DgScalarField":
        return DgScalarField(self.space, self.coeffs.copy())

    def _check(self, other: "DgScalarField"):
        if not self.space.same_as(other.space):
            raise StateError("Fields live on different meshes or degree maps")

    def __add__(self, other):
        self._check(other)
        return DgScalarField(self.space, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return DgScalarField(self.space, self.coeffs - other.coeffs)

    def __mul__(self, alpha: float):
        return DgScalarField(self.space, alpha * self.coeffs)

    __rmul__ = __mul__

    def __neg__(self):
        return DgScalarField(self.space, -self.coeffs)


class DgVectorField:
    """One DgScalarField per spatial component, all on the same space."""

    def __init__(self, components: Sequence[DgScalarField]):
        components = list(components)
        space = components[0].space
        if any(not c.space.same_as(space) for c in components[1:]):
            raise StateError("Vector components must share mesh and degree map")
        self.components = components
        self.space = space

    def __getitem__(self, axis: int) -> DgScalarField:
        return self.components[axis]

    def __len__(self):
        return len(self.components)

    def stacked(self) -> np.ndarray:
        return np.stack([c.coeffs for c in self.components])

    def values(self) -> np.ndarray:
        """Component values at volume quadrature points, shape (dim, ncells, nq)"""
        return np.stack([c.values() for c in self.components])


def l2_project(f: Callable[[np.ndarray], np.ndarray], space: DgSpace) -> DgScalarField:
    """
    Project a function onto a DG space

    Args:
        f: Callable taking points of shape (..., dim) and returning values of shape (...)
        space: Target space

    Returns:
        DgScalarField: coefficients c_i = sum_q w_q f(x_q) b_i(x_q) per cell
    """
    values = np.asarray(f(space.disc.points), dtype=float)
    return DgScalarField(space, space.project(values))


def eval_field(field: DgScalarField, cell: int, ref_point: Sequence[float]) -> float:
    """Value of a field inside one cell at a reference point"""
    phi = field.space.disc.basis_at(np.asarray(ref_point, dtype=float)[None, :])[0]
    return float(field.coeffs[cell] @ phi)


def change_degree(field: DgScalarField, degree_map: DegreeMap) -> DgScalarField:
    """Move a field to another degree map: raising pads with zeros, lowering truncates"""
    space = field.space.disc.space(degree_map)
    return DgScalarField(space, field.coeffs)


def assign_degrees(phi: DgScalarField, h: float) -> DegreeMap:
    """
    Flag the cells near the zero level set for the high degree

    A cell gets degree 2 when the smallest |phi| over its volume quadrature points
    is at most 1.5 h, and degree 1 otherwise.
    """
    near = np.min(np.abs(phi.values()), axis=1) <= FLAG_WIDTH * h
    degrees = np.where(near, 2, 1)
    logging.debug(f"Degree flag: {int(near.sum())} of {near.size} cells at degree 2")
    return DegreeMap(degrees)


def weighted_mass_block(space: DgSpace, cell: int, weights: np.ndarray) -> np.ndarray:
    """
    Mass block of one cell weighted by values at its volume quadrature points

    Args:
        space: Space providing the basis
        cell: Cell index
        weights: Weight at each volume quadrature point, must be positive

    Returns:
        ndarray: symmetric positive definite block of the cell's active modes
    """
    weights = np.asarray(weights, dtype=float)
    if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
        raise StateError(f"Non-positive mass weight in cell {cell}")
    count = space.disc.basis.mode_count(int(space.degree_map.degrees[cell]))
    phi = space.disc.phi[:, :count]
    return phi.T @ ((weights * space.disc.weights)[:, None] * phi)


def error_norms(field: DgScalarField, exact: Callable[[np.ndarray, float], np.ndarray],
                t: float, n_q: Optional[int] = None) -> Tuple[float, float]:
    """
    L2 and Linf errors against an exact solution

    L2 uses an oversampled Gauss rule, Linf the maximum over those points plus
    every cell corner.
    """
    disc = field.space.disc
    quad = Quadrature(disc.dim, n_q or disc.quad.n_q + 2)
    points = disc.to_physical(quad.points)
    err = field.values_at(quad.points) - exact(points, t)
    l2 = float(np.sqrt(np.sum(err ** 2 * (quad.weights * disc.jacobian)[None, :])))

    corners = np.array(np.meshgrid(*([[-1.0, 1.0]] * disc.dim), indexing="ij")).reshape(disc.dim, -1).T
    corner_err = field.values_at(corners) - exact(disc.to_physical(corners), t)
    linf = float(max(np.max(np.abs(err)), np.max(np.abs(corner_err))))
    return l2, linf
