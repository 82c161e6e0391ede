"""Structured rectangular meshes in 1D/2D with left/right labeled faces."""

from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np

from .exceptions import ConfigError
from .utils import validators

PERIODIC = "periodic"
COPY_TRACE = "copy-trace"

# Fixed labeling vector; no face normal of an axis-aligned grid is orthogonal to it
NU0 = {1: np.array([1.0]), 2: np.array([1.0, 1.0])}


@dataclass(frozen=True)
class Face:
    axis: int
    left_cell: int
    right_cell: int
    normal: Tuple[float, ...]  # exterior to the labeled left cell


@dataclass(frozen=True)
class BoundaryFace:
    axis: int
    cell: int
    side: int  # +1 when the face is the cell's upper face along axis, -1 otherwise


@dataclass(frozen=True)
class TraceLocator:
    cell: int
    axis: int
    side: int  # reference coordinate (+1 or -1) of the cell face holding the trace


class StructuredMesh:
    """Uniform cell grid, cells numbered lexicographically (last axis fastest)."""

    def __init__(self, dim: int, lower: Sequence[float], upper: Sequence[float],
                 n: Sequence[int], boundary_mode: str = PERIODIC):
        self.dim = dim
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        self.shape = tuple(int(k) for k in n)
        self.boundary_mode = boundary_mode
        self.h = (self.upper - self.lower) / np.asarray(self.shape, dtype=float)
        self.ncells = int(np.prod(self.shape))
        self.nu0 = NU0[dim]

        self._multi = np.stack(np.unravel_index(np.arange(self.ncells), self.shape), axis=1)
        self._interior = {}
        self._boundary = {}
        self.faces: List[Face] = []
        self.boundary_faces: List[BoundaryFace] = []
        for axis in range(dim):
            self._label_axis(axis)

    @property
    def periodic(self) -> bool:
        return self.boundary_mode == PERIODIC

    def cell_index(self, multi) -> int:
        return int(np.ravel_multi_index(tuple(multi), self.shape))

    def cell_multi_index(self, cell: int) -> np.ndarray:
        return self._multi[cell]

    def cell_lower_corners(self) -> np.ndarray:
        return self.lower[None, :] + self._multi * self.h[None, :]

    def cell_centers(self) -> np.ndarray:
        return self.cell_lower_corners() + 0.5 * self.h[None, :]

    def neighbor(self, cell: int, axis: int, step: int) -> int:
        """Neighbor index along axis, or -1 across a non-periodic boundary"""
        multi = self._multi[cell].copy()
        multi[axis] += step
        if multi[axis] < 0 or multi[axis] >= self.shape[axis]:
            if not self.periodic:
                return -1
            multi[axis] %= self.shape[axis]
        return self.cell_index(multi)

    def _label_axis(self, axis: int):
        lefts, rights = [], []
        bcells, bsides = [], []
        e = np.zeros(self.dim)
        e[axis] = 1.0
        for cell in range(self.ncells):
            upper = self.neighbor(cell, axis, +1)
            if upper < 0:
                bcells.append(cell)
                bsides.append(+1)
                continue
            # cell sees the face with exterior normal +e, the upper cell with -e
            if np.dot(e, self.nu0) < 0:
                left, right, normal = cell, upper, e
            else:
                left, right, normal = upper, cell, -e
            lefts.append(left)
            rights.append(right)
            self.faces.append(Face(axis, left, right, tuple(normal)))
        for cell in range(self.ncells):
            if self.neighbor(cell, axis, -1) < 0:
                bcells.append(cell)
                bsides.append(-1)
        self._interior[axis] = (np.asarray(lefts, dtype=int), np.asarray(rights, dtype=int))
        self._boundary[axis] = (np.asarray(bcells, dtype=int), np.asarray(bsides, dtype=int))
        self.boundary_faces.extend(BoundaryFace(axis, c, s) for c, s in zip(bcells, bsides))

    def interior_faces(self, axis: int) -> Tuple[np.ndarray, np.ndarray]:
        """(left cells, right cells) of every interior face normal to axis"""
        return self._interior[axis]

    def boundary_cells(self, axis: int) -> Tuple[np.ndarray, np.ndarray]:
        """(cells, sides) of every boundary face normal to axis"""
        return self._boundary[axis]

    def can_coarsen(self, min_cells: int) -> bool:
        return all(k % 2 == 0 and k // 2 >= min_cells for k in self.shape)

    def coarsen(self) -> "StructuredMesh":
        return StructuredMesh(self.dim, self.lower, self.upper,
                              [k // 2 for k in self.shape], self.boundary_mode)

    def parent_of(self) -> np.ndarray:
        """Coarse-cell index of every fine cell under factor-2 coarsening"""
        coarse_shape = tuple(k // 2 for k in self.shape)
        return np.ravel_multi_index(tuple((self._multi // 2).T), coarse_shape)

    def child_offsets(self) -> np.ndarray:
        """Position (+-1 per axis) of every fine cell inside its parent"""
        return 2 * (self._multi % 2) - 1

    def __repr__(self):
        return (f"StructuredMesh(dim={self.dim}, shape={self.shape}, "
                f"h={tuple(self.h)}, boundary_mode={self.boundary_mode!r})")


def build_mesh(dim: int, domain: Sequence, n: Union[int, Sequence[int]],
               boundary_mode: str = PERIODIC) -> StructuredMesh:
    """
    Build a uniform mesh on a box

    Args:
        dim: 1 or 2
        domain: one [a, b] interval applied to every axis, or one interval per axis
        n: cells per axis (int for all axes)
        boundary_mode: "periodic" or "copy-trace"

    Returns:
        StructuredMesh: mesh with every face labeled by the nu0 rule
    """
    counts = [int(n)] * dim if np.isscalar(n) else [int(k) for k in n]
    intervals = np.asarray(domain, dtype=float)
    if intervals.ndim == 1:
        intervals = np.tile(intervals, (dim, 1))

    is_valid, error_msg = validators.validate_mesh(dim, intervals, counts, boundary_mode)
    if not is_valid:
        raise ConfigError(error_msg)

    return StructuredMesh(dim, intervals[:, 0], intervals[:, 1], counts, boundary_mode)


def face_traces(mesh: StructuredMesh, face: Face) -> Tuple[TraceLocator, TraceLocator]:
    """Locate the cells (and their reference faces) supplying psi_L and psi_R on a face"""
    # The labeled left cell has the exterior normal `face.normal`; its face sits on the
    # reference side matching the sign of that normal along the face axis
    side_left = int(np.sign(face.normal[face.axis]))
    return (TraceLocator(face.left_cell, face.axis, side_left),
            TraceLocator(face.right_cell, face.axis, -side_left))
