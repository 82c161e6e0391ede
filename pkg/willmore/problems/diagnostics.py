"""
Scalar and geometric diagnostics of a level set field: energy, mass rate,
zero-contour extraction and the shape measures computed from it.
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage
from scipy.spatial.distance import directed_hausdorff
from skimage import measure

from ..dgcore import DgScalarField
from ..exceptions import ConfigError
from ..ldg import FLUX_TABLE, build_frozen, regularized_norm, weak_gradient

# Reference coordinates of the per-cell sampling subgrid
SAMPLE_POINTS = np.array([-2.0 / 3.0, 0.0, 2.0 / 3.0])
ZERO_NUDGE = 1e-14


def energy(u: DgScalarField, eps: float) -> float:
    """E_h = 1/2 sum_K int_K H^2 Q_eps"""
    fc = build_frozen(u, eps)
    H = fc.H.values()
    return float(0.5 * np.sum(H ** 2 * fc.qeps * u.space.disc.weights[None, :]))


def _qeps(u: DgScalarField, eps: float, qeps: Optional[np.ndarray]) -> np.ndarray:
    if qeps is None:
        qeps = regularized_norm(weak_gradient(u, FLUX_TABLE["phi"]), eps)
    return qeps


def mass_rate(u: DgScalarField, phi_t: DgScalarField, eps: float,
              qeps: Optional[np.ndarray] = None) -> float:
    """sum_K int_K phi_t / Q_eps, with Q_eps from u unless given"""
    qeps = _qeps(u, eps, qeps)
    return float(np.sum(phi_t.values() / qeps * u.space.disc.weights[None, :]))


def energy_dissipation_rate(u: DgScalarField, phi_t: DgScalarField, eps: float,
                            qeps: Optional[np.ndarray] = None) -> float:
    """sum_K int_K phi_t^2 / Q_eps"""
    qeps = _qeps(u, eps, qeps)
    return float(np.sum(phi_t.values() ** 2 / qeps * u.space.disc.weights[None, :]))


def sample_grid(u: DgScalarField) -> Tuple[np.ndarray, np.ndarray]:
    """
    Values on the 3x3-per-cell sampling grid

    Args:
        u: 2D field

    Returns:
        tuple: (values of shape (3 nx, 3 ny), per-axis sample coordinates)
    """
    mesh = u.mesh
    if mesh.dim != 2:
        raise ConfigError("Contours need a 2D field")
    ref = np.stack(np.meshgrid(SAMPLE_POINTS, SAMPLE_POINTS, indexing="ij"), axis=-1).reshape(-1, 2)
    values = u.values_at(ref)  # (ncells, 9), last reference axis fastest
    nx, ny = mesh.shape
    grid = values.reshape(nx, ny, 3, 3).transpose(0, 2, 1, 3).reshape(3 * nx, 3 * ny)

    # Exact zeros would put contour vertices on sample points
    grid = np.where(grid == 0.0, ZERO_NUDGE * float(np.min(mesh.h)), grid)
    coords = [mesh.lower[d] + mesh.h[d] / 6.0 + np.arange(3 * mesh.shape[d]) * mesh.h[d] / 3.0
              for d in range(2)]
    return grid, coords


def extract_contour(u: DgScalarField, level: float = 0.0) -> List[np.ndarray]:
    """Polylines of {u = level} in physical coordinates, one (m, 2) array each"""
    grid, coords = sample_grid(u)
    h = u.mesh.h
    polylines = []
    # Outside (high) samples are 8-connected, inside samples 4-connected
    for contour in measure.find_contours(grid, level, fully_connected="high"):
        pts = np.empty_like(contour)
        for d in range(2):
            pts[:, d] = coords[d][0] + contour[:, d] * h[d] / 3.0
        polylines.append(pts)
    return polylines


def count_regions(u: DgScalarField) -> int:
    """Connected components of the sampled set {u < 0}"""
    grid, _ = sample_grid(u)
    _, count = ndimage.label(grid < 0)
    return int(count)


def is_closed(polyline: np.ndarray) -> bool:
    return len(polyline) > 2 and np.allclose(polyline[0], polyline[-1])


def polygon_area(polyline: np.ndarray) -> float:
    x, y = polyline[:, 0], polyline[:, 1]
    return float(0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def polygon_perimeter(polyline: np.ndarray) -> float:
    pts = polyline if is_closed(polyline) else np.vstack([polyline, polyline[:1]])
    return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))


def isoperimetric_ratio(polyline: np.ndarray) -> float:
    """4 pi A / P^2, 1 for a circle"""
    perimeter = polygon_perimeter(polyline)
    if perimeter == 0:
        return 0.0
    return 4.0 * np.pi * polygon_area(polyline) / perimeter ** 2


def fit_circle(points: np.ndarray) -> Tuple[np.ndarray, float]:
    """
    Algebraic least squares circle fit

    Solves x^2 + y^2 = A x + B y + C, center (A/2, B/2), radius sqrt(C + |center|^2).

    Returns:
        tuple: (center, radius)
    """
    x, y = points[:, 0], points[:, 1]
    system = np.column_stack([x, y, np.ones_like(x)])
    (A, B, C), *_ = np.linalg.lstsq(system, x ** 2 + y ** 2, rcond=None)
    center = np.array([A / 2.0, B / 2.0])
    return center, float(np.sqrt(C + center @ center))


def fitted_radius(u: DgScalarField) -> float:
    """Radius of the circle fitted to the longest zero contour"""
    polylines = extract_contour(u)
    if not polylines:
        logging.warning("No zero contour to fit a circle to")
        return float("nan")
    longest = max(polylines, key=len)
    return fit_circle(longest)[1]


def hausdorff_distance(a: Sequence[np.ndarray], b: Sequence[np.ndarray]) -> float:
    """Symmetric Hausdorff distance between two polyline sets, vertex based"""
    pa = np.vstack(a)
    pb = np.vstack(b)
    return float(max(directed_hausdorff(pa, pb)[0], directed_hausdorff(pb, pa)[0]))


def summarize(u: DgScalarField, eps: float) -> dict:
    """Energy and shape measures of one snapshot"""
    summary = {"energy": energy(u, eps)}
    if u.mesh.dim == 2:
        polylines = extract_contour(u)
        closed = [p for p in polylines if is_closed(p)]
        summary["contours"] = len(polylines)
        summary["regions"] = count_regions(u)
        summary["isoperimetric_ratio"] = (isoperimetric_ratio(max(closed, key=len))
                                          if closed else float("nan"))
    return summary
