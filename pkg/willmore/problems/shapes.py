"""
Initial interfaces as signed distance (or distance-like) functions.

Every shape maps points of shape (..., 2) to values of shape (...), negative inside.
"""

from dataclasses import dataclass
from typing import Callable, Dict, Tuple

import numpy as np

from ..exceptions import ConfigError

ELLIPSE_BISECTIONS = 100
FD_STEP = 1e-6


def _split(x: np.ndarray, center) -> Tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    return x[..., 0] - center[0], x[..., 1] - center[1]


def _ellipse_distance(x: np.ndarray, y: np.ndarray, a: float, b: float) -> np.ndarray:
    """Unsigned distance to the ellipse (x/a)^2 + (y/b)^2 = 1"""
    if a < b:
        return _ellipse_distance(y, x, b, a)
    y0, y1 = np.abs(x).astype(float), np.abs(y).astype(float)
    dist = np.empty_like(y0)

    # Points on the major axis
    on_axis = y1 == 0
    numer = a * y0[on_axis]
    denom = a * a - b * b
    inner = numer < denom
    xde = np.where(inner, numer / denom if denom > 0 else 0.0, 1.0)
    x0 = a * xde
    x1 = b * np.sqrt(np.clip(1.0 - xde ** 2, 0.0, None))
    dist[on_axis] = np.sqrt((x0 - y0[on_axis]) ** 2 + x1 ** 2)

    # Everything else: closest point from the root s of
    # (r0 z0 / (s + r0))^2 + (z1 / (s + 1))^2 = 1
    off = ~on_axis
    z0, z1 = y0[off] / a, y1[off] / b
    r0 = (a / b) ** 2
    g = z0 ** 2 + z1 ** 2 - 1.0
    lo = z1 - 1.0
    hi = np.where(g < 0, 0.0, np.hypot(r0 * z0, z1) - 1.0)
    for _ in range(ELLIPSE_BISECTIONS):
        s = 0.5 * (lo + hi)
        G = (r0 * z0 / (s + r0)) ** 2 + (z1 / (s + 1.0)) ** 2 - 1.0
        lo = np.where(G > 0, s, lo)
        hi = np.where(G > 0, hi, s)
    s = 0.5 * (lo + hi)
    x0 = r0 * y0[off] / (s + r0)
    x1 = y1[off] / (s + 1.0)
    dist[off] = np.hypot(x0 - y0[off], x1 - y1[off])
    return dist


def _curve_gradient_median(level: Callable[[np.ndarray], np.ndarray], curve: np.ndarray) -> float:
    """Median of |grad level| over sample points of its zero set"""
    grads = []
    for d in range(2):
        step = np.zeros(2)
        step[d] = FD_STEP
        grads.append((level(curve + step) - level(curve - step)) / (2 * FD_STEP))
    return float(np.median(np.hypot(*grads)))


@dataclass(frozen=True)
class Circle:
    radius: float = 1.0
    center: Tuple[float, float] = (0.0, 0.0)

    def signed_distance(self, x):
        dx, dy = _split(x, self.center)
        return np.hypot(dx, dy) - self.radius


@dataclass(frozen=True)
class Ellipse:
    semi_axes: Tuple[float, float] = (1.2, 0.6)
    center: Tuple[float, float] = (2.0, 2.0)

    def signed_distance(self, x):
        dx, dy = _split(x, self.center)
        a, b = self.semi_axes
        dist = _ellipse_distance(dx, dy, a, b)
        inside = (dx / a) ** 2 + (dy / b) ** 2 < 1.0
        return np.where(inside, -dist, dist)


@dataclass(frozen=True)
class Square:
    side: float = 1.6
    center: Tuple[float, float] = (2.0, 2.0)

    def signed_distance(self, x):
        dx, dy = _split(x, self.center)
        half = 0.5 * self.side
        qx, qy = np.abs(dx) - half, np.abs(dy) - half
        outside = np.hypot(np.maximum(qx, 0.0), np.maximum(qy, 0.0))
        inside = np.minimum(np.maximum(qx, qy), 0.0)
        return outside + inside


@dataclass(frozen=True)
class Asteroid:
    """|x|^(2/3) + |y|^(2/3) = a^(2/3), as a degree-one homogeneous level function"""

    scale: float = 1.2
    center: Tuple[float, float] = (2.0, 2.0)

    def level(self, x):
        dx, dy = _split(x, self.center)
        return (np.abs(dx) ** (2.0 / 3.0) + np.abs(dy) ** (2.0 / 3.0)) ** 1.5 - self.scale

    def zero_set(self, samples: int = 2000) -> np.ndarray:
        # Stay clear of the cusps on the axes
        t = np.linspace(0.0, 2 * np.pi, samples, endpoint=False)
        t = t[np.abs(np.sin(2 * t)) > np.sin(np.deg2rad(10.0))]
        pts = self.scale * np.stack([np.cos(t) ** 3, np.sin(t) ** 3], axis=-1)
        return pts + np.asarray(self.center)

    def signed_distance(self, x):
        return self.level(x) / _curve_gradient_median(self.level, self.zero_set())


@dataclass(frozen=True)
class SingularCurve:
    """Polar rose rho = scale (1 + amplitude cos(petals theta))"""

    scale: float = 1.6
    amplitude: float = 0.8
    petals: int = 4
    center: Tuple[float, float] = (0.0, 0.0)

    def level(self, x):
        dx, dy = _split(x, self.center)
        theta = np.arctan2(dy, dx)
        return np.hypot(dx, dy) - self.scale * (1.0 + self.amplitude * np.cos(self.petals * theta))

    def zero_set(self, samples: int = 2000) -> np.ndarray:
        theta = np.linspace(0.0, 2 * np.pi, samples, endpoint=False)
        rho = self.scale * (1.0 + self.amplitude * np.cos(self.petals * theta))
        return np.stack([rho * np.cos(theta), rho * np.sin(theta)], axis=-1) + np.asarray(self.center)

    def signed_distance(self, x):
        return self.level(x) / _curve_gradient_median(self.level, self.zero_set())


@dataclass(frozen=True)
class TwoSquares:
    side: float = 1.2
    gap: float = 0.2
    center: Tuple[float, float] = (2.0, 2.0)

    def members(self) -> Tuple[Square, Square]:
        shift = 0.5 * (self.side + self.gap)
        cx, cy = self.center
        return Square(self.side, (cx - shift, cy)), Square(self.side, (cx + shift, cy))

    def signed_distance(self, x):
        left, right = self.members()
        return np.minimum(left.signed_distance(x), right.signed_distance(x))


@dataclass(frozen=True)
class CircleInEllipse:
    """Annulus: inside the ellipse and outside the concentric circle"""

    radius: float = 0.8
    semi_axes: Tuple[float, float] = (1.4, 1.0)
    center: Tuple[float, float] = (2.0, 2.0)

    def signed_distance(self, x):
        outer = Ellipse(self.semi_axes, self.center).signed_distance(x)
        hole = Circle(self.radius, self.center).signed_distance(x)
        return np.maximum(outer, -hole)


SHAPES: Dict[str, type] = {
    "circle": Circle,
    "ellipse": Ellipse,
    "square": Square,
    "asteroid": Asteroid,
    "singular": SingularCurve,
    "two-squares": TwoSquares,
    "circle-in-ellipse": CircleInEllipse,
}


def build_shape(name: str, **params):
    """Instantiate a shape by name, ignoring parameters it does not take"""
    cls = SHAPES.get(name)
    if cls is None:
        raise ConfigError(f"Unknown shape '{name}', expected one of {sorted(SHAPES)}")
    fields = cls.__dataclass_fields__
    kwargs = {k: (tuple(v) if isinstance(v, list) else v)
              for k, v in params.items() if k in fields and v is not None}
    return cls(**kwargs)


def signed_distance(shape, x: np.ndarray) -> np.ndarray:
    return shape.signed_distance(x)


def distance_defect(shape, domain, samples: int = 1000, seed: int = 0) -> float:
    """Mean | |grad phi| - 1 | at seeded random points of the domain"""
    rng = np.random.default_rng(seed)
    a, b = domain
    pts = rng.uniform(a, b, size=(samples, 2))
    grads = []
    for d in range(2):
        step = np.zeros(2)
        step[d] = FD_STEP
        grads.append((shape.signed_distance(pts + step) - shape.signed_distance(pts - step)) / (2 * FD_STEP))
    return float(np.mean(np.abs(np.hypot(*grads) - 1.0)))
