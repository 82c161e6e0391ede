"""
Manufactured solution for the 1D accuracy test and the symbolic radius law.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
import sympy

AMPLITUDE = 0.05


@lru_cache(maxsize=None)
def _source_expression(amplitude: float):
    x, t, eps = sympy.symbols("x t eps", real=True)
    phi = amplitude * sympy.sin(x) * sympy.cos(t)
    r = sympy.diff(phi, x)
    Q = sympy.sqrt(eps + r ** 2)
    q = r / Q
    H = sympy.diff(q, x)
    omega = Q * H
    # 1D tangential projector reduces to eps / Q^3
    s = eps / Q ** 3 * sympy.diff(omega, x)
    v = omega ** 2 / (2 * Q ** 3) * r
    f = sympy.diff(phi, t) + Q * sympy.diff(s - v, x)
    return (x, t, eps), f


@lru_cache(maxsize=None)
def _source_function(amplitude: float):
    args, f = _source_expression(amplitude)
    return sympy.lambdify(args, f, "numpy")


@dataclass(frozen=True)
class MMSCase:
    """phi(x, t) = amplitude sin(x) cos(t) on the periodic interval [0, 2 pi]"""

    eps: float = 1.0
    amplitude: float = AMPLITUDE
    final_time: float = 0.5
    domain: tuple = (0.0, 2 * np.pi)

    def exact(self, points: np.ndarray, t: float) -> np.ndarray:
        return self.amplitude * np.sin(points[..., 0]) * np.cos(t)

    def initial(self, points: np.ndarray) -> np.ndarray:
        return self.exact(points, 0.0)

    def source(self) -> Callable[[np.ndarray, float], np.ndarray]:
        """f(points, t) making exact() solve the regularized flow"""
        f = _source_function(self.amplitude)
        eps = self.eps

        def evaluate(points: np.ndarray, t: float) -> np.ndarray:
            return np.asarray(f(points[..., 0], t, eps), dtype=float) * np.ones(points.shape[:-1])

        return evaluate


def radius_velocity():
    """
    R'(t) for a circle phi = |x| - R moving under the flow with eps -> 0

    Returns:
        tuple: (R symbol, simplified expression of R')
    """
    x, y = sympy.symbols("x y", real=True)
    R = sympy.symbols("R", positive=True)
    eps = sympy.symbols("eps", nonnegative=True)
    phi = sympy.sqrt(x ** 2 + y ** 2) - R
    coords = (x, y)
    r = [sympy.diff(phi, c) for c in coords]
    Q = sympy.sqrt(eps + r[0] ** 2 + r[1] ** 2)
    H = sum(sympy.diff(r[i] / Q, coords[i]) for i in range(2))
    omega = Q * H
    p = [sympy.diff(omega, c) for c in coords]
    E = [[((1 if i == j else 0) - r[i] * r[j] / Q ** 2) / Q for j in range(2)] for i in range(2)]
    flux = [sum(E[i][j] * p[j] for j in range(2)) - omega ** 2 / (2 * Q ** 3) * r[i] for i in range(2)]
    phi_t = -Q * sum(sympy.diff(flux[i], coords[i]) for i in range(2))

    # phi_t = -R' on the zero set x = (R, 0)
    velocity = -phi_t.subs(eps, 0).subs({x: R, y: 0})
    return R, sympy.simplify(velocity)


def radius_law(r0: float, t):
    """Solution of R' = 1 / (2 R^3), R(0) = r0"""
    return (r0 ** 4 + 2.0 * np.asarray(t)) ** 0.25
