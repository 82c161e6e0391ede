import numpy as np
import pytest
import sympy

from willmore.problems.mms import AMPLITUDE, MMSCase, radius_law, radius_velocity
from willmore.problems.studies import mms_errors

# Eighth-order central difference weights for offsets -4..4
FD_WEIGHTS = np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0.0, 4 / 5, -1 / 5, 4 / 105, -1 / 280])
FD_STEP = 0.05


def _d(f):
    offsets = np.arange(-4, 5) * FD_STEP
    return lambda x: sum(w * f(x + o) for w, o in zip(FD_WEIGHTS, offsets)) / FD_STEP


def _source_by_differences(x, t, eps, amplitude=AMPLITUDE):
    r = lambda y: amplitude * np.cos(y) * np.cos(t)
    Q = lambda y: np.sqrt(eps + r(y) ** 2)
    q = lambda y: r(y) / Q(y)
    H = _d(q)
    omega = lambda y: Q(y) * H(y)
    p = _d(omega)
    flux = lambda y: eps / Q(y) ** 3 * p(y) - omega(y) ** 2 / (2 * Q(y) ** 3) * r(y)
    phi_t = -amplitude * np.sin(x) * np.sin(t)
    return phi_t + Q(x) * _d(flux)(x)


@pytest.mark.parametrize("eps", [1.0, 0.1])
def test_source_matches_finite_differences(rng, eps):
    case = MMSCase(eps=eps)
    f = case.source()
    x = rng.uniform(0.0, 2 * np.pi, size=10)
    t = rng.uniform(0.0, 0.5, size=10)
    for xi, ti in zip(x, t):
        expected = _source_by_differences(xi, ti, eps)
        got = float(f(np.array([[xi]]), ti)[0])
        assert got == pytest.approx(expected, abs=1e-8 * max(1.0, abs(expected)))


def test_exact_solution():
    case = MMSCase()
    pts = np.array([[np.pi / 2], [0.0]])
    np.testing.assert_allclose(case.exact(pts, 0.0), [AMPLITUDE, 0.0])
    np.testing.assert_allclose(case.initial(pts), case.exact(pts, 0.0))


def test_circle_radius_velocity():
    R, velocity = radius_velocity()
    assert sympy.simplify(velocity - 1 / (2 * R ** 3)) == 0


def test_radius_law():
    assert radius_law(1.0, 0.0) == pytest.approx(1.0)
    t = np.array([0.0, 0.5, 1.0])
    r = radius_law(0.8, t)
    # R^3 R' = 1/2
    dt = 1e-6
    rate = (radius_law(0.8, t + dt) - radius_law(0.8, t)) / dt
    np.testing.assert_allclose(r ** 3 * rate, 0.5, rtol=1e-4)


def test_manufactured_error_decreases_under_refinement():
    coarse = mms_errors(16, 1, 1.0, 0.005, final_time=0.05)
    fine = mms_errors(32, 1, 1.0, 0.005, final_time=0.05)
    assert fine[0] < coarse[0]
    assert fine[1] < coarse[1]
