import numpy as np
import pytest

from willmore.exceptions import BlowUpError, ConfigError
from willmore.problems.studies import ode_order_study
from willmore.sirk import (SIRK1, SIRK2, ButcherPair, ScalarSplitProblem, get_tableau, integrate,
                           registered_tableaus, step, validate_pair)


def test_registered_tableaus_are_valid():
    assert set(registered_tableaus()) == {"sirk1", "sirk2"}
    for pair in registered_tableaus().values():
        assert validate_pair(pair) == (True, "")
    assert get_tableau("sirk2") is SIRK2
    with pytest.raises(ConfigError):
        get_tableau("rk4")


@pytest.mark.parametrize("overrides,message", [
    ({"a_hat": [[0.5]]}, "strictly lower"),
    ({"a": [[0.0]], "c": [0.0]}, "nonzero diagonal"),
    ({"c": [0.5]}, "row sums"),
    ({"b_hat": [0.5]}, "sum to one"),
    ({"order": 2}, "Second order"),
])
def test_invalid_pairs_are_rejected(overrides, message):
    fields = dict(name="bad", a_hat=[[0.0]], b_hat=[1.0], c_hat=[0.0], a=[[1.0]], b=[1.0], c=[1.0])
    fields.update(overrides)
    with pytest.raises(ConfigError, match=message):
        ButcherPair(**fields)


def test_first_order_pair_is_backward_euler_on_the_implicit_part():
    problem = ScalarSplitProblem(0.0, -3.0)
    u1 = step(np.array([2.0]), 0.0, 0.1, SIRK1, problem)
    np.testing.assert_allclose(u1, 2.0 / (1.0 + 0.3))


def test_first_order_pair_is_forward_euler_on_the_explicit_part():
    problem = ScalarSplitProblem(-3.0, 0.0)
    u1 = step(np.array([2.0]), 0.0, 0.1, SIRK1, problem)
    np.testing.assert_allclose(u1, 2.0 * (1.0 - 0.3))


def test_second_order_pair_reduces_to_explicit_midpoint():
    lam, dt = -1.5, 0.2
    problem = ScalarSplitProblem(lam, 0.0)
    u1 = step(np.array([1.0]), 0.0, dt, SIRK2, problem)
    np.testing.assert_allclose(u1, 1.0 + dt * lam * (1.0 + 0.5 * dt * lam))


def test_second_order_pair_reduces_to_implicit_midpoint():
    lam, dt = -4.0, 0.1
    problem = ScalarSplitProblem(0.0, lam)
    u1 = step(np.array([1.0]), 0.0, dt, SIRK2, problem)
    # midpoint stage then a full step with k evaluated at the midpoint
    np.testing.assert_allclose(u1, (1.0 + 0.5 * dt * lam) / (1.0 - 0.5 * dt * lam))


def test_zero_step_returns_a_copy():
    u0 = np.array([1.0, 2.0])
    u1 = step(u0, 0.0, 0.0, SIRK2, ScalarSplitProblem(-1.0, -1.0))
    np.testing.assert_array_equal(u1, u0)
    assert u1 is not u0


def test_negative_step_is_rejected():
    with pytest.raises(ConfigError):
        step(np.array([1.0]), 0.0, -0.1, SIRK1, ScalarSplitProblem(-1.0, -1.0))


def test_step_is_linear_in_the_state():
    problem = ScalarSplitProblem(-0.7, -1.3)
    u = np.array([0.4, -1.1])
    np.testing.assert_allclose(step(2.0 * u, 0.0, 0.05, SIRK2, problem),
                               2.0 * step(u, 0.0, 0.05, SIRK2, problem))


def test_non_finite_stage_raises_blow_up():
    with pytest.raises(BlowUpError):
        step(np.array([np.inf]), 0.0, 0.1, SIRK1, ScalarSplitProblem(-1.0, -1.0))


def test_stage_reports_are_collected():
    reports = []
    step(np.array([1.0]), 0.0, 0.1, SIRK2, ScalarSplitProblem(-1.0, -1.0), reports)
    assert len(reports) == 2


def test_integrate_lands_on_the_final_time():
    problem = ScalarSplitProblem(0.0, -1.0)
    u = integrate(np.array([1.0]), 0.0, 0.35, 0.1, SIRK1, problem)
    expected = 1.0 / (1.0 + 0.1) ** 3 / (1.0 + 0.05)
    np.testing.assert_allclose(u, expected)


@pytest.mark.parametrize("pair,low,high", [(SIRK1, 0.9, 1.1), (SIRK2, 1.85, 2.15)])
def test_observed_order(pair, low, high):
    rows = ode_order_study(pair)
    orders = [order for _, _, order in rows if order is not None]
    assert low <= orders[-1] <= high
    assert rows[-1][1] < rows[0][1]
