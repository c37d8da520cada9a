import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from collective_decay.bb import BBParams, bb_logistic_closed_form, bb_logistic_rhs
from collective_decay.errors import MaxStepsExceeded, NoCrossing, NonFiniteState, StepUnderflow
from collective_decay.ode import (ADAPTIVE, FIXED_RK4, IntegratorConfig, IvpProblem, SolutionGrid,
                                  find_crossing, integrate)


def decay(t, y):
    return -y


def test_zero_rhs_keeps_state():
    grid = integrate(IvpProblem(lambda t, y: np.zeros(2), 0.0, [1.0, 2.0], 3.0), sample_times=np.linspace(0, 3, 7))
    np.testing.assert_array_equal(grid.states, np.tile([1.0, 2.0], (7, 1)))


def test_exponential_endpoint():
    grid = integrate(IvpProblem(decay, 0.0, [1.0], 1.0), sample_times=[0.0, 1.0])
    assert abs(grid.states[-1, 0] - math.exp(-1)) < 1e-9
    assert grid.states[0, 0] == 1.0


def test_logistic_against_closed_form():
    p = BBParams(n_total=10, g=math.sqrt(0.5), gamma_cap=1.0)
    ts = np.linspace(0, 20 / (p.omega * 11), 201)
    grid = integrate(IvpProblem(lambda t, y: np.array([bb_logistic_rhs(y[0], p)]), 0.0, [0.0], ts[-1]),
                     sample_times=ts)
    exact = bb_logistic_closed_form(ts, 10, p.omega)
    assert np.max(np.abs(grid.states[:, 0] / 10 - exact)) < 1e-8


def test_deterministic():
    problem = IvpProblem(lambda t, y: np.array([y[1], -math.sin(y[0])]), 0.0, [1.0, 0.0], 10.0)
    ts = np.linspace(0, 10, 33)
    a = integrate(problem, sample_times=ts)
    b = integrate(problem, sample_times=ts)
    np.testing.assert_array_equal(a.states, b.states)
    assert (a.accepted_steps, a.rejected_steps) == (b.accepted_steps, b.rejected_steps)


def test_rk4_fourth_order():
    errors = []
    for h in (0.1, 0.05, 0.025):
        cfg = IntegratorConfig(method=FIXED_RK4, initial_step=h)
        grid = integrate(IvpProblem(decay, 0.0, [1.0], 2.0), cfg, [2.0])
        errors.append(abs(grid.states[-1, 0] - math.exp(-2)))
    for coarse, fine in zip(errors, errors[1:]):
        assert 14 <= coarse / fine <= 18


def test_samples_at_step_endpoints_are_stepper_states():
    problem = IvpProblem(lambda t, y: np.array([math.cos(t) * y[0]]), 0.0, [1.0], 5.0)
    grid = integrate(problem)
    starts = [seg.t for seg in grid.segments[1:40]]
    again = integrate(problem, sample_times=starts)
    np.testing.assert_array_equal(again.states, np.array([seg.y for seg in grid.segments[1:40]]))


def test_rk4_samples_are_segment_endpoints():
    problem = IvpProblem(lambda t, y: np.array([math.cos(t) * y[0]]), 0.0, [1.0], 5.0)
    ts = np.linspace(0, 5, 11)
    grid = integrate(problem, IntegratorConfig(method=FIXED_RK4, initial_step=0.01), ts)
    ends = {seg.t + seg.h: seg.y1 for seg in grid.segments}
    for t, y in zip(ts[1:], grid.states[1:]):
        match = min(ends, key=lambda e: abs(e - t))
        np.testing.assert_array_equal(y, ends[match])


def test_dense_evaluate_is_accurate_between_samples():
    grid = integrate(IvpProblem(decay, 0.0, [1.0], 4.0), sample_times=[0.0, 4.0])
    for t in np.linspace(0, 4, 37):
        assert abs(grid.evaluate(t)[0] - math.exp(-t)) < 1e-8


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(rel_tol=0)
    with pytest.raises(ValueError):
        IntegratorConfig(abs_tol=-1)
    with pytest.raises(ValueError):
        IntegratorConfig(min_step=1.0, max_step=0.5)
    with pytest.raises(ValueError):
        IntegratorConfig(method="euler")
    with pytest.raises(ValueError):
        IntegratorConfig(initial_step=2.0, max_step=1.0)
    with pytest.raises(ValueError):
        IvpProblem(decay, 1.0, [1.0], 1.0)


def test_sample_time_validation():
    problem = IvpProblem(decay, 0.0, [1.0], 1.0)
    with pytest.raises(ValueError):
        integrate(problem, sample_times=[0.5, 0.2])
    with pytest.raises(ValueError):
        integrate(problem, sample_times=[0.0, 2.0])


def test_non_finite_state_detected():
    # dy/dt = y^2 blows up at t = 1
    with pytest.raises((NonFiniteState, StepUnderflow)):
        integrate(IvpProblem(lambda t, y: y * y, 0.0, [1.0], 2.0))
    with pytest.raises(NonFiniteState):
        integrate(IvpProblem(lambda t, y: np.array([np.nan]), 0.0, [1.0], 1.0))


def test_step_limits_enforced():
    with pytest.raises(MaxStepsExceeded):
        integrate(IvpProblem(decay, 0.0, [1.0], 100.0), IntegratorConfig(max_steps=5, max_step=1.0))
    with pytest.raises(StepUnderflow):
        integrate(IvpProblem(lambda t, y: y * y, 0.0, [1.0], 2.0), IntegratorConfig(min_step=1e-3))


def test_crossing_linear():
    grid = integrate(IvpProblem(lambda t, y: np.ones(1), 0.0, [0.0], 2.0), sample_times=np.linspace(0, 2, 5))
    assert find_crossing(grid, 0, 1.0) == pytest.approx(1.0, abs=2e-6)
    grid = integrate(IvpProblem(lambda t, y: np.ones(1), 0.0, [0.0], 2.0), sample_times=[0.0, 0.3, 2.0])
    assert find_crossing(grid, 0, 1.0) == pytest.approx(1.0, abs=2e-6)


def test_crossing_logistic_half_time():
    p = BBParams(n_total=100, g=math.sqrt(0.5), gamma_cap=1.0)
    ts = np.linspace(0, 0.2, 41)
    grid = integrate(IvpProblem(lambda t, y: np.array([bb_logistic_rhs(y[0], p)]), 0.0, [0.0], 0.2), sample_times=ts)
    t50 = find_crossing(grid, 0, 50.0)
    assert t50 == pytest.approx(math.log(102) / 101, abs=1e-6 * 0.2)
    assert bb_logistic_closed_form(math.log(102) / 101, 100, p.omega) == pytest.approx(0.5, abs=1e-14)


def test_crossing_never_reached():
    grid = integrate(IvpProblem(lambda t, y: np.zeros(1), 0.0, [0.2], 1.0), sample_times=[0.0, 0.5, 1.0])
    with pytest.raises(NoCrossing):
        find_crossing(grid, 0, 1.0)


def test_crossing_without_dense_uses_samples():
    ts = np.linspace(0, 1, 11)
    grid = SolutionGrid(ts, (ts**2)[:, None], 0, 0, 0.0, 1.0)
    assert find_crossing(grid, 0, 0.25) == pytest.approx(0.5, abs=1e-6)


@settings(max_examples=25, deadline=None)
@given(rate=st.floats(0.1, 5.0), y0=st.floats(0.5, 10.0))
def test_exponential_property(rate, y0):
    grid = integrate(IvpProblem(lambda t, y: -rate * y, 0.0, [y0], 1.0), sample_times=np.linspace(0, 1, 5))
    exact = y0 * np.exp(-rate * np.linspace(0, 1, 5))
    assert np.max(np.abs(grid.states[:, 0] - exact)) <= 1e-8 * y0
