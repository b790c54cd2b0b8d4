"""Tests of projection, step rules and the ascent driver."""

import numpy as np
import pytest

from mlmc_boed import (
    AmsGradState,
    BoxDomain,
    ContractViolationError,
    RobbinsMonroState,
    amsgrad_step,
    optimize,
    project,
    rm_step,
)


@pytest.fixture
def box():
    return BoxDomain(lower=np.array([0.0, -1.0]), upper=np.array([2.0, 1.0]))


def test_projection_cases(box):
    assert np.allclose(project(np.array([1.0, 0.0]), box), [1.0, 0.0])
    assert np.allclose(project(np.array([-3.0, 5.0]), box), [0.0, 1.0])
    assert np.allclose(project(np.array([2.5, -0.5]), box), [2.0, -0.5])


def test_projection_idempotent(box):
    rng = np.random.default_rng(0)
    for _ in range(10):
        x = rng.normal(scale=5.0, size=2)
        p1 = project(x, box)
        assert np.array_equal(project(p1, box), p1)


def test_projection_dimension_mismatch(box):
    with pytest.raises(ContractViolationError):
        project(np.array([1.0]), box)


def test_invalid_box_rejected():
    with pytest.raises(ContractViolationError):
        BoxDomain(lower=np.array([1.0]), upper=np.array([1.0]))


def test_rm_step_moves_along_gradient():
    box = BoxDomain(lower=np.array([0.0]), upper=np.array([10.0]))
    state = RobbinsMonroState(current=np.array([1.5]), c=5.0)
    new = rm_step(state, np.array([-0.04]), box)
    # first step size is c / 1 = 5
    assert new.current[0] == pytest.approx(1.5 + 5.0 * (-0.04))
    assert new.t == 1
    assert new.polyak_average[0] == pytest.approx(new.current[0])


def test_rm_rate_decays_harmonically():
    state = RobbinsMonroState(current=np.array([0.0]), c=2.0)
    rates = []
    box = BoxDomain(lower=np.array([-10.0]), upper=np.array([10.0]))
    for _ in range(4):
        rates.append(state.rate())
        state = rm_step(state, np.array([0.1]), box)
    assert rates == pytest.approx([2.0, 1.0, 2.0 / 3.0, 0.5])


def test_polyak_average_is_mean_of_iterates():
    box = BoxDomain(lower=np.array([-100.0]), upper=np.array([100.0]))
    state = RobbinsMonroState(current=np.array([0.0]), c=1.0)
    iterates = []
    for g in [1.0, -0.5, 0.25]:
        state = rm_step(state, np.array([g]), box)
        iterates.append(state.current[0])
    assert state.polyak_average[0] == pytest.approx(np.mean(iterates))


def test_rm_step_respects_box():
    box = BoxDomain(lower=np.array([0.0]), upper=np.array([1.0]))
    state = RobbinsMonroState(current=np.array([0.9]), c=10.0)
    new = rm_step(state, np.array([5.0]), box)
    assert new.current[0] == 1.0


def test_amsgrad_zero_gradient_is_fixed_point():
    box = BoxDomain(lower=np.array([-1.0]), upper=np.array([1.0]))
    state = AmsGradState(current=np.array([0.3]))
    for _ in range(3):
        state = amsgrad_step(state, np.array([0.0]), box)
    assert state.current[0] == pytest.approx(0.3)


def test_amsgrad_constant_gradient_step_magnitude():
    # with a constant gradient g, m/sqrt(v_hat) -> sign(g), so the step
    # approaches alpha in magnitude
    box = BoxDomain(lower=np.array([-1e6]), upper=np.array([1e6]))
    state = AmsGradState(current=np.array([0.0]), alpha=0.01)
    prev = state.current[0]
    for _ in range(20_000):
        prev = state.current[0]
        state = amsgrad_step(state, np.array([2.0]), box)
    assert state.current[0] - prev == pytest.approx(0.01, rel=1e-3)
    assert state.current[0] > 0


def test_amsgrad_vhat_is_monotone():
    box = BoxDomain(lower=np.array([-10.0]), upper=np.array([10.0]))
    state = AmsGradState(current=np.array([0.0]))
    rng = np.random.default_rng(1)
    prev_vhat = state.v_hat.copy()
    for _ in range(50):
        state = amsgrad_step(state, rng.normal(size=1), box)
        assert np.all(state.v_hat >= prev_vhat)
        prev_vhat = state.v_hat.copy()


def test_optimize_trace_shape_and_determinism():
    box = BoxDomain(lower=np.array([-5.0]), upper=np.array([5.0]))

    def gradient_fn(t, x):
        rng = np.random.default_rng(100 + t)
        return -x + 0.1 * rng.standard_normal(1), 3

    trace1 = optimize(np.array([2.0]), box, gradient_fn, 20)
    trace2 = optimize(np.array([2.0]), box, gradient_fn, 20)
    assert len(trace1) == 21
    assert trace1[0].t == 0 and trace1[-1].t == 20
    assert trace1[-1].cost_cumulative == 60
    for a, b in zip(trace1, trace2):
        assert np.array_equal(a.design, b.design)
        assert np.array_equal(a.polyak, b.polyak)


def test_optimize_zero_iterations_returns_initial_point():
    box = BoxDomain(lower=np.array([0.0]), upper=np.array([1.0]))
    trace = optimize(np.array([0.5]), box, lambda t, x: (x, 1), 0)
    assert len(trace) == 1
    assert np.allclose(trace[0].design, [0.5])


def test_optimize_converges_with_exact_gradient():
    # maximize -(x - 0.7)^2 on [0, 2]
    box = BoxDomain(lower=np.array([0.0]), upper=np.array([2.0]))

    def gradient_fn(t, x):
        return -2.0 * (x - 0.7), 1

    trace = optimize(np.array([1.9]), box, gradient_fn, 400, rm_c=0.4)
    assert abs(trace[-1].design[0] - 0.7) < 5e-3
    assert abs(trace[-1].polyak[0] - 0.7) < 0.05

    trace_ams = optimize(
        np.array([1.9]), box, gradient_fn, 3000, optimizer="amsgrad",
        amsgrad_alpha=0.01,
    )
    assert abs(trace_ams[-1].design[0] - 0.7) < 0.02


def test_unknown_optimizer_rejected():
    box = BoxDomain(lower=np.array([0.0]), upper=np.array([1.0]))
    with pytest.raises(ContractViolationError):
        optimize(np.array([0.5]), box, lambda t, x: (x, 1), 1, optimizer="sgdx")


def test_on_iteration_callback_sees_every_row():
    box = BoxDomain(lower=np.array([0.0]), upper=np.array([1.0]))
    seen = []
    optimize(np.array([0.5]), box, lambda t, x: (np.zeros(1), 2), 5,
             on_iteration=lambda row: seen.append(row.t))
    assert seen == [0, 1, 2, 3, 4, 5]
