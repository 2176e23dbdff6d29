import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scenefuse.errors import ParameterError
from scenefuse.schedule import (
    NoiseSchedule,
    ScheduleKind,
    TimestepPlan,
    build_schedule,
    make_plan,
    noise_fraction_at_start,
)


def brute_force_alpha_bars(betas):
    """Independent oracle: explicit running product, no cumprod."""
    out = []
    acc = 1.0
    for b in betas:
        acc *= 1.0 - b
        out.append(acc)
    return np.array(out)


def test_constant_zero_beta_gives_unit_alpha_bar():
    sch = build_schedule(ScheduleKind.CONSTANT, 0.0, 0.0, train_steps=10)
    assert np.all(sch.alpha_bars == 1.0)
    assert np.all(sch.betas == 0.0)


def test_linear_two_step_hand_product():
    sch = build_schedule(ScheduleKind.LINEAR, 0.1, 0.2, train_steps=2)
    # hand product of (1 - beta_t): [0.9, 0.9 * 0.8]
    assert sch.alpha_bars == pytest.approx([0.9, 0.72], rel=1e-12)


def test_scaled_linear_default_is_strictly_decreasing_and_small_at_end():
    sch = build_schedule(ScheduleKind.SCALED_LINEAR, 0.00085, 0.012, 1000)
    assert np.all(np.diff(sch.alpha_bars) < 0)
    assert sch.alpha_bars[999] < 0.01
    oracle = brute_force_alpha_bars(sch.betas)
    np.testing.assert_allclose(sch.alpha_bars, oracle, rtol=1e-12)


@pytest.mark.parametrize("kind", list(ScheduleKind))
def test_alpha_bar_matches_brute_force(kind):
    sch = build_schedule(kind, 0.001, 0.02, train_steps=200)
    oracle = brute_force_alpha_bars(sch.betas)
    np.testing.assert_allclose(sch.alpha_bars, oracle, rtol=1e-12)


@given(
    beta_start=st.floats(1e-6, 0.05),
    spread=st.floats(0.0, 0.5),
    steps=st.integers(1, 300),
    kind=st.sampled_from(list(ScheduleKind)),
)
@settings(max_examples=60, deadline=None)
def test_schedule_invariants(beta_start, spread, steps, kind):
    beta_end = min(beta_start * (1.0 + spread) + spread * 0.1, 0.999)
    sch = build_schedule(kind, beta_start, beta_end, steps)
    assert np.all(sch.betas >= 0) and np.all(sch.betas < 1)
    np.testing.assert_allclose(sch.alphas, 1.0 - sch.betas, rtol=0, atol=0)
    oracle = brute_force_alpha_bars(sch.betas)
    np.testing.assert_allclose(sch.alpha_bars, oracle, rtol=1e-12)
    if np.all(sch.betas > 0):
        assert np.all(np.diff(sch.alpha_bars) < 0)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"beta_start": -0.1, "beta_end": 0.2},
        {"beta_start": 0.3, "beta_end": 0.2},
        {"beta_start": 0.3, "beta_end": 1.0},
        {"beta_start": 0.001, "beta_end": 0.02, "train_steps": 0},
    ],
)
def test_invalid_schedule_parameters(kwargs):
    with pytest.raises(ParameterError):
        build_schedule(ScheduleKind.LINEAR, **kwargs)


def test_noise_level_range_check():
    sch = build_schedule(ScheduleKind.LINEAR, 0.1, 0.2, 4)
    with pytest.raises(ParameterError):
        sch.noise_level(4)
    with pytest.raises(ParameterError):
        sch.alpha_bar(-1)


class TestTimestepPlan:
    def test_descending_and_end_at_zero(self):
        plan = TimestepPlan(train_steps=1000, inference_steps=50, start_index=50)
        assert len(plan.timesteps) == 50
        assert all(a > b for a, b in zip(plan.timesteps, plan.timesteps[1:]))
        assert plan.timesteps[-1] == 0
        assert plan.timesteps[0] == 980

    def test_full_generation_flag(self):
        assert TimestepPlan(1000, 20, 20).is_full_generation
        assert not TimestepPlan(1000, 20, 19).is_full_generation

    def test_active_subset(self):
        plan = TimestepPlan(train_steps=100, inference_steps=10, start_index=3)
        assert plan.active_timesteps() == plan.timesteps[7:]
        assert plan.start_timestep() == plan.timesteps[7]

    def test_zero_start_has_no_steps(self):
        plan = TimestepPlan(train_steps=100, inference_steps=10, start_index=0)
        assert plan.active_timesteps() == ()
        with pytest.raises(ParameterError):
            plan.start_timestep()

    def test_start_index_bounds(self):
        with pytest.raises(ParameterError):
            TimestepPlan(train_steps=100, inference_steps=10, start_index=11)


def test_refinement_noise_fraction_near_twenty_percent():
    """Schedule-derived noise share when noising 10 of 50 inference steps."""
    sch = build_schedule()
    plan = TimestepPlan(train_steps=1000, inference_steps=50, start_index=10)
    frac = noise_fraction_at_start(sch, plan)
    # independent recomputation from the brute-force product
    t = plan.start_timestep()
    oracle = 1.0 - brute_force_alpha_bars(sch.betas)[t]
    assert frac == pytest.approx(oracle, rel=1e-12)
    assert 0.15 <= frac <= 0.25


def test_make_plan_default_runs_everything():
    sch = build_schedule(train_steps=100)
    plan = make_plan(sch, 10)
    assert plan.start_index == 10
    assert len(plan.active_timesteps()) == 10
