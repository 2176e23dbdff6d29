"""Noise schedules and inference timestep plans.

The forward process is x_t = sqrt(alpha_bar_t) * x0 + sqrt(1 - alpha_bar_t) * eps
with alpha_bar_t the running product of (1 - beta_t). Schedule math is kept in
float64; latents stay float32.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

# Endpoints shipped with the SD-2.x family of checkpoints; overridable.
DEFAULT_BETA_START = 0.00085
DEFAULT_BETA_END = 0.012
DEFAULT_TRAIN_STEPS = 1000


class ScheduleKind(enum.Enum):
    SCALED_LINEAR = "scaled_linear"
    LINEAR = "linear"
    CONSTANT = "constant"


@dataclass(frozen=True)
class NoiseSchedule:
    betas: np.ndarray
    alphas: np.ndarray
    alpha_bars: np.ndarray
    kind: ScheduleKind

    @property
    def train_steps(self) -> int:
        return len(self.betas)

    def alpha_bar(self, t: int) -> float:
        if not 0 <= t < self.train_steps:
            raise ParameterError(f"timestep {t} outside [0, {self.train_steps})")
        return float(self.alpha_bars[t])

    def noise_level(self, t: int) -> tuple[float, float]:
        """(sqrt(alpha_bar_t), sqrt(1 - alpha_bar_t)) signal/noise scales."""
        ab = self.alpha_bar(t)
        return float(np.sqrt(ab)), float(np.sqrt(1.0 - ab))


def build_schedule(
    kind: ScheduleKind | str = ScheduleKind.SCALED_LINEAR,
    beta_start: float = DEFAULT_BETA_START,
    beta_end: float = DEFAULT_BETA_END,
    train_steps: int = DEFAULT_TRAIN_STEPS,
) -> NoiseSchedule:
    """Build betas for the requested kind and derive alphas / alpha-bars.

    Accepts beta_start == 0 (useful for zero-noise test schedules) even though
    production schedules use strictly positive betas.
    """
    kind = ScheduleKind(kind)
    if train_steps < 1:
        raise ParameterError(f"train_steps must be >= 1, got {train_steps}")
    if not (0.0 <= beta_start <= beta_end < 1.0):
        raise ParameterError(
            f"need 0 <= beta_start <= beta_end < 1, got ({beta_start}, {beta_end})"
        )

    if kind is ScheduleKind.SCALED_LINEAR:
        betas = np.linspace(beta_start**0.5, beta_end**0.5, train_steps, dtype=np.float64) ** 2
    elif kind is ScheduleKind.LINEAR:
        betas = np.linspace(beta_start, beta_end, train_steps, dtype=np.float64)
    else:  # CONSTANT: beta_start everywhere, beta_end ignored
        betas = np.full(train_steps, beta_start, dtype=np.float64)

    alphas = 1.0 - betas
    alpha_bars = np.cumprod(alphas)
    return NoiseSchedule(betas=betas, alphas=alphas, alpha_bars=alpha_bars, kind=kind)


@dataclass(frozen=True)
class TimestepPlan:
    """Maps inference step indices onto train timesteps, descending to t=0.

    ``start_index`` n selects how many of the final plan steps actually run:
    n == inference_steps means generation from pure noise, n == 0 is a no-op.
    """

    train_steps: int
    inference_steps: int
    start_index: int
    timesteps: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if self.inference_steps < 0 or self.inference_steps > self.train_steps:
            raise ParameterError(
                f"inference_steps must be in [0, {self.train_steps}], got {self.inference_steps}"
            )
        if not 0 <= self.start_index <= self.inference_steps:
            raise ParameterError(
                f"start_index must be in [0, {self.inference_steps}], got {self.start_index}"
            )
        if not self.timesteps:
            object.__setattr__(
                self, "timesteps", _spaced_timesteps(self.train_steps, self.inference_steps)
            )
        if any(a <= b for a, b in zip(self.timesteps, self.timesteps[1:])):
            raise ParameterError("plan timesteps must be strictly decreasing")

    @property
    def is_full_generation(self) -> bool:
        return self.start_index == self.inference_steps

    def active_timesteps(self) -> tuple[int, ...]:
        """The train timesteps the run will actually visit, highest first."""
        if self.start_index == 0:
            return ()
        return self.timesteps[self.inference_steps - self.start_index :]

    def start_timestep(self) -> int:
        """Train timestep the initial state is noised to (first step processed)."""
        active = self.active_timesteps()
        if not active:
            raise ParameterError("plan with start_index 0 has no start timestep")
        return active[0]


def _spaced_timesteps(train_steps: int, inference_steps: int) -> tuple[int, ...]:
    if inference_steps == 0:
        return ()
    ratio = train_steps // inference_steps
    if ratio < 1:
        raise ParameterError(
            f"inference_steps {inference_steps} exceeds train_steps {train_steps}"
        )
    return tuple((inference_steps - 1 - i) * ratio for i in range(inference_steps))


def make_plan(
    schedule: NoiseSchedule, inference_steps: int, start_index: int | None = None
) -> TimestepPlan:
    """Plan over ``schedule``; default start runs the full plan."""
    if start_index is None:
        start_index = inference_steps
    return TimestepPlan(
        train_steps=schedule.train_steps,
        inference_steps=inference_steps,
        start_index=start_index,
    )


def noise_fraction_at_start(schedule: NoiseSchedule, plan: TimestepPlan) -> float:
    """Share of variance contributed by noise, 1 - alpha_bar, at the plan's
    start timestep. This is the schedule-derived "how noised is the image
    before denoising begins" number."""
    return 1.0 - schedule.alpha_bar(plan.start_timestep())
