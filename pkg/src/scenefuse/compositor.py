"""Model-free core of the insertion math.

Implements the pasted composition, the forward noising, the masked per-step
update loop (re-injecting the freshly noised object every step) and the final
noising/denoising refinement pass. Everything is parameterized by an abstract
denoiser so the whole module runs and is tested without pretrained weights.

Two update rules are supported for the region the denoiser may modify:

* ``LITERAL``: z_prev = z_t - eps_pred, the exact arithmetic of the update
  equations. All oracle tests pin this mode.
* ``SCHEDULER``: the standard deterministic sampler step (eta=0) derived from
  the noise schedule; the production default.
"""

from __future__ import annotations

import abc
import enum
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import AdapterError, ParameterError
from .rng import RandomSource
from .schedule import NoiseSchedule, TimestepPlan
from .tensors import BinaryMask, LatentRole, LatentTensor, MaskResolution


@dataclass(frozen=True)
class PromptEmbedding:
    """Text-conditioning vector(s) produced by an adapter's text encoder."""

    vectors: np.ndarray
    source_text: str

    def __post_init__(self):
        object.__setattr__(self, "vectors", np.asarray(self.vectors, dtype=np.float32))


class DenoiserInterface(abc.ABC):
    """Noise-prediction model; output shape must equal input shape."""

    @abc.abstractmethod
    def predict(
        self,
        latent: LatentTensor,
        t: int,
        prompt: PromptEmbedding | None,
        guidance_scale: float = 1.0,
    ) -> LatentTensor:
        ...


class UpdateMode(enum.Enum):
    LITERAL = "literal"
    SCHEDULER = "scheduler"


@dataclass(frozen=True)
class StepTrace:
    """One loop iteration, recorded for loop-trace oracles."""

    position: int
    t: int
    t_prev: int | None
    state: LatentTensor


def paste_compose(obj: LatentTensor, bg: LatentTensor, m: BinaryMask) -> LatentTensor:
    """Element-wise blend: object inside the mask, background outside."""
    if obj.shape != bg.shape:
        raise ParameterError(f"latent shapes differ: {obj.shape} vs {bg.shape}")
    if m.resolution is not MaskResolution.LATENT:
        raise ParameterError("paste_compose expects a latent-resolution mask")
    if m.shape != obj.shape[1:]:
        raise ParameterError(f"mask shape {m.shape} does not match latent {obj.shape}")
    return LatentTensor(kernels.blend(m.data, obj.data, bg.data), LatentRole.PASTED)


def forward_noise(
    x0: LatentTensor, t: int, schedule: NoiseSchedule, rng: RandomSource
) -> LatentTensor:
    """Closed-form forward corruption of x0 to timestep t."""
    s_sig, s_noise = schedule.noise_level(t)  # range-checks t
    eps = rng.draw_gaussian(x0.shape)
    return x0.with_data(kernels.noise_mix(x0.data, eps, s_sig, s_noise))


def _denoiser_update(
    state: LatentTensor,
    t: int,
    t_prev: int | None,
    denoiser: DenoiserInterface,
    prompt: PromptEmbedding | None,
    schedule: NoiseSchedule,
    guidance_scale: float,
    mode: UpdateMode,
) -> np.ndarray:
    eps_pred = denoiser.predict(state, t, prompt, guidance_scale)
    if eps_pred.shape != state.shape:
        raise AdapterError(
            f"denoiser returned shape {eps_pred.shape}, expected {state.shape}"
        )
    if mode is UpdateMode.LITERAL:
        return state.data - eps_pred.data
    s_sig_t, s_noise_t = schedule.noise_level(t)
    if t_prev is None:
        s_sig_prev, s_noise_prev = 1.0, 0.0
    else:
        s_sig_prev, s_noise_prev = schedule.noise_level(t_prev)
    return kernels.ddim_update(
        state.data, eps_pred.data, s_sig_t, s_noise_t, s_sig_prev, s_noise_prev
    )


def masked_step(
    comp_t: LatentTensor,
    obj0: LatentTensor,
    m: BinaryMask,
    t_pair: tuple[int, int | None],
    denoiser: DenoiserInterface,
    prompt: PromptEmbedding | None,
    schedule: NoiseSchedule,
    rng: RandomSource,
    guidance_scale: float = 1.0,
    mode: UpdateMode = UpdateMode.SCHEDULER,
) -> LatentTensor:
    """One loop iteration: denoise the unmasked region, re-inject the object.

    The masked region becomes the clean object freshly noised to ``t_prev``
    (drawn from ``rng``); ``t_prev=None`` is the final transition, where the
    clean object is injected unchanged.
    """
    if comp_t.shape != obj0.shape:
        raise ParameterError(f"latent shapes differ: {comp_t.shape} vs {obj0.shape}")
    if m.shape != comp_t.shape[1:]:
        raise ParameterError(f"mask shape {m.shape} does not match latent {comp_t.shape}")
    t, t_prev = t_pair

    bg_update = _denoiser_update(
        comp_t, t, t_prev, denoiser, prompt, schedule, guidance_scale, mode
    )
    if t_prev is None:
        data = kernels.blend(m.data, obj0.data, bg_update)
    else:
        s_sig, s_noise = schedule.noise_level(t_prev)
        eps_obj = rng.draw_gaussian(obj0.shape)
        data = kernels.masked_noise_blend(m.data, obj0.data, eps_obj, s_sig, s_noise, bg_update)
    return LatentTensor(data, LatentRole.COMPOSITE)


def run_masked_diffusion(
    obj0: LatentTensor,
    bg: LatentTensor | None,
    m: BinaryMask,
    denoiser: DenoiserInterface,
    prompt: PromptEmbedding | None,
    schedule: NoiseSchedule,
    plan: TimestepPlan,
    rng: RandomSource,
    guidance_scale: float = 1.0,
    mode: UpdateMode = UpdateMode.SCHEDULER,
    trace: list[StepTrace] | None = None,
) -> LatentTensor:
    """Iterate masked_step from the plan's start down to t=0.

    With a background, the initial state is the pasted composition noised to
    the start timestep. Without one, the plan must cover every step and the
    initial state is a pure Gaussian draw.

    Child RNG streams: the init draw uses ``rng.child(0)``, the step at plan
    position k uses ``rng.child(k + 1)``, so any step's object draw can be
    regenerated independently.
    """
    if bg is None and not plan.is_full_generation:
        raise ParameterError(
            "without a background the plan must start from pure noise "
            f"(start_index == inference_steps, got {plan.start_index})"
        )

    if bg is not None:
        pasted = paste_compose(obj0, bg, m)
        if plan.start_index == 0:
            return pasted
        state: LatentTensor = forward_noise(pasted, plan.start_timestep(), schedule, rng.child(0))
    else:
        if m.shape != obj0.shape[1:]:
            raise ParameterError(f"mask shape {m.shape} does not match latent {obj0.shape}")
        if plan.start_index == 0:
            raise ParameterError("cannot run zero steps without a background")
        state = LatentTensor(rng.child(0).draw_gaussian(obj0.shape), LatentRole.COMPOSITE)

    active = plan.active_timesteps()
    for k, t in enumerate(active):
        t_prev = active[k + 1] if k + 1 < len(active) else None
        state = masked_step(
            state, obj0, m, (t, t_prev), denoiser, prompt, schedule,
            rng.child(k + 1), guidance_scale, mode,
        )
        if trace is not None:
            trace.append(StepTrace(position=k, t=t, t_prev=t_prev, state=state))
    return state


def refine(
    comp: LatentTensor,
    noise_steps: int,
    denoiser: DenoiserInterface,
    prompt: PromptEmbedding | None,
    schedule: NoiseSchedule,
    plan: TimestepPlan,
    rng: RandomSource,
    guidance_scale: float = 1.0,
    mode: UpdateMode = UpdateMode.SCHEDULER,
) -> LatentTensor:
    """Noise ``comp`` for the last ``noise_steps`` of the plan, then denoise
    unmasked back to t=0. ``noise_steps=0`` is the identity."""
    if not 0 <= noise_steps <= plan.inference_steps:
        raise ParameterError(
            f"noise_steps must be in [0, {plan.inference_steps}], got {noise_steps}"
        )
    if noise_steps == 0:
        return comp

    active = plan.timesteps[plan.inference_steps - noise_steps :]
    state = forward_noise(comp, active[0], schedule, rng.child(0))
    for k, t in enumerate(active):
        t_prev = active[k + 1] if k + 1 < len(active) else None
        data = _denoiser_update(state, t, t_prev, denoiser, prompt, schedule, guidance_scale, mode)
        state = LatentTensor(data, LatentRole.REFINED)
    return state.with_role(LatentRole.REFINED)
