"""scenefuse: training-free object insertion via masked latent diffusion."""

__version__ = "0.1.0"

from .compositor import (
    DenoiserInterface,
    PromptEmbedding,
    UpdateMode,
    forward_noise,
    masked_step,
    paste_compose,
    refine,
    run_masked_diffusion,
)
from .masks import downsample_mask, make_mask
from .rng import RandomSource
from .schedule import NoiseSchedule, ScheduleKind, TimestepPlan, build_schedule, make_plan
from .tensors import BinaryMask, LatentRole, LatentTensor, MaskResolution

__all__ = [
    "BinaryMask",
    "DenoiserInterface",
    "LatentRole",
    "LatentTensor",
    "MaskResolution",
    "NoiseSchedule",
    "PromptEmbedding",
    "RandomSource",
    "ScheduleKind",
    "TimestepPlan",
    "UpdateMode",
    "build_schedule",
    "downsample_mask",
    "forward_noise",
    "make_mask",
    "make_plan",
    "masked_step",
    "paste_compose",
    "refine",
    "run_masked_diffusion",
]
