from .base import AdapterSet, BackgroundGenerator, LatentCodec, Segmenter, TextEncoder, Upscaler
from .registry import CACHE_ENV_VAR, ROLES, ModelEntry, ModelRegistry, cache_root
from .toy import (
    ToyBackgroundGenerator,
    ToyDenoiser,
    ToyLatentCodec,
    ToySegmenter,
    ToyTextEncoder,
    ToyUpscaler,
    toy_adapters,
)

__all__ = [
    "AdapterSet",
    "BackgroundGenerator",
    "CACHE_ENV_VAR",
    "LatentCodec",
    "ModelEntry",
    "ModelRegistry",
    "ROLES",
    "Segmenter",
    "TextEncoder",
    "ToyBackgroundGenerator",
    "ToyDenoiser",
    "ToyLatentCodec",
    "ToySegmenter",
    "ToyTextEncoder",
    "ToyUpscaler",
    "Upscaler",
    "cache_root",
    "toy_adapters",
]
