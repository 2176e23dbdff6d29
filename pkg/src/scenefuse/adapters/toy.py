"""Deterministic toy adapters for weight-free runs and tests.

No external models, no floats seeded from runtime state: identical inputs
produce bit-identical outputs on any platform.
"""

from __future__ import annotations

import hashlib
import warnings

import numpy as np

from ..compositor import DenoiserInterface, PromptEmbedding
from ..errors import ParameterError
from ..images import as_rgb
from ..masks import make_mask
from ..tensors import BinaryMask, LatentRole, LatentTensor
from .base import AdapterSet, BackgroundGenerator, LatentCodec, Segmenter, TextEncoder, Upscaler

TOKEN_LIMIT = 77


def _hash_rng(*parts: str | int) -> np.random.Generator:
    digest = hashlib.sha256("\x1f".join(str(p) for p in parts).encode()).digest()
    seed = int.from_bytes(digest[:8], "little")
    return np.random.Generator(np.random.PCG64(seed))


class ToyLatentCodec(LatentCodec):
    """Factor-8 average-pool encoder / replicate decoder.

    Latents live in [-1, 1]; exactly invertible on block-constant images.
    """

    spatial_factor = 8

    def encode(self, image: np.ndarray) -> LatentTensor:
        img = as_rgb(image)
        h, w, _ = img.shape
        f = self.spatial_factor
        if h % f or w % f:
            raise ParameterError(f"image dims ({h}, {w}) not divisible by factor {f}")
        blocks = img.astype(np.float32).reshape(h // f, f, w // f, f, 3)
        means = blocks.mean(axis=(1, 3))  # [H/f, W/f, 3]
        data = means.transpose(2, 0, 1) / np.float32(127.5) - np.float32(1.0)
        return LatentTensor(data, LatentRole.COMPOSITE)

    def decode(self, latent: LatentTensor) -> np.ndarray:
        f = self.spatial_factor
        values = (latent.data + np.float32(1.0)) * np.float32(127.5)
        pixels = np.repeat(np.repeat(values, f, axis=1), f, axis=2)
        return np.clip(np.rint(pixels.transpose(1, 2, 0)), 0, 255).astype(np.uint8)


class ToyTextEncoder(TextEncoder):
    """Hash-seeded fixed vector per string."""

    def __init__(self, dim: int = 64):
        self.dim = dim

    def embed(self, text: str) -> PromptEmbedding:
        if not text:
            raise ParameterError("cannot embed an empty prompt")
        words = text.split()
        if len(words) > TOKEN_LIMIT:
            warnings.warn(
                f"prompt has {len(words)} tokens, truncating to {TOKEN_LIMIT}", UserWarning
            )
            text = " ".join(words[:TOKEN_LIMIT])
        vec = _hash_rng("text", text).standard_normal(self.dim, dtype=np.float32)
        return PromptEmbedding(vec, text)


class ToyDenoiser(DenoiserInterface):
    """Weight-free noise predictor: zero, constant(c), or linear(a * z)."""

    def __init__(self, mode: str = "zero", value: float = 0.0):
        if mode not in ("zero", "constant", "linear"):
            raise ParameterError(f"unknown toy denoiser mode {mode!r}")
        self.mode = mode
        self.value = float(value)

    def predict(self, latent, t, prompt, guidance_scale=1.0):
        if self.mode == "zero":
            eps = np.zeros_like(latent.data)
        elif self.mode == "constant":
            eps = np.full_like(latent.data, np.float32(self.value))
        else:
            eps = np.float32(self.value) * latent.data
        return latent.with_data(eps)


class ToyUpscaler(Upscaler):
    """Pixel replication."""

    supported_factors = (1, 2, 4)

    def upscale(self, image: np.ndarray, factor: int = 4) -> np.ndarray:
        if factor not in self.supported_factors:
            raise ParameterError(f"unsupported upscale factor {factor}")
        img = as_rgb(image)
        return np.repeat(np.repeat(img, factor, axis=0), factor, axis=1)


class ToySegmenter(Segmenter):
    """Stands in for a text-prompted segmenter: returns the threshold mask."""

    def __init__(self, threshold: float | None = None):
        self.threshold = threshold

    def segment(self, image: np.ndarray, category: str) -> BinaryMask:
        if not category:
            raise ParameterError("segmentation requires an object category")
        return make_mask(image, self.threshold)


class ToyBackgroundGenerator(BackgroundGenerator):
    """Seeded two-color gradient plus low-amplitude texture noise."""

    def generate(self, prompt: str, seed: int, size: tuple[int, int]) -> np.ndarray:
        w, h = size
        rng = _hash_rng("bg", prompt, seed)
        c_top = rng.integers(40, 216, size=3)
        c_bottom = rng.integers(40, 216, size=3)
        ramp = np.linspace(0.0, 1.0, h)[:, None, None]
        base = (1 - ramp) * c_top[None, None, :] + ramp * c_bottom[None, None, :]
        texture = rng.integers(-12, 13, size=(h, w, 3))
        return np.clip(np.rint(base + texture), 0, 255).astype(np.uint8)


def toy_adapters() -> AdapterSet:
    return AdapterSet(
        name="toy",
        codec=ToyLatentCodec(),
        text_encoder=ToyTextEncoder(),
        base_denoiser=ToyDenoiser("linear", 0.05),
        refiner_denoiser=ToyDenoiser("linear", 0.05),
        upscaler=ToyUpscaler(),
        segmenter=ToySegmenter(),
        bg_generator=ToyBackgroundGenerator(),
    )
