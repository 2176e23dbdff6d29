"""Adapter interfaces: the seams between the math core and pretrained models.

Every heavyweight model the pipeline touches sits behind one of these
interfaces, and every interface has a deterministic toy implementation, so
the full pipeline runs weight-free.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass

import numpy as np

from ..compositor import DenoiserInterface, PromptEmbedding
from ..tensors import BinaryMask, LatentTensor


class LatentCodec(abc.ABC):
    """Image <-> latent transform with a fixed spatial factor."""

    spatial_factor: int = 8

    @abc.abstractmethod
    def encode(self, image: np.ndarray) -> LatentTensor:
        ...

    @abc.abstractmethod
    def decode(self, latent: LatentTensor) -> np.ndarray:
        ...


class TextEncoder(abc.ABC):
    @abc.abstractmethod
    def embed(self, text: str) -> PromptEmbedding:
        ...


class Upscaler(abc.ABC):
    @abc.abstractmethod
    def upscale(self, image: np.ndarray, factor: int = 4) -> np.ndarray:
        ...


class Segmenter(abc.ABC):
    @abc.abstractmethod
    def segment(self, image: np.ndarray, category: str) -> BinaryMask:
        ...


class BackgroundGenerator(abc.ABC):
    @abc.abstractmethod
    def generate(self, prompt: str, seed: int, size: tuple[int, int]) -> np.ndarray:
        """size is (width, height); same seed must reproduce the same image."""


@dataclass
class AdapterSet:
    """Everything a pipeline run needs, resolved up front."""

    name: str
    codec: LatentCodec
    text_encoder: TextEncoder
    base_denoiser: DenoiserInterface
    refiner_denoiser: DenoiserInterface
    upscaler: Upscaler
    segmenter: Segmenter
    bg_generator: BackgroundGenerator
