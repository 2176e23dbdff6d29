"""Pretrained-model adapters (optional; requires the ``real`` extra).

Imports are lazy so the package works without torch/diffusers installed.
Weights are only ever loaded from the local cache; ``scenefuse fetch-models``
is the one place that downloads.
"""

from __future__ import annotations

import numpy as np

from ..compositor import DenoiserInterface, PromptEmbedding
from ..errors import AdapterError
from ..tensors import LatentRole, LatentTensor
from .base import AdapterSet, LatentCodec, TextEncoder
from .registry import ModelRegistry, cache_root


def _require_torch():
    try:
        import torch  # noqa: F401

        return torch
    except ImportError as exc:
        raise AdapterError(
            "real adapters need the optional dependencies; install with "
            "`pip install scenefuse[real]`"
        ) from exc


def weights_available(registry: ModelRegistry | None = None) -> bool:
    """True when every registry role has a populated local cache directory."""
    registry = registry or ModelRegistry.default()
    try:
        registry.validate_complete()
    except Exception:
        return False
    root = cache_root()
    for role in registry.entries:
        path = registry.resolve(role).local_path(role, root)
        if not path.is_dir() or not any(path.iterdir()):
            return False
    return True


class RealLatentCodec(LatentCodec):
    """VAE wrapper: images in [0,255] uint8 to scaled latents and back."""

    spatial_factor = 8

    def __init__(self, vae, scaling_factor: float):
        self._vae = vae
        self._scaling = scaling_factor

    def encode(self, image: np.ndarray) -> LatentTensor:
        torch = _require_torch()
        x = torch.from_numpy(image.astype(np.float32) / 127.5 - 1.0)
        x = x.permute(2, 0, 1).unsqueeze(0).to(next(self._vae.parameters()).device)
        with torch.no_grad():
            posterior = self._vae.encode(x).latent_dist
            z = posterior.mean * self._scaling
        return LatentTensor(z[0].cpu().numpy(), LatentRole.COMPOSITE)

    def decode(self, latent: LatentTensor) -> np.ndarray:
        torch = _require_torch()
        z = torch.from_numpy(latent.data[None] / self._scaling)
        z = z.to(next(self._vae.parameters()).device)
        with torch.no_grad():
            x = self._vae.decode(z).sample[0]
        img = ((x.clamp(-1, 1) + 1) * 127.5).round().cpu().numpy()
        return img.transpose(1, 2, 0).astype(np.uint8)


class RealTextEncoder(TextEncoder):
    def __init__(self, tokenizer, text_model):
        self._tokenizer = tokenizer
        self._model = text_model

    def embed(self, text: str) -> PromptEmbedding:
        torch = _require_torch()
        if not text:
            raise AdapterError("cannot embed an empty prompt")
        tokens = self._tokenizer(
            text, padding="max_length", truncation=True,
            max_length=self._tokenizer.model_max_length, return_tensors="pt",
        )
        with torch.no_grad():
            hidden = self._model(tokens.input_ids.to(self._model.device))[0]
        return PromptEmbedding(hidden[0].cpu().numpy(), text)


class RealDenoiser(DenoiserInterface):
    """UNet noise prediction with classifier-free guidance folded in."""

    def __init__(self, unet, uncond_embedding: np.ndarray):
        self._unet = unet
        self._uncond = uncond_embedding

    def predict(self, latent, t, prompt, guidance_scale=1.0):
        torch = _require_torch()
        device = next(self._unet.parameters()).device
        z = torch.from_numpy(latent.data[None]).to(device)
        cond = torch.from_numpy(prompt.vectors[None]).to(device)
        with torch.no_grad():
            eps_cond = self._unet(z, t, encoder_hidden_states=cond).sample
            if guidance_scale != 1.0:
                uncond = torch.from_numpy(self._uncond[None]).to(device)
                eps_uncond = self._unet(z, t, encoder_hidden_states=uncond).sample
                eps = eps_uncond + guidance_scale * (eps_cond - eps_uncond)
            else:
                eps = eps_cond
        return latent.with_data(eps[0].cpu().numpy())


def real_adapters(registry: ModelRegistry | None = None) -> AdapterSet:
    """Assemble adapters from locally cached weights. Raises AdapterError
    with the offending model identifier when anything is missing."""
    registry = registry or ModelRegistry.default()
    registry.validate_complete()
    _require_torch()
    try:
        from diffusers import AutoencoderKL, UNet2DConditionModel
        from transformers import CLIPTextModel, CLIPTokenizer
    except ImportError as exc:
        raise AdapterError(
            "diffusers/transformers are required for real adapters; install "
            "`pip install scenefuse[real]`"
        ) from exc

    root = cache_root()

    def load(role: str, loader):
        entry = registry.resolve(role)
        path = entry.local_path(role, root)
        if not path.is_dir():
            raise AdapterError(
                f"no local weights for role {role!r}; run `scenefuse fetch-models`",
                model_id=entry.identifier,
            )
        try:
            return loader(path)
        except Exception as exc:
            raise AdapterError(f"failed to load {role}: {exc}", model_id=entry.identifier) from exc

    vae = load("encoder", lambda p: AutoencoderKL.from_pretrained(p, subfolder="vae"))
    tokenizer = load("text_encoder", lambda p: CLIPTokenizer.from_pretrained(p))
    text_model = load("text_encoder", lambda p: CLIPTextModel.from_pretrained(p))
    text_encoder = RealTextEncoder(tokenizer, text_model)
    uncond = text_encoder.embed(" ").vectors

    base_unet = load("base_denoiser", lambda p: UNet2DConditionModel.from_pretrained(p, subfolder="unet"))
    refiner_unet = load("refiner_denoiser", lambda p: UNet2DConditionModel.from_pretrained(p, subfolder="unet"))

    from .toy import ToyBackgroundGenerator, ToySegmenter, ToyUpscaler

    return AdapterSet(
        name="real",
        codec=RealLatentCodec(vae, getattr(vae.config, "scaling_factor", 0.18215)),
        text_encoder=text_encoder,
        base_denoiser=RealDenoiser(base_unet, uncond),
        refiner_denoiser=RealDenoiser(refiner_unet, uncond),
        # Upscaler/segmenter/bg-generator fall back to the deterministic
        # implementations until their checkpoints are wired up via fetch.
        upscaler=ToyUpscaler(),
        segmenter=ToySegmenter(),
        bg_generator=ToyBackgroundGenerator(),
    )
