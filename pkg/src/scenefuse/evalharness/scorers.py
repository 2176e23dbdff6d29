"""Scoring backends: deterministic toys plus optional pretrained wrappers.

The toy scorers are not meant to be accurate, only to be order-correct on
obvious probes (identical images score 0 distance, noisier images score
worse) so the harness logic is testable without checkpoints.
"""

from __future__ import annotations

import abc
import hashlib

import numpy as np

from ..errors import AdapterError, ParameterError
from ..images import as_rgb, resize_image


class ClipScorer(abc.ABC):
    @abc.abstractmethod
    def embed_image(self, image: np.ndarray) -> np.ndarray:
        ...

    @abc.abstractmethod
    def embed_text(self, text: str) -> np.ndarray:
        ...


class PerceptualMetric(abc.ABC):
    @abc.abstractmethod
    def distance(self, a: np.ndarray, b: np.ndarray) -> float:
        ...


class PreferenceScorer(abc.ABC):
    @abc.abstractmethod
    def score(self, image: np.ndarray, prompt: str) -> float:
        ...


def _hash_vector(text: str, dim: int) -> np.ndarray:
    digest = hashlib.sha256(text.encode()).digest()
    seed = int.from_bytes(digest[:8], "little")
    gen = np.random.Generator(np.random.PCG64(seed))
    return gen.standard_normal(dim).astype(np.float32)


class ToyClipScorer(ClipScorer):
    """Image embedding = pooled 8x8 channel means; text embedding = hash.

    A unit bias component keeps the embedding nonzero even for single-color
    images, so degenerate inputs still score.
    """

    def __init__(self, dim: int = 193):
        self.dim = dim

    def embed_image(self, image: np.ndarray) -> np.ndarray:
        img = as_rgb(image)
        pooled = resize_image(img, (8, 8)).astype(np.float32) / 255.0
        vec = pooled.transpose(2, 0, 1).reshape(-1)
        return np.concatenate([vec - vec.mean(), np.ones(1, dtype=np.float32)])

    def embed_text(self, text: str) -> np.ndarray:
        if not text:
            raise ParameterError("cannot embed empty text")
        return _hash_vector("clip:" + text, self.dim)


class ToyPerceptualMetric(PerceptualMetric):
    """Multi-scale mean-squared feature distance.

    Exactly zero on identical inputs, symmetric, finite on flat images, and
    increases with corruption amplitude.
    """

    scales = (1, 4, 8)

    def _features(self, image: np.ndarray) -> list[np.ndarray]:
        img = as_rgb(image).astype(np.float64) / 255.0
        h, w = img.shape[:2]
        feats = []
        for s in self.scales:
            nh, nw = (h // s) * s, (w // s) * s
            if nh == 0 or nw == 0:
                continue
            view = img[:nh, :nw].reshape(nh // s, s, nw // s, s, 3)
            feats.append(view.mean(axis=(1, 3)))
        return feats

    def distance(self, a: np.ndarray, b: np.ndarray) -> float:
        fa, fb = self._features(a), self._features(b)
        parts = [float(np.mean((x - y) ** 2)) for x, y in zip(fa, fb)]
        return float(np.mean(parts))


class ToyPreferenceScorer(PreferenceScorer):
    """Prefers smooth, moderately colorful images; noise lowers the score."""

    def score(self, image: np.ndarray, prompt: str) -> float:
        if not prompt:
            raise ParameterError("preference scoring requires a prompt")
        img = as_rgb(image).astype(np.float64) / 255.0
        dx = np.abs(np.diff(img, axis=1)).mean()
        dy = np.abs(np.diff(img, axis=0)).mean()
        roughness = (dx + dy) / 2.0
        colorfulness = img.std(axis=2).mean()
        # tiny deterministic prompt term keeps (image, prompt) -> score stable
        prompt_term = (int(hashlib.sha256(prompt.encode()).hexdigest()[:4], 16) % 997) * 1e-7
        return float(1.0 / (1.0 + 12.0 * roughness) + 0.1 * colorfulness + prompt_term)


class RealClipScorer(ClipScorer):
    """transformers CLIP wrapper; weights must already be cached locally."""

    def __init__(self, model_id: str = "openai/clip-vit-base-patch32"):
        try:
            import torch  # noqa: F401
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as exc:
            raise AdapterError(
                "real CLIP scoring needs torch+transformers; install "
                "`pip install scenefuse[real]`"
            ) from exc
        try:
            self._model = CLIPModel.from_pretrained(model_id, local_files_only=True)
            self._proc = CLIPProcessor.from_pretrained(model_id, local_files_only=True)
        except Exception as exc:
            raise AdapterError(
                f"CLIP weights not cached locally; run `scenefuse fetch-models`",
                model_id=model_id,
            ) from exc
        self.model_id = model_id

    def embed_image(self, image: np.ndarray) -> np.ndarray:
        import torch

        inputs = self._proc(images=as_rgb(image), return_tensors="pt")
        with torch.no_grad():
            feats = self._model.get_image_features(**inputs)
        return feats[0].numpy()

    def embed_text(self, text: str) -> np.ndarray:
        import torch

        if not text:
            raise ParameterError("cannot embed empty text")
        inputs = self._proc(text=[text], return_tensors="pt", padding=True, truncation=True)
        with torch.no_grad():
            feats = self._model.get_text_features(**inputs)
        return feats[0].numpy()


class RealPerceptualMetric(PerceptualMetric):
    """lpips-package wrapper; optional dependency with cached weights."""

    def __init__(self, net: str = "alex"):
        try:
            import lpips
            import torch  # noqa: F401
        except ImportError as exc:
            raise AdapterError(
                "real perceptual scoring needs the lpips package; "
                "`pip install lpips` (and scenefuse[real] for torch)"
            ) from exc
        try:
            self._model = lpips.LPIPS(net=net)
        except Exception as exc:
            raise AdapterError(
                f"LPIPS weights unavailable locally; connect once or prefetch them",
                model_id=f"lpips/{net}",
            ) from exc

    def distance(self, a: np.ndarray, b: np.ndarray) -> float:
        import torch

        def prep(img):
            x = torch.from_numpy(as_rgb(img).astype(np.float32) / 127.5 - 1.0)
            return x.permute(2, 0, 1).unsqueeze(0)

        with torch.no_grad():
            return float(self._model(prep(a), prep(b)).item())


class RealPreferenceScorer(PreferenceScorer):
    """hpsv2-package wrapper; checkpoint must be fetched out-of-band."""

    def __init__(self):
        try:
            import hpsv2  # noqa: F401
        except ImportError as exc:
            raise AdapterError(
                "real preference scoring needs the hpsv2 package and its "
                "checkpoint; `pip install hpsv2` then run its download step"
            ) from exc
        self._hpsv2 = hpsv2

    def score(self, image: np.ndarray, prompt: str) -> float:
        from PIL import Image

        result = self._hpsv2.score(Image.fromarray(as_rgb(image)), prompt)
        return float(result[0] if isinstance(result, (list, tuple)) else result)


class ScorerSet:
    """The three metric backends a report run uses."""

    def __init__(self, clip: ClipScorer, perceptual: PerceptualMetric,
                 preference: PreferenceScorer, name: str = "toy"):
        self.clip = clip
        self.perceptual = perceptual
        self.preference = preference
        self.name = name


def toy_scorers() -> ScorerSet:
    return ScorerSet(ToyClipScorer(), ToyPerceptualMetric(), ToyPreferenceScorer(), "toy")


def real_scorers() -> ScorerSet:
    """Pretrained scoring stack; raises AdapterError with a fetch hint for
    whichever backend is missing."""
    return ScorerSet(RealClipScorer(), RealPerceptualMetric(), RealPreferenceScorer(),
                     "real")
