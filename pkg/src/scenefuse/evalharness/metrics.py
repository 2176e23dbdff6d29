"""Metric entry points: prompt alignment, perceptual distance, preference."""

from __future__ import annotations

import numpy as np

from ..errors import ParameterError
from ..images import as_rgb, resize_image
from .scorers import ClipScorer, PerceptualMetric, PreferenceScorer

RESIZE_POLICY = "resize_second_to_first"


def cosine_similarity_100(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if np.array_equal(a, b):
        if not a.any():
            raise ParameterError("cannot take cosine of a zero vector")
        return 100.0
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ParameterError("cannot take cosine of a zero vector")
    return float(100.0 * np.dot(a, b) / (na * nb))


def clip_score(image: np.ndarray, text: str, scorer: ClipScorer) -> float:
    """100 x cosine similarity of the joint image/text embeddings."""
    if not text:
        raise ParameterError("clip_score requires non-empty text")
    return cosine_similarity_100(scorer.embed_image(image), scorer.embed_text(text))


def lpips_score(image_a: np.ndarray, image_b: np.ndarray,
                metric: PerceptualMetric) -> float:
    """Perceptual distance, >= 0; dims are matched by resizing the second
    image (policy recorded in reports as RESIZE_POLICY)."""
    a, b = as_rgb(image_a), as_rgb(image_b)
    if a.shape != b.shape:
        b = resize_image(b, (a.shape[1], a.shape[0]))
    d = float(metric.distance(a, b))
    if not np.isfinite(d) or d < 0:
        raise ParameterError(f"perceptual metric returned invalid distance {d}")
    return d


def hpsv2_score(image: np.ndarray, prompt: str, scorer: PreferenceScorer) -> float:
    """Scalar human-preference estimate for (image, prompt)."""
    value = float(scorer.score(image, prompt))
    if not np.isfinite(value):
        raise ParameterError("preference scorer returned a non-finite value")
    return value
