"""Object-mask creation and pixel-to-latent mask downsampling."""

from __future__ import annotations

import math
import warnings

import numpy as np

from . import kernels
from .errors import EmptyMaskWarning, ParameterError
from .tensors import BinaryMask, MaskResolution

DEFAULT_THRESHOLD_FRACTION = 0.95  # of max intensity; tolerates JPEG ringing
LATENT_SPATIAL_FACTOR = 8
DEFAULT_BLOCK_COVERAGE = 0.5


def make_mask(object_image: np.ndarray, threshold: float | None = None) -> BinaryMask:
    """Threshold an object-on-bright-background image into a {0,1} mask.

    Pixels brighter than ``threshold`` become 0 (background), all others 1
    (object). Brightness is the channel mean. An all-zero result emits an
    EmptyMaskWarning instead of failing.
    """
    img = np.asarray(object_image)
    if img.ndim == 3:
        brightness = img.astype(np.float64).mean(axis=2)
    elif img.ndim == 2:
        brightness = img.astype(np.float64)
    else:
        raise ParameterError(f"expected [H, W] or [H, W, C] image, got shape {img.shape}")

    max_intensity = 255.0 if img.dtype == np.uint8 else float(brightness.max() or 1.0)
    if threshold is None:
        threshold = DEFAULT_THRESHOLD_FRACTION * max_intensity
    if not 0 < threshold < max_intensity:
        raise ParameterError(
            f"threshold must be in (0, {max_intensity}), got {threshold}"
        )

    mask = (brightness <= threshold).astype(np.uint8)
    if not mask.any():
        warnings.warn("mask is empty: every pixel is brighter than the threshold",
                      EmptyMaskWarning)
    return BinaryMask(mask, MaskResolution.PIXEL)


def downsample_mask(
    mask: BinaryMask,
    factor: int = LATENT_SPATIAL_FACTOR,
    coverage: float = DEFAULT_BLOCK_COVERAGE,
) -> BinaryMask:
    """Map a pixel mask to latent resolution by block coverage.

    A latent cell is 1 iff at least ``coverage`` of its factor x factor pixel
    block is 1. Coverage-based mapping preserves thin structures better than
    nearest-neighbor decimation.
    """
    if mask.resolution is not MaskResolution.PIXEL:
        raise ParameterError("downsample_mask expects a pixel-resolution mask")
    if not 0 < coverage <= 1:
        raise ParameterError(f"coverage must be in (0, 1], got {coverage}")
    h, w = mask.shape
    if factor < 1 or h % factor or w % factor:
        raise ParameterError(f"mask dims ({h}, {w}) not divisible by factor {factor}")

    min_count = math.ceil(coverage * factor * factor)
    data = kernels.block_coverage(mask.data, factor, min_count)
    return BinaryMask(data, MaskResolution.LATENT)
