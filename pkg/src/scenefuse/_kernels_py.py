"""Pure-NumPy kernel implementations.

Fallback twin of the compiled ``_kernels`` extension. Both backends must
produce bit-identical float32 results: masks select (never multiply), and
arithmetic keeps the same per-element operation order as the C loops.
"""

from __future__ import annotations

import numpy as np


def blend(mask: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """m ? a : b per element; mask is [H, W], a/b are [C, H, W]."""
    return np.where(mask[None, :, :] != 0, a, b)


def noise_mix(x0: np.ndarray, eps: np.ndarray, s_sig: float, s_noise: float) -> np.ndarray:
    """s_sig * x0 + s_noise * eps in float32."""
    s_sig = np.float32(s_sig)
    s_noise = np.float32(s_noise)
    return s_sig * x0 + s_noise * eps


def masked_noise_blend(
    mask: np.ndarray,
    obj0: np.ndarray,
    eps: np.ndarray,
    s_sig: float,
    s_noise: float,
    bg: np.ndarray,
) -> np.ndarray:
    """Fused per-step combine: noised object inside the mask, bg outside."""
    noised = noise_mix(obj0, eps, s_sig, s_noise)
    return np.where(mask[None, :, :] != 0, noised, bg)


def ddim_update(
    z: np.ndarray,
    eps: np.ndarray,
    s_sig_t: float,
    s_noise_t: float,
    s_sig_prev: float,
    s_noise_prev: float,
) -> np.ndarray:
    """Deterministic (eta=0) sampler step from t to t_prev."""
    s_sig_t = np.float32(s_sig_t)
    s_noise_t = np.float32(s_noise_t)
    s_sig_prev = np.float32(s_sig_prev)
    s_noise_prev = np.float32(s_noise_prev)
    x0 = (z - s_noise_t * eps) / s_sig_t
    return s_sig_prev * x0 + s_noise_prev * eps


def block_coverage(mask: np.ndarray, factor: int, min_count: int) -> np.ndarray:
    """Downsample a {0,1} mask: output cell is 1 iff its factor x factor
    block contains at least ``min_count`` ones."""
    h, w = mask.shape
    blocks = mask.reshape(h // factor, factor, w // factor, factor)
    counts = blocks.sum(axis=(1, 3), dtype=np.int64)
    return (counts >= min_count).astype(np.uint8)
