"""Kernel backend selection.

Prefers the compiled extension, falls back to pure NumPy when it is absent
or when SCENEFUSE_PURE=1 is set. ``use_backend`` switches at runtime (used by
the benchmark and the cross-backend equality tests).
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py
from .errors import ParameterError

try:
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

_BACKENDS = {"pure": _kernels_py}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled

if os.environ.get("SCENEFUSE_PURE") == "1" or _compiled is None:
    _active_name = "pure"
else:
    _active_name = "compiled"
_active = _BACKENDS[_active_name]


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def get_backend() -> str:
    return _active_name


def use_backend(name: str) -> None:
    global _active, _active_name
    if name not in _BACKENDS:
        raise ParameterError(f"unknown kernel backend {name!r}; have {available_backends()}")
    _active_name = name
    _active = _BACKENDS[name]


def _as_latent(arr: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(arr, dtype=np.float32)


def _as_mask(arr: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(arr, dtype=np.uint8)


def blend(mask: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape != b.shape or mask.shape != a.shape[1:]:
        raise ParameterError(
            f"shape mismatch in blend: mask {mask.shape}, a {a.shape}, b {b.shape}"
        )
    return np.asarray(_active.blend(_as_mask(mask), _as_latent(a), _as_latent(b)))


def noise_mix(x0: np.ndarray, eps: np.ndarray, s_sig: float, s_noise: float) -> np.ndarray:
    if x0.shape != eps.shape:
        raise ParameterError(f"shape mismatch in noise_mix: {x0.shape} vs {eps.shape}")
    return np.asarray(_active.noise_mix(_as_latent(x0), _as_latent(eps), s_sig, s_noise))


def masked_noise_blend(
    mask: np.ndarray,
    obj0: np.ndarray,
    eps: np.ndarray,
    s_sig: float,
    s_noise: float,
    bg: np.ndarray,
) -> np.ndarray:
    if obj0.shape != eps.shape or obj0.shape != bg.shape or mask.shape != obj0.shape[1:]:
        raise ParameterError("shape mismatch in masked_noise_blend")
    return np.asarray(
        _active.masked_noise_blend(
            _as_mask(mask), _as_latent(obj0), _as_latent(eps), s_sig, s_noise, _as_latent(bg)
        )
    )


def ddim_update(
    z: np.ndarray,
    eps: np.ndarray,
    s_sig_t: float,
    s_noise_t: float,
    s_sig_prev: float,
    s_noise_prev: float,
) -> np.ndarray:
    if z.shape != eps.shape:
        raise ParameterError(f"shape mismatch in ddim_update: {z.shape} vs {eps.shape}")
    return np.asarray(
        _active.ddim_update(
            _as_latent(z), _as_latent(eps), s_sig_t, s_noise_t, s_sig_prev, s_noise_prev
        )
    )


def block_coverage(mask: np.ndarray, factor: int, min_count: int) -> np.ndarray:
    h, w = mask.shape
    if factor < 1 or h % factor or w % factor:
        raise ParameterError(f"mask dims {mask.shape} not divisible by factor {factor}")
    return np.asarray(_active.block_coverage(_as_mask(mask), factor, min_count))
