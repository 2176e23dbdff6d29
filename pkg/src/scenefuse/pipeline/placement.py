"""User-driven object placement: scale, position, paste, and mask."""

from __future__ import annotations

import numpy as np
from PIL import Image

from ..errors import ParameterError
from ..images import as_rgb
from ..masks import make_mask
from ..tensors import BinaryMask, MaskResolution
from .config import PlacementSpec


def _object_mask(obj: np.ndarray, mask_threshold: float | None) -> np.ndarray:
    """Pixel mask of the (possibly RGBA) object image."""
    arr = np.asarray(obj)
    if arr.ndim == 3 and arr.shape[2] == 4:
        return (arr[:, :, 3] >= 128).astype(np.uint8)
    return make_mask(as_rgb(arr), mask_threshold).data


def place_object(
    object_image: np.ndarray,
    background_image: np.ndarray,
    placement: PlacementSpec,
    mask_threshold: float | None = None,
) -> tuple[np.ndarray, BinaryMask]:
    """Resize the object by ``placement.scale``, composite it at (x, y) and
    return the pasted canvas plus the aligned full-canvas pixel mask."""
    obj = np.asarray(object_image)
    bg = as_rgb(background_image)
    ch, cw = bg.shape[:2]
    if (cw, ch) != tuple(placement.canvas_size):
        raise ParameterError(
            f"placement canvas {placement.canvas_size} does not match "
            f"background dims ({cw}, {ch})"
        )
    oh, ow = obj.shape[:2]
    placement.validate_for(ow, oh)
    x, y, w, h = placement.scaled_box(ow, oh)

    pil_mode = "RGBA" if (obj.ndim == 3 and obj.shape[2] == 4) else "RGB"
    resized = np.asarray(
        Image.fromarray(obj if pil_mode == "RGBA" else as_rgb(obj), pil_mode).resize(
            (w, h), Image.LANCZOS
        )
    )
    obj_mask = _object_mask(resized, mask_threshold)

    pasted = bg.copy()
    region = pasted[y : y + h, x : x + w]
    region[obj_mask == 1] = as_rgb(resized)[obj_mask == 1]

    canvas_mask = np.zeros((ch, cw), dtype=np.uint8)
    canvas_mask[y : y + h, x : x + w] = obj_mask
    return pasted, BinaryMask(canvas_mask, MaskResolution.PIXEL)


def placement_bbox(placement: PlacementSpec, obj_w: int, obj_h: int) -> dict:
    x, y, w, h = placement.scaled_box(obj_w, obj_h)
    return {"x": x, "y": y, "width": w, "height": h}
