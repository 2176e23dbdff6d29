"""Pixel-image helpers: RGB uint8 arrays in, lossless PNG out."""

from __future__ import annotations

import hashlib
import io
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ParameterError


def as_rgb(image: np.ndarray) -> np.ndarray:
    img = np.asarray(image)
    if img.ndim == 2:
        img = np.stack([img] * 3, axis=2)
    if img.ndim != 3 or img.shape[2] not in (3, 4):
        raise ParameterError(f"expected an RGB(A) image, got shape {img.shape}")
    if img.shape[2] == 4:
        img = img[:, :, :3]
    if img.dtype != np.uint8:
        img = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    return img


def load_image(path: str | Path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"))


def save_image(image: np.ndarray, path: str | Path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(as_rgb(image)).save(path, format="PNG")


def encode_png(image: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(as_rgb(image)).save(buf, format="PNG")
    return buf.getvalue()


def decode_image_bytes(data: bytes) -> np.ndarray:
    try:
        with Image.open(io.BytesIO(data)) as im:
            return np.asarray(im.convert("RGB"))
    except Exception as exc:
        raise ParameterError(f"bytes do not decode as an image: {exc}") from exc


def resize_image(image: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    """size is (width, height); Lanczos resampling."""
    return np.asarray(Image.fromarray(as_rgb(image)).resize(size, Image.LANCZOS))


def image_digest(image: np.ndarray) -> str:
    img = as_rgb(image)
    h = hashlib.sha256()
    h.update(str(img.shape).encode())
    h.update(img.tobytes())
    return h.hexdigest()


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
