"""Core array types: latent tensors and binary masks.

Latents are float32 [C, H, W]; masks are {0, 1} uint8 [H, W] at either pixel
or latent resolution. Both validate on construction so downstream math can
assume finiteness and exact binarity.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParameterError

LATENT_MAGIC = b"SFLT"


class LatentRole(enum.Enum):
    OBJECT = "object"
    BACKGROUND = "background"
    PASTED = "pasted"
    COMPOSITE = "composite"
    REFINED = "refined"


class MaskResolution(enum.Enum):
    PIXEL = "pixel"
    LATENT = "latent"


@dataclass(frozen=True)
class LatentTensor:
    """A [C, H, W] float32 latent with a bookkeeping role tag."""

    data: np.ndarray
    role: LatentRole = LatentRole.COMPOSITE

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float32)
        if arr.ndim != 3:
            raise ParameterError(f"latent must be [C, H, W], got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ParameterError("latent contains non-finite entries")
        object.__setattr__(self, "data", arr)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape

    def with_data(self, data: np.ndarray, role: LatentRole | None = None) -> "LatentTensor":
        return LatentTensor(data, role if role is not None else self.role)

    def with_role(self, role: LatentRole) -> "LatentTensor":
        return LatentTensor(self.data, role)


@dataclass(frozen=True)
class BinaryMask:
    """A {0, 1} uint8 [H, W] mask. ``complement`` partitions exactly."""

    data: np.ndarray
    resolution: MaskResolution = MaskResolution.PIXEL

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 2:
            raise ParameterError(f"mask must be [H, W], got shape {arr.shape}")
        if not np.isin(arr, (0, 1)).all():
            raise ParameterError("mask values must be exactly 0 or 1")
        object.__setattr__(self, "data", arr.astype(np.uint8))

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def complement(self) -> "BinaryMask":
        return BinaryMask(1 - self.data, self.resolution)

    def coverage(self) -> float:
        """Fraction of 1-cells."""
        return float(self.data.mean())

    def is_empty(self) -> bool:
        return not bool(self.data.any())

    def is_full(self) -> bool:
        return bool(self.data.all())


def save_latent(latent: LatentTensor, path: str | Path) -> None:
    """Flat binary container: magic, ndim, dims (uint32 LE), row-major float32."""
    arr = latent.data
    header = LATENT_MAGIC + struct.pack("<I", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(arr.astype("<f4").tobytes(order="C"))


def load_latent(path: str | Path, role: LatentRole = LatentRole.COMPOSITE) -> LatentTensor:
    raw = Path(path).read_bytes()
    if raw[:4] != LATENT_MAGIC:
        raise ParameterError(f"{path}: not a latent container (bad magic)")
    ndim = struct.unpack("<I", raw[4:8])[0]
    dims = struct.unpack(f"<{ndim}I", raw[8 : 8 + 4 * ndim])
    data = np.frombuffer(raw[8 + 4 * ndim :], dtype="<f4").reshape(dims)
    return LatentTensor(data.copy(), role)
