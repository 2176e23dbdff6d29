"""Seeded random sources with reproducible, independently re-derivable streams.

Every stochastic operation takes an explicit RandomSource. Child streams are
derived from (seed, spawn_key) so a test or a replay can regenerate the exact
draw used at any pipeline stage or diffusion step without replaying the whole
run.
"""

from __future__ import annotations

import numpy as np


class RandomSource:
    """Deterministic Gaussian source: same seed, same draw sequence."""

    def __init__(self, seed: int, spawn_key: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.spawn_key = tuple(int(k) for k in spawn_key)
        self._gen = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=self.spawn_key))
        )

    def child(self, *key: int) -> "RandomSource":
        """Independent stream addressed by (seed, spawn_key + key).

        Identical (seed, key) always yields an identical stream, regardless
        of what has been drawn from this source.
        """
        return RandomSource(self.seed, self.spawn_key + tuple(int(k) for k in key))

    def draw_gaussian(self, shape: tuple[int, ...], dtype=np.float32) -> np.ndarray:
        return self._gen.standard_normal(size=shape, dtype=dtype)

    def integers(self, low: int, high: int, size=None):
        return self._gen.integers(low, high, size=size)

    def shuffled(self, items: list) -> list:
        out = list(items)
        self._gen.shuffle(out)
        return out

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed}, spawn_key={self.spawn_key})"
