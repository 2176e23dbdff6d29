"""Cross-backend contract: compiled and pure kernels agree bit-for-bit."""

import numpy as np
import pytest

from scenefuse import kernels
from scenefuse.errors import ParameterError
from scenefuse.rng import RandomSource

needs_compiled = pytest.mark.skipif(
    "compiled" not in kernels.available_backends(),
    reason="compiled extension not built",
)


@pytest.fixture
def data():
    rng = RandomSource(123)
    a = rng.child(0).draw_gaussian((4, 16, 16))
    b = rng.child(1).draw_gaussian((4, 16, 16))
    eps = rng.child(2).draw_gaussian((4, 16, 16))
    mask = (rng.child(3).draw_gaussian((16, 16)) > 0).astype(np.uint8)
    return mask, a, b, eps


def run_both(fn, *args):
    prev = kernels.get_backend()
    try:
        out = {}
        for name in kernels.available_backends():
            kernels.use_backend(name)
            out[name] = fn(*args)
        return out
    finally:
        kernels.use_backend(prev)


@needs_compiled
def test_blend_bitwise_equal(data):
    mask, a, b, _ = data
    out = run_both(kernels.blend, mask, a, b)
    assert out["compiled"].tobytes() == out["pure"].tobytes()


@needs_compiled
def test_noise_mix_bitwise_equal(data):
    _, a, _, eps = data
    out = run_both(kernels.noise_mix, a, eps, 0.83, 0.41)
    assert out["compiled"].tobytes() == out["pure"].tobytes()


@needs_compiled
def test_masked_noise_blend_bitwise_equal(data):
    mask, a, b, eps = data
    out = run_both(kernels.masked_noise_blend, mask, a, eps, 0.9, 0.3, b)
    assert out["compiled"].tobytes() == out["pure"].tobytes()


@needs_compiled
def test_ddim_update_bitwise_equal(data):
    _, a, _, eps = data
    out = run_both(kernels.ddim_update, a, eps, 0.7, 0.71, 0.9, 0.43)
    assert out["compiled"].tobytes() == out["pure"].tobytes()


@needs_compiled
def test_block_coverage_equal(data):
    mask, *_ = data
    out = run_both(kernels.block_coverage, mask, 4, 8)
    assert np.array_equal(out["compiled"], out["pure"])


def test_blend_selects_exactly(data):
    mask, a, b, _ = data
    out = kernels.blend(mask, a, b)
    np.testing.assert_array_equal(out[:, mask == 1], a[:, mask == 1])
    np.testing.assert_array_equal(out[:, mask == 0], b[:, mask == 0])


def test_masked_noise_blend_matches_separate_ops(data):
    mask, a, b, eps = data
    fused = kernels.masked_noise_blend(mask, a, eps, 0.6, 0.8, b)
    separate = kernels.blend(mask, kernels.noise_mix(a, eps, 0.6, 0.8), b)
    assert fused.tobytes() == separate.tobytes()


def test_shape_validation():
    with pytest.raises(ParameterError):
        kernels.blend(np.ones((4, 4), np.uint8), np.zeros((1, 4, 4), np.float32),
                      np.zeros((1, 4, 5), np.float32))
    with pytest.raises(ParameterError):
        kernels.block_coverage(np.ones((5, 4), np.uint8), 4, 1)


def test_unknown_backend_rejected():
    with pytest.raises(ParameterError):
        kernels.use_backend("gpu")
