import numpy as np
import pytest

from scenefuse.errors import ParameterError
from scenefuse.rng import RandomSource
from scenefuse.tensors import (
    BinaryMask,
    LatentRole,
    LatentTensor,
    load_latent,
    save_latent,
)


def test_latent_requires_3d():
    with pytest.raises(ParameterError):
        LatentTensor(np.zeros((4, 4), np.float32))


def test_latent_rejects_non_finite():
    data = np.zeros((1, 2, 2), np.float32)
    data[0, 0, 0] = np.nan
    with pytest.raises(ParameterError):
        LatentTensor(data)
    data[0, 0, 0] = np.inf
    with pytest.raises(ParameterError):
        LatentTensor(data)


def test_latent_casts_to_float32():
    lt = LatentTensor(np.ones((1, 2, 2), np.float64))
    assert lt.data.dtype == np.float32


def test_role_tagging():
    lt = LatentTensor(np.zeros((1, 2, 2)), LatentRole.OBJECT)
    assert lt.with_role(LatentRole.PASTED).role is LatentRole.PASTED
    assert lt.role is LatentRole.OBJECT


def test_mask_complement_partition():
    m = BinaryMask((np.arange(16).reshape(4, 4) % 3 == 0).astype(np.uint8))
    c = m.complement()
    assert np.array_equal(m.data + c.data, np.ones((4, 4), np.uint8))
    assert not np.logical_and(m.data, c.data).any()


def test_latent_serialization_round_trip(tmp_path):
    lt = LatentTensor(RandomSource(3).draw_gaussian((4, 6, 5)), LatentRole.COMPOSITE)
    path = tmp_path / "latent.bin"
    save_latent(lt, path)
    back = load_latent(path)
    np.testing.assert_array_equal(back.data, lt.data)
    assert back.data.dtype == np.float32


def test_latent_load_rejects_bad_magic(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"NOPE" + b"\x00" * 32)
    with pytest.raises(ParameterError):
        load_latent(path)


def test_rng_child_streams_are_stable():
    a = RandomSource(7).child(1, 2).draw_gaussian((8,))
    b = RandomSource(7).child(1, 2).draw_gaussian((8,))
    c = RandomSource(7).child(1, 3).draw_gaussian((8,))
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_rng_child_independent_of_draw_position():
    r = RandomSource(7)
    r.draw_gaussian((16,))
    after_draw = r.child(5).draw_gaussian((4,))
    fresh = RandomSource(7).child(5).draw_gaussian((4,))
    np.testing.assert_array_equal(after_draw, fresh)
