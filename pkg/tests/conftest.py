import numpy as np
import pytest

from scenefuse.adapters import toy_adapters
from scenefuse.pipeline import PipelineConfig, PlacementSpec, PromptSpec


@pytest.fixture
def adapters():
    return toy_adapters()


@pytest.fixture
def object_image():
    """64x64 red square on white."""
    img = np.full((64, 64, 3), 255, np.uint8)
    img[8:56, 8:56] = (200, 30, 30)
    return img


@pytest.fixture
def gray_object_image():
    """64x64 dark gray (colorless) square on white."""
    img = np.full((64, 64, 3), 255, np.uint8)
    img[8:56, 8:56] = (70, 70, 70)
    return img


@pytest.fixture
def background_image():
    """128x128 blue-ish horizontal gradient."""
    img = np.zeros((128, 128, 3), np.uint8)
    img[:, :, 2] = np.linspace(40, 200, 128).astype(np.uint8)[None, :]
    img[:, :, 1] = 60
    return img


@pytest.fixture
def placement():
    return PlacementSpec(x=32, y=40, scale=1.0, canvas_size=(128, 128))


@pytest.fixture
def prompt_spec():
    return PromptSpec(product_type="bicycle", color="red", place="a city street")


@pytest.fixture
def fast_config():
    return PipelineConfig(
        compose_steps=6, refine_inference_steps=5, refine_noise_steps=2,
        colorize_steps=4, seed=11,
    )
