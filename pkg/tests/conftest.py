import numpy as np
import pytest


@pytest.fixture
def np_rng():
    return np.random.default_rng(1234)


def random_image(rng, h=32, w=32):
    return rng.random((h, w, 3)).astype(np.float32)


def smooth_image(rng, h=48, w=64, cell=8):
    """Blocky low-frequency image; kind to JPEG and resampling tests."""
    base = rng.random((h // cell + 1, w // cell + 1, 3))
    big = np.kron(base, np.ones((cell, cell, 1)))
    return np.clip(big[:h, :w], 0, 1).astype(np.float32)
