import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def cameraman():
    """256x256 Cameraman: scikit-image's 512x512 scan, 2x2 block averaged."""
    data = pytest.importorskip("skimage.data")
    return data.camera().astype(np.float64).reshape(256, 2, 256, 2).mean(axis=(1, 3))
