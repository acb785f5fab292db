import numpy as np
import pytest

from crlqa import phantom


def mask_array(rows) -> np.ndarray:
    return np.asarray(rows, dtype=np.uint8)


@pytest.fixture(scope="session")
def phantom_sample_500():
    """The seeded 500-phantom oracle sample shared across test modules."""
    return phantom.sample_params(1, 500)


@pytest.fixture(scope="session")
def favorable_phantom():
    """One all-favorable rendered phantom (image, mask, truth)."""
    return phantom.generate_phantom(phantom.scene_params())
