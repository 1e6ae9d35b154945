import numpy as np
import pytest
from scipy.spatial.transform import Rotation


@pytest.fixture
def rng() -> np.random.Generator:
    """Create a seeded random generator."""
    return np.random.default_rng(1234)


@pytest.fixture
def random_matrices() -> np.ndarray:
    """Create 1000 uniformly distributed rotation matrices."""
    return Rotation.random(1000, random_state=7).as_matrix()
