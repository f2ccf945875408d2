import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(987654321)


def random_rigid(rng):
    """Uniform random rotation (quaternion from 4D gaussian) + random translation."""
    from procflow.kinematics import RigidTransform

    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    t = rng.uniform(-100, 100, size=3)
    return RigidTransform(q, t)
