import math
from pathlib import Path

import numpy as np
import pytest

from abincull import CameraPose, frustum_from_camera


@pytest.fixture
def canonical_pose():
    """Eye at origin looking down -z, 90 degree fov, near 1, far 100."""
    return CameraPose(eye=[0.0, 0.0, 0.0], look_dir=[0.0, 0.0, -1.0],
                      up_hint=[0.0, 1.0, 0.0], fov_y=math.pi / 2,
                      aspect=1.0, near=1.0, far=100.0)


@pytest.fixture
def canonical_frustum(canonical_pose):
    return frustum_from_camera(canonical_pose)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def repo_root() -> Path:
    return Path(__file__).resolve().parents[1]


@pytest.fixture
def scenarios_dir():
    return repo_root() / "scenarios"
