import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent))

import numpy as np
import pytest

from src.model import ModelManifold, ScaledFrame


@pytest.fixture
def torus1():
    return ModelManifold.torus(1)


@pytest.fixture
def torus2():
    return ModelManifold.torus(2)


@pytest.fixture
def flat1():
    return ModelManifold.flat(1, 1.0)


@pytest.fixture
def frame100():
    return ScaledFrame(100)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
