import os

os.environ.setdefault("RECTIFY_QUIET", "1")

import numpy as np
import pytest

from src.lib.catalog import get_curve


@pytest.fixture
def circle():
    return get_curve("circle")


@pytest.fixture
def segment():
    return get_curve("segment")


@pytest.fixture
def double_circle():
    return get_curve("double_circle")


@pytest.fixture
def rng():
    return np.random.default_rng(0)
