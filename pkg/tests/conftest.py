import numpy as np
import pytest
from hypothesis import settings

from enclosure.geometry import HalfLine1D, Interval1D
from enclosure.sources import SourceBall

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

# 1D scene used throughout: D = ]1, inf[, B = [-1.5, -1], observation point 0
A_1D = 1.0
B_1D = Interval1D(-1.5, -1.0)
DIST_1D = 2.0


@pytest.fixture
def src1d():
    return SourceBall(B_1D, 1.0)


@pytest.fixture
def tau1d():
    return np.linspace(2.0, 12.0, 24)


@pytest.fixture
def obstacle1d():
    return HalfLine1D(A_1D)
