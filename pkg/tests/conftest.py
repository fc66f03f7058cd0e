import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

import numpy as np
import pytest

from chainplan.core import KinodynamicLimits, RandomSource, State
from chainplan.informed import InformedProblem


@pytest.fixture
def rand():
    return RandomSource(12345)


@pytest.fixture
def ellipse_problem():
    """Euclidean 2-D fixture: foci (0,0) and (4,0), c_best 5.

    Semi-axes 2.5 x 1.5; the hyperspheroid sits inside the [-1,5] x [-2,2]
    state box (box area 24, ellipse area pi * 3.75).
    """
    limits = KinodynamicLimits(q_min=[-1.0], q_max=[5.0], v_max=[2.0], a_max=[1.0])
    return InformedProblem(State([0.0], [0.0]), State([4.0], [0.0]),
                           limits, "euclidean", 5.0)


@pytest.fixture
def mtdi2_problem():
    """Two-joint MTDI fixture used for membership and sampler checks."""
    limits = KinodynamicLimits(q_min=[-3.0, -3.0], q_max=[3.0, 3.0],
                               v_max=[2.0, 2.0], a_max=[1.0, 1.0])
    x_s = State([-2.0, -1.5], [0.0, 0.0])
    x_g = State([2.0, 1.5], [0.0, 0.0])
    return InformedProblem(x_s, x_g, limits, "mtdi", np.inf)
