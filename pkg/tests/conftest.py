import math

import pytest

from dispherical import MotionConstant, PhysicalParams, trace_trajectory

CONFINED_EA = -math.sin(math.pi / 18)
FREE_EA = math.sin(math.pi / 32)


@pytest.fixture(scope="session")
def params():
    return PhysicalParams()


@pytest.fixture(scope="session")
def confined(params):
    """Upper-source trace with eta_a = -sin(pi/18)."""
    return trace_trajectory("upper", MotionConstant(CONFINED_EA), params)


@pytest.fixture(scope="session")
def free(params):
    """Upper-source trace with eta_a = sin(pi/32)."""
    return trace_trajectory("upper", MotionConstant(FREE_EA), params)
