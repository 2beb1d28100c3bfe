"""Trajectories, reduced action and transit times of two coherent point sources.

Two spherical waves of wave number ``k`` leave point sources on the
``z`` axis at ``z = -a/2`` (source 1, "lower") and ``z = +a/2`` (source 2,
"upper").  The package evaluates their sum, the reduced action it
generates, the trajectories that follow from it, and the transit times
along those trajectories.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConvergenceError,
    DegenerateDirectionError,
    DisphericalError,
    DomainError,
    SingularConstantError,
    SingularityError,
)
from .coords import *  # noqa: E402,F401,F403
from .wavefield import *  # noqa: E402,F401,F403
from .action import *  # noqa: E402,F401,F403
from .trajectory import *  # noqa: E402,F401,F403
from .kinematics import *  # noqa: E402,F401,F403
from . import coords, wavefield, action, trajectory, kinematics, rootfind, io  # noqa: E402,F401
