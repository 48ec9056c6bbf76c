"""Pattern-learning predictive control for switching networks."""
from .architecture import BaselineSlsController, PlpController, RobustSlsController
from .models import JumpLinearSystem, ModeChain, NetworkTopology, Trajectory

__all__ = [
    "BaselineSlsController",
    "PlpController",
    "RobustSlsController",
    "JumpLinearSystem",
    "ModeChain",
    "NetworkTopology",
    "Trajectory",
]
