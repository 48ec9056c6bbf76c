from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from plpcontrol.models import JumpLinearSystem, ModeChain, NetworkTopology  # noqa: E402
from plpcontrol.dynamics.network import path_edges, ring_edges  # noqa: E402


@pytest.fixture
def scalar_system() -> JumpLinearSystem:
    """Two scalar modes that disagree on the sign of the drift."""

    return JumpLinearSystem(per_mode=((np.array([[0.5]]), np.array([[1.0]])), (np.array([[-0.5]]), np.array([[1.0]]))), disturbance_bound=0.01)


@pytest.fixture
def alternating_chain() -> ModeChain:
    return ModeChain(tpm=np.array([[0.0, 1.0], [1.0, 0.0]]), initial_mode=0)


@pytest.fixture
def fair_coin() -> ModeChain:
    return ModeChain(tpm=np.full((2, 2), 0.5), initial_mode=0)


@pytest.fixture
def small_network() -> NetworkTopology:
    """Four nodes switching between a path and a ring."""

    return NetworkTopology(num_nodes=4, edges_per_mode=(path_edges(4), ring_edges(4)), coupling_gain=0.2)
