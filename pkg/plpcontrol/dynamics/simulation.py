"""Seeded simulation of the jump-linear plant."""
from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from typing import Optional, Protocol, Sequence

import numpy as np

from .. import config
from ..errors import DivergenceError
from ..models import JumpLinearSystem, Trajectory, switch_times_of

LOGGER = logging.getLogger(__name__)


class Controller(Protocol):
    def __call__(self, t: int, x: np.ndarray, true_mode: int) -> np.ndarray: ...


class DisturbanceSource(Protocol):
    def sample(self, horizon: int, dim: int, rng: np.random.Generator) -> np.ndarray: ...


@dataclass(frozen=True)
class UniformDisturbance:
    """Zero-mean uniform on [-bound, bound] per coordinate."""

    bound: float

    def sample(self, horizon: int, dim: int, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(-self.bound, self.bound, size=(horizon, dim))


@dataclass(frozen=True)
class GaussianDisturbance:
    """Unbounded noise; mode identification is no longer guaranteed sound."""

    sigma: float

    def __post_init__(self) -> None:
        LOGGER.warning("Gaussian disturbances break the bounded-noise soundness of mode identification")

    def sample(self, horizon: int, dim: int, rng: np.random.Generator) -> np.ndarray:
        return rng.normal(0.0, self.sigma, size=(horizon, dim))


@dataclass(frozen=True)
class FixedDisturbance:
    """Replays a given sequence, zero-padded past its end."""

    values: np.ndarray

    def sample(self, horizon: int, dim: int, rng: np.random.Generator) -> np.ndarray:
        values = np.atleast_2d(np.asarray(self.values, dtype=float))
        out = np.zeros((horizon, dim))
        rows = min(horizon, values.shape[0])
        out[:rows] = values[:rows]
        return out


def zero_controller(input_dim: int) -> Controller:
    def control(t: int, x: np.ndarray, true_mode: int) -> np.ndarray:
        return np.zeros(input_dim)

    return control


def realization_hash(modes: np.ndarray, disturbances: np.ndarray) -> str:
    digest = hashlib.sha256()
    digest.update(np.ascontiguousarray(modes, dtype=np.int64).tobytes())
    digest.update(np.ascontiguousarray(disturbances, dtype=float).tobytes())
    return digest.hexdigest()[:16]


def simulate(
    sys: JumpLinearSystem,
    modes: Sequence[int],
    controller: Optional[Controller],
    disturbance: DisturbanceSource,
    horizon: int,
    seed: int = 0,
    x0: Optional[np.ndarray] = None,
) -> Trajectory:
    """Roll out ``x[t+1] = A_m x[t] + B_m u[t] + w[t]`` with the active mode's matrices.

    Disturbances are drawn up front from ``seed`` so every controller sees the
    same realisation.
    """

    modes = np.asarray(modes, dtype=int)
    if modes.shape[0] < horizon:
        raise ValueError(f"Need {horizon} modes, got {modes.shape[0]}")
    modes = modes[:horizon]
    rng = np.random.default_rng(seed)
    w = disturbance.sample(horizon, sys.state_dim, rng)
    control = controller or zero_controller(sys.input_dim)

    states = np.zeros((horizon + 1, sys.state_dim))
    inputs = np.zeros((horizon, sys.input_dim))
    if x0 is not None:
        states[0] = np.asarray(x0, dtype=float)
    for t in range(horizon):
        mode = int(modes[t])
        u = np.asarray(control(t, states[t], mode), dtype=float).reshape(sys.input_dim)
        inputs[t] = u
        states[t + 1] = sys.A(mode) @ states[t] + sys.B(mode) @ u + w[t]
        if not np.all(np.isfinite(states[t + 1])) or np.max(np.abs(states[t + 1])) > config.DIVERGENCE_LIMIT:
            error = DivergenceError(t + 1)
            error.partial_states = states[: t + 2].copy()
            raise error
    LOGGER.debug("Simulated %d steps, realisation %s", horizon, realization_hash(modes, w))
    return Trajectory(states=states, inputs=inputs, true_modes=modes.copy(), switch_times=switch_times_of(modes))
