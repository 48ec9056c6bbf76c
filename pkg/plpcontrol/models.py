"""Data models for the jump-linear plant."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse.csgraph import connected_components

from . import config
from .errors import NonStochasticMatrixError

Edge = Tuple[int, int]


def check_stochastic(tpm: np.ndarray, tol: float = config.STOCHASTIC_TOL) -> np.ndarray:
    """Return ``tpm`` as a float array or raise if it is not row-stochastic."""

    matrix = np.asarray(tpm, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] == 0:
        raise NonStochasticMatrixError(f"Transition matrix must be square and non-empty, got shape {matrix.shape}")
    if np.any(matrix < 0.0) or np.any(matrix > 1.0):
        raise NonStochasticMatrixError("Transition probabilities must lie in [0, 1]")
    row_error = np.abs(matrix.sum(axis=1) - 1.0)
    if np.any(row_error > tol):
        raise NonStochasticMatrixError(f"Rows must sum to 1 (worst deviation {row_error.max():.3e})")
    return matrix


@dataclass(frozen=True, eq=False)
class ModeChain:
    """Finite Markov chain driving the mode jumps."""

    tpm: np.ndarray
    initial_mode: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "tpm", check_stochastic(self.tpm))
        if not 0 <= self.initial_mode < self.num_modes:
            raise ValueError(f"Initial mode {self.initial_mode} outside 0..{self.num_modes - 1}")

    @property
    def num_modes(self) -> int:
        return int(self.tpm.shape[0])

    def is_irreducible(self) -> bool:
        count, _ = connected_components(self.tpm > 0.0, directed=True, connection="strong")
        return count == 1

    def to_dict(self) -> Dict[str, object]:
        return {"tpm": self.tpm.tolist(), "initial_mode": self.initial_mode}


@dataclass(frozen=True, eq=False)
class JumpLinearSystem:
    """Per-mode (A_m, B_m) dynamics sharing state and input dimensions."""

    per_mode: Tuple[Tuple[np.ndarray, np.ndarray], ...]
    disturbance_bound: float = 0.0

    def __post_init__(self) -> None:
        if not self.per_mode:
            raise ValueError("A jump system needs at least one mode")
        pairs = tuple((np.atleast_2d(np.asarray(a, dtype=float)), np.atleast_2d(np.asarray(b, dtype=float))) for a, b in self.per_mode)
        n_x = pairs[0][0].shape[0]
        n_u = pairs[0][1].shape[1]
        for mode, (a, b) in enumerate(pairs):
            if a.shape != (n_x, n_x) or b.shape != (n_x, n_u):
                raise ValueError(f"Mode {mode} has A {a.shape} and B {b.shape}, expected ({n_x}, {n_x}) and ({n_x}, {n_u})")
        if self.disturbance_bound < 0:
            raise ValueError("Disturbance bound must be non-negative")
        object.__setattr__(self, "per_mode", pairs)

    @property
    def num_modes(self) -> int:
        return len(self.per_mode)

    @property
    def state_dim(self) -> int:
        return int(self.per_mode[0][0].shape[0])

    @property
    def input_dim(self) -> int:
        return int(self.per_mode[0][1].shape[1])

    def A(self, mode: int) -> np.ndarray:
        return self.per_mode[mode][0]

    def B(self, mode: int) -> np.ndarray:
        return self.per_mode[mode][1]


@dataclass(frozen=True)
class NetworkTopology:
    """Undirected per-mode edge sets over a fixed node set."""

    num_nodes: int
    edges_per_mode: Tuple[Tuple[Edge, ...], ...]
    coupling_gain: float = config.DEFAULT_COUPLING
    actuated: Optional[Tuple[int, ...]] = None

    def __post_init__(self) -> None:
        if self.num_nodes < 1:
            raise ValueError("A topology needs at least one node")
        if self.coupling_gain <= 0:
            raise ValueError("Coupling gain must be positive")
        normalized = []
        for mode, edges in enumerate(self.edges_per_mode):
            cleaned = set()
            for i, j in edges:
                if i == j:
                    raise ValueError(f"Self-loop on node {i} in mode {mode}")
                if not (0 <= i < self.num_nodes and 0 <= j < self.num_nodes):
                    raise ValueError(f"Edge ({i}, {j}) in mode {mode} references an unknown node")
                cleaned.add((min(i, j), max(i, j)))
            normalized.append(tuple(sorted(cleaned)))
        object.__setattr__(self, "edges_per_mode", tuple(normalized))
        if self.actuated is not None:
            nodes = tuple(int(node) for node in self.actuated)
            if not nodes or any(not 0 <= node < self.num_nodes for node in nodes):
                raise ValueError("Actuated nodes must be a non-empty subset of the node set")
            object.__setattr__(self, "actuated", nodes)

    @property
    def num_modes(self) -> int:
        return len(self.edges_per_mode)

    @property
    def actuator_nodes(self) -> Tuple[int, ...]:
        return self.actuated if self.actuated is not None else tuple(range(self.num_nodes))

    def adjacency(self, mode: int) -> np.ndarray:
        adjacency = np.zeros((self.num_nodes, self.num_nodes))
        for i, j in self.edges_per_mode[mode]:
            adjacency[i, j] = adjacency[j, i] = 1.0
        return adjacency

    def laplacian(self, mode: int) -> np.ndarray:
        adjacency = self.adjacency(mode)
        return np.diag(adjacency.sum(axis=0)) - adjacency


@dataclass
class Trajectory:
    """Simulated states, inputs and ground-truth modes."""

    states: np.ndarray
    inputs: np.ndarray
    true_modes: np.ndarray
    switch_times: List[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        horizon = self.inputs.shape[0]
        if self.states.shape[0] != horizon + 1 or self.true_modes.shape[0] != horizon:
            raise ValueError("Trajectory lengths are inconsistent")
        if any(b <= a for a, b in zip(self.switch_times, self.switch_times[1:])):
            raise ValueError("Switch times must be strictly increasing")

    @property
    def horizon(self) -> int:
        return int(self.inputs.shape[0])

    def segments(self) -> List[Tuple[int, int, int]]:
        """Return ``(start, stop, mode)`` for each constant-mode stretch."""

        bounds = [0] + [t for t in self.switch_times if 0 < t < self.horizon] + [self.horizon]
        return [(start, stop, int(self.true_modes[start])) for start, stop in zip(bounds, bounds[1:]) if stop > start]


def switch_times_of(modes: Sequence[int]) -> List[int]:
    return [t for t in range(1, len(modes)) if modes[t] != modes[t - 1]]
