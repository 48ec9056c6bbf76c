"""Network topologies and the dynamics they induce."""
from __future__ import annotations

import logging
from typing import FrozenSet, List, Optional, Tuple

import numpy as np
from scipy.sparse.csgraph import connected_components, shortest_path

from ..models import Edge, JumpLinearSystem, NetworkTopology

LOGGER = logging.getLogger(__name__)


def topology_to_dynamics(topo: NetworkTopology, mode: int) -> np.ndarray:
    """Laplacian diffusion ``A(m) = I - eps * L(m)``.

    Couplings at or above ``1 / max_degree`` may leave the open loop
    unstable; that is logged, not rejected.
    """

    laplacian = topo.laplacian(mode)
    max_degree = float(np.max(np.diag(laplacian))) if topo.num_nodes else 0.0
    if max_degree > 0 and topo.coupling_gain >= 1.0 / max_degree:
        LOGGER.warning(
            "Coupling %.3f >= 1/max_degree (%.3f) in mode %d; open loop may be unstable",
            topo.coupling_gain,
            1.0 / max_degree,
            mode,
        )
    return np.eye(topo.num_nodes) - topo.coupling_gain * laplacian


def input_matrix(topo: NetworkTopology) -> np.ndarray:
    return np.eye(topo.num_nodes)[:, list(topo.actuator_nodes)]


def hop_neighborhood(topo: NetworkTopology, mode: int, node: int, hops: int) -> FrozenSet[int]:
    """Nodes within ``hops`` edges of ``node`` in the topology of ``mode``."""

    if not 0 <= node < topo.num_nodes:
        raise ValueError(f"Unknown node {node}")
    if hops < 0:
        raise ValueError("hops must be non-negative")
    distances = shortest_path(topo.adjacency(mode), unweighted=True, directed=False, indices=node)
    return frozenset(int(j) for j in np.flatnonzero(distances <= hops))


def jump_system_from_topology(topo: NetworkTopology, disturbance_bound: float = 0.0) -> JumpLinearSystem:
    b = input_matrix(topo)
    return JumpLinearSystem(
        per_mode=tuple((topology_to_dynamics(topo, mode), b) for mode in range(topo.num_modes)),
        disturbance_bound=disturbance_bound,
    )


def path_edges(num_nodes: int) -> Tuple[Edge, ...]:
    return tuple((i, i + 1) for i in range(num_nodes - 1))


def ring_edges(num_nodes: int) -> Tuple[Edge, ...]:
    if num_nodes < 3:
        return path_edges(num_nodes)
    return path_edges(num_nodes) + ((num_nodes - 1, 0),)


def random_connected_edges(num_nodes: int, edge_prob: float, rng: np.random.Generator) -> Tuple[Edge, ...]:
    """Random spanning tree plus independent extra edges."""

    order = rng.permutation(num_nodes)
    edges = set()
    for idx in range(1, num_nodes):
        parent = order[rng.integers(0, idx)]
        edges.add((int(min(order[idx], parent)), int(max(order[idx], parent))))
    for i in range(num_nodes):
        for j in range(i + 1, num_nodes):
            if rng.random() < edge_prob:
                edges.add((i, j))
    return tuple(sorted(edges))


def random_topology(
    num_nodes: int,
    num_modes: int,
    edge_prob: float,
    seed: int,
    coupling_gain: float,
    actuated: Optional[List[int]] = None,
) -> NetworkTopology:
    rng = np.random.default_rng(seed)
    edges = tuple(random_connected_edges(num_nodes, edge_prob, rng) for _ in range(num_modes))
    return NetworkTopology(
        num_nodes=num_nodes,
        edges_per_mode=edges,
        coupling_gain=coupling_gain,
        actuated=tuple(actuated) if actuated is not None else None,
    )


def is_connected(topo: NetworkTopology, mode: int) -> bool:
    count, _ = connected_components(topo.adjacency(mode), directed=False)
    return count == 1
