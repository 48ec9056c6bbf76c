"""Synthesis from stored trajectories through Hankel matrices."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from .. import config
from ..errors import InfeasibleLocalityError, NotPersistentlyExcitingError
from .hankel import build_hankel, numerical_rank
from .model_based import SystemResponse, finalize_response, unpack_columns
from .solver import equality_constrained_lstsq, psd_sqrt

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DataSegment:
    """A contiguous single-mode stretch: ``states`` has one row more than ``inputs``."""

    states: np.ndarray
    inputs: np.ndarray

    def __post_init__(self) -> None:
        states = np.asarray(self.states, dtype=float)
        inputs = np.asarray(self.inputs, dtype=float)
        if states.ndim == 1:
            states = states[:, None]
        if inputs.ndim == 1:
            inputs = inputs[:, None]
        if states.shape[0] != inputs.shape[0] + 1:
            raise ValueError(f"Segment has {states.shape[0]} states for {inputs.shape[0]} inputs")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "inputs", inputs)

    @property
    def length(self) -> int:
        return int(self.inputs.shape[0])


def stacked_hankels(segments: Sequence[DataSegment], horizon: int) -> Tuple[np.ndarray, np.ndarray]:
    """State windows of depth ``H + 1`` and input windows of depth ``H``, column-aligned.

    Windows never straddle two segments.
    """

    x_blocks = []
    u_blocks = []
    for segment in segments:
        if segment.length < horizon:
            continue
        x_blocks.append(build_hankel(segment.states, horizon + 1).data)
        u_blocks.append(build_hankel(segment.inputs, horizon).data)
    if not x_blocks:
        raise ValueError(f"No stored segment is long enough for horizon {horizon}")
    return np.hstack(x_blocks), np.hstack(u_blocks)


def behavior_basis(hx: np.ndarray, hu: np.ndarray, rank: int) -> Tuple[np.ndarray, np.ndarray]:
    """Orthonormal basis of the dominant ``rank``-dimensional subspace of the stacked windows.

    Noise-free windows of a linear plant span exactly ``n + H m`` dimensions;
    truncating at that rank discards the directions noise adds.
    """

    left, _, _ = linalg.svd(np.vstack([hx, hu]), full_matrices=False)
    basis = left[:, :rank]
    return basis[: hx.shape[0]], basis[hx.shape[0] :]


def data_driven_synthesize(
    segments: Sequence[DataSegment],
    horizon: int = config.DEFAULT_HORIZON,
    Q: Optional[np.ndarray] = None,
    R: Optional[np.ndarray] = None,
    x_support: Optional[np.ndarray] = None,
    u_support: Optional[np.ndarray] = None,
) -> SystemResponse:
    """Responses spanned by the data: ``Phi = [B_x; B_u] g`` with the first state block of ``B_x g`` equal to ``e_j``.

    ``B`` is the truncated behaviour basis of the windows. When the support
    constraints cannot be met exactly on noisy data they are enforced by a
    heavy penalty instead and the masked entries are zeroed afterwards.
    """

    hx, hu = stacked_hankels(segments, horizon)
    n = segments[0].states.shape[1]
    m = segments[0].inputs.shape[1]
    required = n + horizon * m
    rank = numerical_rank(np.vstack([hx[:n], hu]))
    if rank < required:
        raise NotPersistentlyExcitingError(order=horizon, rank=rank, required=required)

    Q = np.eye(n) if Q is None else np.atleast_2d(Q)
    R = np.eye(m) if R is None else np.atleast_2d(R)
    bx, bu = behavior_basis(hx, hu, required)
    trajectory = np.vstack([bx[: horizon * n], bu])
    initial = bx[:n]
    closure = bx[horizon * n :]
    cost = linalg.block_diag(*([psd_sqrt(Q)] * horizon + [psd_sqrt(R)] * horizon)) @ trajectory
    anchors = np.vstack([initial, closure])

    columns = []
    penalised = []
    for j in range(n):
        x_free = np.ones((horizon, n), dtype=bool) if x_support is None else np.asarray(x_support, bool)[:, :, j]
        u_free = np.ones((horizon, m), dtype=bool) if u_support is None else np.asarray(u_support, bool)[:, :, j]
        masked = ~np.concatenate([x_free.reshape(-1), u_free.reshape(-1)])
        rhs = np.zeros(2 * n)
        rhs[j] = 1.0
        solution = equality_constrained_lstsq(
            cost, np.vstack([anchors, trajectory[masked]]), np.concatenate([rhs, np.zeros(int(masked.sum()))])
        )
        if not solution.feasible():
            penalty = np.sqrt(config.ROBUST_WEIGHT) * trajectory[masked]
            solution = equality_constrained_lstsq(np.vstack([cost, penalty]), anchors, rhs)
            if not solution.feasible():
                raise InfeasibleLocalityError(j, solution.constraint_residual)
            column = trajectory @ solution.values
            violation = float(np.max(np.abs(column[masked]), initial=0.0)) / max(1.0, float(np.max(np.abs(column))))
            if violation > config.DATA_LOCALITY_SLACK:
                raise InfeasibleLocalityError(j, violation)
            penalised.append(j)
        columns.append(trajectory @ solution.values)

    if penalised:
        LOGGER.warning("Support constraints enforced by penalty for columns %s", penalised)
    phi_x, phi_u = unpack_columns(np.stack(columns, axis=1), n, m, horizon)
    LOGGER.debug("Data-driven response from %d windows, basis rank %d", hx.shape[1], required)
    return finalize_response(phi_x, phi_u, x_support, u_support)
