"""Dense equality-constrained least squares shared by the synthesis routines."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from .. import config


@dataclass(frozen=True)
class ConstrainedSolution:
    values: np.ndarray
    constraint_residual: float

    def feasible(self, tol: float = config.ACHIEVABILITY_TOL) -> bool:
        return self.constraint_residual <= tol


def psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    """Symmetric square root of a positive semidefinite weight."""

    symmetric = 0.5 * (matrix + matrix.T)
    eigenvalues, eigenvectors = linalg.eigh(symmetric)
    return (eigenvectors * np.sqrt(np.clip(eigenvalues, 0.0, None))) @ eigenvectors.T


def equality_constrained_lstsq(
    cost: np.ndarray,
    constraints: np.ndarray,
    rhs: np.ndarray,
    free: Optional[np.ndarray] = None,
) -> ConstrainedSolution:
    """Minimise ``||cost @ z||`` subject to ``constraints @ z = rhs``.

    Variables outside ``free`` are pinned to exactly zero. A particular
    solution comes from ``lstsq`` and the cost is minimised over the null
    space of the constraints.
    """

    num_vars = constraints.shape[1]
    free = np.ones(num_vars, dtype=bool) if free is None else np.asarray(free, dtype=bool)
    cost_free = cost[:, free]
    constraints_free = constraints[:, free]

    # Singular values below RANK_TOL relative to the largest are treated as zero.
    particular, *_ = linalg.lstsq(constraints_free, rhs, cond=config.RANK_TOL)
    basis = linalg.null_space(constraints_free, rcond=config.RANK_TOL)
    if basis.shape[1]:
        step, *_ = linalg.lstsq(cost_free @ basis, -(cost_free @ particular), cond=config.RANK_TOL)
        particular = particular + basis @ step
    residual = float(np.max(np.abs(constraints_free @ particular - rhs), initial=0.0))

    values = np.zeros(num_vars)
    values[free] = particular
    return ConstrainedSolution(values=values, constraint_residual=residual)
