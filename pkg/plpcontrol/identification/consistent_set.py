"""Consistent-set narrowing of the hidden mode."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import FrozenSet, Optional

import numpy as np

from .. import config
from ..errors import ModelMismatchError
from ..models import JumpLinearSystem
from .tpm import TpmEstimate, point_estimate

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConsistentSet:
    candidates: FrozenSet[int]
    last_reset_step: int = 0
    switched: bool = False

    @classmethod
    def full(cls, num_modes: int, step: int = 0) -> "ConsistentSet":
        return cls(candidates=frozenset(range(num_modes)), last_reset_step=step)

    @property
    def is_singleton(self) -> bool:
        return len(self.candidates) == 1


def mode_residuals(sys: JumpLinearSystem, x_t: np.ndarray, u_t: np.ndarray, x_next: np.ndarray) -> np.ndarray:
    """Infinity-norm one-step prediction error of every mode."""

    return np.array([np.max(np.abs(x_next - sys.A(m) @ x_t - sys.B(m) @ u_t), initial=0.0) for m in range(sys.num_modes)])


def residual_consistent_set(
    sys: JumpLinearSystem,
    x_t: np.ndarray,
    u_t: np.ndarray,
    x_next: np.ndarray,
    prior: ConsistentSet,
    step: int = 0,
    tol: float = config.RESIDUAL_TOL,
) -> ConsistentSet:
    """Keep the prior modes whose residual stays within the disturbance bound.

    An empty result means the mode switched: the test is re-run over all
    modes and the returned set is flagged ``switched``.
    """

    if not prior.candidates:
        raise ValueError("Prior consistent set is empty")
    residuals = mode_residuals(sys, np.asarray(x_t, float), np.asarray(u_t, float), np.asarray(x_next, float))
    consistent = frozenset(int(m) for m in np.flatnonzero(residuals <= sys.disturbance_bound + tol))
    kept = prior.candidates & consistent
    if kept:
        LOGGER.debug("Step %d consistent set %s", step, sorted(kept))
        return ConsistentSet(candidates=kept, last_reset_step=prior.last_reset_step)
    if not consistent:
        raise ModelMismatchError(step)
    LOGGER.debug("Step %d switch detected, re-narrowed to %s", step, sorted(consistent))
    return ConsistentSet(candidates=consistent, last_reset_step=step, switched=True)


def narrow_and_estimate(candidates: ConsistentSet, tpm_est: Optional[TpmEstimate], prev_mode: Optional[int]) -> int:
    """Pick the candidate most likely to follow ``prev_mode``; ties go to the lowest index."""

    ordered = sorted(candidates.candidates)
    if not ordered:
        raise ValueError("Consistent set is empty")
    if len(ordered) == 1 or prev_mode is None or tpm_est is None:
        return ordered[0]
    row = point_estimate(tpm_est)[prev_mode]
    # max() keeps the first maximiser, i.e. the lowest index.
    return max(ordered, key=lambda m: row[m])
