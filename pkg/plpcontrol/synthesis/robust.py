"""One response shared by several topologies."""
from __future__ import annotations

import logging
from typing import Sequence, Tuple

import numpy as np

from .. import config
from .model_based import SlsProblem, SystemResponse, synthesize, validate_achievability

LOGGER = logging.getLogger(__name__)


def synthesize_robust(probs: Sequence[SlsProblem], weight: float = config.ROBUST_WEIGHT) -> Tuple[SystemResponse, np.ndarray]:
    """Achievable for the mean dynamics, with every mode's mismatch penalised.

    With ``A_bar`` the mean of the ``A_m``, the achievability residual of a
    response in mode ``m`` is ``(A_m - A_bar) phi_x[s]``, so its squared norm
    enters the state weight. Returns the response and the per-mode residuals.
    """

    if not probs:
        raise ValueError("Robust synthesis needs at least one problem")
    first = probs[0]
    for prob in probs[1:]:
        if (
            prob.horizon != first.horizon
            or not np.array_equal(prob.B, first.B)
            or not np.array_equal(prob.Q, first.Q)
            or not np.array_equal(prob.R, first.R)
        ):
            raise ValueError("Robust synthesis needs a shared B, Q, R and horizon")
    mean_A = np.mean([prob.A for prob in probs], axis=0)
    penalty = sum((prob.A - mean_A).T @ (prob.A - mean_A) for prob in probs)
    nominal = SlsProblem(
        A=mean_A,
        B=first.B,
        horizon=first.horizon,
        Q=first.Q,
        R=first.R,
        x_support=first.x_support,
        u_support=first.u_support,
    )
    response = synthesize(nominal, extra_state_weight=weight * penalty)
    residuals = np.array([validate_achievability(response, prob.A, prob.B) for prob in probs])
    LOGGER.info("Robust response over %d topologies, residuals %s", len(probs), np.array2string(residuals, precision=3))
    return response, residuals
