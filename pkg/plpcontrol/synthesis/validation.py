"""Closed-loop checks of a response and the Riccati reference solution."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict

import numpy as np

from ..dynamics.simulation import FixedDisturbance, UniformDisturbance, simulate
from ..errors import DivergenceError
from ..models import JumpLinearSystem
from .controller import SlsController
from .model_based import SystemResponse

LOGGER = logging.getLogger(__name__)


@dataclass
class ClosedLoopReport:
    impulse_deviation: float
    random_deviation: float
    post_horizon_decay: float
    stabilized: bool

    def to_dict(self) -> Dict[str, object]:
        return {
            "impulse_deviation": self.impulse_deviation,
            "random_deviation": self.random_deviation,
            "post_horizon_decay": self.post_horizon_decay,
            "stabilized": self.stabilized,
        }


def predicted_states(resp: SystemResponse, w: np.ndarray, steps: int) -> np.ndarray:
    """``x[t] = sum_s Phi_x[s] w[t - s]`` for a loop started at rest."""

    predicted = np.zeros((steps + 1, resp.state_dim))
    for t in range(1, steps + 1):
        for s in range(1, min(resp.horizon, t) + 1):
            predicted[t] += resp.phi_x[s - 1] @ w[t - s]
    return predicted


def validate_closed_loop(
    resp: SystemResponse,
    A: np.ndarray,
    B: np.ndarray,
    trials: int = 4,
    seed: int = 0,
    bound: float = 1.0,
) -> ClosedLoopReport:
    """Roll the response out on ``(A, B)`` and compare with what it promises.

    Impulses enter through the initial state, one column at a time; the
    random trials use uniform disturbances on ``[-bound, bound]``.
    """

    plant = JumpLinearSystem(per_mode=((A, B),))
    horizon = resp.horizon
    steps = 3 * horizon
    modes = np.zeros(4 * horizon, dtype=int)
    impulse_deviation = 0.0
    early = 0.0
    late = 0.0
    try:
        for j in range(resp.state_dim):
            x0 = np.eye(resp.state_dim)[j]
            run = simulate(plant, modes, SlsController(resp), FixedDisturbance(np.zeros((1, resp.state_dim))), steps, x0=x0)
            expected = np.zeros_like(run.states)
            expected[:horizon] = resp.phi_x[:, :, j]
            impulse_deviation = max(impulse_deviation, float(np.max(np.abs(run.states - expected))))
            norms = np.max(np.abs(run.states), axis=1)
            early = max(early, float(norms[:horizon].max()))
            late = max(late, float(norms[2 * horizon :].max()))

        random_deviation = 0.0
        rng = np.random.default_rng(seed)
        for _ in range(trials):
            w = rng.uniform(-bound, bound, size=(4 * horizon, resp.state_dim))
            run = simulate(plant, modes, SlsController(resp), FixedDisturbance(w), 4 * horizon)
            random_deviation = max(random_deviation, float(np.max(np.abs(run.states - predicted_states(resp, w, 4 * horizon)))))
    except DivergenceError as exc:
        LOGGER.info("Closed loop diverged at step %d", exc.step)
        return ClosedLoopReport(float("inf"), float("inf"), float("inf"), False)

    decay = late / early if early > 0 else 0.0
    return ClosedLoopReport(
        impulse_deviation=impulse_deviation,
        random_deviation=random_deviation,
        post_horizon_decay=decay,
        stabilized=bool(np.isfinite(decay) and late <= early + 1e-12),
    )


def finite_horizon_lqr(A: np.ndarray, B: np.ndarray, Q: np.ndarray, R: np.ndarray, horizon: int) -> SystemResponse:
    """Impulse response of the terminal-constrained LQR loop by backward Riccati recursion.

    The last input zeroes the next state, so ``B`` must be square and invertible.
    """

    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    if B.shape[0] != B.shape[1]:
        raise ValueError("The terminal constraint needs a square input matrix")
    gains = [np.zeros((B.shape[1], A.shape[0]))] * horizon
    gains[horizon - 1] = np.linalg.solve(B, A)
    P = Q + gains[horizon - 1].T @ R @ gains[horizon - 1]
    for s in range(horizon - 2, -1, -1):
        gains[s] = np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)
        P = Q + A.T @ P @ A - A.T @ P @ B @ gains[s]

    n = A.shape[0]
    phi_x = np.zeros((horizon, n, n))
    phi_u = np.zeros((horizon, B.shape[1], n))
    phi_x[0] = np.eye(n)
    for s in range(horizon):
        phi_u[s] = -gains[s] @ phi_x[s]
        if s + 1 < horizon:
            phi_x[s + 1] = (A - B @ gains[s]) @ phi_x[s]
    return SystemResponse(phi_x=phi_x, phi_u=phi_u)
