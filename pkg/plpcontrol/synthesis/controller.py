"""Runtime realisation of a system response."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Optional

import numpy as np

from .model_based import SystemResponse


@dataclass
class ControllerState:
    """Newest-first buffer of the internal states ``w_hat``; always holds exactly H vectors."""

    horizon: int
    state_dim: int
    w_hat_history: Deque[np.ndarray] = field(init=False)
    x_hat: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        self.reset()

    def reset(self) -> None:
        self.w_hat_history = deque((np.zeros(self.state_dim) for _ in range(self.horizon)), maxlen=self.horizon)
        self.x_hat = np.zeros(self.state_dim)

    @classmethod
    def for_response(cls, resp: SystemResponse) -> "ControllerState":
        return cls(horizon=resp.horizon, state_dim=resp.state_dim)


def controller_step(state: ControllerState, resp: SystemResponse, x_t: np.ndarray) -> np.ndarray:
    x_t = np.asarray(x_t, dtype=float).reshape(-1)
    if x_t.shape[0] != resp.state_dim or state.horizon != resp.horizon or state.state_dim != resp.state_dim:
        raise ValueError("Controller state, response and measurement dimensions disagree")
    history = state.w_hat_history
    x_hat = np.zeros(resp.state_dim)
    for s in range(2, resp.horizon + 1):
        x_hat += resp.phi_x[s - 1] @ history[s - 2]
    w_hat = x_t - x_hat
    history.appendleft(w_hat)
    state.x_hat = x_hat
    u = np.zeros(resp.input_dim)
    for s in range(1, resp.horizon + 1):
        u += resp.phi_u[s - 1] @ history[s - 1]
    return u


class SlsController:
    """Callable controller ``(t, x, mode) -> u`` over one response."""

    def __init__(self, resp: SystemResponse) -> None:
        self.response = resp
        self.state = ControllerState.for_response(resp)

    def set_response(self, resp: SystemResponse) -> None:
        self.response = resp
        self.state = ControllerState.for_response(resp)

    def __call__(self, t: int, x: np.ndarray, true_mode: Optional[int] = None) -> np.ndarray:
        return controller_step(self.state, self.response, x)
