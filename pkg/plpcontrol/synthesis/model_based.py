"""Model-based finite-horizon System Level Synthesis under locality constraints."""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import linalg

from .. import config
from ..dynamics.network import hop_neighborhood
from ..errors import InfeasibleLocalityError
from ..models import NetworkTopology
from .solver import equality_constrained_lstsq, psd_sqrt

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SystemResponse:
    """FIR response maps; ``phi_x[s - 1]`` and ``phi_u[s - 1]`` hold spectral index ``s``."""

    phi_x: np.ndarray
    phi_u: np.ndarray
    x_support: Optional[np.ndarray] = None
    u_support: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        phi_x = np.asarray(self.phi_x, dtype=float)
        phi_u = np.asarray(self.phi_u, dtype=float)
        if phi_x.ndim != 3 or phi_x.shape[1] != phi_x.shape[2]:
            raise ValueError(f"phi_x must have shape (H, n, n), got {phi_x.shape}")
        if phi_u.ndim != 3 or phi_u.shape[0] != phi_x.shape[0] or phi_u.shape[2] != phi_x.shape[1]:
            raise ValueError(f"phi_u must have shape (H, m, n), got {phi_u.shape}")
        object.__setattr__(self, "phi_x", phi_x)
        object.__setattr__(self, "phi_u", phi_u)

    @property
    def horizon(self) -> int:
        return int(self.phi_x.shape[0])

    @property
    def state_dim(self) -> int:
        return int(self.phi_x.shape[1])

    @property
    def input_dim(self) -> int:
        return int(self.phi_u.shape[1])

    def to_dict(self) -> Dict[str, object]:
        return {"horizon": self.horizon, "phi_x": self.phi_x.tolist(), "phi_u": self.phi_u.tolist()}

    def to_text(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["block", "s", "row"] + [f"c{j}" for j in range(self.state_dim)])
        blocks: List[Tuple[str, Optional[np.ndarray]]] = [
            ("phi_x", self.phi_x),
            ("phi_u", self.phi_u),
            ("x_support", self.x_support),
            ("u_support", self.u_support),
        ]
        for name, values in blocks:
            if values is None:
                continue
            for s in range(values.shape[0]):
                for row in range(values.shape[1]):
                    writer.writerow([name, s + 1, row] + [repr(float(v)) for v in values[s, row]])
        return buffer.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "SystemResponse":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0][:3] != ["block", "s", "row"]:
            raise ValueError("Not a system response table")
        collected: Dict[str, Dict[Tuple[int, int], List[float]]] = {}
        for name, s, row, *values in rows[1:]:
            collected.setdefault(name, {})[(int(s), int(row))] = [float(v) for v in values]

        def assemble(name: str) -> Optional[np.ndarray]:
            entries = collected.get(name)
            if not entries:
                return None
            horizon = max(s for s, _ in entries)
            height = max(row for _, row in entries) + 1
            return np.array([[entries[(s, row)] for row in range(height)] for s in range(1, horizon + 1)])

        x_support = assemble("x_support")
        u_support = assemble("u_support")
        return cls(
            phi_x=assemble("phi_x"),
            phi_u=assemble("phi_u"),
            x_support=None if x_support is None else x_support.astype(bool),
            u_support=None if u_support is None else u_support.astype(bool),
        )

    def to_csv(self, path: Path) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_text(), encoding="utf-8")
        return path

    @classmethod
    def from_csv(cls, path: Path) -> "SystemResponse":
        return cls.from_text(path.read_text(encoding="utf-8"))


@dataclass(frozen=True, eq=False)
class SlsProblem:
    A: np.ndarray
    B: np.ndarray
    horizon: int = config.DEFAULT_HORIZON
    Q: Optional[np.ndarray] = None
    R: Optional[np.ndarray] = None
    x_support: Optional[np.ndarray] = None
    u_support: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        n, m = A.shape[0], B.shape[1]
        if A.shape != (n, n) or B.shape[0] != n:
            raise ValueError(f"Inconsistent A {A.shape} and B {B.shape}")
        if self.horizon < 1:
            raise ValueError("Horizon must be at least 1")
        Q = np.eye(n) if self.Q is None else np.atleast_2d(np.asarray(self.Q, dtype=float))
        R = np.eye(m) if self.R is None else np.atleast_2d(np.asarray(self.R, dtype=float))
        if Q.shape != (n, n) or R.shape != (m, m):
            raise ValueError("Cost weights do not match the state and input dimensions")
        if np.min(linalg.eigvalsh(0.5 * (R + R.T))) <= 0.0:
            raise ValueError("Input weight R must be positive definite")
        for name, matrix in (("A", A), ("B", B), ("Q", Q), ("R", R)):
            object.__setattr__(self, name, matrix)
        for name, rows in (("x_support", n), ("u_support", m)):
            mask = getattr(self, name)
            if mask is None:
                continue
            mask = np.asarray(mask, dtype=bool)
            if mask.ndim == 2:
                mask = np.broadcast_to(mask, (self.horizon,) + mask.shape).copy()
            if mask.shape != (self.horizon, rows, n):
                raise ValueError(f"{name} must have shape ({self.horizon}, {rows}, {n}), got {mask.shape}")
            object.__setattr__(self, name, mask)

    @property
    def state_dim(self) -> int:
        return int(self.A.shape[0])

    @property
    def input_dim(self) -> int:
        return int(self.B.shape[1])


def locality_masks(topo: NetworkTopology, mode: int, hops: int, horizon: int) -> Tuple[np.ndarray, np.ndarray]:
    """Boolean supports from the ``hops``-neighbourhoods of every node in ``mode``'s topology.

    Entry ``(r, j)`` is allowed when node ``r`` (or the node carrying actuator
    ``r``) lies within ``hops`` edges of node ``j``.
    """

    n = topo.num_nodes
    actuators = topo.actuator_nodes
    x_mask = np.zeros((n, n), dtype=bool)
    u_mask = np.zeros((len(actuators), n), dtype=bool)
    for j in range(n):
        neighbourhood = hop_neighborhood(topo, mode, j, hops)
        x_mask[list(neighbourhood), j] = True
        for r, node in enumerate(actuators):
            u_mask[r, j] = node in neighbourhood
    return (
        np.broadcast_to(x_mask, (horizon, n, n)).copy(),
        np.broadcast_to(u_mask, (horizon, len(actuators), n)).copy(),
    )


def cost_factor(Q: np.ndarray, R: np.ndarray, horizon: int) -> np.ndarray:
    return linalg.block_diag(*([psd_sqrt(Q)] * horizon + [psd_sqrt(R)] * horizon))


def achievability_constraints(A: np.ndarray, B: np.ndarray, horizon: int) -> np.ndarray:
    """Rows for ``x_1``, the recursion ``x_{s+1} = A x_s + B u_s`` and the closure ``A x_H + B u_H = 0``."""

    n, m = B.shape
    x_cols = horizon * n
    C = np.zeros(((horizon + 1) * n, x_cols + horizon * m))
    C[:n, :n] = np.eye(n)
    for s in range(1, horizon + 1):
        rows = slice(s * n, (s + 1) * n)
        x_s = slice((s - 1) * n, s * n)
        u_s = slice(x_cols + (s - 1) * m, x_cols + s * m)
        C[rows, x_s] = -A if s < horizon else A
        C[rows, u_s] = -B if s < horizon else B
        if s < horizon:
            C[rows, s * n : (s + 1) * n] = np.eye(n)
    return C


def column_free_mask(prob: SlsProblem, column: int) -> np.ndarray:
    n, m, horizon = prob.state_dim, prob.input_dim, prob.horizon
    x_free = np.ones((horizon, n), dtype=bool) if prob.x_support is None else prob.x_support[:, :, column]
    u_free = np.ones((horizon, m), dtype=bool) if prob.u_support is None else prob.u_support[:, :, column]
    return np.concatenate([x_free.reshape(-1), u_free.reshape(-1)])


def unpack_columns(values: np.ndarray, n: int, m: int, horizon: int) -> Tuple[np.ndarray, np.ndarray]:
    """Split stacked ``(x_1..x_H, u_1..u_H)`` vectors (one per column) into response blocks."""

    x_part = values[: horizon * n].reshape(horizon, n, -1)
    u_part = values[horizon * n :].reshape(horizon, m, -1)
    return x_part, u_part


def finalize_response(
    phi_x: np.ndarray, phi_u: np.ndarray, x_support: Optional[np.ndarray], u_support: Optional[np.ndarray]
) -> SystemResponse:
    phi_x = phi_x.copy()
    phi_u = phi_u.copy()
    phi_x[0] = np.eye(phi_x.shape[1])
    if x_support is not None:
        phi_x[~x_support] = 0.0
    if u_support is not None:
        phi_u[~u_support] = 0.0
    return SystemResponse(phi_x=phi_x, phi_u=phi_u, x_support=x_support, u_support=u_support)


def synthesize(prob: SlsProblem, joint: bool = False, extra_state_weight: Optional[np.ndarray] = None) -> SystemResponse:
    """Minimum-cost achievable response, one equality-constrained solve per disturbance column."""

    n, m, horizon = prob.state_dim, prob.input_dim, prob.horizon
    Q = prob.Q if extra_state_weight is None else prob.Q + extra_state_weight
    F = cost_factor(Q, prob.R, horizon)
    C = achievability_constraints(prob.A, prob.B, horizon)

    columns = []
    if joint:
        rhs = np.concatenate([_column_rhs(n, horizon, j) for j in range(n)])
        free = np.concatenate([column_free_mask(prob, j) for j in range(n)])
        solution = equality_constrained_lstsq(linalg.block_diag(*[F] * n), linalg.block_diag(*[C] * n), rhs, free)
        columns = np.split(solution.values, n)
        for j, values in enumerate(columns):
            residual = float(np.max(np.abs(C @ values - _column_rhs(n, horizon, j))))
            if residual > config.ACHIEVABILITY_TOL:
                raise InfeasibleLocalityError(j, residual)
    else:
        for j in range(n):
            solution = equality_constrained_lstsq(F, C, _column_rhs(n, horizon, j), column_free_mask(prob, j))
            if not solution.feasible():
                raise InfeasibleLocalityError(j, solution.constraint_residual)
            columns.append(solution.values)

    phi_x, phi_u = unpack_columns(np.stack(columns, axis=1), n, m, horizon)
    response = finalize_response(phi_x, phi_u, prob.x_support, prob.u_support)
    LOGGER.debug("Synthesized H=%d response, residual %.3e", horizon, validate_achievability(response, prob.A, prob.B))
    return response


def _column_rhs(n: int, horizon: int, column: int) -> np.ndarray:
    rhs = np.zeros((horizon + 1) * n)
    rhs[column] = 1.0
    return rhs


def validate_achievability(resp: SystemResponse, A: np.ndarray, B: np.ndarray) -> float:
    """Largest entry of the recursion residual, the first-block check and the FIR closure included."""

    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[0] != resp.state_dim or B.shape != (resp.state_dim, resp.input_dim):
        raise ValueError("Response dimensions do not match A and B")
    worst = float(np.max(np.abs(resp.phi_x[0] - np.eye(resp.state_dim))))
    for s in range(resp.horizon):
        following = resp.phi_x[s + 1] if s + 1 < resp.horizon else np.zeros_like(resp.phi_x[0])
        residual = following - A @ resp.phi_x[s] - B @ resp.phi_u[s]
        worst = max(worst, float(np.max(np.abs(residual))))
    return worst
