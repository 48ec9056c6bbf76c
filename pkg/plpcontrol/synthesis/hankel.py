"""Block Hankel matrices and persistency of excitation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .. import config


@dataclass(frozen=True, eq=False)
class HankelMatrix:
    data: np.ndarray
    order: int
    dim: int

    def block_row(self, i: int) -> np.ndarray:
        return self.data[i * self.dim : (i + 1) * self.dim]

    @property
    def num_columns(self) -> int:
        return int(self.data.shape[1])


def _as_signal(signal) -> np.ndarray:
    values = np.asarray(signal, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    if values.ndim != 2:
        raise ValueError(f"A signal is a sequence of vectors, got shape {values.shape}")
    return values


def build_hankel(signal, order: int) -> HankelMatrix:
    """Block ``(i, j)`` is ``signal[i + j]`` for ``i < order``."""

    values = _as_signal(signal)
    length, dim = values.shape
    if order < 1:
        raise ValueError("Hankel order must be at least 1")
    if order > length:
        raise ValueError(f"Hankel order {order} exceeds signal length {length}")
    columns = length - order + 1
    data = np.empty((order * dim, columns))
    for j in range(columns):
        data[:, j] = values[j : j + order].reshape(-1)
    return HankelMatrix(data=data, order=order, dim=dim)


def numerical_rank(matrix: np.ndarray, tol: float = config.RANK_TOL) -> int:
    if matrix.size == 0:
        return 0
    singular = linalg.svdvals(matrix)
    if singular[0] == 0.0:
        return 0
    return int(np.sum(singular > tol * singular[0]))


def persistence_check(signal, order: int) -> bool:
    """True when the order-``order`` Hankel matrix of ``signal`` has full rank."""

    hankel = build_hankel(signal, order)
    return numerical_rank(hankel.data) == min(hankel.data.shape)
