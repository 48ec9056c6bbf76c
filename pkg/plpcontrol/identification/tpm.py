"""Empirical estimation of the transition probability matrix."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import config


@dataclass(frozen=True, eq=False)
class TpmEstimate:
    counts: np.ndarray
    prior_weight: float = config.DEFAULT_PRIOR_WEIGHT

    @classmethod
    def empty(cls, num_modes: int, prior_weight: float = config.DEFAULT_PRIOR_WEIGHT) -> "TpmEstimate":
        return cls(counts=np.zeros((num_modes, num_modes), dtype=np.int64), prior_weight=prior_weight)

    @property
    def num_modes(self) -> int:
        return int(self.counts.shape[0])

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def update_tpm(tpm_est: TpmEstimate, from_mode: int, to_mode: int) -> TpmEstimate:
    if not (0 <= from_mode < tpm_est.num_modes and 0 <= to_mode < tpm_est.num_modes):
        raise ValueError(f"Invalid transition {from_mode} -> {to_mode}")
    counts = tpm_est.counts.copy()
    counts[from_mode, to_mode] += 1
    return TpmEstimate(counts=counts, prior_weight=tpm_est.prior_weight)


def point_estimate(tpm_est: TpmEstimate) -> np.ndarray:
    """Laplace-smoothed row frequencies; unvisited rows without a prior are uniform."""

    counts = tpm_est.counts.astype(float) + tpm_est.prior_weight
    totals = counts.sum(axis=1, keepdims=True)
    uniform = np.full_like(counts, 1.0 / tpm_est.num_modes)
    return np.where(totals > 0, counts / np.where(totals > 0, totals, 1.0), uniform)
