"""Mode-chain sampling."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List

import numpy as np

from .. import config
from ..models import ModeChain, switch_times_of


@dataclass
class ModeSequence:
    """Per-step modes together with the epoch structure they came from."""

    modes: np.ndarray
    epoch_modes: np.ndarray
    dwell: int
    switch_times: List[int] = field(default_factory=list)

    def __len__(self) -> int:
        return int(self.modes.shape[0])


def next_mode(tpm: np.ndarray, current: int, draw: float) -> int:
    cumulative = np.cumsum(tpm[current])
    return int(min(np.searchsorted(cumulative, draw, side="right"), tpm.shape[0] - 1))


def sample_mode_sequence(chain: ModeChain, num_steps: int, dwell: int = config.DEFAULT_DWELL, seed: int = 0) -> ModeSequence:
    """Sample ``num_steps`` modes; a new mode is drawn every ``dwell`` steps."""

    if num_steps < 1:
        raise ValueError("num_steps must be at least 1")
    if dwell < 1:
        raise ValueError("dwell must be at least 1")
    rng = np.random.default_rng(seed)
    num_epochs = -(-num_steps // dwell)
    draws = rng.random(num_epochs)
    epochs = np.empty(num_epochs, dtype=int)
    epochs[0] = chain.initial_mode
    for k in range(1, num_epochs):
        epochs[k] = next_mode(chain.tpm, int(epochs[k - 1]), float(draws[k]))
    modes = np.repeat(epochs, dwell)[:num_steps]
    return ModeSequence(modes=modes, epoch_modes=epochs, dwell=dwell, switch_times=switch_times_of(modes))


def transition_frequencies(epoch_modes: np.ndarray, num_modes: int) -> np.ndarray:
    """Row-normalised counts of consecutive epoch pairs."""

    counts = np.zeros((num_modes, num_modes))
    np.add.at(counts, (epoch_modes[:-1], epoch_modes[1:]), 1.0)
    totals = counts.sum(axis=1, keepdims=True)
    return np.divide(counts, totals, out=np.zeros_like(counts), where=totals > 0)
