"""Fair-odds gambling teams: gain matrix and initial rewards."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .. import config
from ..errors import DegenerateCollectionError
from .collection import AugmentedCollection, EndingStringSet

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class GainMatrix:
    """W has one row per ending string (initial rows first) and one column per team."""

    W: np.ndarray
    num_initial: int
    feasible: np.ndarray
    c_star: Optional[np.ndarray] = None

    @property
    def later(self) -> np.ndarray:
        return self.W[self.num_initial :]

    @property
    def initial(self) -> np.ndarray:
        return self.W[: self.num_initial]

    def with_rewards(self, c_star: np.ndarray) -> "GainMatrix":
        return GainMatrix(W=self.W, num_initial=self.num_initial, feasible=self.feasible, c_star=c_star)


def team_wealth(string: Sequence[int], bet: Sequence[int], tpm: np.ndarray, context: Optional[int] = None) -> float:
    """Wealth per unit stake held by one team at the end of ``string``.

    A gambler joins at every position ``j >= 1`` (only when the preceding
    symbol equals ``context``, if one is given), bets on ``bet`` symbol by
    symbol at fair odds and keeps whatever he holds when the string ends.
    """

    total = 0.0
    for j in range(1, len(string)):
        previous = string[j - 1]
        if context is not None and previous != context:
            continue
        wealth = 1.0
        for offset, symbol in enumerate(bet):
            position = j + offset
            if position >= len(string):
                break
            if string[position] != symbol:
                wealth = 0.0
                break
            wealth /= float(tpm[previous, symbol])
            previous = symbol
        total += wealth
    return total


def compute_gain_matrix(gamma: AugmentedCollection, endings: EndingStringSet, tpm: np.ndarray) -> GainMatrix:
    strings = endings.strings
    W = np.zeros((len(strings), gamma.size))
    for ell in range(gamma.size):
        bet = gamma.bet(ell)
        context = gamma.context(ell)
        for s, string in enumerate(strings):
            W[s, ell] = team_wealth(string, bet, tpm, context=context)
    return GainMatrix(W=W, num_initial=endings.num_initial, feasible=np.asarray(gamma.feasible, dtype=bool))


def context_stakes(gamma: AugmentedCollection, num_modes: int) -> np.ndarray:
    """S[a, l] = 1 when team l only stakes after mode a."""

    stakes = np.zeros((num_modes, gamma.size))
    for ell in range(gamma.size):
        stakes[gamma.context(ell), ell] = 1.0
    return stakes


def solve_initial_rewards(gains: GainMatrix) -> np.ndarray:
    """Rewards c* with (W c*)_s = 1 on every feasible later string.

    Teams whose ending string cannot occur get zero reward.
    """

    feasible = np.flatnonzero(gains.feasible)
    c_star = np.zeros(gains.W.shape[1])
    if feasible.size == 0:
        return c_star
    block = gains.later[np.ix_(feasible, feasible)]
    condition = float(np.linalg.cond(block))
    if not np.isfinite(condition) or condition > config.CONDITION_LIMIT:
        raise DegenerateCollectionError("Later-row block of the gain matrix is singular", condition)
    solution = np.linalg.solve(block, np.ones(feasible.size))
    residual = float(np.max(np.abs(block @ solution - 1.0)))
    if residual > config.RESIDUAL_TOL:
        raise DegenerateCollectionError(f"Initial rewards leave residual {residual:.3e}", condition)
    c_star[feasible] = solution
    return c_star
