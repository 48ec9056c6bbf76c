"""Closed forms for the expected occurrence time and first-occurrence probabilities."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import linalg

from .. import config
from ..errors import DegenerateCollectionError, NumericalFailureError, ReducibleChainError
from ..models import ModeChain, check_stochastic
from .collection import (
    AugmentedCollection,
    EndingStringSet,
    PatternCollection,
    augment_collection,
    build_ending_strings,
)
from .gains import GainMatrix, compute_gain_matrix, context_stakes, solve_initial_rewards

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PatternProblem:
    psi: PatternCollection
    phi0: int
    tpm: np.ndarray
    gamma: AugmentedCollection
    endings: EndingStringSet
    gains: GainMatrix

    @property
    def num_modes(self) -> int:
        return int(self.tpm.shape[0])


@dataclass
class OccurrenceStats:
    expected_tau: float
    q: np.ndarray
    later_probabilities: np.ndarray
    context_visits: np.ndarray
    c_star: Optional[np.ndarray] = None
    fairness_residual: Optional[float] = None
    per_augmented: Dict[str, List[float]] = field(default_factory=dict)

    @property
    def predicted_pattern(self) -> int:
        # argmax returns the first maximiser, so ties go to the lowest index.
        return int(np.argmax(self.q))

    def to_dict(self) -> Dict[str, object]:
        return {
            "expected_tau": self.expected_tau,
            "q": self.q.tolist(),
            "context_visits": self.context_visits.tolist(),
            "fairness_residual": self.fairness_residual,
        }


def build_pattern_problem(psi: PatternCollection, phi0: int, tpm: np.ndarray) -> PatternProblem:
    tpm = check_stochastic(tpm)
    if not ModeChain(tpm=tpm, initial_mode=phi0).is_irreducible():
        raise ReducibleChainError("The pattern engine needs an irreducible mode chain")
    gamma = augment_collection(psi, phi0, tpm)
    endings = build_ending_strings(psi, gamma, tpm)
    gains = compute_gain_matrix(gamma, endings, tpm)
    LOGGER.debug("Pattern problem: K=%d L=%d K_I=%d K_L=%d", psi.size, psi.length, endings.num_initial, gamma.size)
    return PatternProblem(psi=psi, phi0=phi0, tpm=tpm, gamma=gamma, endings=endings, gains=gains)


def _stopped_game_system(problem: PatternProblem) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Optional-stopping identities in the unknowns (feasible later probabilities, context visits).

    Rows: one per team (with c = e_l), then one visit-balance row per mode.
    """

    num_modes = problem.num_modes
    gains = problem.gains
    feasible = np.flatnonzero(gains.feasible)
    initial_p = np.asarray(problem.endings.initial_probabilities, dtype=float)
    stakes = context_stakes(problem.gamma, num_modes)

    team_lhs = np.hstack([gains.later[feasible].T, -stakes.T])
    team_rhs = -(initial_p @ gains.initial) if gains.num_initial else np.zeros(problem.gamma.size)

    last_initial = np.array([string[-1] for string in problem.endings.initial], dtype=int)
    last_later = np.array([problem.endings.later[s][-1] for s in feasible], dtype=int)
    balance_lhs = np.zeros((num_modes, feasible.size + num_modes))
    balance_rhs = np.zeros(num_modes)
    for b in range(num_modes):
        balance_lhs[b, : feasible.size] = (last_later == b).astype(float)
        balance_lhs[b, feasible.size :] = (np.arange(num_modes) == b) - problem.tpm[:, b]
        balance_rhs[b] = float(b == problem.phi0) - float(initial_p[last_initial == b].sum())

    lhs = np.vstack([team_lhs, balance_lhs])
    rhs = np.concatenate([team_rhs, balance_rhs])
    return lhs, rhs, feasible


def _solve(lhs: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    singular = linalg.svdvals(lhs) if lhs.size else np.zeros(0)
    if singular.size < lhs.shape[1] or singular[-1] <= config.RANK_TOL * max(singular[0], 1.0):
        raise DegenerateCollectionError("Stopped-game system is rank deficient", float("inf"))
    condition = float(singular[0] / singular[-1])
    if condition > config.CONDITION_LIMIT:
        raise DegenerateCollectionError("Stopped-game system is ill-conditioned", condition)
    solution, *_ = linalg.lstsq(lhs, rhs)
    residual = float(np.max(np.abs(lhs @ solution - rhs), initial=0.0))
    if residual > 1e-6 * max(1.0, float(np.max(np.abs(rhs), initial=0.0))):
        raise NumericalFailureError(f"Stopped-game identities are inconsistent (residual {residual:.3e})")
    return solution


def _solve_with_closing_row(problem: PatternProblem, closing_lhs: np.ndarray, closing_rhs: float) -> Tuple[np.ndarray, np.ndarray]:
    lhs, rhs, feasible = _stopped_game_system(problem)
    lhs = np.vstack([lhs, closing_lhs])
    rhs = np.append(rhs, closing_rhs)
    solution = _solve(lhs, rhs)
    return solution[: feasible.size], solution[feasible.size :]


def expected_tau(problem: PatternProblem) -> float:
    """E[tau] as the total expected number of context visits before stopping."""

    feasible_count = int(problem.gains.feasible.sum())
    closing = np.concatenate([np.ones(feasible_count), np.zeros(problem.num_modes)])
    initial_mass = float(np.sum(problem.endings.initial_probabilities))
    _, visits = _solve_with_closing_row(problem, closing, 1.0 - initial_mass)
    value = float(visits.sum())
    if not np.isfinite(value) or value < problem.psi.length - config.RESIDUAL_TOL:
        raise NumericalFailureError(f"Expected occurrence time {value} is not admissible")
    return value


def first_occurrence_probs(problem: PatternProblem, expected_tau: float) -> np.ndarray:
    """Probability that each pattern is the first of the collection to occur."""

    feasible = np.flatnonzero(problem.gains.feasible)
    closing = np.concatenate([np.zeros(feasible.size), np.ones(problem.num_modes)])
    later, _ = _solve_with_closing_row(problem, closing, expected_tau)
    if np.any(later < -config.PROBABILITY_CLAMP):
        raise NumericalFailureError(f"Negative ending probability {later.min():.3e}")
    later = np.clip(later, 0.0, None)

    q = np.zeros(problem.psi.size)
    index = problem.psi.index()
    length = problem.psi.length
    for string, probability in zip(problem.endings.initial, problem.endings.initial_probabilities):
        q[index[string[-length:]]] += probability
    for s, probability in zip(feasible, later):
        q[index[problem.endings.later[s][-length:]]] += probability
    total = q.sum()
    if abs(total - 1.0) > 1e-6:
        raise NumericalFailureError(f"First-occurrence probabilities sum to {total}")
    return q / total


def later_probabilities(problem: PatternProblem, expected_tau_value: float) -> Tuple[np.ndarray, np.ndarray]:
    """Probability of every later ending string (zero when infeasible) and the context visits."""

    feasible = np.flatnonzero(problem.gains.feasible)
    closing = np.concatenate([np.zeros(feasible.size), np.ones(problem.num_modes)])
    later, visits = _solve_with_closing_row(problem, closing, expected_tau_value)
    full = np.zeros(problem.gamma.size)
    full[feasible] = np.clip(later, 0.0, None)
    return full, visits


def occurrence_stats(problem: PatternProblem) -> OccurrenceStats:
    tau = expected_tau(problem)
    q = first_occurrence_probs(problem, tau)
    later, visits = later_probabilities(problem, tau)

    c_star: Optional[np.ndarray] = None
    fairness: Optional[float] = None
    try:
        c_star = solve_initial_rewards(problem.gains)
    except DegenerateCollectionError as exc:
        LOGGER.debug("Initial rewards unavailable: %s", exc)
    if c_star is not None:
        gains = problem.gains
        initial_p = np.asarray(problem.endings.initial_probabilities, dtype=float)
        bracket = (1.0 - initial_p.sum()) + float(initial_p @ (gains.initial @ c_star)) if gains.num_initial else 1.0
        stakes = context_stakes(problem.gamma, problem.num_modes) @ c_star
        fairness = abs(bracket - float(stakes @ visits))

    per_augmented = {
        "ending_probability": later.tolist(),
        "group": list(problem.gamma.group_of),
    }
    return OccurrenceStats(
        expected_tau=tau,
        q=q,
        later_probabilities=later,
        context_visits=visits,
        c_star=c_star,
        fairness_residual=fairness,
        per_augmented=per_augmented,
    )


def pattern_statistics(chain: ModeChain, psi: PatternCollection, phi0: Optional[int] = None) -> OccurrenceStats:
    start = chain.initial_mode if phi0 is None else phi0
    return occurrence_stats(build_pattern_problem(psi, start, chain.tpm))
