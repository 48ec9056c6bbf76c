from __future__ import annotations

import numpy as np
import pytest

from plpcontrol.errors import DegenerateCollectionError, ReducibleChainError
from plpcontrol.models import ModeChain
from plpcontrol.patterns import (
    GainMatrix,
    PatternCollection,
    augment_collection,
    brute_force_occurrence,
    build_pattern_problem,
    expected_tau,
    first_occurrence_probs,
    monte_carlo_oracle,
    occurrence_stats,
    pattern_statistics,
    simulate_team_rewards,
    solve_initial_rewards,
    team_wealth,
)

FAIR = np.full((2, 2), 0.5)
ALTERNATING = np.array([[0.0, 1.0], [1.0, 0.0]])
H, T = 0, 1


def _random_tpm(rng: np.random.Generator, num_modes: int) -> np.ndarray:
    return 0.5 * rng.dirichlet(np.ones(num_modes), size=num_modes) + 0.5 / num_modes


def _random_patterns(rng: np.random.Generator, num_modes: int, count: int, length: int) -> PatternCollection:
    chosen = set()
    while len(chosen) < count:
        chosen.add(tuple(int(s) for s in rng.integers(0, num_modes, size=length)))
    return PatternCollection.of(sorted(chosen))


def test_collection_validation():
    with pytest.raises(ValueError):
        PatternCollection.of([(0, 1), (1,)])
    with pytest.raises(ValueError):
        PatternCollection.of([(0, 1), (0, 1)])
    with pytest.raises(ValueError):
        PatternCollection.of([(0, 2)]).check_modes(2)


def test_augmentation_enumerates_positive_prefixes():
    tpm = np.array([[0.3, 0.7], [0.6, 0.4]])
    gamma = augment_collection(PatternCollection.of([(0, 1)]), 1, tpm)

    assert gamma.augmented == ((0, 0, 0, 1), (0, 1, 0, 1), (1, 0, 0, 1), (1, 1, 0, 1))
    assert gamma.group(0) == [0, 1, 2, 3]
    # (0, 1) would already have completed on the context symbol.
    assert gamma.feasible == (True, False, True, True)


def test_augmentation_follows_deterministic_chain():
    gamma = augment_collection(PatternCollection.of([(0, 1)]), 0, ALTERNATING)

    assert gamma.augmented == ((0, 1, 0, 1),)


def test_augmentation_single_mode():
    gamma = augment_collection(PatternCollection.of([(0,)]), 0, np.ones((1, 1)))

    assert gamma.augmented == ((0, 0, 0),)


def test_team_wealth_counts_overlaps():
    assert team_wealth((T, H, H), (H, H), FAIR) == pytest.approx(6.0)
    assert team_wealth((T, H, T), (H, T), FAIR) == pytest.approx(4.0)
    assert team_wealth((H, H, H), (T, T), FAIR) == 0.0


def test_team_wealth_respects_context():
    assert team_wealth((T, H, H), (H, H), FAIR, context=T) == pytest.approx(4.0)
    assert team_wealth((T, H, H), (H, H), FAIR, context=H) == pytest.approx(2.0)


def test_initial_rewards():
    scalar = GainMatrix(W=np.array([[6.0]]), num_initial=0, feasible=np.array([True]))
    assert np.allclose(solve_initial_rewards(scalar), [1.0 / 6.0])

    identity = GainMatrix(W=np.vstack([np.ones((1, 3)), np.eye(3)]), num_initial=1, feasible=np.ones(3, dtype=bool))
    assert np.allclose(solve_initial_rewards(identity), np.ones(3))

    rng = np.random.default_rng(2)
    block = np.eye(3) * 4.0 + rng.uniform(0.0, 0.5, size=(3, 3))
    c_star = solve_initial_rewards(GainMatrix(W=block, num_initial=0, feasible=np.ones(3, dtype=bool)))
    assert np.allclose(block @ c_star, 1.0, atol=1e-10)


def test_singular_rewards_are_degenerate():
    singular = GainMatrix(W=np.ones((2, 2)), num_initial=0, feasible=np.ones(2, dtype=bool))

    with pytest.raises(DegenerateCollectionError):
        solve_initial_rewards(singular)


@pytest.mark.parametrize("pattern, expected", [((H, H), 6.0), ((H, T), 4.0), ((H, H, H), 14.0)])
def test_classic_waiting_times(pattern, expected):
    problem = build_pattern_problem(PatternCollection.of([pattern]), H, FAIR)

    assert expected_tau(problem) == pytest.approx(expected, rel=1e-9)


def test_deterministic_alternation():
    stats = pattern_statistics(ModeChain(tpm=ALTERNATING), PatternCollection.of([(0, 1)]))

    assert stats.expected_tau == pytest.approx(3.0, abs=1e-9)
    assert stats.q == pytest.approx([1.0])


def test_alternation_predicts_the_deterministic_future():
    stats = pattern_statistics(ModeChain(tpm=ALTERNATING), PatternCollection.of([(0, 1), (1, 0)]))

    assert stats.expected_tau == pytest.approx(2.0, abs=1e-9)
    assert stats.predicted_pattern == 1
    assert stats.q[1] == pytest.approx(1.0, abs=1e-9)


def test_single_mode_chain():
    stats = pattern_statistics(ModeChain(tpm=np.ones((1, 1))), PatternCollection.of([(0,)]))

    assert stats.expected_tau == pytest.approx(1.0)
    assert stats.q == pytest.approx([1.0])


def test_head_head_against_tail_head():
    psi = PatternCollection.of([(H, H), (T, H)])
    problem = build_pattern_problem(psi, H, FAIR)
    q = first_occurrence_probs(problem, expected_tau(problem))

    assert q == pytest.approx([0.25, 0.75], abs=1e-9)
    _, exact = brute_force_occurrence(FAIR, psi, H)
    assert q == pytest.approx(exact, abs=1e-9)


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("num_modes, count, length", [(2, 1, 2), (3, 2, 2), (3, 3, 3), (4, 2, 2), (2, 2, 4)])
def test_closed_form_matches_absorption(seed, num_modes, count, length):
    rng = np.random.default_rng(100 * seed + 10 * num_modes + length)
    tpm = _random_tpm(rng, num_modes)
    psi = _random_patterns(rng, num_modes, count, length)
    phi0 = int(rng.integers(0, num_modes))

    stats = occurrence_stats(build_pattern_problem(psi, phi0, tpm))
    exact_tau, exact_q = brute_force_occurrence(tpm, psi, phi0)

    assert stats.expected_tau == pytest.approx(exact_tau, rel=1e-7)
    assert stats.q == pytest.approx(exact_q, abs=1e-7)
    assert stats.q.sum() == pytest.approx(1.0, abs=1e-9)
    assert stats.context_visits.sum() == pytest.approx(stats.expected_tau, rel=1e-9)


def test_relabelling_patterns_permutes_q():
    rng = np.random.default_rng(8)
    tpm = _random_tpm(rng, 3)
    forward = pattern_statistics(ModeChain(tpm=tpm), PatternCollection.of([(0, 1), (2, 2), (1, 0)]))
    backward = pattern_statistics(ModeChain(tpm=tpm), PatternCollection.of([(1, 0), (2, 2), (0, 1)]))

    assert backward.q == pytest.approx(forward.q[::-1], abs=1e-9)
    assert backward.expected_tau == pytest.approx(forward.expected_tau, rel=1e-9)


def test_more_patterns_never_wait_longer():
    rng = np.random.default_rng(4)
    chain = ModeChain(tpm=_random_tpm(rng, 3))
    small = pattern_statistics(chain, PatternCollection.of([(0, 1)]))
    large = pattern_statistics(chain, PatternCollection.of([(0, 1), (2, 1)]))

    assert large.expected_tau <= small.expected_tau + 1e-9


def test_fairness_of_rewarded_teams():
    stats = pattern_statistics(ModeChain(tpm=FAIR), PatternCollection.of([(H, H)]))

    assert stats.c_star is not None
    assert stats.fairness_residual == pytest.approx(0.0, abs=1e-8)


def test_reducible_chain_is_rejected():
    with pytest.raises(ReducibleChainError):
        build_pattern_problem(PatternCollection.of([(0, 1)]), 0, np.eye(2))


def test_oracle_agrees_with_closed_form():
    chain = ModeChain(tpm=FAIR)
    psi = PatternCollection.of([(H, H)])
    oracle = monte_carlo_oracle(chain, psi, trials=40_000, seed=1)

    assert abs(oracle.mean_tau - 6.0) <= 4.0 * oracle.tau_se
    assert oracle.q == pytest.approx([1.0])


def test_oracle_first_occurrence_within_standard_errors():
    chain = ModeChain(tpm=FAIR)
    psi = PatternCollection.of([(H, H), (T, T)])
    stats = pattern_statistics(chain, psi)
    oracle = monte_carlo_oracle(chain, psi, trials=40_000, seed=3)

    assert np.all(np.abs(oracle.q - stats.q) <= 4.0 * oracle.q_se)


@pytest.mark.parametrize(
    "num_modes, count, length",
    [(2, 1, 2), (2, 2, 3), (2, 3, 3), (3, 2, 2), (3, 3, 2), (3, 2, 3), (4, 2, 2), (4, 3, 2)],
)
def test_oracle_agrees_on_random_chains(num_modes, count, length):
    rng = np.random.default_rng(1000 + 10 * num_modes + count + length)
    tpm = _random_tpm(rng, num_modes)
    psi = _random_patterns(rng, num_modes, count, length)
    phi0 = int(rng.integers(0, num_modes))
    trials = 20_000

    stats = occurrence_stats(build_pattern_problem(psi, phi0, tpm))
    oracle = monte_carlo_oracle(ModeChain(tpm=tpm), psi, phi0=phi0, trials=trials, seed=num_modes + count + length)

    assert abs(oracle.mean_tau - stats.expected_tau) <= 4.0 * oracle.tau_se
    q_se = np.maximum(oracle.q_se, 1.0 / trials)
    assert np.all(np.abs(oracle.q - stats.q) <= 4.0 * q_se)


def test_oracle_ending_frequencies_match_later_probabilities():
    chain = ModeChain(tpm=np.array([[0.3, 0.7], [0.6, 0.4]]))
    psi = PatternCollection.of([(0, 1)])
    problem = build_pattern_problem(psi, 0, chain.tpm)
    stats = occurrence_stats(problem)
    trials = 40_000
    oracle = monte_carlo_oracle(chain, psi, trials=trials, seed=5)

    for ell, string in enumerate(problem.gamma.augmented):
        p = stats.later_probabilities[ell]
        se = max(np.sqrt(p * (1.0 - p) / trials), 1.0 / trials)
        assert abs(oracle.ending_frequency(string) - p) <= 4.0 * se


def test_oracle_on_deterministic_chain_has_no_spread():
    oracle = monte_carlo_oracle(ModeChain(tpm=ALTERNATING), PatternCollection.of([(0, 1)]), trials=500, seed=0)

    assert oracle.mean_tau == 3.0
    assert oracle.tau_se == 0.0


def test_single_trial_flags_undefined_error():
    oracle = monte_carlo_oracle(ModeChain(tpm=FAIR), PatternCollection.of([(H, H)]), trials=1, seed=0)

    assert not oracle.se_defined
    assert np.isnan(oracle.tau_se)


def test_oracle_rejects_zero_trials():
    with pytest.raises(ValueError):
        monte_carlo_oracle(ModeChain(tpm=FAIR), PatternCollection.of([(H, H)]), trials=0)


def test_betting_teams_are_fair():
    result = simulate_team_rewards(ModeChain(tpm=np.array([[0.3, 0.7], [0.6, 0.4]])), PatternCollection.of([(0, 1), (1, 1)]), trials=3_000, seed=2)

    assert abs(result.mean) <= 4.0 * result.se
