from .collection import (
    AugmentedCollection,
    EndingStringSet,
    Pattern,
    PatternCollection,
    augment_collection,
    build_ending_strings,
    path_probability,
)
from .gains import GainMatrix, compute_gain_matrix, context_stakes, solve_initial_rewards, team_wealth
from .occurrence import (
    OccurrenceStats,
    PatternProblem,
    build_pattern_problem,
    expected_tau,
    first_occurrence_probs,
    later_probabilities,
    occurrence_stats,
    pattern_statistics,
)
from .oracle import OracleResult, TeamRewardResult, brute_force_occurrence, monte_carlo_oracle, simulate_team_rewards

__all__ = [
    "AugmentedCollection",
    "EndingStringSet",
    "Pattern",
    "PatternCollection",
    "augment_collection",
    "build_ending_strings",
    "path_probability",
    "GainMatrix",
    "compute_gain_matrix",
    "context_stakes",
    "solve_initial_rewards",
    "team_wealth",
    "OccurrenceStats",
    "PatternProblem",
    "build_pattern_problem",
    "expected_tau",
    "first_occurrence_probs",
    "later_probabilities",
    "occurrence_stats",
    "pattern_statistics",
    "OracleResult",
    "TeamRewardResult",
    "brute_force_occurrence",
    "monte_carlo_oracle",
    "simulate_team_rewards",
]
