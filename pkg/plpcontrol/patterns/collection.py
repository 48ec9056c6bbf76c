"""Pattern collections, their augmentation and the ending-string catalog."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

Pattern = Tuple[int, ...]


@dataclass(frozen=True)
class PatternCollection:
    """K distinct mode patterns of one common length L."""

    patterns: Tuple[Pattern, ...]

    def __post_init__(self) -> None:
        patterns = tuple(tuple(int(symbol) for symbol in pattern) for pattern in self.patterns)
        if not patterns:
            raise ValueError("A pattern collection needs at least one pattern")
        lengths = {len(pattern) for pattern in patterns}
        if len(lengths) != 1 or 0 in lengths:
            raise ValueError(f"Patterns must share one positive length, got lengths {sorted(lengths)}")
        if len(set(patterns)) != len(patterns):
            raise ValueError("Patterns must be distinct")
        if any(symbol < 0 for pattern in patterns for symbol in pattern):
            raise ValueError("Pattern symbols must be mode indices")
        object.__setattr__(self, "patterns", patterns)

    @classmethod
    def of(cls, patterns: Iterable[Sequence[int]]) -> "PatternCollection":
        return cls(tuple(tuple(pattern) for pattern in patterns))

    @property
    def size(self) -> int:
        return len(self.patterns)

    @property
    def length(self) -> int:
        return len(self.patterns[0])

    def index(self) -> Dict[Pattern, int]:
        return {pattern: k for k, pattern in enumerate(self.patterns)}

    def check_modes(self, num_modes: int) -> None:
        if any(symbol >= num_modes for pattern in self.patterns for symbol in pattern):
            raise ValueError(f"Pattern symbols must be below {num_modes}")


@dataclass(frozen=True)
class AugmentedCollection:
    """Augmented patterns (m1, m2) + psi_k with their group and feasibility."""

    augmented: Tuple[Pattern, ...]
    group_of: Tuple[int, ...]
    feasible: Tuple[bool, ...]
    start_mode: int

    @property
    def size(self) -> int:
        return len(self.augmented)

    def context(self, ell: int) -> int:
        return self.augmented[ell][0]

    def bet(self, ell: int) -> Pattern:
        return self.augmented[ell][1:]

    def group(self, k: int) -> List[int]:
        return [ell for ell, group in enumerate(self.group_of) if group == k]


@dataclass(frozen=True)
class EndingStringSet:
    """Initial strings (phi_0 followed by a pattern) and one later string per augmented pattern."""

    initial: Tuple[Pattern, ...]
    initial_probabilities: Tuple[float, ...]
    later: Tuple[Pattern, ...]

    @property
    def num_initial(self) -> int:
        return len(self.initial)

    @property
    def num_later(self) -> int:
        return len(self.later)

    @property
    def strings(self) -> Tuple[Pattern, ...]:
        return self.initial + self.later

    def lengths(self) -> List[int]:
        return [len(string) for string in self.strings]


def path_probability(tpm: np.ndarray, string: Sequence[int]) -> float:
    probability = 1.0
    for current, following in zip(string, string[1:]):
        probability *= float(tpm[current, following])
    return probability


def augment_collection(psi: PatternCollection, phi0: int, tpm: np.ndarray) -> AugmentedCollection:
    """Enumerate every (m1, m2) prefix with positive path probability.

    An augmented pattern is infeasible when a pattern would already have
    completed inside it; only a pattern sitting on the context symbol can
    survive, and only when that symbol is the current mode.
    """

    num_modes = tpm.shape[0]
    psi.check_modes(num_modes)
    if not 0 <= phi0 < num_modes:
        raise ValueError(f"Current mode {phi0} outside 0..{num_modes - 1}")
    known = set(psi.patterns)
    length = psi.length
    augmented: List[Pattern] = []
    groups: List[int] = []
    feasible: List[bool] = []
    for k, pattern in enumerate(psi.patterns):
        for m1 in range(num_modes):
            for m2 in range(num_modes):
                gamma = (m1, m2) + pattern
                if path_probability(tpm, gamma) <= 0.0:
                    continue
                inner = gamma[1 : length + 1] in known
                on_context = gamma[:length] in known and m1 != phi0
                augmented.append(gamma)
                groups.append(k)
                feasible.append(not (inner or on_context))
    return AugmentedCollection(
        augmented=tuple(augmented),
        group_of=tuple(groups),
        feasible=tuple(feasible),
        start_mode=phi0,
    )


def build_ending_strings(psi: PatternCollection, gamma: AugmentedCollection, tpm: np.ndarray) -> EndingStringSet:
    """Initial strings end at the earliest possible occurrence index."""

    initial: List[Pattern] = []
    probabilities: List[float] = []
    for pattern in psi.patterns:
        string = (gamma.start_mode,) + pattern
        probability = path_probability(tpm, string)
        if probability > 0.0:
            initial.append(string)
            probabilities.append(probability)
    return EndingStringSet(initial=tuple(initial), initial_probabilities=tuple(probabilities), later=gamma.augmented)
