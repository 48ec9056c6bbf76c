"""Independent checks for the pattern engine: Monte Carlo, absorption and direct betting."""
from __future__ import annotations

import logging
import math
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from .. import config
from ..errors import NumericalFailureError
from ..models import ModeChain
from .collection import Pattern, PatternCollection, augment_collection
from .gains import team_wealth

LOGGER = logging.getLogger(__name__)

BATCH_SIZE = 200_000


@dataclass
class OracleResult:
    mean_tau: float
    tau_se: float
    q: np.ndarray
    q_se: np.ndarray
    trials: int
    ending_counts: Dict[Pattern, int] = field(default_factory=dict)

    @property
    def se_defined(self) -> bool:
        return self.trials > 1

    def ending_frequency(self, string: Sequence[int]) -> float:
        return self.ending_counts.get(tuple(string), 0) / self.trials

    def to_dict(self) -> Dict[str, object]:
        return {
            "mean_tau": self.mean_tau,
            "tau_se": self.tau_se,
            "q": self.q.tolist(),
            "q_se": self.q_se.tolist(),
            "trials": self.trials,
            "se_defined": self.se_defined,
        }


def _decode(code: int, num_modes: int, length: int) -> Pattern:
    symbols = []
    for _ in range(length):
        code, symbol = divmod(code, num_modes)
        symbols.append(int(symbol))
    return tuple(reversed(symbols))


def _run_batch(
    tpm: np.ndarray,
    lookup: np.ndarray,
    length: int,
    phi0: int,
    trials: int,
    rng: np.random.Generator,
    max_steps: int,
) -> Tuple[np.ndarray, np.ndarray, Counter]:
    num_modes = tpm.shape[0]
    cumulative = np.cumsum(tpm, axis=1)
    cumulative[:, -1] = 1.0
    window_size = num_modes**length
    wide_size = num_modes ** (length + 2)

    current = np.full(trials, phi0, dtype=np.int64)
    window = np.zeros(trials, dtype=np.int64)
    wide = np.full(trials, phi0, dtype=np.int64)
    tau = np.zeros(trials, dtype=np.int64)
    first = np.full(trials, -1, dtype=np.int64)
    endings: Counter = Counter()
    active = np.arange(trials)
    step = 0
    while active.size:
        step += 1
        if step > max_steps:
            raise NumericalFailureError(f"{active.size} trials did not stop within {max_steps} steps")
        draws = rng.random(active.size)
        following = (draws[:, None] >= cumulative[current[active]]).sum(axis=1)
        current[active] = following
        window[active] = (window[active] * num_modes + following) % window_size
        wide[active] = (wide[active] * num_modes + following) % wide_size
        if step < length + config.WINDOW_START - 1:
            continue
        hits = lookup[window[active]]
        done = hits >= 0
        if not done.any():
            continue
        finished = active[done]
        tau[finished] = step
        first[finished] = hits[done]
        if step > length:
            codes, counts = np.unique(wide[finished], return_counts=True)
            for code, count in zip(codes, counts):
                endings[_decode(int(code), num_modes, length + 2)] += int(count)
        active = active[~done]
    return tau, first, endings


def monte_carlo_oracle(
    chain: ModeChain,
    psi: PatternCollection,
    phi0: Optional[int] = None,
    trials: int = config.DEFAULT_ORACLE_TRIALS,
    seed: int = 0,
    max_steps: int = config.ORACLE_MAX_STEPS,
    progress: bool = False,
) -> OracleResult:
    """Empirical E[tau] and first-occurrence frequencies under the engine's index convention."""

    if trials < 1:
        raise ValueError("The oracle needs at least one trial")
    start = chain.initial_mode if phi0 is None else phi0
    num_modes = chain.num_modes
    psi.check_modes(num_modes)
    lookup = np.full(num_modes**psi.length, -1, dtype=np.int64)
    for k, pattern in enumerate(psi.patterns):
        code = 0
        for symbol in pattern:
            code = code * num_modes + symbol
        lookup[code] = k

    sizes = [BATCH_SIZE] * (trials // BATCH_SIZE)
    if trials % BATCH_SIZE:
        sizes.append(trials % BATCH_SIZE)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    taus: List[np.ndarray] = []
    firsts: List[np.ndarray] = []
    endings: Counter = Counter()
    for size, child in tqdm(list(zip(sizes, children)), desc="oracle", disable=not progress):
        tau, first, batch_endings = _run_batch(chain.tpm, lookup, psi.length, start, size, np.random.default_rng(child), max_steps)
        taus.append(tau)
        firsts.append(first)
        endings.update(batch_endings)

    tau = np.concatenate(taus).astype(float)
    first = np.concatenate(firsts)
    q = np.bincount(first, minlength=psi.size).astype(float) / trials
    if trials > 1:
        tau_se = float(tau.std(ddof=1) / math.sqrt(trials))
        q_se = np.sqrt(q * (1.0 - q) / trials)
    else:
        LOGGER.warning("Single-trial oracle: standard errors are undefined")
        tau_se = float("nan")
        q_se = np.full(psi.size, np.nan)
    return OracleResult(mean_tau=float(tau.mean()), tau_se=tau_se, q=q, q_se=q_se, trials=trials, ending_counts=dict(endings))


def brute_force_occurrence(tpm: np.ndarray, psi: PatternCollection, phi0: int) -> Tuple[float, np.ndarray]:
    """Absorption analysis on the pattern automaton.

    A transient state is the current mode plus the last ``L - 1`` symbols seen
    after ``phi0``; reaching a full window equal to a pattern absorbs.
    """

    tpm = np.asarray(tpm, dtype=float)
    num_modes = tpm.shape[0]
    length = psi.length
    index = psi.index()
    start = (phi0, ())
    states: Dict[Tuple[int, Pattern], int] = {start: 0}
    transitions: List[Tuple[int, int, float]] = []
    absorptions: List[Tuple[int, int, float]] = []
    queue = deque([start])
    while queue:
        state = queue.popleft()
        current, suffix = state
        for following in range(num_modes):
            probability = float(tpm[current, following])
            if probability <= 0.0:
                continue
            extended = suffix + (following,)
            if len(extended) == length and extended in index:
                absorptions.append((states[state], index[extended], probability))
                continue
            successor = (following, extended[-(length - 1) :] if length > 1 else ())
            if successor not in states:
                states[successor] = len(states)
                queue.append(successor)
            transitions.append((states[state], states[successor], probability))

    size = len(states)
    Q = np.zeros((size, size))
    R = np.zeros((size, psi.size))
    for source, target, probability in transitions:
        Q[source, target] += probability
    for source, k, probability in absorptions:
        R[source, k] += probability
    fundamental = np.eye(size) - Q
    steps = np.linalg.solve(fundamental, np.ones(size))
    absorbed = np.linalg.solve(fundamental, R)
    return float(steps[0]), absorbed[0]


@dataclass
class TeamRewardResult:
    mean: float
    se: float
    trials: int


def simulate_team_rewards(
    chain: ModeChain,
    psi: PatternCollection,
    phi0: Optional[int] = None,
    rewards: Optional[np.ndarray] = None,
    trials: int = 10_000,
    seed: int = 0,
) -> TeamRewardResult:
    """Play every augmented team directly and report the net reward at the stopping time.

    Net reward is final team wealth minus the stakes paid, weighted by ``rewards``.
    """

    start = chain.initial_mode if phi0 is None else phi0
    tpm = chain.tpm
    gamma = augment_collection(psi, start, tpm)
    weights = np.ones(gamma.size) if rewards is None else np.asarray(rewards, dtype=float)
    if weights.shape != (gamma.size,):
        raise ValueError(f"Expected {gamma.size} rewards, got shape {weights.shape}")
    known = set(psi.patterns)
    length = psi.length
    cumulative = np.cumsum(tpm, axis=1)
    cumulative[:, -1] = 1.0
    rng = np.random.default_rng(seed)

    nets = np.zeros(trials)
    for trial in range(trials):
        path = [start]
        while True:
            following = int(np.searchsorted(cumulative[path[-1]], rng.random(), side="right"))
            path.append(min(following, tpm.shape[0] - 1))
            if len(path) > config.ORACLE_MAX_STEPS:
                raise NumericalFailureError("Betting simulation did not stop")
            if len(path) - 1 >= length and tuple(path[-length:]) in known:
                break
        stopped = path[:-1]
        net = 0.0
        for ell in range(gamma.size):
            context = gamma.context(ell)
            stakes = sum(1 for symbol in stopped if symbol == context)
            net += weights[ell] * (team_wealth(path, gamma.bet(ell), tpm, context=context) - stakes)
        nets[trial] = net
    se = float(nets.std(ddof=1) / math.sqrt(trials)) if trials > 1 else float("nan")
    return TeamRewardResult(mean=float(nets.mean()), se=se, trials=trials)
