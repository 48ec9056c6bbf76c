"""PLP controller: mode identification, pattern prediction and memorised synthesis."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from . import config
from .database import MemoryDatabase
from .errors import (
    DegenerateCollectionError,
    InfeasibleLocalityError,
    NotPersistentlyExcitingError,
    NumericalFailureError,
    ReducibleChainError,
    UncontrollableModeError,
)
from .identification import ConsistentSet, TpmEstimate, narrow_and_estimate, point_estimate, residual_consistent_set, update_tpm
from .models import JumpLinearSystem
from .patterns import OccurrenceStats, PatternCollection, build_pattern_problem, occurrence_stats
from .synthesis import (
    DataSegment,
    SlsProblem,
    SystemResponse,
    controller_step,
    ControllerState,
    data_driven_synthesize,
    synthesize,
    synthesize_robust,
)

LOGGER = logging.getLogger(__name__)

SOURCE_MODEL = "model-based"
SOURCE_DATA = "data-driven"

Predictor = Callable[[PatternCollection, int, np.ndarray], OccurrenceStats]
Supports = Dict[int, Tuple[Optional[np.ndarray], Optional[np.ndarray]]]


def pattern_predictor(psi: PatternCollection, mode: int, tpm: np.ndarray) -> OccurrenceStats:
    return occurrence_stats(build_pattern_problem(psi, mode, tpm))


@dataclass
class MemoryEntry:
    response: SystemResponse
    source: str
    synthesized_at: int
    stale: bool = False


@dataclass
class MemoryTable:
    """Per-mode stored trajectory segments and cached responses."""

    num_modes: int
    refresh_data_driven: bool = True
    segments: Dict[int, List[DataSegment]] = field(default_factory=dict)
    entries: Dict[int, MemoryEntry] = field(default_factory=dict)
    refreshed: Set[int] = field(default_factory=set)

    def add_segment(self, mode: int, segment: DataSegment) -> None:
        self.segments.setdefault(mode, []).append(segment)
        entry = self.entries.get(mode)
        # Model-based entries only go stale for the one allowed data-driven refresh.
        if entry is not None and self.refresh_data_driven and entry.source != SOURCE_DATA and mode not in self.refreshed:
            entry.stale = True

    def lookup(self, mode: int) -> Optional[MemoryEntry]:
        entry = self.entries.get(mode)
        if entry is None or entry.stale:
            return None
        return entry

    def store(self, mode: int, entry: MemoryEntry) -> None:
        if entry.source == SOURCE_DATA:
            self.refreshed.add(mode)
        self.entries[mode] = entry

    def has_data(self, mode: int) -> bool:
        return bool(self.segments.get(mode))

    def known_mode(self, mode: int) -> bool:
        return mode in self.entries or self.has_data(mode)


@dataclass
class SchedulerState:
    mode: int
    predicted_pattern: Optional[int] = None
    expected_tau: Optional[float] = None
    queue: Tuple[int, ...] = ()
    q: Optional[np.ndarray] = None


@dataclass
class ProvenanceRecord:
    step: int
    event: str
    mode_estimate: int
    true_mode: Optional[int]
    cache_hit: Optional[bool]
    synth_ms: float
    predictor_k: Optional[int]
    predicted_etau: Optional[float]

    def to_dict(self) -> Dict[str, object]:
        return {
            "step": self.step,
            "event": self.event,
            "mode_estimate": self.mode_estimate,
            "true_mode": "" if self.true_mode is None else self.true_mode,
            "cache_hit": "" if self.cache_hit is None else int(self.cache_hit),
            "synth_ms": f"{self.synth_ms:.3f}",
            "predictor_k": "" if self.predictor_k is None else self.predictor_k,
            "predicted_etau": "" if self.predicted_etau is None else f"{self.predicted_etau:.6f}",
        }


class SwitchingSlsController:
    """Identifies the active mode from residuals and applies that mode's response.

    Without memory or prediction this is the baseline: every detected switch
    triggers a fresh model-based synthesis.
    """

    def __init__(
        self,
        system: JumpLinearSystem,
        initial_mode: int = 0,
        horizon: int = config.DEFAULT_HORIZON,
        Q: Optional[np.ndarray] = None,
        R: Optional[np.ndarray] = None,
        supports: Optional[Supports] = None,
        dwell: int = config.DEFAULT_DWELL,
        use_true_modes: bool = False,
        excitation: float = 0.0,
        seed: int = 0,
        timing: str = "wall",
        model_synthesizer: Optional[Callable[[SlsProblem], SystemResponse]] = None,
    ) -> None:
        if not 0 <= initial_mode < system.num_modes:
            raise ValueError(f"Initial mode {initial_mode} outside 0..{system.num_modes - 1}")
        if timing not in ("wall", "off"):
            raise ValueError(f"Unknown timing mode {timing!r}")
        self.system = system
        self.horizon = horizon
        self.Q = Q
        self.R = R
        self.supports: Supports = supports or {}
        self.dwell = max(1, int(dwell))
        self.use_true_modes = use_true_modes
        self.excitation = excitation
        self.timing = timing
        self.model_synthesizer = model_synthesizer or synthesize
        self._rng = np.random.default_rng(seed)

        self.consistent = ConsistentSet.full(system.num_modes)
        self.est_mode = initial_mode
        self.applied_mode: Optional[int] = None
        self.response: Optional[SystemResponse] = None
        self.state: Optional[ControllerState] = None
        self.provenance: List[ProvenanceRecord] = []
        self.synth_counts: Dict[str, int] = {SOURCE_MODEL: 0, SOURCE_DATA: 0}
        self.synth_ms = 0.0
        self.switches_detected = 0
        self.last_events: List[str] = []
        self._step = 0
        self._last_x: Optional[np.ndarray] = None
        self._last_u: Optional[np.ndarray] = None
        self._last_true: Optional[int] = None

    @property
    def synth_count(self) -> int:
        return sum(self.synth_counts.values())

    # -- synthesis -------------------------------------------------------
    def _clock(self) -> float:
        return time.perf_counter() if self.timing == "wall" else 0.0

    def _problem(self, mode: int) -> SlsProblem:
        x_support, u_support = self.supports.get(mode, (None, None))
        return SlsProblem(
            A=self.system.A(mode),
            B=self.system.B(mode),
            horizon=self.horizon,
            Q=self.Q,
            R=self.R,
            x_support=x_support,
            u_support=u_support,
        )

    def _synthesize_model(self, mode: int) -> Tuple[SystemResponse, float]:
        started = self._clock()
        response = self.model_synthesizer(self._problem(mode))
        elapsed = (self._clock() - started) * 1000.0
        self.synth_counts[SOURCE_MODEL] += 1
        self.synth_ms += elapsed
        LOGGER.info("Step %d: model-based synthesis for mode %d (%.2f ms)", self._step, mode, elapsed)
        return response, elapsed

    def response_for(self, mode: int) -> SystemResponse:
        response, elapsed = self._synthesize_model(mode)
        self._record("synthesize", mode, cache_hit=False, synth_ms=elapsed)
        return response

    # -- identification --------------------------------------------------
    def on_state_update(self, x_t: np.ndarray, u_prev: np.ndarray, true_mode: Optional[int] = None) -> List[str]:
        """Identify the mode of the transition that produced ``x_t``.

        Returns the events raised: ``switch_detected``, ``mode_estimate_changed``
        and whatever the subclass adds. Every detected switch enters the
        identified mode, even when the estimate comes out unchanged.
        """

        step = self._step - 1
        events: List[str] = []
        if self.use_true_modes and true_mode is not None:
            mode_seen = int(true_mode)
            confident = True
            switched = mode_seen != self.est_mode
        else:
            self.consistent = residual_consistent_set(self.system, self._last_x, u_prev, x_t, self.consistent, step=step)
            switched = self.consistent.switched
            confident = self.consistent.is_singleton
            if self.est_mode in self.consistent.candidates and not switched:
                mode_seen = self.est_mode
            else:
                mode_seen = narrow_and_estimate(self.consistent, self._tpm_for_narrowing(), self.est_mode)
        self._observe(step, mode_seen, confident, x_t, u_prev, events)
        if switched:
            events.append("switch_detected")
            self.switches_detected += 1
            self._on_switch()
        if mode_seen != self.est_mode:
            events.append("mode_estimate_changed")
            self._enter_mode(mode_seen, events)
        elif switched:
            self._enter_mode(mode_seen, events)
        return events

    def _tpm_for_narrowing(self) -> Optional[TpmEstimate]:
        return None

    def _observe(self, step: int, mode: int, confident: bool, x_t: np.ndarray, u_prev: np.ndarray, events: List[str]) -> None:
        """Hook for bookkeeping on every identified transition."""

    def _enter_mode(self, mode: int, events: List[str]) -> None:
        self.est_mode = mode

    def _on_switch(self) -> None:
        """Called once per detected switch."""

    # -- control ---------------------------------------------------------
    def _apply(self, mode: int) -> None:
        self.response = self.response_for(mode)
        self.applied_mode = mode
        # A new response starts from a clean internal state.
        self.state = ControllerState.for_response(self.response)

    def _record(self, event: str, mode: int, cache_hit: Optional[bool] = None, synth_ms: float = 0.0) -> None:
        self.provenance.append(
            ProvenanceRecord(
                step=self._step,
                event=event,
                mode_estimate=self.est_mode,
                true_mode=self._last_true,
                cache_hit=cache_hit,
                synth_ms=synth_ms,
                predictor_k=None,
                predicted_etau=None,
            )
        )

    def __call__(self, t: int, x: np.ndarray, true_mode: Optional[int] = None) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        self._step = t
        events: List[str] = []
        if self._last_x is not None:
            events = self.on_state_update(x, self._last_u, true_mode=self._last_true)
        if self.use_true_modes and true_mode is not None and int(true_mode) != self.est_mode:
            events.extend(["switch_detected", "mode_estimate_changed"])
            self.switches_detected += 1
            self._on_switch()
            self._enter_mode(int(true_mode), events)
        if self.applied_mode != self.est_mode or self.response is None:
            self._apply(self.est_mode)
        u = controller_step(self.state, self.response, x)
        if self.excitation > 0.0:
            u = u + self._rng.uniform(-self.excitation, self.excitation, size=u.shape)
        self._last_x = x
        self._last_u = u
        self._last_true = None if true_mode is None else int(true_mode)
        self.last_events = events
        return u

    def finish(self) -> None:
        """Close any open bookkeeping at the end of a run."""


class BaselineSlsController(SwitchingSlsController):
    """Re-synthesizes at every detected switch; no memory, no prediction."""

    def _on_switch(self) -> None:
        self.applied_mode = None


class PlpController(SwitchingSlsController):
    """Pattern-learning predictive control over a memory table of responses."""

    def __init__(
        self,
        system: JumpLinearSystem,
        patterns: PatternCollection,
        initial_mode: int = 0,
        memory: Optional[MemoryTable] = None,
        predictor: Optional[Predictor] = None,
        database: Optional[MemoryDatabase] = None,
        database_label: str = "default",
        prior_weight: float = config.DEFAULT_PRIOR_WEIGHT,
        true_tpm: Optional[np.ndarray] = None,
        data_driven: bool = True,
        refresh_data_driven: bool = True,
        model_synthesis: bool = True,
        **kwargs,
    ) -> None:
        super().__init__(system, initial_mode=initial_mode, **kwargs)
        patterns.check_modes(system.num_modes)
        self.patterns = patterns
        self.memory = memory or MemoryTable(num_modes=system.num_modes, refresh_data_driven=refresh_data_driven)
        self.predictor = predictor or pattern_predictor
        self.database = database
        self.database_label = database_label
        self.tpm_est = TpmEstimate.empty(system.num_modes, prior_weight)
        self.true_tpm = None if true_tpm is None else np.asarray(true_tpm, dtype=float)
        self.data_driven = data_driven
        self.model_synthesis = model_synthesis
        self.scheduler = SchedulerState(mode=initial_mode)
        self.prediction_hits = 0
        self.prediction_checks = 0
        self.predict_ms = 0.0
        self._epoch_mode: Optional[int] = None
        self._segment_mode: Optional[int] = None
        self._segment_states: List[np.ndarray] = []
        self._segment_inputs: List[np.ndarray] = []
        self.schedule_prediction()

    def _tpm_for_narrowing(self) -> Optional[TpmEstimate]:
        return self.tpm_est

    # -- prediction ------------------------------------------------------
    def schedule_prediction(self) -> SchedulerState:
        """Predict the next pattern from the current mode and pre-synthesize its modes."""

        tpm = self.true_tpm if self.true_tpm is not None else point_estimate(self.tpm_est)
        started = self._clock()
        try:
            stats = self.predictor(self.patterns, self.est_mode, tpm)
        except (DegenerateCollectionError, NumericalFailureError, ReducibleChainError) as exc:
            LOGGER.warning("Step %d: prediction unavailable, continuing without it: %s", self._step, exc)
            self.scheduler = SchedulerState(mode=self.est_mode)
            return self.scheduler
        finally:
            self.predict_ms += (self._clock() - started) * 1000.0

        k_star = int(np.argmax(stats.q))
        queue: List[int] = []
        for mode in self.patterns.patterns[k_star]:
            if mode not in queue:
                queue.append(mode)
        self.scheduler = SchedulerState(
            mode=self.est_mode,
            predicted_pattern=k_star,
            expected_tau=stats.expected_tau,
            queue=tuple(queue),
            q=stats.q,
        )
        LOGGER.info("Step %d: predicted pattern %d (q=%.3f, E[tau]=%.2f), queue %s", self._step, k_star, stats.q[k_star], stats.expected_tau, queue)
        for mode in queue:
            self.memory_lookup_or_synthesize(mode, event="presynthesize")
        return self.scheduler

    # -- memory ----------------------------------------------------------
    def memory_lookup_or_synthesize(self, mode: int, event: str = "lookup") -> Tuple[SystemResponse, ProvenanceRecord]:
        if not 0 <= mode < self.system.num_modes:
            raise ValueError(f"Unknown mode {mode}")
        entry = self.memory.lookup(mode)
        if entry is not None:
            return entry.response, self._provenance(event, cache_hit=True, synth_ms=0.0)

        if self.database is not None and mode not in self.memory.entries:
            stored = self.database.load_response(self.database_label, mode)
            if stored is not None:
                source, response = stored
                self.memory.store(mode, MemoryEntry(response=response, source=source, synthesized_at=self._step))
                if source == SOURCE_DATA:
                    self.memory.refreshed.add(mode)
                return response, self._provenance(event, cache_hit=True, synth_ms=0.0)

        response: Optional[SystemResponse] = None
        source = SOURCE_MODEL
        elapsed = 0.0
        if self.data_driven and self.memory.has_data(mode) and mode not in self.memory.refreshed:
            started = self._clock()
            try:
                x_support, u_support = self.supports.get(mode, (None, None))
                response = data_driven_synthesize(
                    self.memory.segments[mode], self.horizon, self.Q, self.R, x_support, u_support
                )
                source = SOURCE_DATA
                elapsed = (self._clock() - started) * 1000.0
                self.synth_counts[SOURCE_DATA] += 1
                self.synth_ms += elapsed
                LOGGER.info("Step %d: data-driven synthesis for mode %d (%.2f ms)", self._step, mode, elapsed)
            except InfeasibleLocalityError as exc:
                LOGGER.warning("Step %d: data for mode %d cannot meet the supports, using the model: %s", self._step, mode, exc)
                self.memory.refreshed.add(mode)
            except (NotPersistentlyExcitingError, ValueError) as exc:
                # Retried once more segments of this mode are stored.
                LOGGER.info("Step %d: not enough data for mode %d yet: %s", self._step, mode, exc)
        if response is None:
            cached = self.memory.entries.get(mode)
            if cached is not None and cached.source == SOURCE_MODEL:
                cached.stale = False
                return cached.response, self._provenance(event, cache_hit=True, synth_ms=0.0)
            if not self.model_synthesis:
                raise UncontrollableModeError(mode)
            response, elapsed = self._synthesize_model(mode)

        self.memory.store(mode, MemoryEntry(response=response, source=source, synthesized_at=self._step))
        if self.database is not None:
            self.database.save_response(self.database_label, mode, source, self._step, response)
        return response, self._provenance(event, cache_hit=False, synth_ms=elapsed)

    def _provenance(self, event: str, cache_hit: bool, synth_ms: float) -> ProvenanceRecord:
        record = ProvenanceRecord(
            step=self._step,
            event=event,
            mode_estimate=self.est_mode,
            true_mode=self._last_true,
            cache_hit=cache_hit,
            synth_ms=synth_ms,
            predictor_k=self.scheduler.predicted_pattern,
            predicted_etau=self.scheduler.expected_tau,
        )
        self.provenance.append(record)
        return record

    def response_for(self, mode: int) -> SystemResponse:
        response, _ = self.memory_lookup_or_synthesize(mode)
        return response

    # -- bookkeeping -----------------------------------------------------
    def _observe(self, step: int, mode: int, confident: bool, x_t: np.ndarray, u_prev: np.ndarray, events: List[str]) -> None:
        if self._epoch_mode is None:
            self._epoch_mode = mode
        elif step % self.dwell == 0:
            self.tpm_est = update_tpm(self.tpm_est, self._epoch_mode, mode)
            self._epoch_mode = mode

        contiguous = confident and self._segment_mode == mode
        if contiguous:
            self._segment_states.append(x_t)
            self._segment_inputs.append(u_prev)
            return
        self._close_segment()
        if not confident:
            # Ambiguous stretches never enter the memory table.
            return
        if not self.memory.known_mode(mode):
            events.append("segment_opened")
        self._segment_mode = mode
        self._segment_states = [self._last_x, x_t]
        self._segment_inputs = [u_prev]

    def _close_segment(self) -> None:
        if self._segment_mode is not None and self._segment_inputs:
            segment = DataSegment(states=np.array(self._segment_states), inputs=np.array(self._segment_inputs))
            self.memory.add_segment(self._segment_mode, segment)
            LOGGER.debug("Stored %d-step segment for mode %d", segment.length, self._segment_mode)
        self._segment_mode = None
        self._segment_states = []
        self._segment_inputs = []

    def _enter_mode(self, mode: int, events: List[str]) -> None:
        self.prediction_checks += 1
        if mode in self.scheduler.queue:
            self.prediction_hits += 1
        super()._enter_mode(mode, events)
        self.schedule_prediction()
        events.append("prediction_refreshed")

    def finish(self) -> None:
        self._close_segment()


class RobustSlsController:
    """One response over every topology, synthesized once."""

    def __init__(
        self,
        system: JumpLinearSystem,
        horizon: int = config.DEFAULT_HORIZON,
        Q: Optional[np.ndarray] = None,
        R: Optional[np.ndarray] = None,
        supports: Optional[Supports] = None,
        excitation: float = 0.0,
        seed: int = 0,
        timing: str = "wall",
    ) -> None:
        supports = supports or {}
        x_support, u_support = _union_supports([supports.get(m, (None, None)) for m in range(system.num_modes)])
        problems = [
            SlsProblem(A=system.A(m), B=system.B(m), horizon=horizon, Q=Q, R=R, x_support=x_support, u_support=u_support)
            for m in range(system.num_modes)
        ]
        started = time.perf_counter() if timing == "wall" else 0.0
        self.response, self.residuals = synthesize_robust(problems)
        self.synth_ms = ((time.perf_counter() if timing == "wall" else 0.0) - started) * 1000.0
        self.synth_count = 1
        self.est_mode: Optional[int] = None
        self.excitation = excitation
        self.last_events: List[str] = []
        self.state = ControllerState.for_response(self.response)
        self._rng = np.random.default_rng(seed)

    def __call__(self, t: int, x: np.ndarray, true_mode: Optional[int] = None) -> np.ndarray:
        u = controller_step(self.state, self.response, x)
        if self.excitation > 0.0:
            u = u + self._rng.uniform(-self.excitation, self.excitation, size=u.shape)
        return u

    def finish(self) -> None:
        """Nothing to close."""


def _union_supports(
    supports: Sequence[Tuple[Optional[np.ndarray], Optional[np.ndarray]]]
) -> Tuple[Optional[np.ndarray], Optional[np.ndarray]]:
    """Entries allowed in any topology; ``None`` stands for no constraint."""

    merged: List[Optional[np.ndarray]] = [None, None]
    for pair in supports:
        for i, mask in enumerate(pair):
            if mask is None:
                continue
            merged[i] = mask.copy() if merged[i] is None else merged[i] | mask
    return merged[0], merged[1]
