"""Config-driven experiments: single runs, the three-controller comparison and validation reports."""
from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from itertools import permutations, product
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from . import config
from .architecture import SOURCE_DATA, SOURCE_MODEL, BaselineSlsController, PlpController, RobustSlsController, Supports
from .dynamics import GaussianDisturbance, UniformDisturbance, sample_mode_sequence, simulate
from .dynamics.network import jump_system_from_topology, random_topology
from .dynamics.simulation import realization_hash
from .errors import ConfigError, DivergenceError, NonStochasticMatrixError
from .models import JumpLinearSystem, ModeChain, NetworkTopology
from .patterns import PatternCollection, build_pattern_problem, monte_carlo_oracle, occurrence_stats
from .synthesis import SlsProblem, locality_masks, synthesize, validate_achievability, validate_closed_loop

LOGGER = logging.getLogger(__name__)

CONTROLLERS = ("plp", "baseline-sls", "robust-sls")
STEP_COLUMNS = ["t", "true_mode", "est_mode", "state_norm", "input_norm", "cum_effort", "synth_count", "cum_synth_ms", "event"]
PROVENANCE_COLUMNS = ["step", "event", "mode_estimate", "true_mode", "cache_hit", "synth_ms", "predictor_k", "predicted_etau"]
SUMMARY_METRICS = ["effort", "peak_state", "rms_state", "synth_count", "synth_ms", "mode_id_accuracy", "prediction_hit_rate"]


# -- configuration ---------------------------------------------------------
@dataclass
class NetworkSpec:
    nodes: int
    edges: Optional[List[List[Tuple[int, int]]]] = None
    generator: Optional[Dict[str, object]] = None
    coupling_gain: float = config.DEFAULT_COUPLING
    actuated: Optional[List[int]] = None


@dataclass
class ChainSpec:
    tpm: Optional[List[List[float]]] = None
    generator: Optional[Dict[str, object]] = None
    initial_mode: int = 0
    dwell: int = config.DEFAULT_DWELL


@dataclass
class DisturbanceSpec:
    bound: float = 0.0
    distribution: str = "uniform"
    sigma: float = 0.0


@dataclass
class SlsSpec:
    horizon: int = config.DEFAULT_HORIZON
    hops: Optional[int] = config.DEFAULT_HOPS
    q_weight: float = 1.0
    r_weight: float = 1.0


@dataclass
class ExperimentConfig:
    network: NetworkSpec
    chain: ChainSpec
    name: str = "experiment"
    disturbance: DisturbanceSpec = field(default_factory=DisturbanceSpec)
    sls: SlsSpec = field(default_factory=SlsSpec)
    patterns: Optional[List[List[int]]] = None
    controllers: List[str] = field(default_factory=lambda: list(CONTROLLERS))
    horizon: int = 200
    seeds: List[int] = field(default_factory=lambda: [0])
    output_dir: str = str(config.RUNS_DIR)
    excitation: float = 0.0
    initial_state_bound: float = 1.0
    timing: str = "wall"
    true_modes: bool = False
    true_tpm: bool = False
    data_driven: bool = True
    refresh_data_driven: bool = True
    oracle_trials: int = config.DEFAULT_ORACLE_TRIALS

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)


def _section(data: object, cls, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"'{where}' must be an object")
    allowed = set(cls.__dataclass_fields__)
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"Unknown keys in '{where}': {', '.join(unknown)}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"Invalid '{where}' section: {exc}") from exc


def parse_config(data: Dict[str, object]) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("The experiment config must be a JSON object")
    for required in ("network", "chain"):
        if required not in data:
            raise ConfigError(f"Missing '{required}' section")
    values = dict(data)
    values["network"] = _section(values["network"], NetworkSpec, "network")
    values["chain"] = _section(values["chain"], ChainSpec, "chain")
    if "disturbance" in values:
        values["disturbance"] = _section(values["disturbance"], DisturbanceSpec, "disturbance")
    if "sls" in values:
        values["sls"] = _section(values["sls"], SlsSpec, "sls")
    cfg = _section(values, ExperimentConfig, "config")
    validate_config(cfg)
    return cfg


def load_config(path: Path | str) -> ExperimentConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"Config file {path} not found") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"Config file {path} is not valid JSON: {exc}") from exc
    return parse_config(data)


def validate_config(cfg: ExperimentConfig) -> None:
    """Check every referenced dimension before anything runs."""

    try:
        topo = build_topology(cfg)
        chain = build_chain(cfg, topo.num_modes)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.chain.dwell < 1:
        raise ConfigError("chain.dwell must be at least 1")
    if cfg.horizon < 1:
        raise ConfigError("horizon must be at least 1")
    if not cfg.seeds:
        raise ConfigError("seeds must not be empty")
    if cfg.sls.horizon < 1 or (cfg.sls.hops is not None and cfg.sls.hops < 0):
        raise ConfigError("sls.horizon must be positive and sls.hops non-negative")
    if cfg.sls.q_weight < 0 or cfg.sls.r_weight <= 0:
        raise ConfigError("sls.q_weight must be non-negative and sls.r_weight positive")
    unknown = sorted(set(cfg.controllers) - set(CONTROLLERS))
    if unknown or not cfg.controllers:
        raise ConfigError(f"controllers must be a non-empty subset of {list(CONTROLLERS)}, got {cfg.controllers}")
    if cfg.timing not in ("wall", "off"):
        raise ConfigError("timing must be 'wall' or 'off'")
    if cfg.disturbance.distribution not in ("uniform", "gaussian") or cfg.disturbance.bound < 0:
        raise ConfigError("disturbance needs distribution 'uniform' or 'gaussian' and a non-negative bound")
    if cfg.excitation < 0 or cfg.initial_state_bound < 0 or cfg.oracle_trials < 0:
        raise ConfigError("excitation, initial_state_bound and oracle_trials must be non-negative")
    try:
        patterns_for(cfg, chain.num_modes)
    except ValueError as exc:
        raise ConfigError(f"Invalid patterns: {exc}") from exc


# -- building blocks -------------------------------------------------------
def build_topology(cfg: ExperimentConfig) -> NetworkTopology:
    spec = cfg.network
    if (spec.edges is None) == (spec.generator is None):
        raise ConfigError("network needs exactly one of 'edges' or 'generator'")
    if spec.edges is not None:
        edges = tuple(tuple((int(i), int(j)) for i, j in mode_edges) for mode_edges in spec.edges)
        if not edges:
            raise ConfigError("network.edges needs at least one topology")
        return NetworkTopology(
            num_nodes=spec.nodes,
            edges_per_mode=edges,
            coupling_gain=spec.coupling_gain,
            actuated=tuple(spec.actuated) if spec.actuated is not None else None,
        )
    generator = dict(spec.generator)
    if generator.get("kind", "random") != "random":
        raise ConfigError(f"Unknown network generator {generator.get('kind')!r}")
    return random_topology(
        num_nodes=spec.nodes,
        num_modes=int(generator.get("num_modes", 2)),
        edge_prob=float(generator.get("edge_prob", 0.2)),
        seed=int(generator.get("seed", 0)),
        coupling_gain=spec.coupling_gain,
        actuated=spec.actuated,
    )


def build_chain(cfg: ExperimentConfig, num_modes: int) -> ModeChain:
    spec = cfg.chain
    if (spec.tpm is None) == (spec.generator is None):
        raise ConfigError("chain needs exactly one of 'tpm' or 'generator'")
    if spec.tpm is not None:
        tpm = np.asarray(spec.tpm, dtype=float)
    else:
        generator = dict(spec.generator)
        kind = generator.get("kind")
        if kind == "cyclic":
            stay = float(generator.get("stay", 0.0))
            tpm = stay * np.eye(num_modes) + (1.0 - stay) * np.roll(np.eye(num_modes), 1, axis=1)
        elif kind == "random":
            rng = np.random.default_rng(int(generator.get("seed", 0)))
            tpm = rng.dirichlet(np.ones(num_modes), size=num_modes)
        else:
            raise ConfigError(f"Unknown chain generator {kind!r}")
    if tpm.shape != (num_modes, num_modes):
        raise ConfigError(f"chain.tpm must be {num_modes}x{num_modes} to match the network, got {tpm.shape}")
    try:
        return ModeChain(tpm=tpm, initial_mode=spec.initial_mode)
    except NonStochasticMatrixError as exc:
        raise ConfigError(str(exc)) from exc


def default_patterns(num_modes: int) -> List[Tuple[int, ...]]:
    """Every ordered switch between two distinct modes."""

    if num_modes == 1:
        return [(0,)]
    return [pair for pair in permutations(range(num_modes), 2)]


def patterns_for(cfg: ExperimentConfig, num_modes: int) -> PatternCollection:
    psi = PatternCollection.of(cfg.patterns if cfg.patterns is not None else default_patterns(num_modes))
    psi.check_modes(num_modes)
    return psi


@dataclass
class Experiment:
    topology: NetworkTopology
    chain: ModeChain
    system: JumpLinearSystem
    supports: Supports
    patterns: PatternCollection


def build_experiment(cfg: ExperimentConfig) -> Experiment:
    topo = build_topology(cfg)
    chain = build_chain(cfg, topo.num_modes)
    system = jump_system_from_topology(topo, disturbance_bound=cfg.disturbance.bound)
    supports: Supports = {}
    if cfg.sls.hops is not None:
        for mode in range(topo.num_modes):
            supports[mode] = locality_masks(topo, mode, cfg.sls.hops, cfg.sls.horizon)
    return Experiment(topology=topo, chain=chain, system=system, supports=supports, patterns=patterns_for(cfg, chain.num_modes))


def weights(cfg: ExperimentConfig, system: JumpLinearSystem) -> Tuple[np.ndarray, np.ndarray]:
    return cfg.sls.q_weight * np.eye(system.state_dim), cfg.sls.r_weight * np.eye(system.input_dim)


def sub_seeds(seed: int) -> Tuple[int, int, int, int]:
    """Independent seeds for modes, disturbances, controller dither and the initial state."""

    state = np.random.SeedSequence(seed).generate_state(4)
    return tuple(int(value) for value in state)


def build_controller(cfg: ExperimentConfig, experiment: Experiment, name: str, seed: int):
    Q, R = weights(cfg, experiment.system)
    common = dict(horizon=cfg.sls.horizon, Q=Q, R=R, supports=experiment.supports, excitation=cfg.excitation, seed=seed, timing=cfg.timing)
    if name == "robust-sls":
        return RobustSlsController(experiment.system, **common)
    switching = dict(common, initial_mode=experiment.chain.initial_mode, dwell=cfg.chain.dwell, use_true_modes=cfg.true_modes)
    if name == "baseline-sls":
        return BaselineSlsController(experiment.system, **switching)
    if name == "plp":
        return PlpController(
            experiment.system,
            experiment.patterns,
            true_tpm=experiment.chain.tpm if cfg.true_tpm else None,
            data_driven=cfg.data_driven,
            refresh_data_driven=cfg.refresh_data_driven,
            database_label=cfg.name,
            **switching,
        )
    raise ConfigError(f"Unknown controller {name!r}")


# -- runs ------------------------------------------------------------------
@dataclass
class RunMetrics:
    controller: str
    seed: int
    effort: float
    peak_state: float
    rms_state: float
    synth_count: int
    model_syntheses: int
    data_syntheses: int
    synth_ms: float
    switches: int
    mode_id_accuracy: Optional[float]
    prediction_hit_rate: Optional[float]
    realization: str
    predict_ms: float = 0.0

    def synth_bound_ok(self, num_modes: int) -> bool:
        """Memoisation keeps model syntheses per mode to one and data-driven refreshes to one."""

        return (
            self.model_syntheses <= num_modes
            and self.data_syntheses <= num_modes
            and self.synth_count <= min(self.switches, num_modes) + num_modes
        )

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)


class StepRecorder:
    """Wraps a controller and keeps one CSV row per control step."""

    def __init__(self, controller) -> None:
        self.controller = controller
        self.rows: List[Dict[str, object]] = []
        self.estimates: List[Optional[int]] = []
        self.cum_effort = 0.0

    def __call__(self, t: int, x: np.ndarray, true_mode: int) -> np.ndarray:
        u = self.controller(t, x, true_mode)
        self.cum_effort += float(u @ u)
        estimate = getattr(self.controller, "est_mode", None)
        self.estimates.append(estimate)
        self.rows.append(
            {
                "t": t,
                "true_mode": int(true_mode),
                "est_mode": "" if estimate is None else int(estimate),
                "state_norm": _fmt(np.linalg.norm(x)),
                "input_norm": _fmt(np.linalg.norm(u)),
                "cum_effort": _fmt(self.cum_effort),
                "synth_count": self.controller.synth_count,
                "cum_synth_ms": f"{self.controller.synth_ms:.3f}",
                "event": ";".join(self.controller.last_events),
            }
        )
        return u


def _fmt(value: float) -> str:
    return f"{float(value):.10g}"


def write_csv(path: Path, columns: Sequence[str], rows: Sequence[Dict[str, object]]) -> Path:
    """Write through a temporary file so readers never see a half-written table."""

    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with tmp.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(columns))
        writer.writeheader()
        writer.writerows(rows)
    os.replace(tmp, path)
    return path


def run_single(cfg: ExperimentConfig, name: str, seed: int, out_dir: Optional[Path] = None) -> RunMetrics:
    """Simulate one controller on the seed's realisation and write its per-step CSV."""

    experiment = build_experiment(cfg)
    mode_seed, disturbance_seed, control_seed, state_seed = sub_seeds(seed)
    sequence = sample_mode_sequence(experiment.chain, cfg.horizon, cfg.chain.dwell, mode_seed)
    if cfg.disturbance.distribution == "gaussian":
        disturbance = GaussianDisturbance(cfg.disturbance.sigma)
    else:
        disturbance = UniformDisturbance(cfg.disturbance.bound)
    n = experiment.system.state_dim
    x0 = np.random.default_rng(state_seed).uniform(-cfg.initial_state_bound, cfg.initial_state_bound, size=n)

    out_dir = Path(out_dir or cfg.output_dir)
    stem = f"{name}_seed{seed}"
    recorder = StepRecorder(build_controller(cfg, experiment, name, control_seed))
    try:
        trajectory = simulate(experiment.system, sequence.modes, recorder, disturbance, cfg.horizon, seed=disturbance_seed, x0=x0)
    except DivergenceError:
        write_csv(out_dir / f"{stem}.csv", STEP_COLUMNS, recorder.rows)
        LOGGER.error("%s diverged on seed %d; partial output flushed", name, seed)
        raise
    controller = recorder.controller
    controller.finish()
    write_csv(out_dir / f"{stem}.csv", STEP_COLUMNS, recorder.rows)
    if getattr(controller, "provenance", None) is not None:
        write_csv(out_dir / f"{stem}_provenance.csv", PROVENANCE_COLUMNS, [record.to_dict() for record in controller.provenance])

    rng = np.random.default_rng(disturbance_seed)
    realization = realization_hash(sequence.modes, disturbance.sample(cfg.horizon, n, rng))
    return summarize_run(cfg, name, seed, trajectory.states, trajectory.inputs, sequence.modes, sequence.switch_times, recorder, realization)


def summarize_run(
    cfg: ExperimentConfig,
    name: str,
    seed: int,
    states: np.ndarray,
    inputs: np.ndarray,
    modes: np.ndarray,
    switch_times: Sequence[int],
    recorder: StepRecorder,
    realization: str,
) -> RunMetrics:
    norms = np.linalg.norm(states, axis=1)
    if switch_times:
        windows = [norms[t : t + cfg.sls.horizon + 1] for t in switch_times]
        peak = float(max(window.max() for window in windows))
    else:
        peak = float(norms[1:].max(initial=0.0))
    controller = recorder.controller
    estimates = recorder.estimates
    accuracy: Optional[float] = None
    if estimates and estimates[0] is not None:
        accuracy = float(np.mean(np.asarray(estimates) == modes[: len(estimates)]))
    hit_rate: Optional[float] = None
    if isinstance(controller, PlpController) and controller.prediction_checks:
        hit_rate = controller.prediction_hits / controller.prediction_checks
    counts = getattr(controller, "synth_counts", {SOURCE_MODEL: controller.synth_count, SOURCE_DATA: 0})
    return RunMetrics(
        controller=name,
        seed=seed,
        effort=float(np.sum(inputs**2)),
        peak_state=peak,
        rms_state=float(np.sqrt(np.mean(norms[1:] ** 2))),
        synth_count=controller.synth_count,
        model_syntheses=counts[SOURCE_MODEL],
        data_syntheses=counts[SOURCE_DATA],
        synth_ms=float(controller.synth_ms),
        switches=len(switch_times),
        mode_id_accuracy=accuracy,
        prediction_hit_rate=hit_rate,
        realization=realization,
        predict_ms=float(getattr(controller, "predict_ms", 0.0)),
    )


def _compare_task(payload: Tuple[ExperimentConfig, str, int, Path]) -> RunMetrics:
    cfg, name, seed, out_dir = payload
    return run_single(cfg, name, seed, out_dir)


def _run_tasks(tasks: Sequence[Tuple[ExperimentConfig, str, int, Path]], jobs: int, progress: bool) -> List[RunMetrics]:
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(tqdm(pool.map(_compare_task, tasks), total=len(tasks), desc="runs", disable=not progress))
    return [_compare_task(task) for task in tqdm(tasks, desc="runs", disable=not progress)]


def run_compare(cfg: ExperimentConfig, out_dir: Optional[Path] = None, jobs: int = 1, progress: bool = False) -> List[Dict[str, object]]:
    """Run every configured controller on every seed and write the summary table."""

    out_dir = Path(out_dir or cfg.output_dir)
    runs_dir = out_dir / "runs"
    tasks = [(cfg, name, seed, runs_dir) for name in cfg.controllers for seed in cfg.seeds]
    results = _run_tasks(tasks, jobs, progress)

    hashes = {}
    for metrics in results:
        hashes.setdefault(metrics.seed, set()).add(metrics.realization)
    for seed, seen in hashes.items():
        if len(seen) != 1:
            raise RuntimeError(f"Controllers saw different realisations on seed {seed}")

    num_modes = build_topology(cfg).num_modes
    rows = summary_rows(results, cfg.controllers, num_modes)
    columns = ["controller", "runs"] + [f"{metric}_{stat}" for metric in SUMMARY_METRICS for stat in ("mean", "sd")]
    columns += ["effort_ratio_vs_robust", "peak_ratio_vs_robust", "synth_bound_ok"]
    path = write_csv(out_dir / "summary.csv", columns, rows)
    write_csv(out_dir / "runs.csv", list(RunMetrics.__dataclass_fields__), [_flatten(m.to_dict()) for m in results])
    LOGGER.info("Summary written to %s", path)
    return rows


def _flatten(values: Dict[str, object]) -> Dict[str, object]:
    return {key: "" if value is None else (_fmt(value) if isinstance(value, float) else value) for key, value in values.items()}


def summary_rows(results: Sequence[RunMetrics], controllers: Sequence[str], num_modes: int) -> List[Dict[str, object]]:
    grouped: Dict[str, List[RunMetrics]] = {name: [] for name in controllers}
    for metrics in results:
        grouped[metrics.controller].append(metrics)

    means: Dict[str, Dict[str, Optional[float]]] = {}
    rows = []
    for name in controllers:
        runs = sorted(grouped[name], key=lambda m: m.seed)
        row: Dict[str, object] = {"controller": name, "runs": len(runs)}
        means[name] = {}
        for metric in SUMMARY_METRICS:
            values = [getattr(m, metric) for m in runs if getattr(m, metric) is not None]
            if not values:
                row[f"{metric}_mean"] = row[f"{metric}_sd"] = ""
                means[name][metric] = None
                continue
            array = np.asarray(values, dtype=float)
            means[name][metric] = float(array.mean())
            row[f"{metric}_mean"] = _fmt(array.mean())
            row[f"{metric}_sd"] = _fmt(array.std(ddof=1) if array.size > 1 else 0.0)
        row["synth_bound_ok"] = int(all(m.synth_bound_ok(num_modes) for m in runs)) if name == "plp" else ""
        rows.append(row)

    robust = means.get("robust-sls")
    for row in rows:
        for metric, column in (("effort", "effort_ratio_vs_robust"), ("peak_state", "peak_ratio_vs_robust")):
            mine = means[row["controller"]][metric]
            reference = robust[metric] if robust else None
            row[column] = _fmt(mine / reference) if reference and mine is not None else ""
    return rows


# -- tradeoff sweep --------------------------------------------------------
SWEEP_COLUMNS = [
    "nodes",
    "pattern_length",
    "num_patterns",
    "runs",
    "prediction_hit_rate_mean",
    "predict_ms_mean",
    "synth_ms_mean",
    "synth_count_mean",
    "effort_mean",
    "peak_state_mean",
]


def sweep_patterns(num_modes: int, size: int, length: int = 2) -> List[Tuple[int, ...]]:
    """The first ``size`` mode strings of ``length`` that contain a switch, in lexicographic order."""

    if num_modes < 2:
        raise ConfigError("Pattern sweeps need at least two modes")
    if length < 2:
        raise ConfigError("Swept patterns need at least two modes each")
    candidates = [pattern for pattern in product(range(num_modes), repeat=length) if len(set(pattern)) > 1]
    if not 1 <= size <= len(candidates):
        raise ConfigError(f"Pattern collection size must lie in 1..{len(candidates)}, got {size}")
    return candidates[:size]


def sweep_config(cfg: ExperimentConfig, nodes: int, size: int, length: int = 2) -> ExperimentConfig:
    """PLP-only variant of ``cfg`` at one network scale and pattern-collection size.

    Scales other than the configured one use the random network generator with
    the configured number of topologies.
    """

    num_modes = build_topology(cfg).num_modes
    network = cfg.network
    if nodes != network.nodes:
        generator = dict(network.generator or {})
        generator.update(kind="random", num_modes=num_modes)
        network = NetworkSpec(nodes=nodes, generator=generator, coupling_gain=network.coupling_gain)
    variant = replace(
        cfg,
        network=network,
        patterns=[list(pattern) for pattern in sweep_patterns(num_modes, size, length)],
        controllers=["plp"],
    )
    validate_config(variant)
    return variant


def run_sweep(
    cfg: ExperimentConfig,
    nodes: Sequence[int],
    sizes: Sequence[int],
    length: int = 2,
    out_dir: Optional[Path] = None,
    jobs: int = 1,
    progress: bool = False,
) -> List[Dict[str, object]]:
    """Prediction accuracy and runtime of PLP against pattern-collection size and network scale."""

    out_dir = Path(out_dir or cfg.output_dir)
    points = [(scale, size) for scale in nodes for size in sizes]
    tasks = []
    for scale, size in points:
        variant = sweep_config(cfg, scale, size, length)
        run_dir = out_dir / "sweep" / f"nodes{scale}_patterns{size}"
        tasks.extend((variant, "plp", seed, run_dir) for seed in cfg.seeds)
    results = _run_tasks(tasks, jobs, progress)

    rows = []
    per_point = len(cfg.seeds)
    for index, (scale, size) in enumerate(points):
        runs = results[index * per_point : (index + 1) * per_point]
        row: Dict[str, object] = {"nodes": scale, "pattern_length": length, "num_patterns": size, "runs": len(runs)}
        for metric in ("prediction_hit_rate", "predict_ms", "synth_ms", "synth_count", "effort", "peak_state"):
            values = [getattr(m, metric) for m in runs if getattr(m, metric) is not None]
            row[f"{metric}_mean"] = _fmt(np.mean(values)) if values else ""
        rows.append(row)
        LOGGER.info("Sweep point nodes=%d patterns=%d done", scale, size)

    path = write_csv(out_dir / "sweep.csv", SWEEP_COLUMNS, rows)
    LOGGER.info("Sweep written to %s", path)
    return rows


# -- validation reports ----------------------------------------------------
PATTERN_COLUMNS = ["quantity", "index", "closed_form", "oracle", "oracle_se", "within_3se"]


def pattern_stats_cmd(
    chain: ModeChain,
    psi: PatternCollection,
    phi0: Optional[int] = None,
    trials: int = config.DEFAULT_ORACLE_TRIALS,
    seed: int = 0,
) -> List[Dict[str, object]]:
    """Closed-form E[tau] and q next to the Monte Carlo oracle; oracle columns stay empty for ``trials=0``."""

    start = chain.initial_mode if phi0 is None else phi0
    stats = occurrence_stats(build_pattern_problem(psi, start, chain.tpm))
    oracle = monte_carlo_oracle(chain, psi, start, trials=trials, seed=seed) if trials > 0 else None

    def verdict(closed: float, mean: float, se: float) -> object:
        if not np.isfinite(se):
            return ""
        return int(abs(closed - mean) <= 3.0 * se + config.RESIDUAL_TOL)

    rows: List[Dict[str, object]] = []
    row: Dict[str, object] = {"quantity": "expected_tau", "index": "", "closed_form": _fmt(stats.expected_tau)}
    if oracle is not None:
        row.update(oracle=_fmt(oracle.mean_tau), oracle_se=_fmt(oracle.tau_se), within_3se=verdict(stats.expected_tau, oracle.mean_tau, oracle.tau_se))
    rows.append(row)
    for k in range(psi.size):
        row = {"quantity": "q", "index": k, "closed_form": _fmt(stats.q[k])}
        if oracle is not None:
            row.update(oracle=_fmt(oracle.q[k]), oracle_se=_fmt(oracle.q_se[k]), within_3se=verdict(stats.q[k], oracle.q[k], oracle.q_se[k]))
        rows.append(row)
    return rows


SLS_COLUMNS = ["source", "mode", "achievability_residual", "impulse_deviation", "random_deviation", "post_horizon_decay", "stabilized"]


def sls_check(cfg: ExperimentConfig, seed: int = 0) -> List[Dict[str, object]]:
    """Per-mode residuals and closed-loop reports for the model-based and robust responses."""

    experiment = build_experiment(cfg)
    system = experiment.system
    Q, R = weights(cfg, system)
    rows: List[Dict[str, object]] = []
    for mode in range(system.num_modes):
        x_support, u_support = experiment.supports.get(mode, (None, None))
        problem = SlsProblem(A=system.A(mode), B=system.B(mode), horizon=cfg.sls.horizon, Q=Q, R=R, x_support=x_support, u_support=u_support)
        response = synthesize(problem)
        rows.append(_sls_row("model-based", mode, response, system, seed))

    robust = RobustSlsController(system, horizon=cfg.sls.horizon, Q=Q, R=R, supports=experiment.supports, timing="off")
    for mode in range(system.num_modes):
        rows.append(_sls_row("robust", mode, robust.response, system, seed))
    return rows


def _sls_row(source: str, mode: int, response, system: JumpLinearSystem, seed: int) -> Dict[str, object]:
    report = validate_closed_loop(response, system.A(mode), system.B(mode), seed=seed)
    return {
        "source": source,
        "mode": mode,
        "achievability_residual": _fmt(validate_achievability(response, system.A(mode), system.B(mode))),
        "impulse_deviation": _fmt(report.impulse_deviation),
        "random_deviation": _fmt(report.random_deviation),
        "post_horizon_decay": _fmt(report.post_horizon_decay),
        "stabilized": int(report.stabilized),
    }
