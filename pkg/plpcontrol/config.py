"""Application configuration constants."""
from __future__ import annotations

from pathlib import Path

# Default directories
BASE_DIR = Path(__file__).resolve().parent
DATA_DIR = BASE_DIR.parent / "data"
OUTPUT_DIR = DATA_DIR / "outputs"
RUNS_DIR = OUTPUT_DIR / "runs"

# Memory table persistence
DEFAULT_MEMORY_DB = DATA_DIR / "memory_table.sqlite3"

# Numerical tolerances
STOCHASTIC_TOL = 1e-12
RESIDUAL_TOL = 1e-9
ACHIEVABILITY_TOL = 1e-8
CONDITION_LIMIT = 1e12
PROBABILITY_CLAMP = 1e-9
RANK_TOL = 1e-10
DIVERGENCE_LIMIT = 1e12

# Occurrence windows start at the first mode after the current one.
WINDOW_START = 1

# Pattern engine defaults
DEFAULT_PRIOR_WEIGHT = 1.0
DEFAULT_ORACLE_TRIALS = 100_000
ORACLE_MAX_STEPS = 1_000_000

# Synthesis defaults
DEFAULT_HORIZON = 5
DEFAULT_HOPS = 1
ROBUST_WEIGHT = 1e4
# Largest support violation, relative to the column scale, tolerated on noisy data
DATA_LOCALITY_SLACK = 1e-2

# Simulation defaults
DEFAULT_DWELL = 1
DEFAULT_COUPLING = 0.2
