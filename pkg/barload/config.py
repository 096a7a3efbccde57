"""Application-wide configuration."""

from __future__ import annotations

from pathlib import Path

BASE_DIR = Path(__file__).resolve().parent.parent

# Directories
OUTPUT_DIR = BASE_DIR / "runs"

# Formats
CSV_SCHEMA = "barload-csv"
CSV_SCHEMA_VERSION = 1
CACHE_FORMAT_VERSION = 1
UNITS_NOTE = "hbar=1; energies in units of omega; temperatures as k_B T/omega; times in 1/omega"

# Budgets
TENSOR_BUDGET_GIB = 2.0
ORACLE_BASIS_CAP = 5000

# Numerics defaults
QUADRATURE_ORDER = 16
PV_GRID = 200
PV_KAPPA_MAX = 4.0
SAMPLES_PER_STEP = 64
VALIDITY_THRESHOLD = 0.1
BAR_MARGIN = 10.0
BRANCHING_CUTOFF = 1e-3

# Production-size bases are accepted but take hours
LONG_RUNNING_COMPOSITE_DIM = 2000
