"""
Configuration settings for the ply partitioner
"""

import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables from .env file if it exists (for local development)
load_dotenv()

# Base paths
BASE_DIR = Path(os.path.dirname(os.path.abspath(__file__)))
CACHE_DIR = BASE_DIR / "cache"

def get_config(key, default=None):
    """Get configuration from environment variables"""
    return os.environ.get(key, default)

def get_int_config(key, default):
    """Get an integer setting, falling back to the default on bad input"""
    value = get_config(key)
    if value is None or str(value).strip() == "":
        return default
    try:
        return int(value)
    except ValueError:
        print(f"Warning: ignoring non-integer {key}={value!r}")
        return default

# Parallelism cap for sweep points and bench trials
THREADS = max(1, get_int_config("PLYPART_THREADS", 1))

# Logging level installed by the command line
LOG_LEVEL = get_config("PLYPART_LOG_LEVEL", "WARNING")

# Where greedy/beam divergences found by the bench are written
COUNTEREXAMPLE_DIR = Path(get_config("PLYPART_COUNTEREXAMPLE_DIR", str(CACHE_DIR / "counterexamples")))

# Simplex iteration cap
LP_MAX_ITER = get_int_config("PLYPART_LP_MAX_ITER", 5000)

# Numeric tolerances
PARALLEL_ANGLE_TOL = 1e-9   # radians
PARALLEL_DET_TOL = 1e-10    # |a_i b_j - a_j b_i|
ZERO_PROJ_TOL = 1e-9        # edge projection onto the transverse axis
LP_FEAS_TOL = 1e-9          # phase-1 objective above this means infeasible
ROW_TOL = 1e-8              # allowed violation when re-checking rows
AREA_TOL = 1e-10            # triple overlap area treated as zero
STAYOUT_MARGIN = 1e-9       # extra clearance added to dilated stay-out intervals

# Result file schema
FORMAT_VERSION = 1
