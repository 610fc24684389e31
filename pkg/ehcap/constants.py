"""
Constants used throughout the application
"""

import logging
import math

# Application information
APP_NAME = "ehcap"
APP_VERSION = "0.1.0"

# Logging configuration
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
LOG_LEVEL = logging.INFO

# Units
NATS_PER_BIT = math.log(2.0)

# Energy grid
MAX_GRID_STATES = 200  # (gamma + ymax) / quantum
DEFAULT_TRUNCATE_QUANTILE = 0.999

# Probability bookkeeping
PMF_TOL = 1e-12
PEAK_TOL = 1e-12
ENERGY_GRID_TOL = 1e-9

# Markov chain solver
BALANCE_TOL = 1e-10
MAX_POWER_ITERATIONS = 1_000_000

# Mutual information quadrature
QUAD_RADIUS = 8.0  # noise standard deviations beyond the extreme amplitudes
QUAD_STEPS_PER_SIGMA = 50
MI_TOL = 1e-6

# Input optimization
BA_GAP_TOL = 1e-6
BA_MAX_ITERATIONS = 200_000
DEFAULT_GRID_POINTS = 32  # 2 * 32 + 1 = 65 symmetric amplitudes
GRADIENT_STEP = 0.5

# Policy kinds
POLICY_DETERMINISTIC = "deterministic-spend"
POLICY_RANDOMIZED = "randomized"
POLICY_GREEDY = "greedy"
POLICY_TRUNCATED_GAUSSIAN = "truncated-gaussian"
POLICY_ZERO = "zero"

# Policy search
SPEND_OPTIONS = ["antipodal", "optimized", "both"]
MIXTURE_WEIGHTS = (0.25, 0.5)
ACCEPT_TOL = 1e-12
SWEEP_TOL = 1e-8  # stop once a full sweep gains less than this
DEFAULT_RESTARTS = 20
DEFAULT_SWEEPS = 200
ENUMERATION_BUDGET = 1_000_000
WARM_START_BUDGET = 2000
TIE_TOL = 1e-9
ORDERING_TOL = 1e-4
CONVERSE_TOL = 1e-6

# Truncated Gaussian simulation
DEFAULT_EPSILON_FRACTION = 0.05
DEFAULT_BURN_IN = 10_000
DEFAULT_SAMPLES = 1_000_000
DEFAULT_BATCHES = 50
DEFAULT_ATOM_GRID = 64
MEMO_FRACTION = 0.25  # state rounding for memoized per-state rates, in quanta
DKW_ALPHA = 0.01

# Shannon strategies
STRATEGY_BUDGET = 100_000
STRATEGY_GAP_TOL = 1e-5
MAX_STRATEGY_ORDER = 2
NODE_STEP = {1: 0.25, 2: 0.5}  # integration node spacing in noise standard deviations

# Experiments
EXPERIMENT_CAPACITY_SWEEP = "capacity-sweep"
EXPERIMENT_TG_CONVERGENCE = "tg-convergence"
EXPERIMENT_GREEDY_COMPARE = "greedy-compare"
EXPERIMENT_NO_BSIR = "no-bsir"

SUPPORTED_EXPERIMENTS = [
    EXPERIMENT_CAPACITY_SWEEP,
    EXPERIMENT_TG_CONVERGENCE,
    EXPERIMENT_GREEDY_COMPARE,
    EXPERIMENT_NO_BSIR,
]

# Harvest kinds
HARVEST_POINT = "point"
HARVEST_UNIFORM = "uniform"
HARVEST_UNIFORM_CONTINUOUS = "uniform-continuous"
HARVEST_POISSON = "poisson"
HARVEST_PMF = "pmf"

SUPPORTED_HARVESTS = [
    HARVEST_POINT,
    HARVEST_UNIFORM,
    HARVEST_UNIFORM_CONTINUOUS,
    HARVEST_POISSON,
    HARVEST_PMF,
]

# Long names accepted in harvest files and on the command line
HARVEST_ALIASES = {
    "uniform-discrete": HARVEST_UNIFORM,
    "explicit-pmf": HARVEST_PMF,
}

# Output
CSV_SIGNIFICANT_DIGITS = 9
OUTPUT_FORMATS = ["csv", "json"]

# Exit codes
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INVARIANT = 2
EXIT_BUDGET = 3
EXIT_BAD_CONFIG = 4
