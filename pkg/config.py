import os
import warnings
from dotenv import load_dotenv

# Load environment variables before reading config values.
load_dotenv()

# Loss budget (per-node insertion losses are attached to nodes, not links)
DEFAULT_FIBER_ATTENUATION_DB_PER_KM = 0.2
DEFAULT_SOURCE_LOSS_DB = 4.0
DEFAULT_INTERMEDIATE_LOSS_DB = 8.0
DEFAULT_MEMORY_LOSS_DB = 4.0

# Group velocity in silica (n ~ 1.5), km/s
DEFAULT_SIGNAL_SPEED_KM_PER_S = 2.0e5

# Source
FULL_SCALE_SOURCE_RATE_HZ = 1.3e6

# Fidelity threshold for QKD
QKD_FIDELITY_THRESHOLD = 0.81

# Classical latency defaults. Sigma is a fitted-shape default, not a measured value.
DEFAULT_LATENCY_MEDIAN_S = 0.010
DEFAULT_LATENCY_SIGMA = 0.35

# Numerical tolerances
HERMITICITY_TOLERANCE = 1e-12
TRACE_TOLERANCE = 1e-9
POSITIVITY_TOLERANCE = -1e-10
IMAGINARY_TOLERANCE = 1e-12
INTEGRATION_STEPS_PER_LIFETIME = 1000
RICHARDSON_TOLERANCE = 1e-11
MAX_INTEGRATION_STEPS = 10_000_000
BISECTION_RELATIVE_TOLERANCE = 1e-9

# Protocol bookkeeping
DEFAULT_BUFFER_CAPACITY = 1_000_000
DEFAULT_PRUNE_HORIZON_FACTOR = 10.0
PRUNE_EVERY_N_EVENTS = 50_000
LATE_MESSAGE_WARNING_THRESHOLD = 1000

# Metrics
DEFAULT_HISTOGRAM_BIN_WIDTH = 0.01

# Trajectory oracle batch size (sub-seeds are spawned per batch)
TRAJECTORY_BATCH_SIZE = 2048

# Output / logging (the only values read from the environment)
OUTPUT_DIR = os.getenv('PAIRVERIFY_OUTPUT_DIR', 'results')
LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO').upper()


# Validation
def _validate_config():
    """Validate configuration and warn about issues"""
    if not OUTPUT_DIR:
        warnings.warn("PAIRVERIFY_OUTPUT_DIR is empty; reports will be written to the working directory")

    if LOG_LEVEL not in ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'):
        warnings.warn(f"LOG_LEVEL '{LOG_LEVEL}' is not a standard logging level")

    if not 0.5 < QKD_FIDELITY_THRESHOLD <= 1:
        warnings.warn("QKD_FIDELITY_THRESHOLD should lie in (0.5, 1]")

    if DEFAULT_LATENCY_SIGMA <= 0:
        warnings.warn("DEFAULT_LATENCY_SIGMA should be positive")

    if DEFAULT_HISTOGRAM_BIN_WIDTH <= 0 or DEFAULT_HISTOGRAM_BIN_WIDTH > 1:
        warnings.warn("DEFAULT_HISTOGRAM_BIN_WIDTH should be in (0, 1]")


# Perform validation
_validate_config()
