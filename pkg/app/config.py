import os
from dotenv import load_dotenv
from typing import Optional

# Load environment variables
load_dotenv()


def _env_float(name: str, default: float) -> float:
    value = os.getenv(name)
    return float(value) if value not in (None, "") else default


def _env_int(name: str, default: Optional[int]) -> Optional[int]:
    value = os.getenv(name)
    return int(value) if value not in (None, "") else default


def _env_bool(name: str, default: bool) -> bool:
    value = os.getenv(name)
    if value in (None, ""):
        return default
    return value.strip().lower() in ("1", "true", "yes", "on")


class Config:
    # Environment detection
    ENVIRONMENT = os.getenv('ENVIRONMENT', 'development')

    # Logging
    LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO' if ENVIRONMENT == 'production' else 'DEBUG')
    LOG_FORMAT = os.getenv('LOG_FORMAT', 'text')  # text | json
    LOG_FILE_ENABLED = _env_bool('LOG_FILE_ENABLED', False)
    LOG_DIR = os.getenv('LOG_DIR', 'logs')

    # Spatial grid
    GRID_XMAX_FLOOR = _env_float('GRID_XMAX_FLOOR', 200.0)  # xmax = max(floor, 20*sqrt(t_end))
    GRID_SPACING = _env_float('GRID_SPACING', 0.1)  # h at default resolution
    GRID_N: Optional[int] = _env_int('GRID_N', None)  # overrides the spacing when set

    # Time stepping
    T_END = _env_float('T_END', 1000.0)
    T_END_CAP = _env_float('T_END_CAP', 1.0e4)  # horizon for non-decaying runs below p_star
    LINEAR_DT_MAX = _env_float('LINEAR_DT_MAX', 0.01)  # Crank-Nicolson dt = min(h^2/2, this)
    DT_INIT = _env_float('DT_INIT', 1e-3)
    DT_MIN = _env_float('DT_MIN', 1e-12)
    DT_MAX = _env_float('DT_MAX', 1e3)
    STEP_REL_TOL = _env_float('STEP_REL_TOL', 1e-5)  # step doubling target
    DT_CAP_FACTOR = _env_float('DT_CAP_FACTOR', 0.2)  # dt <= factor * |u|_inf^(1-p)
    MAX_STEPS = _env_int('MAX_STEPS', 2_000_000)

    # Snapshots
    SNAPSHOT_T0 = _env_float('SNAPSHOT_T0', 0.1)
    SNAPSHOT_RATIO = _env_float('SNAPSHOT_RATIO', 1.2)

    # Outcome classification
    BLOWUP_THRESHOLD = _env_float('BLOWUP_THRESHOLD', 1e8)
    LEAK_TOL = _env_float('LEAK_TOL', 1e-8)
    DECAY_SLOPE_THRESHOLD = _env_float('DECAY_SLOPE_THRESHOLD', -0.05)
    SOURCE_RATE_SLOPE = _env_float('SOURCE_RATE_SLOPE', -1.1)  # max a u^(p-1) must decay faster than 1/t
    WINDOW_FRACTION = _env_float('WINDOW_FRACTION', 0.1)  # final decade of log-time

    # Tolerances
    CRITICAL_TOL = 1e-12  # p == p_star detection
    QUAD_ABS_TOL = 1e-10
    QUAD_REL_TOL = 1e-12
    INVERSE_TOL = 1e-9
    BOUNDARY_DECAY_TOL = 1e-12
    FORM_AGREEMENT_TOL = 1e-5
    CONTRACTION_SLACK = 1e-10
    POSITIVITY_SLACK = 1e-12

    # Linear semigroup checks
    KERNEL_DELTA = _env_float('KERNEL_DELTA', 0.05)
    KERNEL_CORE_RADIUS = _env_float('KERNEL_CORE_RADIUS', 1.5)  # core |x| <= radius*sqrt(t)
    MIN_FIT_SAMPLES = 5
    LOG_GROWTH_MIN_SLOPE = 0.01
    LOG_GROWTH_STABILITY = 0.75

    # Sweeps
    OUTPUT_DIR = os.getenv('OUTPUT_DIR', 'results')
    SWEEP_JOBS = _env_int('SWEEP_JOBS', 1)
    CRITICAL_BAND = _env_float('CRITICAL_BAND', 0.25)  # |p - p_star| within which t_end is extended
    CRITICAL_T_END_FACTOR = _env_float('CRITICAL_T_END_FACTOR', 10.0)

    # HTTP surface
    API_TIMEOUT = _env_float('API_TIMEOUT', 120.0)
    REQUEST_CLEANUP_DELAY = 300  # seconds a finished sweep job stays queryable

    @classmethod
    def validate(cls) -> None:
        """Validate configuration consistency."""
        if cls.GRID_SPACING <= 0:
            raise ValueError("GRID_SPACING must be positive")
        if cls.GRID_N is not None and (cls.GRID_N < 5 or cls.GRID_N % 2 == 0):
            raise ValueError("GRID_N must be an odd integer >= 5")
        if not cls.DT_MIN < cls.DT_INIT:
            raise ValueError("DT_MIN must be smaller than DT_INIT")
        if cls.SNAPSHOT_RATIO <= 1.0:
            raise ValueError("SNAPSHOT_RATIO must exceed 1")
        if not 0.0 < cls.WINDOW_FRACTION < 1.0:
            raise ValueError("WINDOW_FRACTION must lie in (0, 1)")
        if cls.LOG_FORMAT not in ('text', 'json'):
            raise ValueError("LOG_FORMAT must be 'text' or 'json'")


config = Config()
