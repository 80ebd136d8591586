import numpy as np
from typing import Tuple, Sequence

from app.config import config
from app.utils.errors import RejectedInputError


def window_mask(times: np.ndarray, window: Tuple[float, float]) -> np.ndarray:
    lo, hi = window
    # small relative slack so snapshot times landing on the window edges are kept
    return (times >= lo * (1 - 1e-12)) & (times <= hi * (1 + 1e-12)) & (times > 0)


def linear_fit(x: Sequence[float], y: Sequence[float]) -> Tuple[float, float]:
    """Least-squares line; returns (slope, intercept)."""
    slope, intercept = np.polyfit(np.asarray(x, dtype=float), np.asarray(y, dtype=float), 1)
    return float(slope), float(intercept)


def loglog_slope(times: np.ndarray, values: np.ndarray, min_samples: int = config.MIN_FIT_SAMPLES) -> float:
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.size < min_samples:
        raise RejectedInputError(f"need at least {min_samples} samples for a fit, got {times.size}")
    if not (np.all(np.isfinite(values)) and np.all(times > 0) and np.all(values > 0)):
        raise RejectedInputError("log-log fits need positive times and values")
    return linear_fit(np.log(times), np.log(values))[0]


def final_decade(t_end: float) -> Tuple[float, float]:
    return (t_end / 10.0, t_end)
