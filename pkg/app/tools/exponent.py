import math
from typing import Optional

from app.config import config
from app.models.enums import ExponentBranch, Regime, RegimeCase
from app.models.schemas import ExponentResult, RegimeReport
from app.utils.errors import RejectedInputError
from app.utils.logger import logger


def alpha_star() -> float:
    """Root of 1 + 2/(1 + a) = 2/(1 + 2a) in (-1/2, 1/2): (-5 + sqrt(17))/4."""
    return (-5.0 + math.sqrt(17.0)) / 4.0


def alpha_star_residual(a: Optional[float] = None) -> float:
    a = alpha_star() if a is None else a
    return abs(1.0 + 2.0 / (1.0 + a) - 2.0 / (1.0 + 2.0 * a))


def fujita_exponent(dimension: int = 1) -> float:
    """Classical threshold 1 + 2/N for V = 0."""
    if dimension < 1:
        raise RejectedInputError("dimension must be a positive integer")
    return 1.0 + 2.0 / dimension


def critical_exponent(alpha: float, m: float) -> ExponentResult:
    if not math.isfinite(alpha):
        raise RejectedInputError(f"alpha must be finite, got {alpha}")
    if m < 0 or not math.isfinite(m):
        raise RejectedInputError(f"m must be a nonnegative number, got {m}")

    a_star = alpha_star()
    if alpha > 0.5:
        p_star = 1.0 + max(2.0 - m, 0.0) / (1.0 + alpha)
        result = ExponentResult(alpha=alpha, m=m, p_star=p_star, branch=ExponentBranch.SUBCRITICAL_ALPHA)
    elif alpha >= a_star:
        candidates = [2.0 / (1.0 + 2.0 * alpha), 1.0 + (2.0 - m) / (1.0 + alpha)]
        result = ExponentResult(
            alpha=alpha, m=m, p_star=max(candidates),
            branch=ExponentBranch.MIDDLE_BAND, candidates=candidates,
        )
    elif alpha > -0.5:
        result = ExponentResult(
            alpha=alpha, m=m, p_star=2.0 / (1.0 + 2.0 * alpha), branch=ExponentBranch.LOW_BAND,
        )
    else:
        result = ExponentResult(alpha=alpha, m=m, p_star=math.inf, branch=ExponentBranch.INFINITE)

    logger.debug(f"p_star({alpha}, {m}) = {result.p_star} on branch {result.branch.value}")
    return result


def _is_critical(p: float, p_star: float) -> bool:
    return math.isfinite(p_star) and abs(p - p_star) <= config.CRITICAL_TOL * max(1.0, abs(p_star))


def regime_classify(alpha: float, m: float, p: float) -> Regime:
    if not p > 1:
        raise RejectedInputError(f"p must exceed 1, got {p}")
    p_star = critical_exponent(alpha, m).p_star
    if _is_critical(p, p_star):
        return Regime.CRITICAL_LINE
    return Regime.BLOWUP if p < p_star else Regime.GLOBAL


def admissible_delta(alpha: float, m: float, p: float) -> Optional[float]:
    """Largest decay slack usable by the supersolution construction for alpha < 0.

    delta must lie in (0, (1+2alpha)/2) and below both
    ((1+alpha)(p-1)/2 + m/2 - 1)/(p+1) and ((1+2alpha)p/2 - 1)/(p+1).
    Returns None when no positive delta exists.
    """
    if not -0.5 < alpha < 0.0:
        return None
    bound = min(
        0.5 * (1.0 + 2.0 * alpha),
        (0.5 * (1.0 + alpha) * (p - 1.0) + 0.5 * m - 1.0) / (p + 1.0),
        (0.5 * (1.0 + 2.0 * alpha) * p - 1.0) / (p + 1.0),
    )
    return bound if bound > 0 else None


def proof_case(alpha: float, m: float, p: float) -> RegimeCase:
    """Which mechanism governs (alpha, m, p)."""
    regime = regime_classify(alpha, m, p)
    if regime == Regime.GLOBAL:
        if alpha > 0.5:
            return RegimeCase.HARDY_GLOBAL
        if alpha >= 0.0:
            return RegimeCase.DECAY_ESTIMATE_GLOBAL
        return RegimeCase.SUPERSOLUTION_GLOBAL
    if alpha <= -0.5:
        return RegimeCase.INFINITE_EXPONENT_BLOWUP
    if alpha >= alpha_star() and p <= 1.0 + max(2.0 - m, 0.0) / (1.0 + alpha) * (1.0 + config.CRITICAL_TOL):
        return RegimeCase.TEST_FUNCTION_BLOWUP
    if _is_critical(p, 2.0 / (1.0 + 2.0 * alpha)):
        return RegimeCase.CRITICAL_LOG_BLOWUP
    return RegimeCase.COMPARISON_BLOWUP


def regime_report(alpha: float, m: float, p: float) -> RegimeReport:
    p_star = critical_exponent(alpha, m).p_star
    return RegimeReport(
        alpha=alpha, m=m, p=p, p_star=p_star,
        regime=regime_classify(alpha, m, p),
        case=proof_case(alpha, m, p),
        admissible_delta=admissible_delta(alpha, m, p),
    )


def predicted_decay_slopes(alpha: float) -> dict:
    """Small-data decay exponents of |u|_inf and |u/psi|_inf."""
    return {"linf": -0.5 * (1.0 + alpha), "linf_psi_inv": -0.5 * (1.0 + 2.0 * alpha)}
