from enum import Enum


class ExponentBranch(str, Enum):
    SUBCRITICAL_ALPHA = "subcritical_alpha"  # alpha > 1/2
    MIDDLE_BAND = "middle_band"              # alpha_* <= alpha <= 1/2
    LOW_BAND = "low_band"                    # -1/2 < alpha < alpha_*
    INFINITE = "infinite"                    # alpha <= -1/2


class Regime(str, Enum):
    BLOWUP = "blowup_regime"
    GLOBAL = "global_regime"
    CRITICAL_LINE = "critical_line"


class RegimeCase(str, Enum):
    """Mechanism behind the predicted behaviour of a (alpha, m, p) triple."""
    TEST_FUNCTION_BLOWUP = "test_function_blowup"        # alpha >= alpha_*, p <= 1 + [2-m]_+/(1+alpha)
    COMPARISON_BLOWUP = "comparison_blowup"              # -1/2 < alpha < 1/2, p < 2/(1+2alpha)
    INFINITE_EXPONENT_BLOWUP = "infinite_exponent_blowup"  # alpha <= -1/2
    CRITICAL_LOG_BLOWUP = "critical_log_blowup"          # -1/2 < alpha < 1/2, p = 2/(1+2alpha)
    HARDY_GLOBAL = "hardy_global"                        # alpha > 1/2, p > p_star
    DECAY_ESTIMATE_GLOBAL = "decay_estimate_global"      # 0 <= alpha <= 1/2, p > p_star
    SUPERSOLUTION_GLOBAL = "supersolution_global"        # alpha < 0, p > p_star


class OutcomeKind(str, Enum):
    BLOWUP = "blowup"
    GLOBAL_DECAY = "global_decay"
    INCONCLUSIVE = "inconclusive"


class InconclusiveReason(str, Enum):
    STIFFNESS = "stiffness"
    DOMAIN = "domain"
    NOT_DECAYING = "not_decaying"
    ERROR = "error"


class NormKind(str, Enum):
    L1_PSI = "l1_psi"              # |psi f|_1
    LINF_PSI_INV = "linf_psi_inv"  # |f/psi|_inf
    LINF = "linf"                  # |f|_inf
    L2 = "l2"                      # |f|_2
    ENERGY = "energy"              # |L^{1/2} f|_2


class SourceKind(str, Enum):
    FULL_WEIGHT = "full_weight"
    LOCALIZED = "localized"


class FamilyKind(str, Enum):
    GAUSSIANS = "gaussians"
    BUMPS = "bumps"
    PSI_MODULATED = "psi_modulated"


class InequalityKind(str, Enum):
    NASH = "nash"
    HARDY_1 = "hardy_1"
    HARDY_2 = "hardy_2"
    HARDY_PROOF = "hardy_proof"
    WNASH_1 = "wnash_1"
    WNASH_2 = "wnash_2"


class EmitFormat(str, Enum):
    CSV = "csv"
    JSON = "json"
    SVG = "svg"
