import math
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from typing import Optional, List, Dict, Any, Tuple
from .enums import (
    ExponentBranch,
    Regime,
    RegimeCase,
    OutcomeKind,
    InconclusiveReason,
    NormKind,
    SourceKind,
    FamilyKind,
    InequalityKind,
)
from app.config import config


class ExponentResult(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan='constants')

    alpha: float
    m: float
    p_star: float
    branch: ExponentBranch
    candidates: List[float] = []


class RegimeReport(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan='constants')

    alpha: float
    m: float
    p: float
    p_star: float
    regime: Regime
    case: RegimeCase
    admissible_delta: Optional[float] = None


class WeightedNorms(BaseModel):
    l1_psi: float
    linf_psi_inv: float
    linf: float
    l2: float


class QuadraticFormReport(BaseModel):
    direct: float
    ground_state: float
    rel_diff: float
    agrees: bool


class SimConfig(BaseModel):
    """Discretization, time-stepping, blow-up and classification parameters."""

    xmax: Optional[float] = None
    xmax_floor: float = config.GRID_XMAX_FLOOR
    h: float = config.GRID_SPACING
    n: Optional[int] = config.GRID_N
    t_end: float = config.T_END
    t_end_cap: Optional[float] = config.T_END_CAP  # None keeps every run at t_end
    linear_dt_max: float = config.LINEAR_DT_MAX
    dt_init: float = config.DT_INIT
    dt_min: float = config.DT_MIN
    dt_max: float = config.DT_MAX
    step_rel_tol: float = config.STEP_REL_TOL
    dt_cap_factor: float = config.DT_CAP_FACTOR
    max_steps: int = config.MAX_STEPS
    snapshot_t0: float = config.SNAPSHOT_T0
    snapshot_ratio: float = config.SNAPSHOT_RATIO
    blowup_threshold: float = config.BLOWUP_THRESHOLD
    leak_tol: float = config.LEAK_TOL
    decay_slope_threshold: float = config.DECAY_SLOPE_THRESHOLD
    source_rate_slope: float = config.SOURCE_RATE_SLOPE
    window_fraction: float = config.WINDOW_FRACTION

    @classmethod
    def from_config(cls, **overrides: Any) -> "SimConfig":
        return cls(**overrides)

    @field_validator('h', 't_end', 'linear_dt_max', 'dt_init', 'dt_min', 'dt_max',
                     'step_rel_tol', 'dt_cap_factor', 'snapshot_t0', 'blowup_threshold')
    @classmethod
    def _positive(cls, value: float) -> float:
        if not (value > 0 and math.isfinite(value)):
            raise ValueError("must be a positive finite number")
        return value

    @field_validator('n')
    @classmethod
    def _odd(cls, value: Optional[int]) -> Optional[int]:
        if value is not None and (value < 5 or value % 2 == 0):
            raise ValueError("n must be an odd integer >= 5 so that x = 0 is a node")
        return value

    @model_validator(mode='after')
    def _consistent(self) -> "SimConfig":
        if not self.dt_min < self.dt_init:
            raise ValueError("dt_min must be smaller than dt_init")
        if self.snapshot_ratio <= 1.0:
            raise ValueError("snapshot_ratio must exceed 1")
        if not 0.0 < self.window_fraction < 1.0:
            raise ValueError("window_fraction must lie in (0, 1)")
        if self.xmax is not None and self.xmax <= 0:
            raise ValueError("xmax must be positive")
        if self.t_end_cap is not None and not (self.t_end_cap > 0 and math.isfinite(self.t_end_cap)):
            raise ValueError("t_end_cap must be a positive finite number")
        return self

    def resolved_xmax(self, t_end: Optional[float] = None) -> float:
        if self.xmax is not None:
            return self.xmax
        horizon = self.t_end if t_end is None else t_end
        return max(self.xmax_floor, 20.0 * math.sqrt(horizon))

    def resolved_n(self, xmax: float) -> int:
        if self.n is not None:
            return self.n
        return 2 * int(round(xmax / self.h)) + 1


class SourceSpec(BaseModel):
    kind: SourceKind = SourceKind.FULL_WEIGHT
    width: Optional[float] = None   # bump half-width l for localized sources
    height: Optional[float] = None  # filled in as min of <x>^{-m} over the bump

    @model_validator(mode='after')
    def _width_given(self) -> "SourceSpec":
        if self.kind == SourceKind.LOCALIZED and (self.width is None or self.width <= 0):
            raise ValueError("localized sources need a positive width")
        return self


class RunOutcome(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan='constants')

    kind: OutcomeKind
    t_est: Optional[float] = None
    linf_slope: Optional[float] = None
    psi_inv_slope: Optional[float] = None
    source_slope: Optional[float] = None
    source_rate_slope: Optional[float] = None
    reason: Optional[InconclusiveReason] = None
    message: Optional[str] = None
    boundary_leak: bool = False
    flags: List[str] = []
    t_final: float = 0.0
    steps: int = 0
    times: List[float] = []
    linf: List[float] = []
    linf_psi_inv: List[float] = []
    l1_psi: List[float] = []


class ContractionReport(BaseModel):
    ok: bool
    l1_ok: bool
    linf_ok: bool
    positivity_ok: bool
    worst_time: Optional[float] = None
    worst_norm: Optional[NormKind] = None
    worst_excess: float = 0.0
    min_relative_value: float = 0.0


class DecayFit(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan='constants')

    alpha: float
    norm: NormKind
    q1: Optional[float] = None
    q2: Optional[float] = None
    window: Tuple[float, float]
    fitted_slope: float
    predicted_slope: Optional[float] = None
    n_samples: int
    extrapolation: bool = False


class KernelBoundReport(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan='constants')

    alpha: float
    delta: float
    c_bound: float
    c_initial: float
    growth_exponent: float
    stable: bool
    diagnostic: bool = False
    boundary_leak: bool = False
    times: List[float] = []
    ratios: List[float] = []


class HardyRatios(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan='constants')

    r1: float
    r2: float
    proof_ratio: float
    proof_bound: float
    proof_ok: bool


class WeightedNashRatios(BaseModel):
    w1: float
    w2: float


class MemberRatio(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan='constants')

    label: str
    family: FamilyKind
    center: float
    width: float
    amplitude: float
    ratios: Dict[str, float]


class InequalitySummary(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan='constants')

    alpha: float
    kinds: List[InequalityKind]
    sup_ratio: Dict[str, float]
    argmax: Dict[str, str]
    members: int


class TestFnBound(BaseModel):
    __test__ = False

    alpha: float
    p: float
    R: float
    c_t_estimate: float
    plateau_residual_max: float
    n_samples: int


class FujitaFunctional(BaseModel):
    R: float
    initial_term: float
    weighted_p_integral: float
    starred_p_integral: float
    truncated: bool = False


class LogGrowthReport(BaseModel):
    alpha: float
    fit_slope_vs_logt: float
    normalized_slope: Optional[float] = None
    early_slope: float
    late_slope: float
    hypothesis_holds: bool
    sublogarithmic: bool
    stable: bool
    passes: bool


class SweepSpec(BaseModel):
    """A (p, amplitude) grid at fixed (alpha, m)."""

    alpha: float
    m: float = 0.0
    p_grid: List[float]
    amplitude_grid: List[float]
    width: float = 2.0
    source: SourceSpec = SourceSpec()
    config_overrides: Dict[str, Any] = {}
    output_dir: str = config.OUTPUT_DIR

    @field_validator('p_grid', 'amplitude_grid')
    @classmethod
    def _sorted_nonempty(cls, values: List[float]) -> List[float]:
        if not values:
            raise ValueError("grid must be nonempty")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("grid must be sorted ascending without repeats")
        return values

    @field_validator('p_grid')
    @classmethod
    def _p_above_one(cls, values: List[float]) -> List[float]:
        if any(p <= 1 for p in values):
            raise ValueError("every p must exceed 1")
        return values

    @field_validator('amplitude_grid')
    @classmethod
    def _positive_amplitudes(cls, values: List[float]) -> List[float]:
        if any(a <= 0 for a in values):
            raise ValueError("amplitudes must be positive")
        return values

    @field_validator('m')
    @classmethod
    def _nonneg_m(cls, value: float) -> float:
        if value < 0:
            raise ValueError("m must be nonnegative")
        return value


class PhaseCell(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan='constants')

    p: float
    amplitude: float
    outcome: RunOutcome


class DiagramMetadata(BaseModel):
    p_grid: List[float]
    amplitude_grid: List[float]
    config_hash: str
    wall_time: float
    created_at: str


class PhaseDiagram(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan='constants')

    alpha: float
    m: float
    p_star: float
    cells: List[PhaseCell]
    metadata: DiagramMetadata

    def cell(self, p: float, amplitude: float) -> PhaseCell:
        for cell in self.cells:
            if cell.p == p and cell.amplitude == amplitude:
                return cell
        raise KeyError((p, amplitude))

    @property
    def errored(self) -> bool:
        return any(c.outcome.reason == InconclusiveReason.ERROR for c in self.cells)


# Request bodies shared by the CLI and the HTTP surface

class ProfileRequest(BaseModel):
    alpha: float
    xmax: float = 10.0
    n: int = 201


class ExponentRequest(BaseModel):
    alpha: float
    m: float = 0.0
    p: Optional[float] = None


class DecayRequest(BaseModel):
    alpha: float
    q1: float = 1.0
    q2: float = math.inf
    t_end: float = 1000.0
    window: Optional[Tuple[float, float]] = None
    width: float = 1.0
    energy: bool = False
    sim: Dict[str, Any] = {}


class KernelRequest(BaseModel):
    alpha: float
    delta: float = config.KERNEL_DELTA
    t_end: float = 1000.0
    diagnostic: bool = False
    sim: Dict[str, Any] = {}


class RunRequest(BaseModel):
    alpha: float
    m: float = 0.0
    p: float
    amplitude: float
    width: float = 2.0
    localized_source: Optional[float] = None
    compare_linear: bool = False
    plot: Optional[str] = None  # SVG path for the norm-decay plot
    sim: Dict[str, Any] = {}


class InequalityRequest(BaseModel):
    kind: str = "nash"  # nash | hardy | wnash
    alpha: float
    family: str = "default"
    diagnostic: bool = False


class TestFnRequest(BaseModel):
    __test__ = False

    alpha: float
    p: float
    R: float = 100.0
    samples: int = 401
