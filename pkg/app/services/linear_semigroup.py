import math
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.config import config
from app.models.enums import NormKind
from app.models.schemas import SimConfig, ContractionReport, DecayFit, KernelBoundReport
from app.services.finite_volume import FluxOperator
from app.tools.grid_field import (
    Grid,
    Field,
    weighted_norms,
    quadratic_form_report,
    power_field,
)
from app.tools.profile import PotentialProfile, japanese_bracket
from app.utils.errors import RejectedInputError, InvariantViolationError, LabError
from app.utils.fitting import window_mask, loglog_slope, final_decade
from app.utils.logger import logger, log_run_event, log_check
from app.utils.metrics import record_check

BASIC_NORMS = (NormKind.L1_PSI, NormKind.LINF_PSI_INV, NormKind.LINF, NormKind.L2)


@dataclass
class Trajectory:
    """Snapshots of one evolution with their weighted norms."""

    grid: Grid
    profile: PotentialProfile
    times: List[float] = field(default_factory=list)
    fields: List[Field] = field(default_factory=list)
    steps: List[int] = field(default_factory=list)
    series: Dict[NormKind, List[float]] = field(default_factory=lambda: {k: [] for k in BASIC_NORMS})
    boundary_leak: bool = False
    meta: Dict[str, Any] = field(default_factory=dict)

    def record(self, f: Field, step: int) -> None:
        if self.times and f.time <= self.times[-1]:
            raise InvariantViolationError(f"snapshot time {f.time} does not follow {self.times[-1]}")
        norms = weighted_norms(f, self.profile)
        self.times.append(float(f.time))
        self.fields.append(f)
        self.steps.append(int(step))
        for kind in BASIC_NORMS:
            self.series[kind].append(getattr(norms, kind.value))

    def __len__(self) -> int:
        return len(self.times)

    @property
    def t_array(self) -> np.ndarray:
        return np.asarray(self.times)

    @property
    def final(self) -> Field:
        return self.fields[-1]

    def norm_series(self, kind: NormKind) -> np.ndarray:
        if kind == NormKind.ENERGY:
            return self._energy_series()
        return np.asarray(self.series[kind])

    def _energy_series(self) -> np.ndarray:
        if NormKind.ENERGY not in self.series:
            values = []
            for f in self.fields:
                try:
                    values.append(math.sqrt(max(quadratic_form_report(f, self.profile).ground_state, 0.0)))
                except LabError:
                    values.append(math.nan)
            self.series[NormKind.ENERGY] = values
        return np.asarray(self.series[NormKind.ENERGY])

    def star_values(self) -> List[np.ndarray]:
        return [f.star(self.profile) for f in self.fields]


def snapshot_schedule(t_end: float, cfg: SimConfig, extra_times: Sequence[float] = ()) -> np.ndarray:
    """Geometric times t0 * r^k below t_end, any extra times, and t_end itself."""
    times = []
    t = cfg.snapshot_t0
    while t < t_end:
        times.append(t)
        t *= cfg.snapshot_ratio
    times.extend(s for s in extra_times if 0 < s < t_end)
    times.append(t_end)
    return np.unique(np.asarray(times, dtype=float))


def evolve_linear(
    f0: Field,
    t_end: float,
    prof: PotentialProfile,
    cfg: Optional[SimConfig] = None,
    extra_times: Sequence[float] = (),
    check_leak: bool = True,
) -> Trajectory:
    """v(t) = e^{-tL} f0 by Crank-Nicolson on the flux form in v_* = v/psi.

    check_leak=False skips the boundary-node test for data with a non-decaying tail.
    """
    cfg = cfg or SimConfig()
    if not f0.is_finite():
        raise RejectedInputError("initial field must be finite")
    if not (t_end > 0 and math.isfinite(t_end)):
        raise RejectedInputError(f"t_end must be positive, got {t_end}")

    started = time.perf_counter()
    grid = f0.grid
    op = FluxOperator(grid, prof)
    dt_target = op.crank_nicolson_dt(cfg.linear_dt_max)
    n_steps = max(1, math.ceil(t_end / dt_target - 1e-9))
    dt = t_end / n_steps

    snapshot_steps = np.unique(np.rint(snapshot_schedule(t_end, cfg, extra_times) / dt).astype(int))
    snapshot_steps = set(int(s) for s in snapshot_steps if s > 0)
    snapshot_steps.add(n_steps)

    run = f"linear(alpha={prof.alpha}, n={grid.n}, t_end={t_end})"
    log_run_event(run, "start", f"dt={dt:.3e}, steps={n_steps}, snapshots={len(snapshot_steps) + 1}")

    traj = Trajectory(grid=grid, profile=prof, meta={"dt": dt, "kind": "linear"})
    traj.record(f0, 0)

    ab_half = op.banded(0.5 * dt)
    v = op.from_nodes(f0.values)
    for step in range(1, n_steps + 1):
        v = op.crank_nicolson_step(ab_half, v, dt)
        if step in snapshot_steps:
            u = op.to_nodes(v)
            traj.record(f0.with_values(u, time=step * dt), step)
            if check_leak and not traj.boundary_leak and op.leaks(u, cfg.leak_tol):
                traj.boundary_leak = True
                logger.warning(f"Boundary leak in {run} at t={step * dt:.4g}; enlarge xmax")

    log_run_event(run, "finish", f"elapsed={time.perf_counter() - started:.2f}s, leak={traj.boundary_leak}")
    return traj


def check_contraction(traj: Trajectory, prof: PotentialProfile) -> ContractionReport:
    """Monotonicity of |psi v|_1 and |v/psi|_inf plus positivity along the trajectory."""
    steps = np.asarray(traj.steps)
    worst = (0.0, None, None)
    verdict = {}
    for kind in (NormKind.L1_PSI, NormKind.LINF_PSI_INV):
        s = traj.norm_series(kind)
        ok = True
        for k in range(1, len(s)):
            allowed = config.CONTRACTION_SLACK * max(1, steps[k] - steps[k - 1]) * max(s[k - 1], 0.0)
            excess = s[k] - s[k - 1] - allowed
            if excess > 0:
                ok = False
                relative = excess / max(s[k - 1], np.finfo(float).tiny)
                if relative > worst[0]:
                    worst = (relative, traj.times[k], kind)
        verdict[kind] = ok

    min_relative = 0.0
    for f in traj.fields:
        peak = f.max_abs()
        if peak > 0:
            min_relative = min(min_relative, float(f.values.min()) / peak)
    initially_nonneg = bool(np.all(traj.fields[0].values >= 0)) if traj.fields else True
    positivity_ok = min_relative >= -config.POSITIVITY_SLACK or not initially_nonneg

    report = ContractionReport(
        ok=verdict[NormKind.L1_PSI] and verdict[NormKind.LINF_PSI_INV] and positivity_ok,
        l1_ok=verdict[NormKind.L1_PSI],
        linf_ok=verdict[NormKind.LINF_PSI_INV],
        positivity_ok=positivity_ok,
        worst_time=worst[1],
        worst_norm=worst[2],
        worst_excess=worst[0],
        min_relative_value=min_relative,
    )
    log_check("contraction", report.ok, f"alpha={prof.alpha}, worst={report.worst_excess:.2e}")
    record_check("contraction", report.ok)
    return report


def fit_decay_exponent(traj: Trajectory, norm_kind: NormKind, window: Tuple[float, float]) -> float:
    t = traj.t_array
    mask = window_mask(t, window)
    return loglog_slope(t[mask], traj.norm_series(norm_kind)[mask])


def norm_for_exponent(q: float) -> NormKind:
    if q == 1:
        return NormKind.L1_PSI
    if q == 2:
        return NormKind.L2
    if math.isinf(q):
        return NormKind.LINF_PSI_INV
    raise RejectedInputError(f"supported exponents are 1, 2 and inf, got {q}")


def predicted_decay_slope(alpha: float, q1: float, q2: float) -> float:
    """-(1+2alpha)/2 * (1/q1 - 1/q2)."""
    inv = lambda q: 0.0 if math.isinf(q) else 1.0 / q
    return -0.5 * (1.0 + 2.0 * alpha) * (inv(q1) - inv(q2))


def predicted_energy_slope(alpha: float, q1: float) -> float:
    """Rate of |L^{1/2} v|_2 from L^{q1} data."""
    return predicted_decay_slope(alpha, q1, 2.0) - 0.5


def smoothing_fit(
    traj: Trajectory,
    q1: float,
    q2: float = math.inf,
    window: Optional[Tuple[float, float]] = None,
    energy: bool = False,
) -> DecayFit:
    """Fit the (q1 -> q2) smoothing rate from N_{q2}(t) / N_{q1}(t/2).

    The semigroup property lets the data norm be read off the trajectory at t/2,
    so conserved (q1 = 1) and decaying (q1 = 2) data norms are handled alike.
    With energy=True the target norm is |L^{1/2} v|_2.
    """
    alpha = traj.profile.alpha
    t = traj.t_array
    window = window or (t[-1] / 100.0, t[-1])
    source = traj.norm_series(norm_for_exponent(q1))
    target_kind = NormKind.ENERGY if energy else norm_for_exponent(q2)
    target = traj.norm_series(target_kind)

    first = t[t > 0].min() if np.any(t > 0) else math.inf
    mask = window_mask(t, window) & (t / 2.0 >= first)
    positive = (t > 0) & (source > 0)
    if positive.sum() < 2:
        raise RejectedInputError("data norm vanishes along the trajectory")
    half_norm = np.exp(np.interp(np.log(t[mask] / 2.0), np.log(t[positive]), np.log(source[positive])))
    slope = loglog_slope(t[mask], target[mask] / half_norm)

    predicted = predicted_energy_slope(alpha, q1) if energy else predicted_decay_slope(alpha, q1, q2)
    if alpha < 0:
        logger.info(f"Decay fit at alpha={alpha} < 0 is an extrapolation beyond the proven range")
    return DecayFit(
        alpha=alpha,
        norm=target_kind,
        q1=q1,
        q2=None if energy else q2,
        window=(float(window[0]), float(window[1])),
        fitted_slope=slope,
        predicted_slope=predicted,
        n_samples=int(mask.sum()),
        extrapolation=alpha < 0,
    )


def kernel_envelope(x: np.ndarray, t: float, alpha: float, delta: float) -> np.ndarray:
    """<x>^alpha (1 + <x>^2 + t)^{-(1+2alpha)/2 + delta}."""
    bracket = japanese_bracket(x)
    return bracket ** alpha * (1.0 + bracket ** 2 + t) ** (-0.5 * (1.0 + 2.0 * alpha) + delta)


def kernel_upper_bound_check(
    prof: PotentialProfile,
    delta: float = config.KERNEL_DELTA,
    t_list: Optional[Sequence[float]] = None,
    cfg: Optional[SimConfig] = None,
    diagnostic: bool = False,
) -> KernelBoundReport:
    """Smallest C with e^{-tL}<x>^{-1-alpha} <= C * envelope at every snapshot, and its trend.

    The weighted mass of <x>^{-1-alpha} diverges logarithmically, so the ratio is
    divided by the mass inside the diffusive core |x| <= kappa sqrt(t) before the
    growth exponent is fitted over the final decade.
    The data never decay at +-xmax, so the trajectory's boundary-node leak test does
    not apply; boundary_leak instead reports whether the diffusive core reached
    half the domain before the horizon.
    """
    alpha = prof.alpha
    if not -0.5 < alpha < 0.5:
        raise RejectedInputError(f"kernel bound needs -1/2 < alpha < 1/2, got {alpha}")
    upper = 0.5 * (1.0 + 2.0 * alpha)
    if not diagnostic and not 0.0 < delta < upper:
        raise RejectedInputError(f"delta must lie in (0, {upper}), got {delta}")

    cfg = cfg or SimConfig()
    horizon = max(t_list) if t_list else cfg.t_end
    grid = Grid.from_config(cfg, horizon)
    f0 = power_field(grid, -1.0 - alpha)
    traj = evolve_linear(f0, horizon, prof, cfg, extra_times=t_list or (), check_leak=False)

    x = grid.nodes
    ratios = np.array([
        float(np.max(f.values / kernel_envelope(x, f.time, alpha, delta))) for f in traj.fields
    ])
    t = traj.t_array
    core = 2.0 * np.arcsinh(np.minimum(config.KERNEL_CORE_RADIUS * np.sqrt(t), grid.xmax))

    mask = window_mask(t, final_decade(horizon))
    growth = loglog_slope(t[mask], ratios[mask] / core[mask])
    stable = growth <= 0.0
    leak = bool(config.KERNEL_CORE_RADIUS * math.sqrt(horizon) > 0.5 * grid.xmax)
    if leak:
        logger.warning(f"Kernel check core reaches half of xmax={grid.xmax:g} by t={horizon:g}; enlarge xmax")

    report = KernelBoundReport(
        alpha=alpha,
        delta=delta,
        c_bound=float(ratios.max()),
        c_initial=float(ratios[0]),
        growth_exponent=growth,
        stable=stable,
        diagnostic=diagnostic,
        boundary_leak=leak,
        times=t[1:].tolist(),
        ratios=ratios[1:].tolist(),
    )
    log_check("kernel_upper_bound", stable, f"alpha={alpha}, delta={delta}, growth={growth:.3f}")
    record_check("kernel_upper_bound", stable)
    return report
