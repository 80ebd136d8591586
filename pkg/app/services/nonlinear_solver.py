import math
import time
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid

from app.config import config
from app.models.enums import OutcomeKind, InconclusiveReason, NormKind, SourceKind, Regime
from app.models.schemas import SimConfig, SourceSpec, RunOutcome
from app.services.finite_volume import FluxOperator
from app.services.linear_semigroup import Trajectory, snapshot_schedule, kernel_envelope
from app.tools.exponent import regime_classify
from app.tools.grid_field import Field, Grid, bump_profile
from app.tools.profile import PotentialProfile, japanese_bracket
from app.utils.errors import RejectedInputError, NumericalFailureError, NoEstimateError
from app.utils.fitting import window_mask, loglog_slope, linear_fit
from app.utils.logger import logger, log_run_event, log_check
from app.utils.metrics import RUNS_TOTAL, RUN_SECONDS, record_check


# Source weight

def _localized_condition(x: np.ndarray, ell: float, prof: PotentialProfile, p: float) -> np.ndarray:
    """a'/a + (p-1) psi'/psi on the nodes 0 < x < ell; must be <= 0."""
    inside = (x > 0) & (x < ell)
    s = x[inside] / ell
    bump_log_derivative = -2.0 * s / (ell * (1.0 - s * s) ** 2)
    return bump_log_derivative + (p - 1.0) * prof.log_derivative(x[inside])


def build_source(src: SourceSpec, prof: PotentialProfile, p: float, m: float, grid: Grid) -> Tuple[np.ndarray, SourceSpec]:
    """Nodal source weight a(x) and the resolved spec.

    Localized weights are c * exp(1 - 1/(1 - (x/l)^2)) with c = <l>^{-m}, the
    minimum of <x>^{-m} over the support, so a <= <x>^{-m}. The width is halved
    until x (a psi^{p-1})' <= 0 holds on every grid node.
    """
    x = grid.nodes
    if src.kind == SourceKind.FULL_WEIGHT:
        return japanese_bracket(x) ** (-m), src

    ell = float(src.width)
    for _ in range(60):
        condition = _localized_condition(x, ell, prof, p)
        if condition.size == 0 or condition.max() <= 0.0:
            break
        logger.debug(f"Localized source width {ell} violates the monotonicity condition; halving")
        ell *= 0.5
    else:
        raise NumericalFailureError("could not find an admissible localized source width")

    height = float(japanese_bracket(ell) ** (-m))
    a = height * bump_profile(x / ell)
    if np.any(a > japanese_bracket(x) ** (-m) * (1.0 + 1e-12)):
        raise NumericalFailureError("localized source exceeds <x>^{-m}")
    if ell < 2.0 * grid.h:
        logger.warning(f"Localized source width {ell} is below two grid spacings; the source is barely resolved")
    return a, SourceSpec(kind=SourceKind.LOCALIZED, width=ell, height=height)


# Blow-up time

def estimate_blowup_time(times: Sequence[float], maxnorm: Sequence[float], p: float) -> float:
    """Extrapolate T from |u|_inf ~ C (T - t)^{-1/(p-1)} on the final growth decade.

    y^{1-p} is linear in t for that model, so T is the root of a straight-line fit.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(maxnorm, dtype=float)
    if t.size != y.size or t.size == 0:
        raise NoEstimateError("times and max-norm series must be nonempty and aligned")
    below = np.flatnonzero(y < y[-1] / 10.0)
    start = below[-1] + 1 if below.size else 0
    t_tail, y_tail = t[start:], y[start:]
    if t_tail.size < 3:
        raise NoEstimateError("fewer than three samples in the final growth decade")
    if np.any(np.diff(y_tail) <= 0) or np.any(np.diff(t_tail) <= 0):
        raise NoEstimateError("max-norm tail is not monotonically increasing")
    slope, intercept = linear_fit(t_tail, y_tail ** (1.0 - p))
    if not slope < 0:
        raise NoEstimateError("growth tail does not extrapolate to a finite time")
    return -intercept / slope


# Nonlinear evolution

class _DenseSeries:
    """Per-step scalar diagnostics of an IMEX run."""

    def __init__(self):
        self.times: List[float] = []
        self.linf: List[float] = []
        self.linf_psi_inv: List[float] = []
        self.source_rate: List[float] = []
        self.mass: List[float] = []

    def add(self, t: float, u: np.ndarray, v: np.ndarray, rate: float, mass: float) -> None:
        self.times.append(t)
        self.linf.append(float(np.max(np.abs(u))))
        self.linf_psi_inv.append(float(np.max(np.abs(v))) if v.size else 0.0)
        self.source_rate.append(rate)
        self.mass.append(mass)

    def as_dict(self) -> dict:
        return {
            "times": np.asarray(self.times),
            "linf": np.asarray(self.linf),
            "linf_psi_inv": np.asarray(self.linf_psi_inv),
            "source_rate": np.asarray(self.source_rate),
            "mass": np.asarray(self.mass),
        }


class ImexIntegrator:
    """Backward-Euler diffusion with an explicit source in u_* = u/psi, step doubling on dt.

    Each step solves (M + dt K) v_new = M (v + dt * a psi^{p-1} v^p). M + dt K is an
    M-matrix, so positivity and comparison with the linear flow hold exactly.
    """

    def __init__(self, op: FluxOperator, weight: np.ndarray, p: float, cfg: SimConfig):
        self.op = op
        self.p = p
        self.cfg = cfg
        psi = op.psi_nodes[1:-1]
        self.coefficient = weight[1:-1] * psi ** (p - 1.0)  # a psi^{p-1}

    def source(self, v: np.ndarray) -> np.ndarray:
        return self.coefficient * np.maximum(v, 0.0) ** self.p

    def source_rate(self, v: np.ndarray) -> float:
        """max a u^{p-1}."""
        if v.size == 0:
            return 0.0
        return float(np.max(self.coefficient * np.maximum(v, 0.0) ** (self.p - 1.0)))

    def step(self, v: np.ndarray, dt: float) -> np.ndarray:
        return self.op.backward_euler_step(v, dt, self.source(v))

    def linear_step(self, w: np.ndarray, dt: float) -> np.ndarray:
        return self.op.backward_euler_step(w, dt, np.zeros_like(w))

    def doubled_step(self, v: np.ndarray, dt: float) -> Tuple[np.ndarray, float]:
        """Two half steps and the relative max-norm gap to one full step."""
        with np.errstate(over="ignore", invalid="ignore"):
            full = self.step(v, dt)
            half = self.step(self.step(v, 0.5 * dt), 0.5 * dt)
            if not (np.all(np.isfinite(full)) and np.all(np.isfinite(half))):
                return half, math.inf
            scale = max(float(np.max(np.abs(half))), np.finfo(float).tiny)
            return half, float(np.max(np.abs(full - half))) / scale

    def dt_cap(self, linf: float) -> float:
        cap = self.cfg.dt_max
        if linf > 0:
            cap = min(cap, self.cfg.dt_cap_factor * linf ** (1.0 - self.p))
        return cap

    def next_dt(self, dt: float, err: float) -> float:
        if err == 0.0:
            factor = 2.0
        else:
            factor = min(2.0, max(0.2, 0.9 * math.sqrt(self.cfg.step_rel_tol / err)))
        return dt * factor


def _final_slope(traj: Trajectory, kind: NormKind, window: Tuple[float, float]) -> Optional[float]:
    t = traj.t_array
    mask = window_mask(t, window)
    values = traj.norm_series(kind)[mask]
    if mask.sum() < config.MIN_FIT_SAMPLES or np.any(values <= 0):
        return None
    return loglog_slope(t[mask], values)


def _source_saturation_slope(dense: dict, snapshot_times: np.ndarray, window: Tuple[float, float]) -> float:
    """Log-log slope of G(t) = int_0^t max(a u^{p-1}) ds over the window."""
    G = cumulative_trapezoid(dense["source_rate"], dense["times"], initial=0.0)
    sample_t = snapshot_times[window_mask(snapshot_times, window)]
    if sample_t.size < config.MIN_FIT_SAMPLES:
        return 0.0
    sample_G = np.interp(sample_t, dense["times"], G)
    if np.any(sample_G <= 0):
        return 0.0
    return loglog_slope(sample_t, sample_G)


def _source_rate_slope(dense: dict, snapshot_times: np.ndarray, window: Tuple[float, float]) -> Optional[float]:
    """Log-log slope of max(a u^{p-1}) over the window; below -1 the source term is integrable in time."""
    sample_t = snapshot_times[window_mask(snapshot_times, window)]
    if sample_t.size < config.MIN_FIT_SAMPLES:
        return None
    sample_rate = np.interp(sample_t, dense["times"], dense["source_rate"])
    if np.any(sample_rate <= 0):
        return None
    return loglog_slope(sample_t, sample_rate)


def _outcome(kind: OutcomeKind, traj: Trajectory, dense: dict, steps: int, **fields) -> RunOutcome:
    return RunOutcome(
        kind=kind,
        boundary_leak=traj.boundary_leak,
        t_final=float(dense["times"][-1]) if len(dense["times"]) else 0.0,
        steps=steps,
        times=list(traj.times),
        linf=traj.series[NormKind.LINF][:],
        linf_psi_inv=traj.series[NormKind.LINF_PSI_INV][:],
        l1_psi=traj.series[NormKind.L1_PSI][:],
        **fields,
    )


def run_horizon(cfg: SimConfig, alpha: float, m: float, p: float, src: Optional[SourceSpec] = None) -> float:
    """Latest time a run may reach.

    Full-weight runs at or below p_star that are still not decaying at t_end keep
    going up to t_end_cap; grids for such runs should be sized for this horizon.
    """
    src = src or SourceSpec()
    if cfg.t_end_cap is None or cfg.t_end_cap <= cfg.t_end or src.kind != SourceKind.FULL_WEIGHT:
        return cfg.t_end
    if regime_classify(alpha, m, p) == Regime.GLOBAL:
        return cfg.t_end
    return cfg.t_end_cap


def _classify(traj: Trajectory, dense: dict, cfg: SimConfig, t: float) -> Tuple[OutcomeKind, dict]:
    """GlobalDecay or Inconclusive{not_decaying} from the final decade ending at t."""
    window = (cfg.window_fraction * t, t)
    fits = dict(
        linf_slope=_final_slope(traj, NormKind.LINF, window),
        psi_inv_slope=_final_slope(traj, NormKind.LINF_PSI_INV, window),
        source_slope=_source_saturation_slope(dense, traj.t_array, window),
        source_rate_slope=_source_rate_slope(dense, traj.t_array, window),
    )
    decaying = fits["linf_slope"] is not None and fits["linf_slope"] < cfg.decay_slope_threshold
    saturated = fits["source_rate_slope"] is not None and fits["source_rate_slope"] <= cfg.source_rate_slope
    if decaying and saturated:
        return OutcomeKind.GLOBAL_DECAY, fits
    return OutcomeKind.INCONCLUSIVE, dict(reason=InconclusiveReason.NOT_DECAYING,
                                          message="no decay with a saturated source over the final decade", **fits)


def evolve_nonlinear(
    u0: Field,
    p: float,
    m: float,
    src: SourceSpec,
    prof: PotentialProfile,
    cfg: Optional[SimConfig] = None,
    with_linear: bool = False,
) -> Tuple[RunOutcome, Trajectory]:
    """Integrate u_t - u_xx + V u = a u^p from u0 >= 0 and classify the run."""
    cfg = cfg or SimConfig()
    if not p > 1:
        raise RejectedInputError(f"p must exceed 1, got {p}")
    if m < 0:
        raise RejectedInputError(f"m must be nonnegative, got {m}")
    if not u0.is_finite() or np.any(u0.values < 0):
        raise RejectedInputError("initial data must be finite and nonnegative")
    if cfg.blowup_threshold <= 1e3 * u0.max_abs():
        raise RejectedInputError("blowup_threshold must exceed 10^3 times the initial maximum")

    started = time.perf_counter()
    grid = u0.grid
    t_end = cfg.t_end
    op = FluxOperator(grid, prof)
    weight, resolved_src = build_source(src, prof, p, m, grid)
    imex = ImexIntegrator(op, weight, p, cfg)
    horizon = run_horizon(cfg, prof.alpha, m, p, resolved_src)
    schedule = snapshot_schedule(horizon, cfg, extra_times=(t_end,))

    run = f"nonlinear(alpha={prof.alpha}, m={m}, p={p}, amp={u0.max_abs():.3g})"
    log_run_event(run, "start", f"n={grid.n}, xmax={grid.xmax}, t_end={t_end}, horizon={horizon}, "
                                f"source={resolved_src.kind.value}")

    traj = Trajectory(grid=grid, profile=prof, meta={"kind": "nonlinear", "p": p, "m": m, "source": resolved_src})
    traj.record(u0, 0)
    v = op.from_nodes(u0.values)
    w = v.copy() if with_linear else None
    if with_linear:
        traj.meta["linear"] = [u0]

    extended = False
    dense = _DenseSeries()
    dense.add(0.0, u0.values, v, imex.source_rate(v), op.weighted_mass(v))

    def finish(kind: OutcomeKind, steps: int, **fields) -> Tuple[RunOutcome, Trajectory]:
        if extended:
            fields["flags"] = list(fields.get("flags", [])) + ["extended_horizon"]
        traj.meta["dense"] = dense.as_dict()
        outcome = _outcome(kind, traj, traj.meta["dense"], steps, **fields)
        elapsed = time.perf_counter() - started
        RUNS_TOTAL.labels(outcome=kind.value).inc()
        RUN_SECONDS.observe(elapsed)
        detail = f"outcome={kind.value}, reason={outcome.reason.value if outcome.reason else None}, " \
                 f"t={outcome.t_final:.4g}, steps={steps}, elapsed={elapsed:.2f}s"
        log_run_event(run, "finish", detail)
        return outcome, traj

    def snapshot(t: float, step: int) -> None:
        u = op.to_nodes(v)
        traj.record(u0.with_values(u, time=t), step)
        if with_linear:
            traj.meta["linear"].append(u0.with_values(op.to_nodes(w), time=t))
        if op.leaks(u, cfg.leak_tol):
            traj.boundary_leak = True

    if u0.max_abs() == 0.0:
        for t_snap in schedule[schedule <= t_end]:
            dense.add(float(t_snap), u0.values, v, 0.0, 0.0)
            snapshot(float(t_snap), 0)
        return finish(OutcomeKind.GLOBAL_DECAY, 0, flags=["zero"])

    t, steps, accepted = 0.0, 0, 0
    dt_proposed = cfg.dt_init
    next_index = 0
    previous_linf = u0.max_abs()

    try:
        while next_index < len(schedule):
            if steps >= cfg.max_steps:
                return finish(OutcomeKind.INCONCLUSIVE, steps, reason=InconclusiveReason.STIFFNESS,
                              message=f"max_steps={cfg.max_steps} exhausted at t={t:.4g}")

            linf = dense.linf[-1]
            t_next = float(schedule[next_index])
            dt = min(dt_proposed, imex.dt_cap(linf))
            if dt < cfg.dt_min:
                if linf > previous_linf:
                    return finish(OutcomeKind.BLOWUP, steps, t_est=_blowup_estimate(dense, p, t),
                                  message=f"dt underflow at |u|_inf={linf:.3e}")
                return finish(OutcomeKind.INCONCLUSIVE, steps, reason=InconclusiveReason.STIFFNESS,
                              message=f"dt underflow without growth at t={t:.4g}")
            clipped = t + dt >= t_next * (1.0 - 1e-12)
            if clipped:
                dt = t_next - t

            steps += 1
            candidate, err = imex.doubled_step(v, dt)
            if err > cfg.step_rel_tol:
                dt_proposed = imex.next_dt(dt, err)
                logger.debug(f"Rejected step at t={t:.6g}, dt={dt:.3e}, err={err:.2e}")
                continue

            if with_linear:
                w = imex.linear_step(imex.linear_step(w, 0.5 * dt), 0.5 * dt)
            v = candidate
            t = t_next if clipped else t + dt
            accepted += 1
            if not clipped:
                dt_proposed = imex.next_dt(dt, err)

            previous_linf = linf
            u_nodes = op.to_nodes(v)
            dense.add(t, u_nodes, v, imex.source_rate(v), op.weighted_mass(v))

            if dense.linf[-1] >= cfg.blowup_threshold:
                snapshot(t, accepted)
                return finish(OutcomeKind.BLOWUP, steps, t_est=_blowup_estimate(dense, p, t),
                              message=f"|u|_inf crossed {cfg.blowup_threshold:.1e}")

            if clipped:
                snapshot(t, accepted)
                next_index += 1
                if traj.boundary_leak:
                    logger.warning(f"Boundary leak in {run} at t={t:.4g}")
                    return finish(OutcomeKind.INCONCLUSIVE, steps, reason=InconclusiveReason.DOMAIN,
                                  message=f"boundary leak at t={t:.4g}; enlarge xmax")
                if t == t_end or t == horizon:
                    kind, fields = _classify(traj, dense.as_dict(), cfg, t)
                    if kind == OutcomeKind.GLOBAL_DECAY or t == horizon:
                        return finish(kind, steps, **fields)
                    extended = True
                    log_run_event(run, "extend", f"not decaying at t={t:.4g}; continuing to {horizon:g}")
    except NumericalFailureError as e:
        logger.error(f"Run {run} failed: {str(e)}", exc_info=True)
        return finish(OutcomeKind.INCONCLUSIVE, steps, reason=InconclusiveReason.ERROR, message=str(e))

    kind, fields = _classify(traj, dense.as_dict(), cfg, t)
    return finish(kind, steps, **fields)


def _blowup_estimate(dense: _DenseSeries, p: float, t: float) -> float:
    try:
        return estimate_blowup_time(dense.times, dense.linf, p)
    except NoEstimateError as e:
        logger.debug(f"Blow-up time extrapolation failed ({str(e)}); using the last time reached")
        return t


# Structural checks on trajectories

def _is_even(values: np.ndarray) -> bool:
    peak = float(np.max(np.abs(values)))
    return peak == 0.0 or float(np.max(np.abs(values - values[::-1]))) <= 1e-12 * peak


def check_star_monotonicity(traj: Trajectory, prof: PotentialProfile, report_only: bool = False) -> float:
    """Largest normalized rise of u_* on x >= 0 over all snapshots.

    Data that is even with u_* nonincreasing on x >= 0 keeps that shape under the
    linear flow and under a localized source with x (a psi^{p-1})' <= 0; report_only
    skips the hypothesis checks so the detector can be run on other data.
    """
    grid = traj.grid
    c = grid.center
    if not report_only:
        u0 = traj.fields[0].values
        star0 = u0 / prof.psi(grid.nodes)
        if not _is_even(u0):
            raise RejectedInputError("initial data is not even")
        peak = float(np.max(np.abs(star0)))
        if peak > 0 and float(np.max(np.diff(star0[c:]))) > 1e-12 * peak:
            raise RejectedInputError("u0/psi is not nonincreasing on x >= 0")
        source = traj.meta.get("source")
        if traj.meta.get("kind") == "nonlinear" and (source is None or source.kind != SourceKind.LOCALIZED):
            raise RejectedInputError("monotonicity needs a localized source weight")

    violation = 0.0
    for star in traj.star_values():
        half = star[c:]
        peak = float(np.max(np.abs(half)))
        if peak == 0.0:
            continue
        violation = max(violation, max(float(np.max(np.diff(half))), 0.0) / peak)

    if not report_only:
        passed = violation <= 1e-6
        log_check("star_monotonicity", passed, f"alpha={prof.alpha}, violation={violation:.2e}")
        record_check("star_monotonicity", passed)
    return violation


def check_supersolution_domination(traj: Trajectory, prof: PotentialProfile, delta: float, eps: float) -> bool:
    """u <= eps C <x>^alpha (1 + <x>^2 + t)^{-(1+2alpha)/2 + delta} at every snapshot, C frozen at t = 0."""
    alpha = prof.alpha
    if not -0.5 < alpha < 0.0:
        raise RejectedInputError(f"supersolution domination needs -1/2 < alpha < 0, got {alpha}")
    if not 0.0 < delta < 0.5 * (1.0 + 2.0 * alpha):
        raise RejectedInputError(f"delta must lie in (0, {(1 + 2 * alpha) / 2}), got {delta}")
    if not eps > 0:
        raise RejectedInputError("eps must be positive")

    x = traj.grid.nodes
    data_bound = 0.5 * eps * japanese_bracket(x) ** (-1.0 - alpha)
    if np.any(traj.fields[0].values > data_bound * (1.0 + 1e-12)):
        raise RejectedInputError("initial data exceeds (eps/2) <x>^{-1-alpha}")

    c_frozen = float(np.max(japanese_bracket(x) ** (-1.0 - alpha) / kernel_envelope(x, 0.0, alpha, delta)))
    holds = True
    for f in traj.fields:
        bound = eps * c_frozen * kernel_envelope(x, f.time, alpha, delta)
        if np.any(f.values > bound * (1.0 + 1e-10)):
            holds = False
            logger.info(f"Domination fails at t={f.time:.4g}")
            break

    log_check("supersolution_domination", holds, f"alpha={alpha}, delta={delta}, eps={eps}, C={c_frozen:.4f}")
    record_check("supersolution_domination", holds)
    return holds


def check_linear_comparison(traj: Trajectory) -> float:
    """Worst normalized deficit max(w - u)/max|u| of the run against its linear companion."""
    companion = traj.meta.get("linear")
    if companion is None:
        raise RejectedInputError("trajectory was evolved without a linear companion")
    worst = 0.0
    for f, g in zip(traj.fields, companion):
        scale = max(f.max_abs(), g.max_abs(), np.finfo(float).tiny)
        worst = max(worst, float(np.max(g.values - f.values)) / scale)
    passed = worst <= 1e-10
    log_check("linear_comparison", passed, f"deficit={worst:.2e}")
    record_check("linear_comparison", passed)
    return worst
