import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from app.config import config
from app.models.enums import NormKind
from app.models.schemas import TestFnBound, FujitaFunctional, LogGrowthReport
from app.services.linear_semigroup import Trajectory
from app.tools.grid_field import integrate_nodes
from app.tools.profile import PotentialProfile, japanese_bracket
from app.utils.errors import RejectedInputError
from app.utils.fitting import linear_fit, window_mask, final_decade
from app.utils.logger import log_check
from app.utils.metrics import record_check

ArrayLike = Union[float, np.ndarray]


# Cutoff profile: eta = 1 on s <= 1/2, 0 on s >= 1, 1 - S(2s - 1) in between

def _smoothstep(t: np.ndarray) -> np.ndarray:
    return t ** 3 * (10.0 - 15.0 * t + 6.0 * t * t)


def eta(s: ArrayLike) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    t = np.clip(2.0 * s - 1.0, 0.0, 1.0)
    return 1.0 - _smoothstep(t)


def eta_prime(s: ArrayLike) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    t = np.clip(2.0 * s - 1.0, 0.0, 1.0)
    return -2.0 * 30.0 * t * t * (1.0 - t) ** 2


def eta_second(s: ArrayLike) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    t = np.clip(2.0 * s - 1.0, 0.0, 1.0)
    return -4.0 * 60.0 * t * (2.0 * t - 1.0) * (t - 1.0)


def eta_star(s: ArrayLike) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    return np.where(s > 0.5, eta(s), 0.0)


class TestFunctionValues(NamedTuple):
    __test__ = False

    xi: np.ndarray
    phi: np.ndarray
    phi_star: np.ndarray


@dataclass(frozen=True)
class TestFunction:
    """Phi_R(x, t) = eta((x^2 + t)/R)^{2p'} and its starred companion."""

    __test__ = False

    R: float
    p: float

    def __post_init__(self):
        if not self.R > 0:
            raise RejectedInputError(f"R must be positive, got {self.R}")
        if not self.p > 1:
            raise RejectedInputError(f"p must exceed 1, got {self.p}")

    @property
    def p_conj(self) -> float:
        return self.p / (self.p - 1.0)

    @property
    def k(self) -> float:
        return 2.0 * self.p_conj

    def xi(self, x: ArrayLike, t: ArrayLike) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (x * x + np.asarray(t, dtype=float)) / self.R

    def phi(self, x: ArrayLike, t: ArrayLike) -> np.ndarray:
        return eta(self.xi(x, t)) ** self.k

    def phi_star(self, x: ArrayLike, t: ArrayLike) -> np.ndarray:
        return eta_star(self.xi(x, t)) ** self.k

    def phi_t(self, x: ArrayLike, t: ArrayLike) -> np.ndarray:
        s = self.xi(x, t)
        return self.k * eta(s) ** (self.k - 1.0) * eta_prime(s) / self.R

    def phi_x(self, x: ArrayLike, t: ArrayLike) -> np.ndarray:
        s = self.xi(x, t)
        return self.k * eta(s) ** (self.k - 1.0) * eta_prime(s) * 2.0 * np.asarray(x) / self.R

    def phi_xx(self, x: ArrayLike, t: ArrayLike) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        s = self.xi(x, t)
        e, e1, e2 = eta(s), eta_prime(s), eta_second(s)
        k, R = self.k, self.R
        chain = (2.0 * x / R) ** 2
        return (k * (k - 1.0) * e ** (k - 2.0) * e1 ** 2 * chain
                + k * e ** (k - 1.0) * e2 * chain
                + k * e ** (k - 1.0) * e1 * 2.0 / R)

    def lhs(self, prof: PotentialProfile, x: ArrayLike, t: ArrayLike) -> np.ndarray:
        """|d_t(psi Phi)| + |L(psi Phi)| with L = -d_x^2 + V, all terms kept."""
        x = np.asarray(x, dtype=float)
        psi, d_psi, dd_psi = prof.psi(x), prof.psi_prime(x), prof.psi_second(x)
        phi = self.phi(x, t)
        second = dd_psi * phi + 2.0 * d_psi * self.phi_x(x, t) + psi * self.phi_xx(x, t)
        return np.abs(psi * self.phi_t(x, t)) + np.abs(-second + prof.V(x) * psi * phi)

    def normalized_ratio(self, prof: PotentialProfile, x: ArrayLike, t: ArrayLike) -> np.ndarray:
        """R (|d_t(psi Phi)| + |L(psi Phi)|) / (psi (Phi*)^{1/p}) in closed form.

        Powers of eta cancel against (Phi*)^{1/p} = eta^{k-2}; the plateau, where
        both sides vanish, is assigned 0.
        """
        x = np.asarray(x, dtype=float)
        s = self.xi(x, t)
        e, e1, e2 = eta(s), eta_prime(s), eta_second(s)
        k, R = self.k, self.R
        x_log_psi = x * prof.log_derivative(x)
        time_part = np.abs(k * e * e1)
        space_part = np.abs(
            4.0 * k * x_log_psi * e * e1
            + k * (k - 1.0) * e1 ** 2 * 4.0 * x * x / R
            + k * e * e2 * 4.0 * x * x / R
            + 2.0 * k * e * e1
        )
        transition = (s > 0.5) & (s < 1.0)
        return np.where(transition, time_part + space_part, 0.0)


def eval_test_function(R: float, p: float, x: ArrayLike, t: ArrayLike) -> TestFunctionValues:
    tf = TestFunction(R=R, p=p)
    return TestFunctionValues(xi=tf.xi(x, t), phi=tf.phi(x, t), phi_star=tf.phi_star(x, t))


def verify_testfn_bound(prof: PotentialProfile, R: float, p: float, n_x: int = 401, n_t: int = 201) -> TestFnBound:
    """Largest normalized ratio over x = sqrt(R) s, t = R tau with s in [-1, 1], tau in [0, 1]."""
    if R < 1:
        raise RejectedInputError(f"R must be at least 1, got {R}")
    if n_x < 1 or n_t < 1:
        raise RejectedInputError("sample set is empty")
    tf = TestFunction(R=R, p=p)
    s, tau = np.meshgrid(np.linspace(-1.0, 1.0, n_x), np.linspace(0.0, 1.0, n_t), indexing="ij")
    x, t = math.sqrt(R) * s, R * tau

    ratio = tf.normalized_ratio(prof, x, t)
    plateau = tf.xi(x, t) <= 0.5
    plateau_residual = float(np.max(tf.lhs(prof, x[plateau], t[plateau]))) if plateau.any() else 0.0

    report = TestFnBound(
        alpha=prof.alpha, p=p, R=R,
        c_t_estimate=float(ratio.max()),
        plateau_residual_max=plateau_residual,
        n_samples=int(ratio.size),
    )
    passed = math.isfinite(report.c_t_estimate) and plateau_residual <= 1e-12
    log_check("testfn_bound", passed, f"alpha={prof.alpha}, p={p}, R={R}, C_T={report.c_t_estimate:.4f}")
    record_check("testfn_bound", passed)
    return report


def fujita_functional(
    traj: Trajectory,
    prof: PotentialProfile,
    m: float,
    p: float,
    R: float,
    horizon: Optional[float] = None,
) -> FujitaFunctional:
    """Space-time quadratures of the test-function identity terms along a trajectory.

    Integration runs over snapshots with t <= min(R, horizon); Phi_R vanishes for
    t >= R so later snapshots carry nothing.
    """
    tf = TestFunction(R=R, p=p)
    x = traj.grid.nodes
    weight = japanese_bracket(x) ** (-m) * prof.psi(x)
    limit = min(R, horizon) if horizon is not None else R

    u0 = traj.fields[0]
    initial = integrate_nodes(u0.values * prof.psi(x) * tf.phi(x, 0.0), traj.grid)

    times, weighted, starred = [], [], []
    for f in traj.fields:
        if f.time > limit * (1.0 + 1e-12):
            break
        power = np.maximum(f.values, 0.0) ** p * weight
        times.append(f.time)
        weighted.append(integrate_nodes(power * tf.phi(x, f.time), traj.grid))
        starred.append(integrate_nodes(power * tf.phi_star(x, f.time), traj.grid))

    time_integral = lambda values: float(trapezoid(values, times)) if len(times) > 1 else 0.0
    return FujitaFunctional(
        R=R,
        initial_term=initial,
        weighted_p_integral=time_integral(weighted),
        starred_p_integral=time_integral(starred),
        truncated=traj.times[-1] < limit,
    )


def log_growth_check(traj: Trajectory, prof: PotentialProfile) -> LogGrowthReport:
    """Fit Y(t) = int_0^t |v_*|_inf^{2/(1+2alpha)} ds against log(1+t) over the final decade."""
    alpha = prof.alpha
    if not alpha > -0.5:
        raise RejectedInputError(f"log-growth law needs alpha > -1/2, got {alpha}")
    t = traj.t_array
    t_end = t[-1] if t.size else 0.0
    window = final_decade(t_end)
    mask = window_mask(t, window)
    if t.size < 2 or mask.sum() < config.MIN_FIT_SAMPLES:
        raise RejectedInputError("trajectory too short for a log-growth fit")

    exponent = 2.0 / (1.0 + 2.0 * alpha)
    integrand = traj.norm_series(NormKind.LINF_PSI_INV) ** exponent
    Y = cumulative_trapezoid(integrand, t, initial=0.0)
    log_t = np.log1p(t)

    slope = linear_fit(log_t[mask], Y[mask])[0]
    middle = math.sqrt(window[0] * window[1])
    early = mask & (t <= middle)
    late = mask & (t >= middle)
    early_slope = linear_fit(log_t[early], Y[early])[0] if early.sum() >= 2 else slope
    late_slope = linear_fit(log_t[late], Y[late])[0] if late.sum() >= 2 else slope

    f0 = traj.fields[0]
    psi = prof.psi(f0.x)
    mass = integrate_nodes(f0.values * psi, f0.grid)
    abs_mass = integrate_nodes(np.abs(f0.values) * psi, f0.grid)
    hypothesis_holds = abs_mass > 0 and abs(mass) > 1e-10 * abs_mass
    normalized = slope / abs(mass) ** exponent if hypothesis_holds else None

    persistence = late_slope / early_slope if early_slope > 0 else 0.0
    stable = persistence >= config.LOG_GROWTH_STABILITY
    sublogarithmic = persistence < 0.5
    passes = bool(hypothesis_holds and normalized is not None
                  and normalized >= config.LOG_GROWTH_MIN_SLOPE and stable)

    report = LogGrowthReport(
        alpha=alpha,
        fit_slope_vs_logt=slope,
        normalized_slope=normalized,
        early_slope=early_slope,
        late_slope=late_slope,
        hypothesis_holds=hypothesis_holds,
        sublogarithmic=sublogarithmic,
        stable=stable,
        passes=passes,
    )
    if hypothesis_holds:
        log_check("log_growth", passes, f"alpha={alpha}, slope={slope:.4g}, normalized={normalized:.4g}")
        record_check("log_growth", passes)
    return report
