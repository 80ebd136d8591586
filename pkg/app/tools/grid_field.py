import math
from dataclasses import dataclass, field as dataclass_field
from functools import cached_property
from typing import Optional

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid

from app.config import config
from app.models.schemas import SimConfig, WeightedNorms, QuadraticFormReport
from app.tools.profile import PotentialProfile, japanese_bracket
from app.utils.errors import RejectedInputError, DomainTruncationError
from app.utils.logger import logger


@dataclass(frozen=True)
class Grid:
    """Symmetric uniform mesh on [-xmax, xmax]; n odd so that x = 0 is a node."""

    xmax: float
    n: int

    def __post_init__(self):
        if not (self.xmax > 0 and math.isfinite(self.xmax)):
            raise RejectedInputError(f"xmax must be positive and finite, got {self.xmax}")
        if self.n < 5 or self.n % 2 == 0:
            raise RejectedInputError(f"n must be an odd integer >= 5, got {self.n}")

    @property
    def h(self) -> float:
        return 2.0 * self.xmax / (self.n - 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        # exactly antisymmetric: nodes[k] == -nodes[n-1-k]
        return self.h * (np.arange(self.n) - (self.n - 1) // 2).astype(float)

    @property
    def center(self) -> int:
        return (self.n - 1) // 2

    @classmethod
    def with_spacing(cls, xmax: float, h: float) -> "Grid":
        return cls(xmax=xmax, n=2 * int(round(xmax / h)) + 1)

    @classmethod
    def from_config(cls, cfg: SimConfig, t_end: Optional[float] = None) -> "Grid":
        xmax = cfg.resolved_xmax(t_end)
        return cls(xmax=xmax, n=cfg.resolved_n(xmax))

    def refined(self) -> "Grid":
        """Same domain, half the spacing."""
        return Grid(xmax=self.xmax, n=2 * self.n - 1)


@dataclass
class Field:
    """Samples of a function on a grid at a given time."""

    grid: Grid
    values: np.ndarray
    time: float = 0.0
    meta: dict = dataclass_field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n,):
            raise RejectedInputError(
                f"field has shape {self.values.shape}, grid expects ({self.grid.n},)"
            )

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def star(self, profile: PotentialProfile) -> np.ndarray:
        """u_* = u / psi."""
        return self.values / profile.psi(self.x)

    def scaled(self, factor: float) -> "Field":
        return Field(self.grid, factor * self.values, self.time, dict(self.meta))

    def with_values(self, values: np.ndarray, time: Optional[float] = None) -> "Field":
        return Field(self.grid, values, self.time if time is None else time, dict(self.meta))

    def boundary_ratio(self) -> float:
        """max(|f| at both ends) / max|f|; 0 for the zero field."""
        peak = self.max_abs()
        if peak == 0.0:
            return 0.0
        return max(abs(self.values[0]), abs(self.values[-1])) / peak


# Field constructors

def zero_field(grid: Grid) -> Field:
    return Field(grid, np.zeros(grid.n))


def gaussian_field(grid: Grid, amplitude: float = 1.0, width: float = 1.0, center: float = 0.0) -> Field:
    x = grid.nodes
    return Field(grid, amplitude * np.exp(-0.5 * ((x - center) / width) ** 2),
                 meta={"shape": "gaussian", "width": width, "center": center})


def bump_profile(s: np.ndarray) -> np.ndarray:
    """exp(1 - 1/(1 - s^2)) on |s| < 1, zero outside; equals 1 at s = 0."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return out


def bump_field(grid: Grid, amplitude: float = 1.0, width: float = 1.0, center: float = 0.0) -> Field:
    return Field(grid, amplitude * bump_profile((grid.nodes - center) / width),
                 meta={"shape": "bump", "width": width, "center": center})


def psi_modulated_field(base: Field, profile: PotentialProfile) -> Field:
    meta = dict(base.meta)
    meta["psi_modulated"] = True
    return Field(base.grid, profile.psi(base.x) * base.values, base.time, meta)


def power_field(grid: Grid, exponent: float, amplitude: float = 1.0) -> Field:
    """amplitude * <x>^exponent."""
    return Field(grid, amplitude * japanese_bracket(grid.nodes) ** exponent,
                 meta={"shape": "power", "exponent": exponent})


# Norms and the quadratic form

def integrate_nodes(values: np.ndarray, grid: Grid) -> float:
    return float(trapezoid(values, dx=grid.h))


def weighted_norms(f: Field, prof: PotentialProfile) -> WeightedNorms:
    if not f.is_finite():
        raise RejectedInputError("weighted norms need a finite field")
    psi = prof.psi(f.x)
    values = f.values
    return WeightedNorms(
        l1_psi=integrate_nodes(psi * np.abs(values), f.grid),
        linf_psi_inv=float(np.max(np.abs(values / psi))),
        linf=float(np.max(np.abs(values))),
        l2=math.sqrt(integrate_nodes(values * values, f.grid)),
    )


def central_derivative(values: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order central differences; second order at the two outermost nodes."""
    d = np.empty_like(values)
    d[2:-2] = (values[:-4] - 8.0 * values[1:-3] + 8.0 * values[3:-1] - values[4:]) / (12.0 * h)
    d[1] = (values[2] - values[0]) / (2.0 * h)
    d[-2] = (values[-1] - values[-3]) / (2.0 * h)
    d[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h)
    d[-1] = (3.0 * values[-1] - 4.0 * values[-2] + values[-3]) / (2.0 * h)
    return d


def _require_boundary_decay(f: Field) -> None:
    ratio = f.boundary_ratio()
    if ratio > config.BOUNDARY_DECAY_TOL:
        raise DomainTruncationError(
            f"field does not decay at the boundary: |f(+-xmax)|/max|f| = {ratio:.3e}"
        )


def quadratic_form_report(f: Field, prof: PotentialProfile) -> QuadraticFormReport:
    """Both formulations of <Lf, f>: int(f'^2 + V f^2) and int psi^2 ((f/psi)')^2."""
    _require_boundary_decay(f)
    x, h = f.x, f.grid.h
    if f.max_abs() == 0.0:
        return QuadraticFormReport(direct=0.0, ground_state=0.0, rel_diff=0.0, agrees=True)

    df = central_derivative(f.values, h)
    direct = integrate_nodes(df * df + prof.V(x) * f.values ** 2, f.grid)

    psi = prof.psi(x)
    d_star = central_derivative(f.values / psi, h)
    ground_state = integrate_nodes((psi * d_star) ** 2, f.grid)

    scale = max(abs(ground_state), np.finfo(float).tiny)
    rel_diff = abs(direct - ground_state) / scale
    return QuadraticFormReport(
        direct=direct, ground_state=ground_state, rel_diff=rel_diff,
        agrees=rel_diff <= config.FORM_AGREEMENT_TOL,
    )


def quadratic_form(f: Field, prof: PotentialProfile) -> float:
    report = quadratic_form_report(f, prof)
    if not report.agrees:
        logger.warning(
            f"Quadratic form formulations disagree (rel {report.rel_diff:.2e}) at h={f.grid.h}; "
            f"grid may be too coarse for this field"
        )
    return report.ground_state


def energy_norm(f: Field, prof: PotentialProfile) -> float:
    """|L^{1/2} f|_2."""
    return math.sqrt(max(quadratic_form(f, prof), 0.0))


def field_to_frame(f: Field, prof: PotentialProfile) -> pd.DataFrame:
    return pd.DataFrame({"x": f.x, "u": f.values, "u_over_psi": f.star(prof)})
