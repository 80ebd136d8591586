import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from app.models.enums import FamilyKind, InequalityKind
from app.models.schemas import HardyRatios, WeightedNashRatios, MemberRatio, InequalitySummary
from app.tools.grid_field import (
    Grid,
    Field,
    gaussian_field,
    bump_field,
    psi_modulated_field,
    central_derivative,
    integrate_nodes,
    weighted_norms,
    quadratic_form,
)
from app.tools.profile import PotentialProfile, japanese_bracket
from app.utils.errors import RejectedInputError
from app.utils.logger import logger, log_check
from app.utils.metrics import record_check

DEFAULT_WIDTHS = tuple(2.0 ** k for k in range(-3, 7))
DEFAULT_CENTERS = (0.0, 5.0, 25.0)
# Member grids resolve both the member width and the unit scale on which psi and V vary.
GAUSSIAN_STEPS_PER_WIDTH = 80
BUMP_STEPS_PER_WIDTH = 320
MAX_MEMBER_SPACING = 0.02
INEQUALITY_GROUPS = {
    "nash": (InequalityKind.NASH,),
    "hardy": (InequalityKind.HARDY_1, InequalityKind.HARDY_2, InequalityKind.HARDY_PROOF),
    "wnash": (InequalityKind.WNASH_1, InequalityKind.WNASH_2),
}


@dataclass(frozen=True)
class TestFamily:
    """Deterministic grid of test functions; each member gets a grid scaled to its width."""

    __test__ = False

    kind: FamilyKind
    widths: Tuple[float, ...] = DEFAULT_WIDTHS
    centers: Tuple[float, ...] = DEFAULT_CENTERS
    amplitudes: Tuple[float, ...] = (1.0,)

    def __len__(self) -> int:
        return len(self.widths) * len(self.centers) * len(self.amplitudes)

    def member_grid(self, width: float, center: float) -> Grid:
        if self.kind == FamilyKind.BUMPS:
            return Grid.with_spacing(abs(center) + 3.0 * width, min(width / BUMP_STEPS_PER_WIDTH, MAX_MEMBER_SPACING))
        return Grid.with_spacing(abs(center) + 10.0 * width, min(width / GAUSSIAN_STEPS_PER_WIDTH, MAX_MEMBER_SPACING))

    def build(self, prof: PotentialProfile, width: float, center: float, amplitude: float) -> Field:
        grid = self.member_grid(width, center)
        if self.kind == FamilyKind.BUMPS:
            return bump_field(grid, amplitude, width, center)
        f = gaussian_field(grid, amplitude, width, center)
        if self.kind == FamilyKind.PSI_MODULATED:
            return psi_modulated_field(f, prof)
        return f

    def members(self, prof: PotentialProfile) -> Iterable[Tuple[str, float, float, float, Field]]:
        for width in self.widths:
            for center in self.centers:
                for amplitude in self.amplitudes:
                    label = f"{self.kind.value}:w={width:g}:c={center:g}:a={amplitude:g}"
                    yield label, width, center, amplitude, self.build(prof, width, center, amplitude)


def default_family(kinds: Sequence[FamilyKind] = tuple(FamilyKind)) -> List[TestFamily]:
    return [TestFamily(kind=kind) for kind in kinds]


def _require_nonneg_alpha(prof: PotentialProfile, name: str) -> None:
    if prof.alpha < 0:
        raise RejectedInputError(f"{name} needs alpha >= 0, got {prof.alpha}")


def _denominators(f: Field, prof: PotentialProfile) -> Tuple[float, float]:
    """(|psi f|_1, |L^{1/2} f|_2^2), rejecting zeros."""
    l1_psi = weighted_norms(f, prof).l1_psi
    form = quadratic_form(f, prof)
    if l1_psi <= 0 or form <= 0:
        raise RejectedInputError("inequality ratios need a nonzero field with a positive quadratic form")
    return l1_psi, form


def nash_ratio(f: Field, prof: PotentialProfile) -> float:
    """|f|_2^{2+4/(1+2a)} / (|psi f|_1^{4/(1+2a)} |L^{1/2} f|_2^2)."""
    _require_nonneg_alpha(prof, "the Nash inequality")
    l1_psi, form = _denominators(f, prof)
    l2 = weighted_norms(f, prof).l2
    power = 4.0 / (1.0 + 2.0 * prof.alpha)
    return l2 ** (2.0 + power) / (l1_psi ** power * form)


def hardy_ratios(f: Field, prof: PotentialProfile, diagnostic: bool = False) -> HardyRatios:
    """|<x>^{-1} f|_2 and |<x>^{-1/2} f|_inf over |L^{1/2} f|_2, plus the ground-state form of the first.

    Only alpha > 1/2 is admissible; diagnostic=True evaluates the same ratios below
    that threshold, where they are unbounded over families.
    """
    alpha = prof.alpha
    if alpha <= 0.5 and not diagnostic:
        raise RejectedInputError(f"Hardy inequalities need alpha > 1/2, got {alpha}")
    proof_bound = 2.0 * max(1.0, 1.0 / (2.0 * alpha - 1.0)) if alpha > 0.5 else math.inf

    if f.max_abs() == 0.0:
        return HardyRatios(r1=0.0, r2=0.0, proof_ratio=0.0, proof_bound=proof_bound, proof_ok=True)

    x = f.x
    bracket = japanese_bracket(x)
    energy = math.sqrt(quadratic_form(f, prof))
    if energy <= 0:
        raise RejectedInputError("Hardy ratios need a positive quadratic form")
    r1 = math.sqrt(integrate_nodes((f.values / bracket) ** 2, f.grid)) / energy
    r2 = float(np.max(np.abs(f.values) / np.sqrt(bracket))) / energy

    star = f.star(prof)
    d_star = central_derivative(star, f.grid.h)
    lhs = math.sqrt(integrate_nodes((bracket ** (alpha - 1.0) * star) ** 2, f.grid))
    rhs = math.sqrt(integrate_nodes((bracket ** alpha * d_star) ** 2, f.grid))
    proof_ratio = lhs / rhs
    return HardyRatios(r1=r1, r2=r2, proof_ratio=proof_ratio, proof_bound=proof_bound,
                       proof_ok=proof_ratio <= proof_bound)


def weighted_nash_ratios(f: Field, prof: PotentialProfile) -> WeightedNashRatios:
    _require_nonneg_alpha(prof, "the weighted Nash inequalities")
    l1_psi, form = _denominators(f, prof)
    psi = prof.psi(f.x)
    l2_weighted = math.sqrt(integrate_nodes((psi ** (2.0 / 3.0) * f.values) ** 2, f.grid))
    linf_weighted = float(np.max(np.abs(psi ** (1.0 / 3.0) * f.values)))
    return WeightedNashRatios(
        w1=l2_weighted ** 6 / (l1_psi ** 4 * form),
        w2=linf_weighted ** 6 / (l1_psi ** 2 * form ** 2),
    )


def member_ratios(f: Field, kinds: Sequence[InequalityKind], prof: PotentialProfile,
                  diagnostic: bool = False) -> Dict[str, float]:
    ratios: Dict[str, float] = {}
    if InequalityKind.NASH in kinds:
        ratios[InequalityKind.NASH.value] = nash_ratio(f, prof)
    if any(k in kinds for k in (InequalityKind.HARDY_1, InequalityKind.HARDY_2, InequalityKind.HARDY_PROOF)):
        hardy = hardy_ratios(f, prof, diagnostic=diagnostic)
        ratios[InequalityKind.HARDY_1.value] = hardy.r1
        ratios[InequalityKind.HARDY_2.value] = hardy.r2
        ratios[InequalityKind.HARDY_PROOF.value] = hardy.proof_ratio
    if InequalityKind.WNASH_1 in kinds or InequalityKind.WNASH_2 in kinds:
        wnash = weighted_nash_ratios(f, prof)
        ratios[InequalityKind.WNASH_1.value] = wnash.w1
        ratios[InequalityKind.WNASH_2.value] = wnash.w2
    return {k.value: ratios[k.value] for k in kinds}


def _as_families(family: Union[TestFamily, Sequence[TestFamily]]) -> List[TestFamily]:
    return [family] if isinstance(family, TestFamily) else list(family)


def evaluate_family(
    family: Union[TestFamily, Sequence[TestFamily]],
    kinds: Sequence[InequalityKind],
    prof: PotentialProfile,
    diagnostic: bool = False,
) -> List[MemberRatio]:
    rows = []
    for fam in _as_families(family):
        for label, width, center, amplitude, f in fam.members(prof):
            rows.append(MemberRatio(
                label=label, family=fam.kind, center=center, width=width, amplitude=amplitude,
                ratios=member_ratios(f, kinds, prof, diagnostic),
            ))
    if not rows:
        raise RejectedInputError("test family is empty")
    return rows


def summarize(rows: List[MemberRatio], kinds: Sequence[InequalityKind], alpha: float) -> InequalitySummary:
    sup_ratio, argmax = {}, {}
    for kind in kinds:
        best = max(rows, key=lambda r: r.ratios[kind.value])
        sup_ratio[kind.value] = best.ratios[kind.value]
        argmax[kind.value] = best.label
    finite = all(math.isfinite(v) for v in sup_ratio.values())
    log_check("inequality_family", finite, f"alpha={alpha}, sup={sup_ratio}")
    record_check("inequality_family", finite)
    return InequalitySummary(alpha=alpha, kinds=list(kinds), sup_ratio=sup_ratio, argmax=argmax, members=len(rows))


def estimate_best_constant(
    family: Union[TestFamily, Sequence[TestFamily]],
    kind: InequalityKind,
    prof: PotentialProfile,
    diagnostic: bool = False,
) -> float:
    """Empirical sup of the raw ratio over the family (a lower bound on the best constant)."""
    if sum(len(f) for f in _as_families(family)) == 0:
        raise RejectedInputError("test family is empty")
    rows = evaluate_family(family, [kind], prof, diagnostic)
    return max(r.ratios[kind.value] for r in rows)


def hardy_failure_diagnostic(prof: PotentialProfile, widths: Optional[Sequence[float]] = None) -> List[Tuple[float, float]]:
    """r1 along widening psi-modulated bumps; grows without bound when alpha <= 1/2."""
    widths = widths or [2.0 ** k for k in range(0, 11)]
    family = TestFamily(kind=FamilyKind.BUMPS, widths=tuple(widths), centers=(0.0,))
    series = []
    for _, width, _, _, bump in family.members(prof):
        series.append((width, hardy_ratios(psi_modulated_field(bump, prof), prof, diagnostic=True).r1))
    logger.info(f"Hardy diagnostic at alpha={prof.alpha}: r1 from {series[0][1]:.4g} to {series[-1][1]:.4g}")
    return series
