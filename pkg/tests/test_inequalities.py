import math

import pytest
from scipy import integrate

from app.models.enums import FamilyKind, InequalityKind
from app.tools.grid_field import Grid, gaussian_field, psi_modulated_field, quadratic_form_report, zero_field
from app.tools.inequalities import (
    TestFamily,
    default_family,
    nash_ratio,
    hardy_ratios,
    weighted_nash_ratios,
    evaluate_family,
    summarize,
    estimate_best_constant,
    hardy_failure_diagnostic,
)
from app.tools.profile import make_profile
from app.utils.errors import RejectedInputError


@pytest.fixture
def fine_grid():
    return Grid.with_spacing(10.0, 0.01)


def test_nash_ratio_is_scale_invariant(fine_grid):
    prof = make_profile(0.5)
    f = gaussian_field(fine_grid, 1.0, 1.3)
    assert nash_ratio(f.scaled(3.0), prof) == pytest.approx(nash_ratio(f, prof), rel=1e-12)


def test_nash_ratio_of_gaussian_without_potential(fine_grid):
    assert nash_ratio(gaussian_field(fine_grid), make_profile(0.0)) == pytest.approx(1.0 / (2.0 * math.pi), rel=1e-6)


def test_nash_rejects_negative_alpha(fine_grid):
    with pytest.raises(RejectedInputError):
        nash_ratio(gaussian_field(fine_grid), make_profile(-0.1))
    with pytest.raises(RejectedInputError):
        nash_ratio(zero_field(fine_grid), make_profile(0.0))


@pytest.mark.parametrize("alpha,bound", [(0.75, 4.0), (1.0, 2.0), (2.0, 2.0)])
def test_hardy_proof_bound(fine_grid, alpha, bound):
    assert hardy_ratios(zero_field(fine_grid), make_profile(alpha)).proof_bound == pytest.approx(bound)


@pytest.mark.parametrize("alpha", [0.75, 1.0, 2.0])
def test_hardy_ratios_of_modulated_gaussian(fine_grid, alpha):
    prof = make_profile(alpha)
    report = hardy_ratios(psi_modulated_field(gaussian_field(fine_grid), prof), prof)
    assert report.proof_ok
    assert 0.0 < report.proof_ratio < report.proof_bound
    assert report.r1 > 0 and report.r2 > 0


def test_hardy_needs_alpha_above_half(fine_grid):
    with pytest.raises(RejectedInputError):
        hardy_ratios(gaussian_field(fine_grid), make_profile(0.4))
    report = hardy_ratios(gaussian_field(fine_grid), make_profile(0.4), diagnostic=True)
    assert math.isinf(report.proof_bound)


def test_hardy_ratio_grows_below_threshold():
    series = hardy_failure_diagnostic(make_profile(0.25))
    assert series[-1][1] > 2.0 * series[0][1]


def test_weighted_nash_matches_nash_without_potential(fine_grid):
    prof = make_profile(0.0)
    f = gaussian_field(fine_grid, 1.0, 0.8)
    assert weighted_nash_ratios(f, prof).w1 == pytest.approx(nash_ratio(f, prof), rel=1e-10)


def test_singleton_family():
    prof = make_profile(0.5)
    family = TestFamily(kind=FamilyKind.GAUSSIANS, widths=(1.0,), centers=(0.0,))
    rows = evaluate_family(family, [InequalityKind.NASH], prof)
    assert len(rows) == 1
    summary = summarize(rows, [InequalityKind.NASH], 0.5)
    assert summary.members == 1
    assert summary.argmax["nash"] == rows[0].label
    assert summary.sup_ratio["nash"] == rows[0].ratios["nash"]


def test_larger_family_never_lowers_the_estimate():
    prof = make_profile(0.5)
    small = TestFamily(kind=FamilyKind.PSI_MODULATED, widths=(1.0,), centers=(0.0,))
    large = TestFamily(kind=FamilyKind.PSI_MODULATED, widths=(0.5, 1.0, 4.0), centers=(0.0, 5.0))
    assert estimate_best_constant(large, InequalityKind.NASH, prof) >= \
        estimate_best_constant(small, InequalityKind.NASH, prof)


def test_empty_family_is_rejected():
    empty = TestFamily(kind=FamilyKind.BUMPS, widths=())
    with pytest.raises(RejectedInputError):
        estimate_best_constant(empty, InequalityKind.NASH, make_profile(0.0))
    with pytest.raises(RejectedInputError):
        evaluate_family([], [InequalityKind.NASH], make_profile(0.0))


@pytest.mark.parametrize("alpha", [0.5, 1.0])
def test_default_family_members_are_resolved(alpha):
    prof = make_profile(alpha)
    for family in default_family():
        for label, _, _, _, f in family.members(prof):
            report = quadratic_form_report(f, prof)
            assert report.agrees, f"{label}: rel_diff={report.rel_diff:.2e}"


@pytest.mark.parametrize("group,alpha", [
    ([InequalityKind.NASH], 0.5),
    ([InequalityKind.WNASH_1, InequalityKind.WNASH_2], 0.5),
    ([InequalityKind.HARDY_1, InequalityKind.HARDY_2, InequalityKind.HARDY_PROOF], 1.0),
])
def test_default_family_ratios_are_finite(group, alpha):
    rows = evaluate_family(default_family(), group, make_profile(alpha))
    assert len(rows) == 90
    for row in rows:
        assert all(math.isfinite(v) and v > 0 for v in row.ratios.values()), row.label
    summary = summarize(rows, group, alpha)
    assert all(math.isfinite(v) for v in summary.sup_ratio.values())


@pytest.mark.parametrize("alpha", [0.75, 1.0, 2.0])
def test_hardy_family_stays_under_proof_bound(alpha):
    prof = make_profile(alpha)
    rows = evaluate_family(default_family(), [InequalityKind.HARDY_PROOF], prof)
    bound = hardy_ratios(zero_field(Grid.with_spacing(1.0, 0.5)), prof).proof_bound
    assert max(r.ratios[InequalityKind.HARDY_PROOF.value] for r in rows) <= bound


@pytest.mark.parametrize("factor", [0.1, 10.0])
def test_weighted_nash_ratios_ignore_amplitude(fine_grid, factor):
    prof = make_profile(0.5)
    f = psi_modulated_field(gaussian_field(fine_grid, 1.0, 1.1), prof)
    base, scaled = weighted_nash_ratios(f, prof), weighted_nash_ratios(f.scaled(factor), prof)
    assert scaled.w1 == pytest.approx(base.w1, rel=1e-12)
    assert scaled.w2 == pytest.approx(base.w2, rel=1e-12)


@pytest.mark.parametrize("width", [0.5, 2.0, 8.0])
def test_nash_ratio_is_dilation_invariant_without_potential(width):
    prof = make_profile(0.0)
    base = gaussian_field(Grid.with_spacing(10.0, 1.0 / 200.0), 1.0, 1.0)
    dilated = gaussian_field(Grid.with_spacing(10.0 * width, width / 200.0), 1.0, width)
    assert nash_ratio(dilated, prof) == pytest.approx(nash_ratio(base, prof), rel=1e-6)


def test_hardy_ratio_matches_quadrature():
    prof = make_profile(1.0)
    f = gaussian_field(Grid.with_spacing(12.0, 0.005))
    weighted, _ = integrate.quad(lambda x: math.exp(-x * x) / (1.0 + x * x), -math.inf, math.inf)
    form, _ = integrate.quad(lambda x: (x * x + prof.V(x)) * math.exp(-x * x), -math.inf, math.inf)
    assert hardy_ratios(f, prof).r1 == pytest.approx(math.sqrt(weighted / form), abs=1e-4)
