import math

import numpy as np
import pytest

from app.models.enums import NormKind
from app.models.schemas import SimConfig
from app.services.finite_volume import FluxOperator
from app.services.linear_semigroup import (
    Trajectory,
    snapshot_schedule,
    evolve_linear,
    check_contraction,
    fit_decay_exponent,
    smoothing_fit,
    predicted_decay_slope,
    kernel_envelope,
    kernel_upper_bound_check,
)
from app.tools.grid_field import Grid, Field, gaussian_field, bump_field, psi_modulated_field, zero_field
from app.tools.profile import make_profile
from app.utils.errors import RejectedInputError


def test_snapshot_schedule_is_geometric():
    cfg = SimConfig(snapshot_t0=0.1, snapshot_ratio=2.0)
    times = snapshot_schedule(1.0, cfg, extra_times=(0.5, 3.0))
    np.testing.assert_allclose(times, [0.1, 0.2, 0.4, 0.5, 0.8, 1.0])


def test_flux_operator_conserves_interior_mass(small_grid):
    op = FluxOperator(small_grid, make_profile(1.0))
    v = np.ones(op.size)
    v[:3] = v[-3:] = 0.0
    # K v sums to zero when v vanishes next to the boundary
    assert abs(float(np.sum(op.apply(v)))) <= 1e-12 * float(np.sum(np.abs(op.apply(v))) + 1.0)


def test_heat_kernel_closed_form(heat_config, flat_profile):
    sigma = 3.0
    grid = Grid.from_config(heat_config)
    traj = evolve_linear(gaussian_field(grid, 1.0, sigma), heat_config.t_end, flat_profile, heat_config)
    x = grid.nodes
    for f in traj.fields[1:]:
        s2 = sigma ** 2 + 2.0 * f.time
        exact = sigma / math.sqrt(s2) * np.exp(-x ** 2 / (2.0 * s2))
        assert np.max(np.abs(f.values - exact)) / np.max(exact) <= 1e-4
    assert not traj.boundary_leak


@pytest.mark.parametrize("alpha", [0.0, 1.0])
def test_contraction_and_positivity(alpha):
    cfg = SimConfig(xmax=40.0, h=0.2, t_end=50.0)
    prof = make_profile(alpha)
    grid = Grid.from_config(cfg)
    traj = evolve_linear(bump_field(grid, 1.0, 3.0), cfg.t_end, prof, cfg)
    report = check_contraction(traj, prof)
    assert report.ok and report.l1_ok and report.linf_ok and report.positivity_ok
    assert report.min_relative_value >= -1e-12


def test_sign_changing_data_keeps_sup_contraction():
    cfg = SimConfig(xmax=40.0, h=0.2, t_end=20.0)
    prof = make_profile(0.5)
    grid = Grid.from_config(cfg)
    f0 = Field(grid, gaussian_field(grid, 1.0, 1.0, -2.0).values - gaussian_field(grid, 0.7, 1.5, 3.0).values)
    report = check_contraction(evolve_linear(f0, cfg.t_end, prof, cfg), prof)
    assert report.linf_ok


def test_zero_data_stays_zero(small_grid):
    prof = make_profile(0.5)
    traj = evolve_linear(zero_field(small_grid), 5.0, prof, SimConfig(t_end=5.0))
    assert all(v == 0.0 for v in traj.norm_series(NormKind.LINF))
    assert check_contraction(traj, prof).ok


def test_star_maximum_principle_for_modulated_data():
    cfg = SimConfig(xmax=30.0, h=0.2, t_end=30.0)
    prof = make_profile(0.7)
    grid = Grid.from_config(cfg)
    f0 = psi_modulated_field(bump_field(grid, 1.0, 4.0), prof)
    traj = evolve_linear(f0, cfg.t_end, prof, cfg)
    peak = float(np.max(f0.star(prof)))
    assert max(float(np.max(s)) for s in traj.star_values()) <= peak * (1.0 + 1e-12)


def test_rejects_bad_inputs(small_grid, flat_profile):
    with pytest.raises(RejectedInputError):
        evolve_linear(gaussian_field(small_grid), 0.0, flat_profile)
    values = np.zeros(small_grid.n)
    values[0] = math.inf
    with pytest.raises(RejectedInputError):
        evolve_linear(Field(small_grid, values), 1.0, flat_profile)


def test_constant_series_has_zero_slope(small_grid, flat_profile):
    traj = Trajectory(grid=small_grid, profile=flat_profile)
    for k, t in enumerate([1.0, 2.0, 4.0, 8.0, 16.0, 32.0]):
        traj.record(bump_field(small_grid).with_values(bump_field(small_grid).values, time=t), k)
    assert fit_decay_exponent(traj, NormKind.LINF, (1.0, 32.0)) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(RejectedInputError):
        fit_decay_exponent(traj, NormKind.LINF, (1.0, 3.0))


@pytest.mark.parametrize("alpha,expected", [(0.0, -0.5), (0.5, -1.0), (1.0, -1.5)])
def test_linear_decay_law(decay_config, alpha, expected):
    prof = make_profile(alpha)
    grid = Grid.from_config(decay_config)
    traj = evolve_linear(gaussian_field(grid, 1.0, 1.0), decay_config.t_end, prof, decay_config)
    slope = fit_decay_exponent(traj, NormKind.LINF_PSI_INV, (10.0, 1000.0))
    assert slope == pytest.approx(expected, abs=0.1)
    fit = smoothing_fit(traj, 1.0, math.inf, (10.0, 1000.0))
    assert fit.predicted_slope == pytest.approx(expected)
    assert fit.fitted_slope == pytest.approx(expected, abs=0.1)
    assert not fit.extrapolation


def test_l1_to_l2_and_l2_to_linf_rates(decay_config):
    prof = make_profile(0.0)
    grid = Grid.from_config(decay_config)
    traj = evolve_linear(gaussian_field(grid, 1.0, 1.0), decay_config.t_end, prof, decay_config)
    assert smoothing_fit(traj, 1.0, 2.0, (10.0, 1000.0)).fitted_slope == pytest.approx(-0.25, abs=0.1)
    assert smoothing_fit(traj, 2.0, math.inf, (10.0, 1000.0)).fitted_slope == pytest.approx(-0.25, abs=0.1)


def test_negative_alpha_fit_is_labelled_extrapolation():
    cfg = SimConfig(h=0.5, linear_dt_max=0.125, t_end=200.0)
    prof = make_profile(-0.2)
    traj = evolve_linear(gaussian_field(Grid.from_config(cfg), 1.0, 1.0), cfg.t_end, prof, cfg)
    assert smoothing_fit(traj, 1.0).extrapolation


def test_predicted_slopes():
    assert predicted_decay_slope(0.0, 1.0, math.inf) == -0.5
    assert predicted_decay_slope(1.0, 1.0, 2.0) == pytest.approx(-0.75)
    assert predicted_decay_slope(0.5, 2.0, math.inf) == pytest.approx(-0.5)


def test_kernel_envelope_at_time_zero():
    x = np.linspace(-100, 100, 2001)
    alpha, delta = 0.0, 0.05
    ratio = (1.0 + x * x) ** (-0.5 * (1.0 + alpha)) / kernel_envelope(x, 0.0, alpha, delta)
    assert float(np.max(ratio)) == pytest.approx(2.0 ** (0.5 * (1.0 + 2.0 * alpha) - delta), rel=1e-12)


def test_kernel_bound_rejects_bad_ranges():
    with pytest.raises(RejectedInputError):
        kernel_upper_bound_check(make_profile(0.7))
    with pytest.raises(RejectedInputError):
        kernel_upper_bound_check(make_profile(0.0), delta=0.6)


def test_kernel_bound_is_stable_for_admissible_delta():
    cfg = SimConfig(h=0.5, linear_dt_max=0.125, t_end=1000.0)
    report = kernel_upper_bound_check(make_profile(0.0), 0.05, cfg=cfg)
    assert report.stable
    assert report.c_initial == pytest.approx(2.0 ** 0.45, rel=1e-6)
    assert math.isfinite(report.c_bound)
    assert not report.boundary_leak


def test_kernel_bound_flags_a_domain_too_small_for_the_core():
    cfg = SimConfig(h=0.5, linear_dt_max=0.125, t_end=1000.0, xmax=60.0)
    report = kernel_upper_bound_check(make_profile(0.0), 0.05, cfg=cfg)
    assert report.boundary_leak


def test_kernel_bound_detects_illegal_profile_exponent():
    cfg = SimConfig(h=0.5, linear_dt_max=0.125, t_end=1000.0)
    report = kernel_upper_bound_check(make_profile(0.0), -0.05, cfg=cfg, diagnostic=True)
    assert not report.stable
    assert report.growth_exponent > 0
