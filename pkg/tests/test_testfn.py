import numpy as np
import pytest

from app.models.schemas import SimConfig, SourceSpec
from app.services.linear_semigroup import evolve_linear
from app.services.nonlinear_solver import evolve_nonlinear
from app.tools.grid_field import Grid, Field, gaussian_field, zero_field
from app.tools.profile import make_profile
from app.tools.testfn import (
    eta,
    eval_test_function,
    verify_testfn_bound,
    fujita_functional,
    log_growth_check,
)
from app.utils.errors import RejectedInputError


def test_cutoff_profile():
    np.testing.assert_allclose(eta([0.0, 0.5, 0.75, 1.0, 2.0]), [1.0, 1.0, 0.5, 0.0, 0.0])


def test_test_function_values():
    values = eval_test_function(4.0, 2.0, np.array([0.0, 0.0, 0.0]), np.array([0.0, 3.0, 4.0]))
    np.testing.assert_allclose(values.xi, [0.0, 0.75, 1.0])
    np.testing.assert_allclose(values.phi, [1.0, 0.5 ** 4, 0.0])
    np.testing.assert_allclose(values.phi_star, [0.0, 0.5 ** 4, 0.0])


@pytest.mark.parametrize("R,p", [(0.0, 2.0), (4.0, 1.0)])
def test_test_function_rejects(R, p):
    with pytest.raises(RejectedInputError):
        eval_test_function(R, p, 0.0, 0.0)


def test_plateau_residual_vanishes():
    report = verify_testfn_bound(make_profile(0.3), 100.0, 2.0)
    assert report.plateau_residual_max <= 1e-12
    assert np.isfinite(report.c_t_estimate) and report.c_t_estimate > 0


@pytest.mark.parametrize("alpha,p", [(0.0, 2.0), (0.3, 2.0), (1.0, 3.0)])
def test_constant_is_uniform_in_R(alpha, p):
    prof = make_profile(alpha)
    estimates = [verify_testfn_bound(prof, R, p).c_t_estimate for R in (10.0, 100.0, 1000.0)]
    assert max(estimates) < 1.2 * min(estimates)


def test_bound_rejects_small_R():
    with pytest.raises(RejectedInputError):
        verify_testfn_bound(make_profile(0.0), 0.5, 2.0)


def test_functional_of_zero_solution():
    grid = Grid(20.0, 201)
    traj = evolve_linear(zero_field(grid), 5.0, make_profile(0.0))
    result = fujita_functional(traj, make_profile(0.0), 0.0, 2.0, 10.0)
    assert result.initial_term == 0.0
    assert result.weighted_p_integral == 0.0
    assert result.starred_p_integral == 0.0
    assert result.truncated


def test_starred_integral_shrinks_with_R_above_critical_exponent():
    cfg = SimConfig(h=0.5, t_end=1.0e4)
    prof = make_profile(0.0)
    _, traj = evolve_nonlinear(gaussian_field(Grid.from_config(cfg), 0.01, 2.0), 4.0, 0.0, SourceSpec(), prof, cfg)
    starred = [fujita_functional(traj, prof, 0.0, 4.0, R).starred_p_integral for R in (1.0e2, 1.0e3, 1.0e4)]
    assert all(value > 0 for value in starred)
    assert starred[1] < 0.5 * starred[0]
    assert starred[2] < 0.5 * starred[1]


def test_weighted_integral_keeps_growing_below_critical_exponent():
    cfg = SimConfig(h=0.5, t_end=1000.0, t_end_cap=None)
    prof = make_profile(0.0)
    _, traj = evolve_nonlinear(gaussian_field(Grid.from_config(cfg), 0.01, 2.0), 2.0, 0.0, SourceSpec(), prof, cfg)
    weighted = [fujita_functional(traj, prof, 0.0, 2.0, 1.0e4, horizon=T).weighted_p_integral
                for T in (10.0, 100.0, 1000.0)]
    assert weighted[0] > 0
    assert weighted[1] > 2.0 * weighted[0]
    assert weighted[2] > 2.0 * weighted[1]


def test_log_growth_for_positive_data(decay_config):
    prof = make_profile(0.0)
    grid = Grid.from_config(decay_config)
    traj = evolve_linear(gaussian_field(grid, 1.0, 1.0), decay_config.t_end, prof, decay_config)
    report = log_growth_check(traj, prof)
    assert report.fit_slope_vs_logt > 0
    assert report.hypothesis_holds and report.stable and report.passes
    assert report.normalized_slope == pytest.approx(1.0 / (4.0 * np.pi), rel=0.1)


def test_log_growth_needs_nonzero_mass(decay_config):
    prof = make_profile(0.0)
    grid = Grid.from_config(decay_config)
    odd = Field(grid, gaussian_field(grid, 1.0, 1.0, 3.0).values - gaussian_field(grid, 1.0, 1.0, -3.0).values)
    report = log_growth_check(evolve_linear(odd, decay_config.t_end, prof, decay_config), prof)
    assert not report.hypothesis_holds
    assert report.normalized_slope is None
    assert not report.passes
    assert report.sublogarithmic
