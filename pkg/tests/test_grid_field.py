import math

import numpy as np
import pytest
from scipy import integrate

from app.models.schemas import SimConfig
from app.tools.grid_field import (
    Grid,
    Field,
    zero_field,
    gaussian_field,
    bump_field,
    psi_modulated_field,
    weighted_norms,
    quadratic_form,
    quadratic_form_report,
    energy_norm,
    field_to_frame,
)
from app.tools.profile import make_profile
from app.utils.errors import RejectedInputError, DomainTruncationError


def test_grid_is_symmetric_with_zero_node():
    grid = Grid(xmax=10.0, n=201)
    assert grid.h == pytest.approx(0.1)
    assert grid.nodes[grid.center] == 0.0
    np.testing.assert_array_equal(grid.nodes, -grid.nodes[::-1])
    assert grid.nodes[0] == pytest.approx(-10.0) and grid.nodes[-1] == pytest.approx(10.0)


@pytest.mark.parametrize("n", [4, 3, 200])
def test_grid_rejects_even_or_tiny_n(n):
    with pytest.raises(RejectedInputError):
        Grid(xmax=1.0, n=n)


def test_grid_from_config_defaults():
    grid = Grid.from_config(SimConfig(), 1000.0)
    assert grid.xmax == pytest.approx(20.0 * math.sqrt(1000.0))
    assert Grid.from_config(SimConfig(t_end=10.0)).n == 4001
    assert Grid.from_config(SimConfig(xmax=5.0, n=51)).h == pytest.approx(0.2)


def test_refined_grid_keeps_nodes():
    grid = Grid(xmax=4.0, n=41)
    fine = grid.refined()
    assert fine.h == pytest.approx(grid.h / 2)
    np.testing.assert_allclose(fine.nodes[::2], grid.nodes, atol=1e-14)


def test_field_shape_is_checked(small_grid):
    with pytest.raises(RejectedInputError):
        Field(small_grid, np.zeros(small_grid.n + 1))


def test_zero_field_norms(small_grid):
    norms = weighted_norms(zero_field(small_grid), make_profile(1.0))
    assert norms.l1_psi == norms.linf_psi_inv == norms.linf == norms.l2 == 0.0


def test_flat_profile_collapses_weights(small_grid, flat_profile):
    f = bump_field(small_grid, 1.0, 2.0)
    norms = weighted_norms(f, flat_profile)
    assert norms.linf == norms.linf_psi_inv == 1.0
    area = integrate.quad(lambda s: math.exp(1.0 - 1.0 / (1.0 - (s / 2.0) ** 2)), -2.0, 2.0)[0]
    assert norms.l1_psi == pytest.approx(area, rel=1e-4)


def test_psi_modulated_field_has_unit_star_norm(small_grid):
    prof = make_profile(1.0)
    f = psi_modulated_field(bump_field(small_grid, 1.0, 3.0), prof)
    assert weighted_norms(f, prof).linf_psi_inv == pytest.approx(1.0, abs=1e-14)


def test_weighted_norms_reject_non_finite(small_grid, flat_profile):
    values = np.zeros(small_grid.n)
    values[3] = math.nan
    with pytest.raises(RejectedInputError):
        weighted_norms(Field(small_grid, values), flat_profile)


def test_flat_quadratic_form_is_dirichlet_energy(flat_profile):
    grid = Grid(xmax=20.0, n=4001)
    f = gaussian_field(grid, 1.0, 1.0)
    # int (d/dx e^{-x^2/2})^2 = sqrt(pi)/2
    assert quadratic_form(f, flat_profile) == pytest.approx(math.sqrt(math.pi) / 2.0, rel=1e-6)


def test_ground_state_identity_for_modulated_bumps():
    prof = make_profile(1.0)
    grid = Grid(xmax=6.0, n=6001)
    g = bump_field(grid, 1.0, 3.0)
    f = psi_modulated_field(g, prof)
    dg = np.gradient(g.values, grid.h)
    expected = float(integrate.trapezoid((prof.psi(grid.nodes) * dg) ** 2, dx=grid.h))
    assert quadratic_form(f, prof) == pytest.approx(expected, rel=1e-4)


def test_formulations_agree_for_gaussian_at_alpha_one():
    prof = make_profile(1.0)
    f = gaussian_field(Grid(xmax=40.0, n=8001), 1.0, 1.0)
    report = quadratic_form_report(f, prof)
    assert report.agrees
    assert report.rel_diff <= 1e-5
    assert report.ground_state > 0


def test_quadratic_form_convergence_order():
    prof = make_profile(0.5)
    coarse = Grid(xmax=12.0, n=241)
    values = []
    for grid in (coarse, coarse.refined(), coarse.refined().refined()):
        values.append(quadratic_form_report(bump_field(grid, 1.0, 4.0), prof).direct)
    order = math.log2(abs(values[0] - values[1]) / abs(values[1] - values[2]))
    assert order >= 1.9


def test_quadratic_form_requires_boundary_decay(small_grid, flat_profile):
    f = Field(small_grid, np.ones(small_grid.n))
    with pytest.raises(DomainTruncationError):
        quadratic_form(f, flat_profile)


def test_energy_norm_is_nonnegative(small_grid):
    for alpha in (-0.4, 0.0, 0.7, 2.0):
        assert energy_norm(gaussian_field(small_grid, 1.0, 1.5), make_profile(alpha)) >= 0.0


def test_field_frame_columns(small_grid):
    prof = make_profile(1.0)
    frame = field_to_frame(gaussian_field(small_grid), prof)
    assert list(frame.columns) == ["x", "u", "u_over_psi"]
    assert len(frame) == small_grid.n
    assert frame["u_over_psi"].iloc[small_grid.center] == pytest.approx(1.0)
