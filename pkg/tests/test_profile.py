import math

import numpy as np
import pytest

from app.tools.profile import make_profile, harmonic_coordinate, inverse_harmonic, japanese_bracket
from app.utils.errors import RejectedInputError

ALPHAS = [-1.0, -0.5, -0.25, 0.0, 0.25, 0.5, 1.0, 2.0]


@pytest.mark.parametrize("alpha", ALPHAS)
def test_profile_is_even_and_normalized(alpha):
    prof = make_profile(alpha)
    x = np.linspace(-50, 50, 1001)
    assert prof.psi(0.0) == 1.0
    assert prof.psi_prime(0.0) == 0.0
    np.testing.assert_array_equal(prof.psi(x), prof.psi(-x))
    np.testing.assert_allclose(prof.psi(x), japanese_bracket(x) ** alpha, rtol=1e-14)


def test_closed_form_potentials():
    x = np.linspace(-10, 10, 201)
    np.testing.assert_array_equal(make_profile(0.0).V(x), np.zeros_like(x))
    np.testing.assert_allclose(make_profile(2.0).V(x), 2.0 / (1.0 + x * x), rtol=1e-14)
    np.testing.assert_allclose(make_profile(1.0).V(x), (1.0 + x * x) ** -2, rtol=1e-14)


@pytest.mark.parametrize("alpha", ALPHAS)
def test_potential_matches_finite_difference_curvature(alpha):
    prof = make_profile(alpha)
    h = 1e-4
    x = np.linspace(-50, 50, 2001)
    fd = (prof.psi(x + h) - 2.0 * prof.psi(x) + prof.psi(x - h)) / h ** 2
    V = prof.V(x)
    assert np.max(np.abs(fd / prof.psi(x) - V)) <= 1e-6 * max(np.max(np.abs(V)), 1.0)


@pytest.mark.parametrize("alpha", ALPHAS)
def test_ground_state_residual_vanishes(alpha):
    prof = make_profile(alpha)
    x = np.linspace(-50, 50, 1001)
    assert prof.ground_state_residual(x) <= 1e-12 * max(1.0, float(np.max(np.abs(prof.psi_second(x)))))


@pytest.mark.parametrize("alpha", ALPHAS)
def test_log_derivative_bound(alpha):
    prof = make_profile(alpha)
    x = np.linspace(-1e4, 1e4, 20001)
    sup = float(np.max(np.abs(x * prof.log_derivative(x))))
    assert sup <= abs(alpha) + 1e-12
    assert sup == pytest.approx(abs(alpha), abs=1e-6)


def test_harmonic_coordinate_closed_forms():
    assert harmonic_coordinate(make_profile(0.0), 5.0) == 5.0
    assert harmonic_coordinate(make_profile(-1.0), 2.0) == pytest.approx(2.0 + 8.0 / 3.0, abs=1e-10)
    assert harmonic_coordinate(make_profile(1.0), 5.0) == pytest.approx(math.atan(5.0), abs=1e-10)
    x = 3.0
    expected = x / (2.0 * (1.0 + x * x)) + 0.5 * math.atan(x)
    assert harmonic_coordinate(make_profile(2.0), x) == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize("alpha", [-1.0, 0.3, 1.0, 2.0])
def test_harmonic_coordinate_is_odd_and_increasing(alpha):
    prof = make_profile(alpha)
    xs = np.array([0.1, 0.5, 2.0, 7.0, 30.0])
    H = prof.harmonic_coordinates(xs)
    np.testing.assert_allclose(prof.harmonic_coordinates(-xs), -H, rtol=1e-14)
    assert np.all(np.diff(H) > 0)
    for x, value in zip(xs, H):
        assert harmonic_coordinate(prof, float(x)) == pytest.approx(value, rel=1e-10)


@pytest.mark.parametrize("alpha", [-1.0, -0.5, -0.25, 0.0])
def test_harmonic_coordinate_growth(alpha):
    x = 1e3
    ratio = harmonic_coordinate(make_profile(alpha), x) / x ** (1.0 - 2.0 * alpha)
    assert ratio == pytest.approx(1.0 / (1.0 - 2.0 * alpha), rel=0.02)


def test_harmonic_limit():
    assert make_profile(1.0).harmonic_limit() == pytest.approx(math.pi / 2.0, rel=1e-12)
    assert math.isinf(make_profile(0.5).harmonic_limit())
    assert harmonic_coordinate(make_profile(1.0), 1e6) == pytest.approx(math.pi / 2.0, abs=1e-5)


def test_inverse_harmonic_known_values():
    assert inverse_harmonic(make_profile(0.0), 3.0) == 3.0
    assert inverse_harmonic(make_profile(-1.0), 2.0 + 8.0 / 3.0) == pytest.approx(2.0, abs=1e-8)
    assert inverse_harmonic(make_profile(1.0), 0.0) == 0.0


@pytest.mark.parametrize("alpha", [-1.0, 0.3, 1.0])
@pytest.mark.parametrize("x", [-10.0, 0.5, 40.0])
def test_inverse_harmonic_round_trip(alpha, x):
    prof = make_profile(alpha)
    assert inverse_harmonic(prof, harmonic_coordinate(prof, x)) == pytest.approx(x, abs=1e-8)


def test_rejects_non_finite_inputs():
    with pytest.raises(RejectedInputError):
        make_profile(math.nan)
    with pytest.raises(RejectedInputError):
        harmonic_coordinate(make_profile(1.0), math.inf)
    with pytest.raises(RejectedInputError):
        inverse_harmonic(make_profile(1.0), math.nan)
