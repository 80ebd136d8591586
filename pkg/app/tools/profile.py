import math
import numpy as np
from scipy import integrate, optimize
from typing import Union

from app.config import config
from app.utils.errors import RejectedInputError, NumericalFailureError
from app.utils.logger import logger

ArrayLike = Union[float, np.ndarray]


def japanese_bracket(x: ArrayLike) -> ArrayLike:
    """<x> = (1 + x^2)^(1/2)."""
    return np.sqrt(1.0 + np.square(x))


def _scalar_or_array(x: ArrayLike, values: np.ndarray) -> ArrayLike:
    return float(values) if np.ndim(x) == 0 else values


class PotentialProfile:
    """Canonical ground state psi = <x>^alpha with its potential V = psi''/psi.

    psi is even, psi(0) = 1 and psi'(0) = 0 exactly; V has the closed form
    [alpha + alpha(alpha - 1)x^2] / (1 + x^2)^2. All evaluators accept scalars or
    numpy arrays.
    """

    psi0 = 1.0  # |x|^{-alpha} psi(x) -> 1
    psi1 = 1.0  # psi1 <x>^alpha <= psi
    psi2 = 1.0  # psi <= psi2 <x>^alpha

    def __init__(self, alpha: float):
        if alpha is None or not math.isfinite(alpha):
            raise RejectedInputError(f"alpha must be finite, got {alpha}")
        self.alpha = float(alpha)

    def __repr__(self) -> str:
        return f"PotentialProfile(alpha={self.alpha})"

    def psi(self, x: ArrayLike) -> ArrayLike:
        x = np.asarray(x, dtype=float)
        return _scalar_or_array(x, np.power(1.0 + x * x, 0.5 * self.alpha))

    def psi_prime(self, x: ArrayLike) -> ArrayLike:
        x = np.asarray(x, dtype=float)
        values = self.alpha * x * np.power(1.0 + x * x, 0.5 * self.alpha - 1.0)
        return _scalar_or_array(x, values)

    def psi_second(self, x: ArrayLike) -> ArrayLike:
        x = np.asarray(x, dtype=float)
        s = 1.0 + x * x
        values = self.alpha * np.power(s, 0.5 * self.alpha - 2.0) * (1.0 + (self.alpha - 1.0) * x * x)
        return _scalar_or_array(x, values)

    def V(self, x: ArrayLike) -> ArrayLike:
        x = np.asarray(x, dtype=float)
        s = 1.0 + x * x
        values = (self.alpha + self.alpha * (self.alpha - 1.0) * x * x) / (s * s)
        return _scalar_or_array(x, values)

    def log_derivative(self, x: ArrayLike) -> ArrayLike:
        """psi'/psi = alpha x / (1 + x^2)."""
        x = np.asarray(x, dtype=float)
        return _scalar_or_array(x, self.alpha * x / (1.0 + x * x))

    def ground_state_residual(self, x: ArrayLike) -> float:
        """max |L psi| = max |-psi'' + V psi| over the sampled points."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        residual = -self.psi_second(x) + self.V(x) * self.psi(x)
        return float(np.max(np.abs(residual)))

    # Harmonic coordinate H(x) = int_0^x psi^{-2}

    def _inverse_psi_squared(self, y: float) -> float:
        return (1.0 + y * y) ** (-self.alpha)

    def _segment(self, a: float, b: float) -> float:
        """int_a^b psi^{-2} for 0 <= a < b, split on a geometric ladder."""
        total = 0.0
        left = a
        edge = max(1.0, 10.0 ** math.floor(math.log10(a))) if a > 0 else 1.0
        while left < b:
            right = min(b, edge if edge > left else left * 10.0)
            result = integrate.quad(
                self._inverse_psi_squared, left, right,
                epsabs=config.QUAD_ABS_TOL, epsrel=config.QUAD_REL_TOL,
                limit=200, full_output=1,
            )
            if len(result) > 3:
                logger.error(f"Quadrature failed on [{left}, {right}] for {self}: {result[3]}")
                raise NumericalFailureError(f"harmonic coordinate quadrature did not converge: {result[3]}")
            total += result[0]
            left = right
            edge = right * 10.0
        return total

    def harmonic_coordinate(self, x: float) -> float:
        if not math.isfinite(x):
            raise RejectedInputError(f"x must be finite, got {x}")
        if x == 0.0:
            return 0.0
        if self.alpha == 0.0:
            return float(x)
        return math.copysign(self._segment(0.0, abs(x)), x)

    def harmonic_coordinates(self, xs: np.ndarray) -> np.ndarray:
        """H on an array, integrating once over the sorted magnitudes."""
        xs = np.asarray(xs, dtype=float)
        if self.alpha == 0.0:
            return xs.copy()
        magnitudes = np.abs(xs).ravel()
        order = np.argsort(magnitudes, kind="stable")
        cumulative = np.empty_like(magnitudes)
        accumulated, previous = 0.0, 0.0
        for rank, index in enumerate(order):
            b = magnitudes[index]
            if b > previous:
                accumulated += self._segment(previous, b)
                previous = b
            cumulative[index] = accumulated
        return (np.sign(xs).ravel() * cumulative).reshape(xs.shape)

    def harmonic_limit(self) -> float:
        """H(+infinity); finite only when alpha > 1/2."""
        if self.alpha <= 0.5:
            return math.inf
        return 0.5 * math.sqrt(math.pi) * math.gamma(self.alpha - 0.5) / math.gamma(self.alpha)

    def inverse_harmonic(self, y: float) -> float:
        if not math.isfinite(y):
            raise RejectedInputError(f"y must be finite, got {y}")
        if y == 0.0:
            return 0.0
        if self.alpha == 0.0:
            return float(y)
        target = abs(y)
        hi = 1.0
        while self.harmonic_coordinate(hi) < target:
            hi *= 2.0
            if hi > 1e12:
                logger.error(f"Bracket expansion failed for y={y} with {self}")
                raise NumericalFailureError(
                    f"no bracket for H(x) = {y}; H is bounded by {self.harmonic_limit()} for alpha={self.alpha}"
                )
        try:
            root = optimize.brentq(
                lambda s: self.harmonic_coordinate(s) - target,
                0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500,
            )
        except (RuntimeError, ValueError) as e:
            logger.error(f"Root finding failed for y={y}: {str(e)}")
            raise NumericalFailureError(f"inverse harmonic coordinate failed: {str(e)}")
        residual = abs(self.harmonic_coordinate(root) - target)
        if residual >= config.INVERSE_TOL * max(1.0, target):
            raise NumericalFailureError(f"inverse harmonic residual {residual:.3e} above tolerance")
        return math.copysign(root, y)

    def describe(self) -> dict:
        return {"alpha": self.alpha, "psi0": self.psi0, "harmonic_limit": self.harmonic_limit()}


def make_profile(alpha: float) -> PotentialProfile:
    profile = PotentialProfile(alpha)
    logger.debug(f"Built {profile}")
    return profile


def harmonic_coordinate(profile: PotentialProfile, x: float) -> float:
    return profile.harmonic_coordinate(x)


def inverse_harmonic(profile: PotentialProfile, y: float) -> float:
    return profile.inverse_harmonic(y)
