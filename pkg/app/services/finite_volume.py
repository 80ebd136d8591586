import numpy as np
from scipy.linalg import solve_banded, LinAlgError

from app.tools.grid_field import Grid
from app.tools.profile import PotentialProfile
from app.utils.errors import NumericalFailureError
from app.utils.logger import logger


class FluxOperator:
    """Finite-volume form of -psi^{-2} d/dx(psi^2 d/dx) acting on u_* = u/psi.

    Unknowns are the interior nodes; both boundary nodes carry u_* = 0. With face
    conductances w_j = psi^2(x_{j+1/2})/h and cell masses m_i = psi^2(x_i) h the
    semi-discrete system is M du_*/dt = -K u_*, K symmetric tridiagonal with
    nonpositive off-diagonals, so sum_i m_i u_{*,i} changes only through the two
    boundary faces.
    """

    def __init__(self, grid: Grid, profile: PotentialProfile):
        self.grid = grid
        self.profile = profile
        x, h = grid.nodes, grid.h
        faces = 0.5 * (x[:-1] + x[1:])
        self.conductance = profile.psi(faces) ** 2 / h     # n - 1 faces
        self.node_mass = profile.psi(x) ** 2 * h            # n nodes
        self.mass = self.node_mass[1:-1]
        self.w_left = self.conductance[:-1]
        self.w_right = self.conductance[1:]
        self.off = self.conductance[1:-1]
        self.psi_nodes = profile.psi(x)

    @property
    def size(self) -> int:
        return self.grid.n - 2

    def apply(self, v: np.ndarray) -> np.ndarray:
        """K v for interior values v."""
        kv = (self.w_left + self.w_right) * v
        kv[1:] -= self.off * v[:-1]
        kv[:-1] -= self.off * v[1:]
        return kv

    def banded(self, c: float) -> np.ndarray:
        """(M + c K) in scipy's (1, 1) banded layout."""
        ab = np.zeros((3, self.size))
        ab[0, 1:] = -c * self.off
        ab[1, :] = self.mass + c * (self.w_left + self.w_right)
        ab[2, :-1] = -c * self.off
        return ab

    def solve(self, ab: np.ndarray, rhs: np.ndarray) -> np.ndarray:
        try:
            v = solve_banded((1, 1), ab, rhs, check_finite=False)
        except (LinAlgError, ValueError) as e:
            logger.error(f"Tridiagonal solve failed: {str(e)}", exc_info=True)
            raise NumericalFailureError(f"tridiagonal solve failed: {str(e)}")
        if not np.all(np.isfinite(v)):
            raise NumericalFailureError("tridiagonal solve produced non-finite values")
        return v

    def crank_nicolson_step(self, ab_half: np.ndarray, v: np.ndarray, dt: float) -> np.ndarray:
        """One CN step; ab_half must be banded(dt/2)."""
        rhs = self.mass * v - 0.5 * dt * self.apply(v)
        return self.solve(ab_half, rhs)

    def backward_euler_step(self, v: np.ndarray, dt: float, forcing: np.ndarray) -> np.ndarray:
        """(M + dt K) v_new = M (v + dt * forcing)."""
        return self.solve(self.banded(dt), self.mass * (v + dt * forcing))

    def positivity_dt(self) -> float:
        """Largest dt keeping M - dt/2 K entrywise nonnegative in nodal and flux variables."""
        cell = 2.0 * self.mass / (self.w_left + self.w_right)
        inv_mass = 1.0 / self.node_mass
        face_weight = inv_mass[:-1] + inv_mass[1:]
        # the two faces next to x = 0 couple through the center node for even data
        c = self.grid.center
        face_weight[c - 1] += inv_mass[c]
        face_weight[c] += inv_mass[c]
        flux = 2.0 / (self.conductance * face_weight)
        return float(min(cell.min(), flux.min()))

    def crank_nicolson_dt(self, dt_max: float) -> float:
        return min(0.5 * self.grid.h ** 2, dt_max, self.positivity_dt())

    def weighted_mass(self, v: np.ndarray) -> float:
        """sum m_i v_i = h sum psi_i u_i over the interior."""
        return float(np.dot(self.mass, v))

    def to_nodes(self, v: np.ndarray) -> np.ndarray:
        """Interior u_* values to nodal u values, zero on the boundary."""
        u = np.zeros(self.grid.n)
        u[1:-1] = self.psi_nodes[1:-1] * v
        return u

    def from_nodes(self, u: np.ndarray) -> np.ndarray:
        return (u / self.psi_nodes)[1:-1]

    def leaks(self, u: np.ndarray, tol: float) -> bool:
        peak = float(np.max(np.abs(u)))
        if peak == 0.0:
            return False
        return max(abs(u[1]), abs(u[-2])) > tol * peak
