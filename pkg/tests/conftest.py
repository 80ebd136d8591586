import pytest

from app.models.schemas import SimConfig
from app.tools.grid_field import Grid
from app.tools.profile import make_profile


@pytest.fixture
def heat_config():
    """Fine grid for comparisons against closed-form heat kernels."""
    return SimConfig(xmax=30.0, h=0.05, t_end=4.0)


@pytest.fixture
def decay_config():
    """Coarse grid long enough for decay fits over [10, 1000]."""
    return SimConfig(h=0.5, linear_dt_max=0.125, t_end=1000.0)


@pytest.fixture
def small_grid():
    return Grid(xmax=20.0, n=401)


@pytest.fixture
def flat_profile():
    return make_profile(0.0)
