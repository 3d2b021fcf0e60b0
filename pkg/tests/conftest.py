import numpy as np
import pytest

from pxlab.domain import Domain, Grid, build_exponent_field, exponent_stats
from pxlab.eigensolver import SolverOptions
from pxlab.modular import GridFunction


@pytest.fixture
def unit_interval():
    return Domain.interval(0.0, 1.0)


@pytest.fixture
def unit_square():
    return Domain.box((0.0, 1.0), (0.0, 1.0))


@pytest.fixture
def grid_257(unit_interval):
    return Grid.for_domain(unit_interval, 257)


@pytest.fixture
def grid_129(unit_interval):
    return Grid.for_domain(unit_interval, 129)


@pytest.fixture
def square_grid(unit_square):
    return Grid.for_domain(unit_square, 33)


@pytest.fixture
def field_2(unit_interval, grid_257):
    return build_exponent_field(unit_interval, grid_257, 2.0)


@pytest.fixture
def field_linear(unit_interval, grid_257):
    """p(x) = 1.5 + x: p- = 1.5, p+ = 2.5, sigma = tau = 4/15."""
    return build_exponent_field(unit_interval, grid_257, "1.5 + x")


@pytest.fixture
def stats_linear(field_linear, unit_interval):
    return exponent_stats(field_linear, unit_interval)


@pytest.fixture
def sine(grid_257):
    return GridFunction.from_callable(grid_257, lambda x: np.sin(np.pi * x))


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def fast_opts():
    return SolverOptions(max_iter=300, tol=1e-8, seed=0, restarts=1)


@pytest.fixture
def random_function(rng):
    """Factory for dirichlet grid functions with uniform random interior values."""

    def make(grid, low=-1.0, high=1.0):
        values = rng.uniform(low, high, grid.shape)
        return GridFunction.from_callable(grid, lambda *_: values)

    return make
