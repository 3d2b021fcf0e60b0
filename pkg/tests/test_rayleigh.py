import math

import numpy as np
import pytest

from pxlab.domain import Grid, build_exponent_field
from pxlab.errors import ZeroFunctionError
from pxlab.modular import GridFunction, luxemburg_norm
from pxlab.rayleigh import HatBasis, el_residual, pairing_K_prime, pairing_k_prime, rayleigh


@pytest.fixture
def wavy_field(unit_interval, grid_257):
    """p(x) = 2 + sin(pi x)/2, so p- = 2."""
    return build_exponent_field(unit_interval, grid_257, "2 + sin(pi*x)/2")


@pytest.fixture
def parabola(grid_257):
    return GridFunction.from_callable(grid_257, lambda x: x * (1.0 - x))


def test_quotient_of_sine(field_2, sine):
    state = rayleigh(sine, field_2)
    assert state.quotient == pytest.approx(math.pi, rel=1e-4)
    assert state.S == pytest.approx(1.0, rel=1e-12)


def test_quotient_of_parabola(field_2, parabola):
    assert rayleigh(parabola, field_2).quotient == pytest.approx(math.sqrt(10.0), rel=1e-4)


def test_state_keeps_field_and_hides_vectors(field_linear, sine):
    state = rayleigh(sine, field_linear)
    assert state.field is field_linear
    assert state.k_vector.shape == (sine.grid.num_nodes,)
    text = repr(state)
    assert "quotient=" in text
    assert "K_vector" not in text and "field=" not in text


def test_quotient_is_scale_invariant(field_linear, sine):
    assert rayleigh(sine * 123.0, field_linear).quotient == pytest.approx(rayleigh(sine, field_linear).quotient, rel=1e-12)


def test_constant_has_zero_quotient(field_2, grid_257):
    state = rayleigh(GridFunction(grid_257, np.ones(grid_257.shape), "free"), field_2)
    assert state.K == 0.0
    assert state.quotient == 0.0
    assert state.S == 0.0
    assert not np.any(state.K_vector)


def test_rayleigh_rejects_zero(field_2, grid_257):
    with pytest.raises(ZeroFunctionError):
        rayleigh(GridFunction.zeros(grid_257), field_2)


@pytest.mark.slow
def test_euler_identities(field_linear, random_function):
    for _ in range(500):
        u = random_function(field_linear.grid)
        state = rayleigh(u, field_linear)
        assert pairing_k_prime(u, u, field_linear) == pytest.approx(state.k, rel=1e-9)
        assert pairing_K_prime(u, u, field_linear) == pytest.approx(state.K, rel=1e-9)


def test_pairings_are_linear_in_v(field_linear, sine, random_function):
    v = random_function(field_linear.grid)
    w = random_function(field_linear.grid)
    zero = GridFunction.zeros(field_linear.grid)
    assert pairing_k_prime(sine, zero, field_linear) == 0.0
    assert pairing_K_prime(sine, zero, field_linear) == 0.0
    combined = pairing_k_prime(sine, v * 2.0 + w, field_linear)
    assert combined == pytest.approx(
        2.0 * pairing_k_prime(sine, v, field_linear) + pairing_k_prime(sine, w, field_linear), rel=1e-10
    )


def test_orthogonal_modes(field_2, sine, grid_257):
    v = GridFunction.from_callable(grid_257, lambda x: np.sin(2.0 * np.pi * x))
    assert abs(pairing_K_prime(sine, v, field_2)) <= 1e-8
    assert abs(pairing_k_prime(sine, v, field_2)) <= 1e-8


@pytest.mark.slow
def test_pairing_bounds(wavy_field, random_function):
    for _ in range(1000):
        u = random_function(wavy_field.grid)
        v = random_function(wavy_field.grid) * 7.0
        assert abs(pairing_k_prime(u, v, wavy_field)) <= luxemburg_norm(v, wavy_field) + 1e-9
        assert abs(pairing_K_prime(u, v, wavy_field)) <= luxemburg_norm(v.gradient(), wavy_field) + 1e-9


def test_pairings_match_central_differences(wavy_field, sine, grid_257):
    v = GridFunction.from_callable(grid_257, lambda x: np.sin(3.0 * np.pi * x) + 2.0 * x * (1.0 - x))

    def K(u):
        return luxemburg_norm(u.gradient(), wavy_field)

    def k(u):
        return luxemburg_norm(u, wavy_field)

    exact_K = pairing_K_prime(sine, v, wavy_field)
    exact_k = pairing_k_prime(sine, v, wavy_field)
    errors = []
    for h in (1e-3, 1e-4):
        central_K = (K(sine + v * h) - K(sine - v * h)) / (2.0 * h)
        central_k = (k(sine + v * h) - k(sine - v * h)) / (2.0 * h)
        assert central_K == pytest.approx(exact_K, abs=1e-4)
        assert central_k == pytest.approx(exact_k, abs=1e-4)
        errors.append(abs(central_K - exact_K))
    # second order: a tenfold smaller step cuts the error about a hundredfold
    assert math.log10(errors[0] / errors[1]) >= 1.9


def test_residual_along_u_vanishes(field_linear, random_function):
    u = random_function(field_linear.grid)
    lam = rayleigh(u, field_linear).quotient
    assert el_residual(u, lam, field_linear, [u]) <= 1e-10


def test_hat_residual_separates_eigenvalues(unit_interval):
    residuals = {}
    for nodes in (129, 257):
        grid = Grid.for_domain(unit_interval, nodes)
        field = build_exponent_field(unit_interval, grid, 2.0)
        u = GridFunction.from_callable(grid, lambda x: np.sin(np.pi * x))
        basis = HatBasis(grid)
        residuals[nodes] = el_residual(u, math.pi, field, basis)
        assert el_residual(u, 2.0 * math.pi, field, basis) >= 0.1
    assert residuals[257] < residuals[129]
    assert residuals[257] < 1e-3


def test_hat_basis_size(grid_129):
    assert len(HatBasis(grid_129)) == 127
    assert len(HatBasis(grid_129, "free")) == 129
    assert len(HatBasis(grid_129).functions()) == 127
