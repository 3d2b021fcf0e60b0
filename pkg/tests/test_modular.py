import math

import numpy as np
import pytest

from pxlab.domain import ExponentStats, build_exponent_field, exponent_stats
from pxlab.errors import BoundsUnavailableError, DomainError, ExponentRangeError, ZeroFunctionError
from pxlab.modular import (
    GridFunction,
    check_norm_sandwich,
    check_quotient_sandwich,
    lp_norm,
    luxemburg_norm,
    modular,
    young_gap,
)


@pytest.fixture
def ones(grid_129):
    return GridFunction(grid_129, np.ones(grid_129.shape), "free")


def constant_field(grid, p):
    return build_exponent_field(grid.domain, grid, p)


def test_modular_by_hand(grid_129, ones):
    assert modular(ones * 2.0, 2.0, constant_field(grid_129, 2)) == pytest.approx(0.5, rel=1e-14)
    assert modular(ones, 1.0, constant_field(grid_129, 3)) == pytest.approx(1.0 / 3.0, rel=1e-14)


def test_unweighted_modular(grid_129, ones):
    assert modular(ones, 1.0, constant_field(grid_129, 3), weighted=False) == pytest.approx(1.0, rel=1e-14)


def test_modular_of_zero(grid_129):
    field = build_exponent_field(grid_129.domain, grid_129, "1.5 + x")
    assert modular(GridFunction.zeros(grid_129), 0.3, field) == 0.0


def test_modular_rejects_nonpositive_scale(grid_129, ones):
    with pytest.raises(DomainError):
        modular(ones, 0.0, constant_field(grid_129, 2))


@pytest.mark.parametrize("p, expected", [(2, 2 ** -0.5), (3, 3 ** (-1.0 / 3.0))])
def test_norm_of_one(grid_129, ones, p, expected):
    assert luxemburg_norm(ones, constant_field(grid_129, p)) == pytest.approx(expected, abs=1e-10)


def test_norm_of_one_on_square(square_grid):
    ones = GridFunction(square_grid, np.ones(square_grid.shape), "free")
    assert luxemburg_norm(ones, constant_field(square_grid, 2)) == pytest.approx(2 ** -0.5, abs=1e-10)


def test_norm_of_zero(grid_129):
    assert luxemburg_norm(GridFunction.zeros(grid_129), constant_field(grid_129, 2)) == 0.0


def test_modular_at_norm_is_one(field_linear, random_function, rng):
    for _ in range(50):
        u = random_function(field_linear.grid) * 10.0 ** rng.uniform(-3.0, 3.0)
        nu = luxemburg_norm(u, field_linear)
        assert modular(u, nu, field_linear) == pytest.approx(1.0, abs=1e-10)


def test_norm_is_homogeneous(field_linear, random_function, rng):
    for _ in range(100):
        u = random_function(field_linear.grid)
        c = rng.uniform(-50.0, 50.0)
        assert luxemburg_norm(u * c, field_linear) == pytest.approx(abs(c) * luxemburg_norm(u, field_linear), rel=1e-10)


def test_constant_exponent_reduces_to_power_norm(grid_129, random_function):
    for p in (1.5, 2.0, 3.7):
        field = constant_field(grid_129, p)
        u = random_function(grid_129)
        assert luxemburg_norm(u, field) == pytest.approx(lp_norm(u, p), rel=1e-10)


def test_gradient_norm_of_sine(field_2, sine):
    # K(sin(pi x)) / k(sin(pi x)) = pi for p = 2
    ratio = luxemburg_norm(sine.gradient(), field_2) / luxemburg_norm(sine, field_2)
    assert ratio == pytest.approx(math.pi, rel=1e-4)


def test_lp_norm_values(grid_129, ones, sine):
    assert lp_norm(ones, 2.0) == pytest.approx(2 ** -0.5, rel=1e-14)
    assert lp_norm(ones, 2.0, weighted=False) == pytest.approx(1.0, rel=1e-14)
    assert lp_norm(sine, 2.0, weighted=False) == pytest.approx(2 ** -0.5, rel=1e-4)


def test_lp_norm_rejects_exponent_one(ones):
    with pytest.raises(ExponentRangeError):
        lp_norm(ones, 1.0)


def test_dirichlet_function_must_vanish_on_boundary(grid_129):
    with pytest.raises(DomainError, match="vanish"):
        GridFunction(grid_129, np.ones(grid_129.shape), "dirichlet")


def test_from_callable_zeroes_dirichlet_boundary(grid_129):
    u = GridFunction.from_callable(grid_129, lambda x: 1.0 + x)
    assert u.values[0] == 0.0 and u.values[-1] == 0.0
    assert u.values[1] == pytest.approx(1.0 + 1.0 / 128)


@pytest.mark.slow
def test_sandwich_holds_on_random_pairs(unit_interval, grid_129, random_function, rng):
    # 20 random linear exponents with 50 random functions each
    for _ in range(20):
        low, rise = rng.uniform(1.3, 4.0), rng.uniform(0.0, 0.3)
        field = build_exponent_field(unit_interval, grid_129, f"{low:.6f} + {rise:.6f}*x")
        stats = exponent_stats(field, unit_interval)
        assert stats.tau < 1.0
        for _ in range(50):
            report = check_norm_sandwich(random_function(grid_129), field, stats)
            assert report.holds


def test_sandwich_is_equality_for_constant_exponent(field_2, unit_interval, random_function):
    stats = exponent_stats(field_2, unit_interval)
    report = check_norm_sandwich(random_function(field_2.grid), field_2, stats)
    assert report.lower == pytest.approx(report.mid, rel=1e-10)
    assert report.upper == pytest.approx(report.mid, rel=1e-10)


def test_sandwich_of_zero(field_linear, stats_linear):
    report = check_norm_sandwich(GridFunction.zeros(field_linear.grid), field_linear, stats_linear)
    assert (report.lower, report.mid, report.upper) == (0.0, 0.0, 0.0)
    assert report.holds


def test_sandwich_needs_tau_below_one(grid_129, ones):
    stats = ExponentStats.from_bounds(1.1, 5.0, 1, 2.0)
    with pytest.raises(BoundsUnavailableError):
        check_norm_sandwich(ones, constant_field(grid_129, 2), stats)


def test_quotient_sandwich(field_linear, stats_linear, random_function, sine):
    assert check_quotient_sandwich(sine, field_linear, stats_linear).holds
    for _ in range(50):
        assert check_quotient_sandwich(random_function(field_linear.grid), field_linear, stats_linear).holds


def test_quotient_sandwich_rejects_zero(field_linear, stats_linear):
    with pytest.raises(ZeroFunctionError):
        check_quotient_sandwich(GridFunction.zeros(field_linear.grid), field_linear, stats_linear)


def test_young_gap_is_nonnegative(rng):
    a, b = rng.exponential(size=(2, 1000))
    p = rng.uniform(1.05, 6.0, 1000)
    scale = 1.0 + a * b + b ** p
    assert np.all(young_gap(a, b, p) >= -1e-12 * scale)


def test_young_gap_vanishes_at_equality_case():
    b = np.linspace(0.1, 3.0, 20)
    p = 2.7
    assert np.allclose(young_gap(b ** (p - 1.0), b, p), 0.0, atol=1e-12)


def test_young_gap_rejects_exponent_one():
    with pytest.raises(ExponentRangeError):
        young_gap(1.0, 1.0, 1.0)
