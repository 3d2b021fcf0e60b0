import math

import numpy as np
import pytest

from pxlab.domain import Domain, Grid, build_exponent_field
from pxlab.eigensolver import (
    SolverOptions,
    balance_shift,
    check_ordering,
    first_eigenpair,
    neumann_first_nontrivial,
    nodal_mode_candidates,
    nodal_modes_1d,
    project_to_sphere,
)
from pxlab.errors import DomainError, ResolutionError
from pxlab.modular import GridFunction, luxemburg_norm
from pxlab.oracle import normalized_half_period
from pxlab.rayleigh import pairing_k_prime
from pxlab.spectrum import Spectrum


def field_on(domain, nodes, p):
    return build_exponent_field(domain, Grid.for_domain(domain, nodes), p)


def test_options_validate():
    with pytest.raises(DomainError):
        SolverOptions(tol=0.0)
    with pytest.raises(DomainError):
        SolverOptions(restarts=0)


def test_projection_is_idempotent(field_linear, sine):
    u = project_to_sphere(sine, field_linear)
    assert luxemburg_norm(u, field_linear) == pytest.approx(1.0, rel=1e-13)
    again = project_to_sphere(u, field_linear)
    assert np.allclose(again.values, u.values, rtol=1e-13, atol=0.0)


def test_projection_of_free_constant(field_2, grid_257):
    u = project_to_sphere(GridFunction(grid_257, np.ones(grid_257.shape), "free"), field_2)
    assert np.allclose(u.values, math.sqrt(2.0), rtol=1e-12)


def test_laplacian_first_eigenpair(unit_interval, fast_opts):
    result = first_eigenpair(field_on(unit_interval, 257, 2.0), unit_interval, opts=fast_opts)
    assert result.converged
    assert result.lam == pytest.approx(math.pi, rel=1e-3)
    assert result.single_signed
    assert result.u.values.sum() > 0.0
    assert result.as_dict()["lambda"] == result.lam


@pytest.mark.parametrize("p", [1.5, 3.0])
def test_constant_exponent_first_eigenpair(unit_interval, fast_opts, p):
    result = first_eigenpair(field_on(unit_interval, 257, p), unit_interval, opts=fast_opts)
    assert result.lam == pytest.approx(normalized_half_period(p), rel=1e-3)
    assert result.single_signed


def test_trace_is_monotone(unit_interval, field_linear, fast_opts):
    result = first_eigenpair(field_linear, unit_interval, opts=fast_opts)
    trace = np.array(result.trace)
    assert np.all(np.diff(trace) <= 1e-12 * trace[:-1])
    assert result.single_signed


def test_refinement_lowers_first_value(unit_interval, fast_opts):
    coarse = first_eigenpair(field_on(unit_interval, 65, 2.0), unit_interval, opts=fast_opts)
    fine = first_eigenpair(field_on(unit_interval, 129, 2.0), unit_interval, opts=fast_opts)
    assert fine.lam <= coarse.lam * (1.0 + 1e-12)


def test_seeded_runs_are_identical(unit_interval, field_linear):
    opts = SolverOptions(max_iter=50, restarts=3, seed=11)
    first = first_eigenpair(field_linear, unit_interval, opts=opts)
    second = first_eigenpair(field_linear, unit_interval, opts=opts)
    assert first.lam == second.lam
    assert np.array_equal(first.u.values, second.u.values)


def test_too_coarse_grid(unit_interval):
    with pytest.raises(ResolutionError):
        first_eigenpair(field_on(unit_interval, 9, 2.0), unit_interval)


def test_free_boundary_minimum_is_zero(unit_interval, field_2):
    result = first_eigenpair(field_2, unit_interval, "free")
    assert result.lam == 0.0
    assert result.converged
    assert np.allclose(result.u.values, math.sqrt(2.0))


@pytest.mark.parametrize("length", [1.0, 2.0])
def test_first_nonzero_free_value(fast_opts, length):
    domain = Domain.interval(0.0, length)
    result = neumann_first_nontrivial(field_on(domain, 257, 2.0), domain, fast_opts)
    assert result.lam == pytest.approx(math.pi / length, rel=1e-3)
    assert not result.single_signed


def test_balance_shift_survives_rescaling(field_linear, grid_257):
    u = GridFunction.from_callable(grid_257, lambda x: x ** 2 + 0.3 * x, "free")
    shifted = balance_shift(u, field_linear)
    ones = GridFunction(grid_257, np.ones(grid_257.shape), "free")
    for scale in (1.0, 7.0, 0.01):
        assert abs(pairing_k_prime(shifted * scale, ones, field_linear)) <= 1e-10
    on_sphere = project_to_sphere(shifted, field_linear)
    assert abs(pairing_k_prime(on_sphere, ones, field_linear)) <= 1e-10


def test_nodal_modes_of_the_laplacian(unit_interval, fast_opts):
    # 240 cells split evenly into 1..5 pieces
    field = field_on(unit_interval, 241, 2.0)
    candidates = nodal_mode_candidates(field, unit_interval, 5, fast_opts)
    assert [c.j for c in candidates] == [1, 2, 3, 4, 5]
    assert candidates[1].value == pytest.approx(2.0 * math.pi, rel=1e-3)
    assert candidates[4].value == pytest.approx(5.0 * math.pi, rel=1e-3)
    assert candidates[4].breakpoints == (0, 48, 96, 144, 192, 240)
    assert all(c.in_band for c in candidates)
    assert all(c.sandwich.holds for c in candidates)


def test_nodal_values_sit_in_kappa_band(unit_interval, fast_opts):
    field = field_on(unit_interval, 129, "1.5 + x")
    for c in nodal_mode_candidates(field, unit_interval, 4, fast_opts):
        assert c.in_band
        low, high = c.band
        assert low < high


def test_nodal_modes_need_enough_nodes(unit_interval):
    with pytest.raises(ResolutionError):
        nodal_mode_candidates(field_on(unit_interval, 33, 2.0), unit_interval, 6)


def test_nodal_modes_are_one_dimensional(unit_square):
    with pytest.raises(DomainError):
        nodal_mode_candidates(field_on(unit_square, 33, 2.0), unit_square, 2)


def test_ordering_check():
    dirichlet = Spectrum.from_values([math.pi, 2 * math.pi, 3 * math.pi], "dirichlet", "exact")
    free = Spectrum.from_values([0.0, math.pi], "free", "exact")
    report = check_ordering(dirichlet, free)
    assert report.holds
    assert [j for j, _, _ in report.pairs] == [1, 2]

    swapped = check_ordering(free, dirichlet)
    assert not swapped.holds


@pytest.mark.parametrize("exponent", ["1.5 + x", "2 + 3*x"])
def test_free_value_below_first_dirichlet_value(unit_interval, fast_opts, exponent):
    field = field_on(unit_interval, 129, exponent)
    lam = first_eigenpair(field, unit_interval, opts=fast_opts)
    mu = neumann_first_nontrivial(field, unit_interval, fast_opts)
    assert lam.converged
    assert mu.converged
    assert not mu.single_signed
    assert mu.lam <= lam.lam * (1.0 + 1e-6)


def test_free_values_below_dirichlet_values(unit_interval, fast_opts):
    field = field_on(unit_interval, 129, "1.5 + x")
    dirichlet = nodal_modes_1d(field, unit_interval, 2, fast_opts)
    assert dirichlet.entries[0].kind == "nodal-upper"
    assert dirichlet.is_nondecreasing()
    mu = neumann_first_nontrivial(field, unit_interval, fast_opts)
    assert mu.converged
    free = Spectrum.from_values([0.0, mu.lam], "free", "descent")
    assert check_ordering(dirichlet, free, tol=1e-6).holds


@pytest.mark.parametrize("boundary, constraint", [("dirichlet", None), ("free", "balanced")])
def test_flipped_initial_guess_gives_the_same_value(unit_interval, field_linear, fast_opts, boundary, constraint):
    guess = GridFunction.from_callable(field_linear.grid, lambda x: np.sin(np.pi * x) + 0.3 * x, boundary)
    plus = first_eigenpair(field_linear, unit_interval, boundary, fast_opts, constraint, initial=guess)
    minus = first_eigenpair(field_linear, unit_interval, boundary, fast_opts, constraint, initial=-guess)
    assert plus.converged and minus.converged
    assert minus.lam == pytest.approx(plus.lam, rel=1e-8)


def test_initial_guess_must_match_the_grid(unit_interval, field_linear, grid_129):
    with pytest.raises(DomainError):
        first_eigenpair(field_linear, unit_interval, initial=GridFunction.from_callable(grid_129, lambda x: x * (1 - x)))


@pytest.mark.slow
def test_laplacian_on_unit_square(unit_square):
    field = field_on(unit_square, 129, 2.0)
    result = first_eigenpair(field, unit_square, opts=SolverOptions(max_iter=300, restarts=1))
    assert result.lam == pytest.approx(math.pi * math.sqrt(2.0), rel=5e-3)
    assert result.single_signed


@pytest.mark.slow
def test_first_nonzero_free_value_on_square(unit_square):
    field = field_on(unit_square, 65, 2.0)
    result = neumann_first_nontrivial(field, unit_square, SolverOptions(max_iter=300, restarts=1))
    assert result.lam == pytest.approx(math.pi, rel=5e-3)
