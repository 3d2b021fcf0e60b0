import math

import numpy as np
import pytest

from pxlab.domain import Domain
from pxlab.errors import DomainError, ExponentRangeError
from pxlab.oracle import (
    classical_spectrum_constant_p,
    exact_spectrum_constant_p,
    laplacian_box_spectrum,
    normalized_half_period,
    pi_p,
    pi_p_closed_form,
    shooting_check,
    sin_p,
    sin_p_by_shooting,
)


def test_pi_p_at_two_is_pi():
    assert pi_p(2.0) == pytest.approx(math.pi, rel=1e-12)


def test_pi_p_at_three():
    assert pi_p(3.0) == pytest.approx(4.0 * math.pi / (3.0 * math.sqrt(3.0)), rel=1e-11)


@pytest.mark.parametrize("p", [1.2, 1.5, 2.5, 4.0, 10.0])
def test_pi_p_matches_closed_form(p):
    assert pi_p(p) == pytest.approx(pi_p_closed_form(p), rel=1e-10)


def test_pi_p_tends_to_two_for_large_p():
    assert pi_p(50.0) == pytest.approx(2.0, abs=5e-3)
    assert pi_p(50.0) > 2.0


@pytest.mark.parametrize("p", [1.0, 0.5, -2.0, float("inf")])
def test_exponents_at_most_one_are_rejected(p):
    with pytest.raises(ExponentRangeError):
        pi_p(p)


def test_normalized_half_period():
    assert normalized_half_period(2.0) == pytest.approx(math.pi, rel=1e-12)
    # (p-1)^(1/p) = 2^(1/3) at p = 3
    assert normalized_half_period(3.0) == pytest.approx(2.0 ** (1.0 / 3.0) * pi_p(3.0), rel=1e-14)


def test_sin_p_at_two_is_sine():
    t = np.linspace(0.0, 2.0 * math.pi, 41)
    assert np.allclose(sin_p(2.0, t), np.sin(t), atol=1e-12)
    assert sin_p(2.0, math.pi / 2.0) == pytest.approx(1.0, abs=1e-14)
    assert sin_p(2.0, 0.0) == 0.0


def test_sin_p_symmetries():
    p = 3.0
    half = pi_p(p)
    t = np.linspace(0.05, 0.45, 9) * half
    assert np.allclose(sin_p(p, half - t), sin_p(p, t), atol=1e-13)
    assert np.allclose(sin_p(p, t + half), -sin_p(p, t), atol=1e-13)
    assert np.allclose(sin_p(p, -t), -sin_p(p, t), atol=1e-13)


@pytest.mark.parametrize("p", [1.5, 3.0])
def test_sin_p_agrees_with_shooting(p):
    t = pi_p(p) / 4.0
    assert sin_p(p, t) == pytest.approx(sin_p_by_shooting(p, t), abs=1e-8)


def test_shooting_check_at_two():
    assert shooting_check(2.0, 1.0, 1) == pytest.approx(math.pi, rel=1e-8)


@pytest.mark.parametrize("p, length, j", [(1.5, 2.0, 4), (3.0, 1.0, 2)])
def test_shooting_check_matches_exact_values(p, length, j):
    assert shooting_check(p, length, j) == pytest.approx(j * normalized_half_period(p) / length, rel=1e-7)


def test_shooting_check_rejects_bad_mode():
    with pytest.raises(DomainError):
        shooting_check(2.0, 1.0, 0)


def test_exact_spectrum_constant_p():
    dirichlet = exact_spectrum_constant_p(2.0, 1.0, "dirichlet", 3)
    assert dirichlet.values == pytest.approx([math.pi, 2 * math.pi, 3 * math.pi], rel=1e-12)
    free = exact_spectrum_constant_p(2.0, 1.0, "free", 3)
    assert free.values == pytest.approx([0.0, math.pi, 2 * math.pi], rel=1e-12, abs=1e-15)
    assert dirichlet.entries[0].kind == "exact"


def test_exact_spectrum_scales_with_length():
    short = exact_spectrum_constant_p(3.0, 1.0, "dirichlet", 4)
    long = exact_spectrum_constant_p(3.0, 2.0, "dirichlet", 4)
    assert np.allclose(short.values, 2.0 * long.values, rtol=1e-14)


def test_classical_spectrum_constant_p():
    spectrum = classical_spectrum_constant_p(2.0, 1.0, 3)
    assert spectrum.values == pytest.approx([math.pi ** 2, 4 * math.pi ** 2, 9 * math.pi ** 2], rel=1e-12)
    p = 3.0
    first = classical_spectrum_constant_p(p, 1.0, 1).value(1)
    # classical and normalized values agree through Lambda = lambda^p on the first mode
    assert first ** (1.0 / p) == pytest.approx(normalized_half_period(p), rel=1e-11)


def test_laplacian_box_spectrum_on_square(unit_square):
    spectrum = laplacian_box_spectrum(unit_square, "dirichlet", 4)
    root5 = math.pi * math.sqrt(5.0)
    assert spectrum.values == pytest.approx([math.pi * math.sqrt(2.0), root5, root5, math.pi * math.sqrt(8.0)], rel=1e-12)


def test_laplacian_box_spectrum_free_starts_at_zero(unit_square):
    spectrum = laplacian_box_spectrum(unit_square, "free", 3)
    assert spectrum.values == pytest.approx([0.0, math.pi, math.pi], abs=1e-14)


def test_laplacian_box_spectrum_on_interval(unit_interval):
    spectrum = laplacian_box_spectrum(unit_interval, "dirichlet", 50)
    assert np.allclose(spectrum.values, math.pi * np.arange(1, 51), rtol=1e-12)


def test_laplacian_box_spectrum_on_long_box():
    box = Domain.box((0.0, 4.0), (0.0, 1.0))
    spectrum = laplacian_box_spectrum(box, "dirichlet", 30)
    assert spectrum.is_nondecreasing()
    assert spectrum.value(1) == pytest.approx(math.pi * math.sqrt(1.0 / 16.0 + 1.0), rel=1e-12)
