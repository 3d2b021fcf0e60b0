import math

import numpy as np
import pytest

from pxlab.domain import (
    Cube,
    Domain,
    ExponentStats,
    Grid,
    build_exponent_field,
    cube_cover,
    exponent_stats,
)
from pxlab.errors import BoundsUnavailableError, DomainError, ExponentRangeError


def test_interval_rejects_reversed_bounds():
    with pytest.raises(DomainError):
        Domain.interval(1.0, 0.0)


def test_box_measure_and_dimension():
    box = Domain.box((0.0, 2.0), (1.0, 4.0))
    assert box.dimension == 2
    assert box.measure == 6.0
    assert box.lengths == (2.0, 3.0)


def test_grid_spacing_and_mesh(unit_square):
    grid = Grid.for_domain(unit_square, (5, 9))
    assert grid.spacing == (0.25, 0.125)
    x, y = grid.mesh()
    assert x.shape == (5, 9)
    assert x[1, 0] == 0.25 and y[0, 1] == 0.125
    assert grid.boundary_mask().sum() == 2 * 5 + 2 * 9 - 4


def test_grid_rejects_disk():
    with pytest.raises(DomainError):
        Grid.for_domain(Domain.disk((0.0, 0.0), 1.0), 17)


def test_grid_scaled_keeps_shape(grid_129):
    small = grid_129.scaled(0.5)
    assert small.shape == grid_129.shape
    assert small.bounds == ((0.0, 0.5),)


def test_constant_field(unit_interval):
    grid = Grid.for_domain(unit_interval, 101)
    field = build_exponent_field(unit_interval, grid, 2)
    assert field.p_minus == field.p_plus == 2.0
    assert field.is_constant


def test_expression_field(field_linear):
    assert field_linear.p_minus == 1.5
    assert field_linear.p_plus == 2.5
    assert field_linear.cell_values.shape == (256,)


def test_field_rejects_small_exponent(unit_interval, grid_129):
    with pytest.raises(ExponentRangeError, match="exponent out of range") as info:
        build_exponent_field(unit_interval, grid_129, 0.9)
    assert info.value.node == 0
    assert info.value.location == (0.0,)


def test_field_reports_first_bad_node(unit_interval):
    grid = Grid.for_domain(unit_interval, 11)
    with pytest.raises(ExponentRangeError) as info:
        build_exponent_field(unit_interval, grid, "0.5 + x")
    # 0.5 + x <= 1 up to x = 0.5
    assert info.value.node == 0
    assert info.value.value == 0.5


def test_field_from_csv(tmp_path, unit_interval):
    grid = Grid.for_domain(unit_interval, 5)
    path = tmp_path / "p.csv"
    lines = ["x,p"] + [f"{x},{2.0 + x}" for x in np.linspace(0.0, 1.0, 5)]
    path.write_text("\n".join(lines) + "\n")
    field = build_exponent_field(unit_interval, grid, path)
    assert np.allclose(field.values, 2.0 + np.linspace(0.0, 1.0, 5))


def test_field_restrict(field_linear):
    piece = field_linear.restrict(0, 128)
    assert piece.grid.bounds == ((0.0, 0.5),)
    assert piece.p_minus == 1.5
    assert piece.p_plus == pytest.approx(2.0)


def test_stats_constant():
    stats = ExponentStats.from_bounds(2.0, 2.0, 3, 5.0)
    assert (stats.sigma, stats.tau, stats.kappa) == (0.0, 0.0, 1.0)
    assert stats.bounds_available


def test_stats_linear_exponent(stats_linear):
    assert stats_linear.sigma == pytest.approx(4.0 / 15.0)
    assert stats_linear.tau == pytest.approx(4.0 / 15.0)
    assert stats_linear.kappa == pytest.approx((19.0 / 15.0) ** (2.0 / 3.0) / (11.0 / 15.0) ** 0.4)
    assert stats_linear.kappa == pytest.approx(1.3253, abs=1e-4)
    assert stats_linear.exponent_window() == pytest.approx((15.0 / 19.0, 15.0 / 11.0))


def test_stats_doubles_sigma_in_2d():
    stats = ExponentStats.from_bounds(1.5, 2.5, 2, 1.0)
    assert stats.sigma == pytest.approx(8.0 / 15.0)
    assert stats.tau == pytest.approx(4.0 / 15.0)


def test_stats_warn_when_tau_too_large():
    domain = Domain.interval(0.0, 5.0)
    grid = Grid.for_domain(domain, 17)
    field = build_exponent_field(domain, grid, "1.2 + x")
    stats = exponent_stats(field, domain)
    assert not stats.bounds_available
    assert math.isinf(stats.kappa)
    assert any("tau" in w for w in stats.warnings)
    with pytest.raises(BoundsUnavailableError, match="theorem bounds unavailable: τ ≥ 1"):
        stats.require_bounds()


def test_interval_cover_tiles_exactly(unit_interval):
    inner, outer = cube_cover(unit_interval, 0.3)
    assert len(inner.cubes) == len(outer.cubes) == 4
    assert inner.cubes[0].side == 0.25
    assert outer.measure - inner.measure == 0.0


def test_square_cover_tiles_exactly(unit_square):
    inner, outer = cube_cover(unit_square, 0.1)
    assert inner.measure == pytest.approx(1.0)
    assert outer.measure == pytest.approx(1.0)


def test_disk_cover_gap():
    disk = Domain.disk((0.0, 0.0), 1.0)
    inner, outer = cube_cover(disk, 0.5)
    assert outer.measure - inner.measure < 0.5
    assert inner.measure <= math.pi <= outer.measure
    assert inner.cubes[0].side <= 0.125


def test_cover_rejects_nonpositive_epsilon(unit_interval):
    with pytest.raises(DomainError):
        cube_cover(unit_interval, 0.0)


def test_cube_union_rejects_overlap():
    with pytest.raises(DomainError, match="overlapping"):
        Domain.cube_union([Cube((0.0,), 1.0), Cube((0.5,), 1.0)])


def test_cube_union_allows_shared_faces():
    union = Domain.cube_union([Cube((0.0, 0.0), 1.0), Cube((1.0, 0.0), 1.0)])
    assert union.measure == 2.0
    assert union.bounds == ((0.0, 2.0), (0.0, 1.0))
