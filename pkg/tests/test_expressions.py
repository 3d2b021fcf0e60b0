import numpy as np
import pytest

from pxlab.domain import Grid
from pxlab.errors import ConfigError
from pxlab.expressions import compile_expression, compile_exponent, load_node_samples, parse_exponent


def test_compile_absolute_value():
    f = compile_exponent("2 + abs(x - 0.5)")
    x = np.linspace(0.0, 1.0, 5)
    assert np.allclose(f(x), [2.5, 2.25, 2.0, 2.25, 2.5])


def test_caret_means_power():
    f = compile_expression("x^2 + 1")
    assert f(np.array([3.0]))[0] == 10.0


def test_variadic_min_and_max():
    x = np.linspace(0.0, 1.0, 11)
    upper = compile_expression("max(x, 0.5, 1 - x)")(x)
    lower = compile_expression("min(x, 1 - x)")(x)
    assert np.allclose(upper, np.maximum(np.maximum(x, 0.5), 1 - x))
    assert np.allclose(lower, np.minimum(x, 1 - x))


def test_constant_broadcasts_to_grid_shape():
    x = np.zeros((4, 3))
    values = compile_exponent("3", dimension=2)(x, x)
    assert values.shape == (4, 3)
    assert np.all(values == 3.0)


def test_two_dimensional_expression():
    f = compile_exponent("2 + x*y", dimension=2)
    assert f(np.array([0.5]), np.array([0.5]))[0] == 2.25


def test_y_is_unknown_in_1d():
    with pytest.raises(ConfigError, match="unknown symbols: y"):
        parse_exponent("2 + y")


@pytest.mark.parametrize("text", ["", "   ", "2 +", "sin(", "1.5 + z"])
def test_bad_expressions(text):
    with pytest.raises(ConfigError):
        compile_exponent(text)


def test_error_mentions_what_was_parsed():
    with pytest.raises(ConfigError, match="function"):
        compile_expression("q * x", what="function")


def test_node_samples_without_coordinates(tmp_path, grid_129):
    path = tmp_path / "p.csv"
    path.write_text("p\n" + "\n".join("2.5" for _ in range(129)) + "\n")
    values = load_node_samples(path, grid_129)
    assert values.shape == (129,)
    assert np.all(values == 2.5)


def test_node_samples_row_count_mismatch(tmp_path, grid_129):
    path = tmp_path / "p.csv"
    path.write_text("2.0\n2.0\n")
    with pytest.raises(ConfigError, match="rows"):
        load_node_samples(path, grid_129)


def test_node_samples_coordinate_mismatch(tmp_path, unit_interval):
    grid = Grid.for_domain(unit_interval, 3)
    path = tmp_path / "p.csv"
    path.write_text("0.0,2\n0.7,2\n1.0,2\n")
    with pytest.raises(ConfigError, match="do not match"):
        load_node_samples(path, grid)


def test_node_samples_missing_file(tmp_path, grid_129):
    with pytest.raises(ConfigError, match="not found"):
        load_node_samples(tmp_path / "missing.csv", grid_129)
