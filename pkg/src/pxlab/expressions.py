"""
Closed-form expressions over the grid coordinates, and CSV node samples.

Exponents p(x) and the test functions of the ``norm`` command are both given
as expressions in x (and y in 2D).
"""

import csv
import logging
from functools import reduce
from pathlib import Path
from typing import Callable, Union

import numpy as np
import sympy as sp

from .errors import ConfigError

logger = logging.getLogger(__name__)

_x, _y = sp.symbols("x y", real=True)

# elementwise min/max over any number of arguments, resolved at lambdify time
_minimum = sp.Function("minimum")
_maximum = sp.Function("maximum")

NUMPY_FUNCTIONS = {
    "minimum": lambda *args: reduce(np.minimum, args),
    "maximum": lambda *args: reduce(np.maximum, args),
}

# Names an expression may use
EXPRESSION_LOCALS = {
    "x": _x,
    "y": _y,
    "abs": sp.Abs,
    "Abs": sp.Abs,
    "sin": sp.sin,
    "cos": sp.cos,
    "exp": sp.exp,
    "sqrt": sp.sqrt,
    "min": _minimum,
    "max": _maximum,
    "pi": sp.pi,
}


def parse_expression(text: str, dimension: int = 1, what: str = "expression") -> sp.Expr:
    """
    Parse an expression over x (and y in 2D).

    ``^`` is accepted for powers. Raises ConfigError for syntax errors and for
    free symbols other than the grid coordinates.
    """
    source = text.strip().replace("^", "**")
    if not source:
        raise ConfigError(f"empty {what}")
    try:
        expr = sp.sympify(source, locals=EXPRESSION_LOCALS)
    except (sp.SympifyError, SyntaxError, TypeError) as e:
        raise ConfigError(f"cannot parse {what} {text!r}: {e}") from e

    allowed = {_x} if dimension == 1 else {_x, _y}
    extra = expr.free_symbols - allowed
    if extra:
        names = ", ".join(sorted(str(s) for s in extra))
        raise ConfigError(f"{what} {text!r} uses unknown symbols: {names}")
    return expr


def parse_exponent(text: str, dimension: int = 1) -> sp.Expr:
    return parse_expression(text, dimension, "exponent expression")


def compile_expression(text: str, dimension: int = 1, what: str = "expression") -> Callable[..., np.ndarray]:
    """
    Compile an expression to a numpy function of the node coordinates.

    The returned callable takes one coordinate array per axis and always
    returns a float array of their broadcast shape.
    """
    expr = parse_expression(text, dimension, what)
    args = [_x] if dimension == 1 else [_x, _y]
    compiled = sp.lambdify(args, expr, modules=[NUMPY_FUNCTIONS, "numpy"])

    def evaluate(*coords: np.ndarray) -> np.ndarray:
        shape = np.broadcast(*coords).shape
        return np.array(np.broadcast_to(np.asarray(compiled(*coords), dtype=float), shape))

    logger.debug("compiled %s %s", what, expr)
    return evaluate


def compile_exponent(text: str, dimension: int = 1) -> Callable[..., np.ndarray]:
    return compile_expression(text, dimension, "exponent expression")


def load_node_samples(path: Union[str, Path], grid) -> np.ndarray:
    """
    Read exponent node samples from a CSV file.

    The last column holds p; any leading columns are node coordinates and
    are checked against the grid. A non-numeric first row is a header. Rows
    are in flat node order ('ij' for 2D grids).

    Args:
        path: CSV file
        grid: Grid the samples belong to

    Returns:
        Node values shaped like the grid
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"exponent samples file not found: {path}")

    with path.open(newline="") as handle:
        rows = [row for row in csv.reader(handle) if row and not row[0].lstrip().startswith("#")]
    if rows:
        try:
            [float(v) for v in rows[0]]
        except ValueError:
            rows = rows[1:]
    try:
        table = np.array([[float(v) for v in row] for row in rows], dtype=float)
    except ValueError as e:
        raise ConfigError(f"non-numeric exponent sample in {path}: {e}") from e

    if table.ndim != 2 or table.shape[0] != grid.num_nodes:
        raise ConfigError(
            f"{path} has {table.shape[0] if table.ndim == 2 else 0} rows, grid has {grid.num_nodes} nodes"
        )

    coords = table[:, :-1]
    if coords.shape[1]:
        if coords.shape[1] != grid.dimension:
            raise ConfigError(f"{path} has {coords.shape[1]} coordinate columns for a {grid.dimension}D grid")
        expected = np.stack([m.ravel() for m in grid.mesh()], axis=1)
        if not np.allclose(coords, expected, rtol=0.0, atol=1e-9 * max(1.0, grid.h)):
            raise ConfigError(f"coordinates in {path} do not match the grid nodes")

    return table[:, -1].reshape(grid.shape)
