"""
Grid functions, modulars and Luxemburg norms.

Everything is integrated with the midpoint rule per grid cell: nodal values
are averaged to cell centers (gradients are taken per cell), the exponent is
the node average at each cell, and each cell carries the weight h (1D) or
hx * hy (2D).
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Tuple, Union

import numpy as np
from scipy import sparse
from scipy.optimize import brentq

from .domain import ExponentField, ExponentStats, Grid
from .errors import DomainError, ExponentRangeError, ZeroFunctionError
from .utils.bracketing import bracket_positive_root

logger = logging.getLogger(__name__)

BOUNDARY_CONDITIONS = ("dirichlet", "free")

# brentq refuses a relative tolerance below 4 eps
ROOT_RTOL = 4 * np.finfo(float).eps

SANDWICH_SLACK = 1e-9


@lru_cache(maxsize=64)
def cell_operators(grid: Grid) -> Tuple[sparse.csr_matrix, Tuple[sparse.csr_matrix, ...]]:
    """
    Sparse maps from flat nodal vectors to cell-center quantities.

    Returns:
        (average, gradients): the node-average operator and one difference
        operator per axis. In 2D the gradient is the bilinear element gradient
        at the cell center.
    """
    averages, differences = [], []
    for n, h in zip(grid.shape, grid.spacing):
        averages.append(sparse.diags([0.5, 0.5], [0, 1], shape=(n - 1, n), format="csr"))
        differences.append(sparse.diags([-1.0 / h, 1.0 / h], [0, 1], shape=(n - 1, n), format="csr"))

    if grid.dimension == 1:
        return averages[0], (differences[0],)

    ax, ay = averages
    dx, dy = differences
    average = sparse.kron(ax, ay, format="csr")
    gradients = (sparse.kron(dx, ay, format="csr"), sparse.kron(ax, dy, format="csr"))
    return average, gradients


@dataclass(frozen=True, eq=False)
class GridFunction:
    """
    Nodal values of u on a grid with a boundary condition tag.

    Dirichlet functions vanish at every boundary node.
    """

    grid: Grid
    values: np.ndarray = field(repr=False)
    boundary: str = "dirichlet"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            if values.size != self.grid.num_nodes:
                raise DomainError(f"{values.size} values for a grid of {self.grid.num_nodes} nodes")
            values = values.reshape(self.grid.shape)
        if self.boundary not in BOUNDARY_CONDITIONS:
            raise DomainError(f"unknown boundary condition {self.boundary!r}")
        if self.boundary == "dirichlet" and np.any(values[self.grid.boundary_mask()] != 0.0):
            raise DomainError("dirichlet grid functions must vanish at boundary nodes")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(
        cls, grid: Grid, f: Callable[..., np.ndarray], boundary: str = "dirichlet"
    ) -> "GridFunction":
        """
        Sample f at the nodes. Dirichlet samples are zeroed on the boundary.
        """
        values = np.array(np.broadcast_to(np.asarray(f(*grid.mesh()), dtype=float), grid.shape))
        if boundary == "dirichlet":
            values[grid.boundary_mask()] = 0.0
        return cls(grid, values, boundary)

    @classmethod
    def zeros(cls, grid: Grid, boundary: str = "dirichlet") -> "GridFunction":
        return cls(grid, np.zeros(grid.shape), boundary)

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(self.grid, np.reshape(values, self.grid.shape), self.boundary)

    def __mul__(self, c: float) -> "GridFunction":
        return self.with_values(c * self.values)

    __rmul__ = __mul__

    def __neg__(self) -> "GridFunction":
        return self.with_values(-self.values)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        if other.grid != self.grid:
            raise DomainError("cannot add grid functions on different grids")
        boundary = "dirichlet" if self.boundary == other.boundary == "dirichlet" else "free"
        return GridFunction(self.grid, self.values + other.values, boundary)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        return self + (-other)

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def is_zero(self) -> bool:
        return not np.any(self.values)

    def cell_values(self) -> np.ndarray:
        average, _ = cell_operators(self.grid)
        return (average @ self.flat).reshape(self.grid.cell_shape)

    def gradient(self) -> "GradientField":
        _, gradients = cell_operators(self.grid)
        components = np.stack([(g @ self.flat).reshape(self.grid.cell_shape) for g in gradients])
        return GradientField(self.grid, components)


@dataclass(frozen=True, eq=False)
class GradientField:
    """Per-cell gradient vectors, shape (n, *cell_shape)."""

    grid: Grid
    components: np.ndarray = field(repr=False)

    def __post_init__(self):
        expected = (self.grid.dimension,) + self.grid.cell_shape
        if self.components.shape != expected:
            raise DomainError(f"gradient components have shape {self.components.shape}, expected {expected}")
        if not np.all(np.isfinite(self.components)):
            raise DomainError("gradient field has non-finite values")

    def magnitude(self) -> np.ndarray:
        if self.grid.dimension == 1:
            return np.abs(self.components[0])
        return np.sqrt(np.sum(self.components ** 2, axis=0))

    def is_zero(self) -> bool:
        return not np.any(self.components)


Integrable = Union[GridFunction, GradientField]


def cell_magnitudes(u: Integrable) -> np.ndarray:
    """|u| at cell centers, or |grad u| for a gradient field."""
    if isinstance(u, GradientField):
        return u.magnitude()
    return np.abs(u.cell_values())


class ModularEquation:
    """
    The scalar map nu -> sum_c w |m_c / nu|^{p_c} / p_c for fixed magnitudes.

    Only nonzero cells are kept, with their logarithms, so each evaluation is
    one exponential per cell.
    """

    def __init__(self, magnitudes: np.ndarray, exponents: np.ndarray, weight: float, weighted: bool = True):
        nonzero = magnitudes > 0.0
        self.log_m = np.log(magnitudes[nonzero])
        self.p = np.broadcast_to(exponents, magnitudes.shape)[nonzero]
        self.weight = weight
        self.scale = weight / self.p if weighted else np.full(self.p.shape, weight)

    @property
    def is_zero(self) -> bool:
        return self.log_m.size == 0

    def terms(self, nu: float) -> np.ndarray:
        """|m/nu|^p per nonzero cell."""
        with np.errstate(over="ignore"):
            return np.exp(self.p * (self.log_m - np.log(nu)))

    def __call__(self, nu: float) -> float:
        return float(np.sum(self.scale * self.terms(nu)))

    def solve_unit(self, guess: float) -> float:
        """The unique nu > 0 with modular(nu) = 1."""
        lo, hi = bracket_positive_root(lambda nu: self(nu) - 1.0, guess)
        if lo == hi:
            nu = lo
        else:
            nu = brentq(lambda nu: self(nu) - 1.0, lo, hi, xtol=1e-300, rtol=ROOT_RTOL, maxiter=200)

        # one Newton step: d/dnu modular = -sum w |m/nu|^p / nu
        value = self(nu)
        slope_sum = float(np.sum(self.weight * self.terms(nu)))
        if slope_sum > 0.0 and np.isfinite(slope_sum):
            polished = nu + (value - 1.0) * nu / slope_sum
            if polished > 0.0 and abs(self(polished) - 1.0) <= abs(value - 1.0):
                nu = polished
        return nu


def _exponents_at_cells(field_: ExponentField, grid: Grid) -> np.ndarray:
    if field_.grid.shape != grid.shape:
        raise DomainError(f"exponent field on {field_.grid.shape} nodes, function on {grid.shape}")
    return field_.cell_values


def modular(u: Integrable, nu: float, field: ExponentField, weighted: bool = True) -> float:
    """
    Midpoint approximation of the integral of |u/nu|^{p(x)} / p(x).

    Args:
        u: grid function or gradient field
        nu: scale, > 0
        field: exponent field on the same grid
        weighted: include the 1/p(x) weight

    Returns:
        The modular; 0 exactly when u vanishes at every cell
    """
    if not nu > 0:
        raise DomainError(f"modular scale must be positive, got {nu}")
    p = _exponents_at_cells(field, u.grid)
    equation = ModularEquation(cell_magnitudes(u), p, u.grid.cell_volume, weighted)
    return equation(nu)


def luxemburg_norm(u: Integrable, field: ExponentField) -> float:
    """
    Weighted Luxemburg norm: the nu > 0 with modular(u, nu) = 1, or 0 for u = 0.

    The root is bracketed geometrically from lp(p+) + lp(p-) and solved by
    brentq to machine precision, then polished with one Newton step.
    """
    p = _exponents_at_cells(field, u.grid)
    magnitudes = cell_magnitudes(u)
    equation = ModularEquation(magnitudes, p, u.grid.cell_volume)
    if equation.is_zero:
        return 0.0
    guess = _weighted_power_norm(magnitudes, field.p_plus, u.grid.cell_volume) + _weighted_power_norm(
        magnitudes, field.p_minus, u.grid.cell_volume
    )
    return equation.solve_unit(guess)


def _weighted_power_norm(magnitudes: np.ndarray, p: float, weight: float, weighted: bool = True) -> float:
    top = float(np.max(magnitudes)) if magnitudes.size else 0.0
    if top == 0.0:
        return 0.0
    total = weight * float(np.sum((magnitudes / top) ** p))
    if weighted:
        total /= p
    return top * total ** (1.0 / p)


def lp_norm(u: Integrable, p: float, weighted: bool = True) -> float:
    """
    Constant-exponent norm (integral |u|^p / p)^(1/p), or the classical L^p
    norm when ``weighted`` is False.
    """
    if not p > 1:
        raise ExponentRangeError(p)
    return _weighted_power_norm(cell_magnitudes(u), p, u.grid.cell_volume, weighted)


@dataclass(frozen=True)
class SandwichReport:
    """Three-term inequality lower <= mid <= upper, checked with slack."""

    lower: float
    mid: float
    upper: float
    holds: bool

    def as_dict(self) -> dict:
        return {"lower": self.lower, "mid": self.mid, "upper": self.upper, "holds": self.holds}


def _sandwich(lower: float, mid: float, upper: float) -> SandwichReport:
    slack = SANDWICH_SLACK * max(1.0, abs(upper))
    holds = lower <= mid + slack and mid <= upper + slack
    return SandwichReport(lower, mid, upper, holds)


def check_norm_sandwich(u: Integrable, field: ExponentField, stats: ExponentStats) -> SandwichReport:
    """
    Compare the variable-exponent norm with the weighted p- and p+ norms:

        ||u||_{p-} / (1+tau)^(1/p-) <= ||u||_{p(x)} <= ||u||_{p+} / (1-tau)^(1/p+)

    Raises:
        BoundsUnavailableError: if tau >= 1
    """
    stats.require_sandwich()
    mid = luxemburg_norm(u, field)
    lower = lp_norm(u, stats.p_minus) / (1.0 + stats.tau) ** (1.0 / stats.p_minus)
    upper = lp_norm(u, stats.p_plus) / (1.0 - stats.tau) ** (1.0 / stats.p_plus)
    report = _sandwich(lower, mid, upper)
    if not report.holds:
        logger.warning("norm sandwich violated: %s", report)
    return report


def check_quotient_sandwich(u: GridFunction, field: ExponentField, stats: ExponentStats) -> SandwichReport:
    """
    Quotient form of the norm sandwich:

        ||grad u||_{p-} / (kappa ||u||_{p+}) <= K(u)/k(u) <= kappa ||grad u||_{p+} / ||u||_{p-}
    """
    stats.require_sandwich()
    if u.is_zero():
        raise ZeroFunctionError("quotient sandwich needs u != 0")
    grad = u.gradient()
    k = luxemburg_norm(u, field)
    if k == 0.0:
        raise ZeroFunctionError("u vanishes at every cell center")
    mid = luxemburg_norm(grad, field) / k
    lower = lp_norm(grad, stats.p_minus) / (stats.kappa * lp_norm(u, stats.p_plus))
    upper = stats.kappa * lp_norm(grad, stats.p_plus) / lp_norm(u, stats.p_minus)
    return _sandwich(lower, mid, upper)


def young_gap(a, b, p):
    """
    Slack of Young's inequality, (1 - 1/p) a^{p/(p-1)} + b^p / p - a b.

    Vectorized over numpy arrays; nonnegative for a, b >= 0 and p > 1.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    p = np.asarray(p, dtype=float)
    if np.any(p <= 1.0):
        raise ExponentRangeError(float(np.min(p)))
    conjugate = p / (p - 1.0)
    return (1.0 - 1.0 / p) * a ** conjugate + b ** p / p - a * b
