"""
Domains, uniform grids and sampled exponent fields.

A ``Domain`` describes Omega (an interval, a box, a union of axis-aligned
cubes, or a disk that is only ever used for cube covers). A ``Grid`` carries
the uniform nodes a ``GridFunction`` lives on, and an ``ExponentField`` holds
p(x) at those nodes together with p- and p+. ``exponent_stats`` derives the
spread constants sigma, tau and kappa that control every norm comparison.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, List, Sequence, Tuple, Union

import numpy as np

from .errors import BoundsUnavailableError, DomainError, ExponentRangeError
from .expressions import compile_exponent, load_node_samples

logger = logging.getLogger(__name__)

DOMAIN_KINDS = ("interval", "box", "cubes", "disk")

# relative slack for geometric comparisons on dyadic lattices
_GEOMETRY_SLACK = 1e-12


@dataclass(frozen=True)
class Cube:
    """Axis-aligned closed cube given by its lower corner and side length."""

    lower: Tuple[float, ...]
    side: float

    @property
    def dimension(self) -> int:
        return len(self.lower)

    @property
    def upper(self) -> Tuple[float, ...]:
        return tuple(c + self.side for c in self.lower)

    @property
    def measure(self) -> float:
        return self.side ** self.dimension


@dataclass(frozen=True)
class Domain:
    """
    Bounded domain Omega.

    ``bounds`` is the bounding box, one (a, b) pair per axis. For ``cubes``
    the set is the union of ``cubes``; for ``disk`` it is the closed ball of
    ``radius`` about ``center``.
    """

    kind: str
    bounds: Tuple[Tuple[float, float], ...]
    cubes: Tuple[Cube, ...] = ()
    center: Tuple[float, ...] = ()
    radius: float = 0.0

    @classmethod
    def interval(cls, a: float, b: float) -> "Domain":
        if not (math.isfinite(a) and math.isfinite(b)) or not a < b:
            raise DomainError(f"interval needs finite a < b, got ({a}, {b})")
        return cls("interval", ((float(a), float(b)),))

    @classmethod
    def box(cls, *axes: Tuple[float, float]) -> "Domain":
        if len(axes) == 1:
            return cls.interval(*axes[0])
        if len(axes) != 2:
            raise DomainError(f"boxes are 1D or 2D, got {len(axes)} axes")
        for a, b in axes:
            if not (math.isfinite(a) and math.isfinite(b)) or not a < b:
                raise DomainError(f"box axis needs finite a < b, got ({a}, {b})")
        return cls("box", tuple((float(a), float(b)) for a, b in axes))

    @classmethod
    def unit(cls, dimension: int = 1) -> "Domain":
        return cls.box(*[(0.0, 1.0)] * dimension)

    @classmethod
    def cube_union(cls, cubes: Iterable[Cube], validate: bool = True) -> "Domain":
        """
        Union of axis-aligned cubes with pairwise disjoint interiors.

        An empty union is allowed; its bounding box is empty and its measure 0.
        """
        cubes = tuple(cubes)
        if validate:
            _validate_cubes(cubes)
        if not cubes:
            return cls("cubes", (), ())
        lower = np.array([c.lower for c in cubes])
        upper = np.array([c.upper for c in cubes])
        bounds = tuple(
            (float(lo), float(hi)) for lo, hi in zip(lower.min(axis=0), upper.max(axis=0))
        )
        return cls("cubes", bounds, cubes)

    @classmethod
    def disk(cls, center: Sequence[float], radius: float) -> "Domain":
        if len(center) != 2 or not radius > 0:
            raise DomainError(f"disk needs a 2D center and radius > 0, got {center}, {radius}")
        cx, cy = (float(c) for c in center)
        return cls(
            "disk",
            ((cx - radius, cx + radius), (cy - radius, cy + radius)),
            center=(cx, cy),
            radius=float(radius),
        )

    @property
    def dimension(self) -> int:
        if self.kind == "cubes" and self.cubes:
            return self.cubes[0].dimension
        return len(self.bounds)

    @property
    def lengths(self) -> Tuple[float, ...]:
        return tuple(b - a for a, b in self.bounds)

    @property
    def measure(self) -> float:
        if self.kind in ("interval", "box"):
            return float(np.prod(self.lengths))
        if self.kind == "disk":
            return math.pi * self.radius ** 2
        return math.fsum(c.measure for c in self.cubes)

    def _cube_overlaps(self, lower: np.ndarray, side: float) -> Tuple[np.ndarray, np.ndarray]:
        """
        Classify lattice cubes (rows of ``lower``) against the domain.

        Returns:
            (inside, touching) boolean masks; touching means an intersection
            of positive measure
        """
        upper = lower + side
        slack = _GEOMETRY_SLACK * max(self.lengths + (1.0,))
        if self.kind in ("interval", "box"):
            a = np.array([ab[0] for ab in self.bounds])
            b = np.array([ab[1] for ab in self.bounds])
            inside = np.all((lower >= a - slack) & (upper <= b + slack), axis=1)
            touching = np.all((lower < b - slack) & (upper > a + slack), axis=1)
            return inside, touching
        if self.kind == "disk":
            c = np.array(self.center)
            far = np.maximum(np.abs(lower - c), np.abs(upper - c))
            near = np.clip(c, lower, upper) - c
            inside = np.sqrt(np.sum(far ** 2, axis=1)) <= self.radius + slack
            touching = np.sqrt(np.sum(near ** 2, axis=1)) < self.radius - slack
            return inside, touching
        raise DomainError(f"cannot classify cubes against a {self.kind} domain")


def _validate_cubes(cubes: Sequence[Cube]) -> None:
    if not cubes:
        return
    dims = {c.dimension for c in cubes}
    if len(dims) != 1 or dims.pop() not in (1, 2):
        raise DomainError("cubes must all be 1D or all be 2D")
    if any(not c.side > 0 for c in cubes):
        raise DomainError("cube sides must be positive")
    lower = np.array([c.lower for c in cubes])
    side = np.array([c.side for c in cubes])
    upper = lower + side[:, None]
    # pairwise interior overlap: positive overlap length on every axis
    overlap = np.minimum(upper[:, None, :], upper[None, :, :]) - np.maximum(
        lower[:, None, :], lower[None, :, :]
    )
    scale = _GEOMETRY_SLACK * float(np.max(side))
    clash = np.all(overlap > scale, axis=2)
    np.fill_diagonal(clash, False)
    if np.any(clash):
        i, j = np.argwhere(clash)[0]
        raise DomainError(f"cubes {i} and {j} have overlapping interiors")


@dataclass(frozen=True)
class Grid:
    """
    Uniform tensor grid over a 1D interval or a 2D box.

    Node arrays use 'ij' indexing: a 2D nodal vector has shape (nx, ny) with
    x varying along axis 0.
    """

    bounds: Tuple[Tuple[float, float], ...]
    shape: Tuple[int, ...]

    def __post_init__(self):
        if len(self.bounds) != len(self.shape) or len(self.shape) not in (1, 2):
            raise DomainError(f"grids are 1D or 2D, got bounds {self.bounds} and shape {self.shape}")
        if any(n < 3 for n in self.shape):
            raise DomainError(f"grids need at least 3 nodes per axis, got {self.shape}")

    @classmethod
    def for_domain(cls, domain: Domain, nodes: Union[int, Sequence[int]]) -> "Grid":
        if domain.kind not in ("interval", "box"):
            raise DomainError(f"grids are built on intervals and boxes, not on a {domain.kind}")
        if isinstance(nodes, (int, np.integer)):
            nodes = (int(nodes),) * domain.dimension
        return cls(domain.bounds, tuple(int(n) for n in nodes))

    @property
    def dimension(self) -> int:
        return len(self.shape)

    @property
    def spacing(self) -> Tuple[float, ...]:
        return tuple((b - a) / (n - 1) for (a, b), n in zip(self.bounds, self.shape))

    @property
    def h(self) -> float:
        """Largest spacing over the axes."""
        return max(self.spacing)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def cell_shape(self) -> Tuple[int, ...]:
        return tuple(n - 1 for n in self.shape)

    @property
    def num_nodes(self) -> int:
        return int(np.prod(self.shape))

    @property
    def domain(self) -> Domain:
        return Domain.box(*self.bounds)

    @property
    def axes(self) -> List[np.ndarray]:
        return [np.linspace(a, b, n) for (a, b), n in zip(self.bounds, self.shape)]

    def mesh(self) -> Tuple[np.ndarray, ...]:
        """Coordinate arrays of node shape, one per axis."""
        return tuple(np.meshgrid(*self.axes, indexing="ij"))

    def cell_centers(self) -> Tuple[np.ndarray, ...]:
        centers = [0.5 * (x[1:] + x[:-1]) for x in self.axes]
        return tuple(np.meshgrid(*centers, indexing="ij"))

    def node_location(self, flat_index: int) -> Tuple[float, ...]:
        index = np.unravel_index(int(flat_index), self.shape)
        return tuple(float(axis[i]) for axis, i in zip(self.axes, index))

    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        if self.dimension == 1:
            mask[[0, -1]] = True
        else:
            mask[[0, -1], :] = True
            mask[:, [0, -1]] = True
        return mask

    def subgrid(self, start: int, stop: int) -> "Grid":
        """1D grid on the nodes start..stop inclusive."""
        if self.dimension != 1:
            raise DomainError("subgrids are only taken along 1D grids")
        x = self.axes[0]
        return Grid(((float(x[start]), float(x[stop])),), (stop - start + 1,))

    def scaled(self, delta: float) -> "Grid":
        """Same node count on the domain shrunk by ``delta`` about the origin."""
        return Grid(tuple((delta * a, delta * b) for a, b in self.bounds), self.shape)


def cell_average(values: np.ndarray) -> np.ndarray:
    """Average nodal values onto cell centers (2 nodes in 1D, 4 in 2D)."""
    if values.ndim == 1:
        return 0.5 * (values[1:] + values[:-1])
    return 0.25 * (values[1:, 1:] + values[1:, :-1] + values[:-1, 1:] + values[:-1, :-1])


@dataclass(frozen=True, eq=False)
class ExponentField:
    """
    Exponent p(x) sampled at grid nodes.

    Between nodes p is piecewise (multi)linear; quadrature only needs its
    cell-center values, the node averages.
    """

    grid: Grid
    values: np.ndarray = field(repr=False)
    p_minus: float
    p_plus: float

    @property
    def cell_values(self) -> np.ndarray:
        return cell_average(self.values)

    @property
    def is_constant(self) -> bool:
        return self.p_minus == self.p_plus

    def restrict(self, start: int, stop: int) -> "ExponentField":
        """Field on the 1D subgrid of nodes start..stop inclusive."""
        values = np.array(self.values[start:stop + 1])
        return ExponentField(
            self.grid.subgrid(start, stop), values, float(values.min()), float(values.max())
        )

    def on_grid(self, grid: Grid) -> "ExponentField":
        """Same node samples carried over to a grid of identical shape."""
        if grid.shape != self.grid.shape:
            raise DomainError(f"grid shape {grid.shape} does not match field shape {self.grid.shape}")
        return ExponentField(grid, self.values, self.p_minus, self.p_plus)


ExponentSpec = Union[float, int, str, Path, np.ndarray, Callable[..., np.ndarray]]


def build_exponent_field(domain: Domain, grid: Grid, spec: ExponentSpec) -> ExponentField:
    """
    Sample an exponent at the grid nodes.

    Args:
        domain: domain the grid covers
        grid: uniform grid on ``domain``
        spec: a constant, an expression string over x (and y), a path to a CSV
            of node samples, an array of node samples, or a callable on node
            coordinate arrays

    Returns:
        ExponentField with p- and p+ taken over the nodes

    Raises:
        ExponentRangeError: if a node value is <= 1 or not finite
    """
    if domain.dimension != grid.dimension:
        raise DomainError(f"{domain.dimension}D domain with a {grid.dimension}D grid")

    if isinstance(spec, Path) or (isinstance(spec, str) and spec.lower().endswith(".csv")):
        values = load_node_samples(spec, grid)
    elif isinstance(spec, str):
        values = compile_exponent(spec, grid.dimension)(*grid.mesh())
    elif callable(spec):
        values = spec(*grid.mesh())
    else:
        values = spec

    values = np.array(np.broadcast_to(np.asarray(values, dtype=float), grid.shape))

    bad = ~np.isfinite(values) | (values <= 1.0)
    if np.any(bad):
        flat = int(np.flatnonzero(bad.ravel())[0])
        raise ExponentRangeError(values.ravel()[flat], flat, grid.node_location(flat))

    field_ = ExponentField(grid, values, float(values.min()), float(values.max()))
    logger.debug("exponent field on %s nodes: p- = %g, p+ = %g", grid.shape, field_.p_minus, field_.p_plus)
    return field_


@dataclass(frozen=True)
class ExponentStats:
    """Spread constants of an exponent field on a domain."""

    sigma: float
    tau: float
    kappa: float
    p_minus: float
    p_plus: float
    dimension: int
    measure: float
    bounds_available: bool = True
    warnings: Tuple[str, ...] = ()

    @classmethod
    def from_bounds(cls, p_minus: float, p_plus: float, dimension: int, measure: float) -> "ExponentStats":
        spread = 1.0 / p_minus - 1.0 / p_plus
        sigma = dimension * spread
        tau = spread * measure
        if p_minus == p_plus:
            sigma, tau, kappa = 0.0, 0.0, 1.0
        elif tau < 1.0:
            kappa = (1.0 + tau) ** (1.0 / p_minus) / (1.0 - tau) ** (1.0 / p_plus)
        else:
            kappa = math.inf

        warnings = []
        if sigma >= 1.0:
            warnings.append(f"sigma = {sigma:.6g} ≥ 1: theorem bounds unavailable")
        if tau >= 1.0:
            warnings.append(f"tau = {tau:.6g} ≥ 1: theorem bounds and norm sandwich unavailable")
        return cls(
            sigma=sigma,
            tau=tau,
            kappa=kappa,
            p_minus=float(p_minus),
            p_plus=float(p_plus),
            dimension=int(dimension),
            measure=float(measure),
            bounds_available=not warnings,
            warnings=tuple(warnings),
        )

    def require_sandwich(self) -> None:
        """Raise unless tau < 1."""
        if self.tau >= 1.0:
            raise BoundsUnavailableError("τ", self.tau)

    def require_bounds(self) -> None:
        """Raise unless tau < 1 and sigma < 1."""
        self.require_sandwich()
        if self.sigma >= 1.0:
            raise BoundsUnavailableError("σ", self.sigma)

    def exponent_window(self) -> Tuple[float, float]:
        """Counting exponents n/(1+sigma) and n/(1-sigma)."""
        lower = self.dimension / (1.0 + self.sigma)
        upper = self.dimension / (1.0 - self.sigma) if self.sigma < 1.0 else math.inf
        return lower, upper


def exponent_stats(field: ExponentField, domain: Domain) -> ExponentStats:
    """
    Compute sigma = n(1/p- - 1/p+), tau = (1/p- - 1/p+)|Omega| and
    kappa = (1+tau)^(1/p-) / (1-tau)^(1/p+).

    Never raises for sigma >= 1 or tau >= 1; the result then carries warnings
    and ``bounds_available = False``.
    """
    stats = ExponentStats.from_bounds(field.p_minus, field.p_plus, domain.dimension, domain.measure)
    for warning in stats.warnings:
        logger.warning(warning)
    return stats


def cube_cover(domain: Domain, epsilon: float, max_refinements: int = 24) -> Tuple[Domain, Domain]:
    """
    Inner and outer dyadic cube covers of a domain.

    Cubes of side 2**-m are laid out from the lower corner of the bounding box.
    m starts at ceil(log2(1/epsilon)) and grows until |outer| - |inner| < epsilon.

    Args:
        domain: interval, box, disk, or cube union (returned as both covers)
        epsilon: required measure gap, > 0

    Returns:
        (inner, outer) cube unions with inner ⊆ domain ⊆ outer
    """
    if not epsilon > 0:
        raise DomainError(f"cover tolerance must be positive, got {epsilon}")
    if domain.kind == "cubes":
        return domain, domain

    m = max(0, math.ceil(math.log2(1.0 / epsilon)))
    origin = np.array([a for a, _ in domain.bounds])
    for _ in range(max_refinements + 1):
        side = 2.0 ** -m
        counts = [max(1, math.ceil(length / side - _GEOMETRY_SLACK)) for length in domain.lengths]
        index = np.stack(
            [g.ravel() for g in np.meshgrid(*[np.arange(c) for c in counts], indexing="ij")], axis=1
        )
        lower = origin + side * index
        inside, touching = domain._cube_overlaps(lower, side)
        gap = (np.count_nonzero(touching) - np.count_nonzero(inside)) * side ** domain.dimension
        if gap < epsilon:
            logger.debug("cube cover at side 2^-%d: %d inner, %d outer", m, inside.sum(), touching.sum())
            inner = Domain.cube_union(
                (Cube(tuple(map(float, row)), side) for row in lower[inside]), validate=False
            )
            outer = Domain.cube_union(
                (Cube(tuple(map(float, row)), side) for row in lower[touching]), validate=False
            )
            return inner, outer
        m += 1
    raise DomainError(f"no dyadic cover within {epsilon} after {max_refinements} refinements")
