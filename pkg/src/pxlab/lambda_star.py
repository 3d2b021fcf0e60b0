"""
The unweighted modular quotient and its behaviour along shrinking bumps.

Without the Luxemburg normalization the quotient of the modulars is not
scale invariant. When p has a strict interior minimum, a bump whose plateau
holds the minimizer and whose ramp sits where p is larger gives quotients
that fall as the amplitude t goes to 0. For monotone p in 1D they stay
bounded below.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .domain import Domain, ExponentField, Grid
from .errors import DomainError, ZeroFunctionError
from .modular import GridFunction, modular

logger = logging.getLogger(__name__)


def modular_quotient(u: GridFunction, field: ExponentField) -> float:
    """
    integral |grad u|^p(x) / integral |u|^p(x), both without the 1/p(x) weight.

    Raises:
        ZeroFunctionError: if u vanishes at every cell center
    """
    denominator = modular(u, 1.0, field, weighted=False)
    if denominator == 0.0:
        raise ZeroFunctionError("modular quotient needs u != 0")
    return modular(u.gradient(), 1.0, field, weighted=False) / denominator


@dataclass(frozen=True)
class PlateauBump:
    """
    phi = 1 within ``radius`` of ``center``, falling linearly to 0 over a ramp
    of width ``ramp``; distance is Euclidean in 2D.
    """

    center: Tuple[float, ...]
    radius: float
    ramp: float

    def __post_init__(self):
        if not self.radius > 0 or not self.ramp > 0:
            raise DomainError(f"bump radius and ramp must be positive, got {self.radius}, {self.ramp}")

    @property
    def support_radius(self) -> float:
        return self.radius + self.ramp

    def distance(self, grid: Grid) -> np.ndarray:
        mesh = grid.mesh()
        return np.sqrt(sum((x - c) ** 2 for x, c in zip(mesh, self.center)))

    def on_grid(self, grid: Grid) -> GridFunction:
        if len(self.center) != grid.dimension:
            raise DomainError(f"{len(self.center)}D bump center on a {grid.dimension}D grid")
        values = np.clip((self.support_radius - self.distance(grid)) / self.ramp, 0.0, 1.0)
        return GridFunction.from_callable(grid, lambda *_: values)

    def validate(self, domain: Domain) -> None:
        """Raise unless the support lies inside the box."""
        if domain.kind not in ("interval", "box"):
            raise DomainError(f"bumps are placed in intervals and boxes, not a {domain.kind}")
        for c, (a, b) in zip(self.center, domain.bounds):
            if c - self.support_radius < a or c + self.support_radius > b:
                raise DomainError(
                    f"bump support [{c - self.support_radius:.6g}, {c + self.support_radius:.6g}] "
                    f"leaves the domain [{a:.6g}, {b:.6g}]"
                )

    def as_dict(self) -> dict:
        return {"center": list(self.center), "radius": self.radius, "ramp": self.ramp}


def ramp_excess(field: ExponentField, bump: PlateauBump) -> float:
    """
    min p over the ramp nodes minus min p over the plateau nodes.

    Positive when the plateau holds the minimizer and the ramp avoids it; the
    quotients then shrink roughly like t to that power.
    """
    distance = bump.distance(field.grid)
    plateau = distance <= bump.radius
    ramp = (distance > bump.radius) & (distance < bump.support_radius)
    if not plateau.any() or not ramp.any():
        raise DomainError("the grid does not resolve the bump plateau and ramp")
    return float(field.values[ramp].min() - field.values[plateau].min())


def default_bump(field: ExponentField, domain: Domain, fraction: float = 0.05) -> PlateauBump:
    """
    Bump centered at the smallest node value of p, with plateau radius and
    ramp width ``fraction`` of the shortest side, moved inward if needed.
    """
    size = fraction * min(domain.lengths)
    index = np.unravel_index(int(np.argmin(field.values)), field.grid.shape)
    axes = field.grid.axes
    margin = 2.0 * size + field.grid.h
    center = tuple(
        float(np.clip(axis[i], a + margin, b - margin)) for axis, i, (a, b) in zip(axes, index, domain.bounds)
    )
    return PlateauBump(center, size, size)


@dataclass(frozen=True)
class QuotientSample:
    t: float
    bump: PlateauBump
    quotient: float

    def as_dict(self) -> dict:
        return {"t": self.t, "quotient": self.quotient, **self.bump.as_dict()}


def bump_family_explorer(
    field: ExponentField,
    domain: Domain,
    bump: PlateauBump,
    t_grid: Sequence[float],
) -> List[QuotientSample]:
    """
    Modular quotients of t * phi over the amplitudes in ``t_grid``.

    Raises:
        DomainError: if the bump leaves the domain or an amplitude is not positive
    """
    bump.validate(domain)
    phi = bump.on_grid(field.grid)
    if phi.is_zero():
        raise DomainError("the bump misses every grid node")

    excess = ramp_excess(field, bump)
    if excess <= 0.0:
        logger.info("ramp does not sit above the plateau minimum (excess %.3g): no decay expected", excess)

    samples = []
    for t in t_grid:
        if not t > 0 or not math.isfinite(t):
            raise DomainError(f"bump amplitudes must be positive, got {t}")
        quotient = modular_quotient(phi * float(t), field)
        logger.debug("t = %.3g: quotient %.10g", t, quotient)
        samples.append(QuotientSample(float(t), bump, quotient))
    return samples


def is_decaying(samples: Sequence[QuotientSample], below: float = 0.1) -> bool:
    """Quotients strictly decrease as t decreases through the samples with t <= ``below``."""
    small = sorted((s for s in samples if s.t <= below), key=lambda s: -s.t)
    values = [s.quotient for s in small]
    return all(later < earlier for earlier, later in zip(values, values[1:]))
