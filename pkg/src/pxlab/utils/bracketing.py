"""
Geometric bracket expansion for monotone scalar equations.

Root finders in pxlab (Luxemburg norms, shooting, balancing shifts) all solve
g(x) = 0 for a monotone g on (0, inf) or on the real line. This module grows a
starting guess geometrically until the sign changes, so the caller can hand a
guaranteed bracket to a safeguarded solver.
"""

import logging
import math
from typing import Callable, Tuple

from ..errors import PxLabError

logger = logging.getLogger(__name__)


class BracketError(PxLabError, ArithmeticError):
    """No sign change found within the expansion budget."""


class ExpansionSchedule:
    """
    Multiplicative growth schedule for bracket endpoints.

    The k-th expansion scales the endpoint by ``factor ** k`` relative to the
    start, capped at ``max_expansions`` steps.
    """

    def __init__(self, factor: float = 2.0, max_expansions: int = 2000):
        if factor <= 1.0:
            raise ValueError("expansion factor must exceed 1")
        self.factor = factor
        self.max_expansions = max_expansions
        self.expansions = 0

    def grow(self, x: float) -> float:
        """Scale a positive endpoint up by one step."""
        self.expansions += 1
        return x * self.factor

    def shrink(self, x: float) -> float:
        """Scale a positive endpoint down by one step."""
        self.expansions += 1
        return x / self.factor

    def exhausted(self) -> bool:
        return self.expansions >= self.max_expansions


def bracket_positive_root(
    g: Callable[[float], float],
    x0: float,
    decreasing: bool = True,
    schedule: ExpansionSchedule = None,
) -> Tuple[float, float]:
    """
    Bracket the root of a monotone function on (0, inf).

    Args:
        g: monotone function with exactly one sign change on (0, inf)
        x0: positive starting guess
        decreasing: True if g decreases (positive below the root)
        schedule: expansion schedule, a fresh factor-2 schedule by default

    Returns:
        (lo, hi) with 0 < lo <= hi and g(lo), g(hi) of opposite sign or zero

    Raises:
        BracketError: if the schedule is exhausted before a sign change
    """
    if not x0 > 0 or not math.isfinite(x0):
        raise ValueError(f"starting guess must be positive and finite, got {x0!r}")
    schedule = schedule or ExpansionSchedule()
    sign = 1.0 if decreasing else -1.0

    lo = hi = x0
    # sign * g > 0 means we are still left of the root
    while sign * g(hi) > 0:
        if schedule.exhausted():
            raise BracketError(f"no sign change above {x0:.6g} after {schedule.expansions} expansions")
        lo = hi
        hi = schedule.grow(hi)
    while sign * g(lo) < 0:
        if schedule.exhausted():
            raise BracketError(f"no sign change below {x0:.6g} after {schedule.expansions} expansions")
        hi = lo
        lo = schedule.shrink(lo)

    if schedule.expansions:
        logger.debug("bracket [%g, %g] after %d expansions", lo, hi, schedule.expansions)
    return lo, hi


def first_crossing(
    predicate: Callable[[float], bool],
    x0: float,
    schedule: ExpansionSchedule = None,
) -> Tuple[float, float]:
    """
    Grow x from x0 until ``predicate(x)`` holds.

    Args:
        predicate: monotone predicate, False for small x and True for large x
        x0: positive start where the predicate is expected to be False

    Returns:
        (last x where the predicate was False, first x where it is True).
        If the predicate already holds at x0, the start is shrunk until it fails.
    """
    schedule = schedule or ExpansionSchedule()
    if predicate(x0):
        hi = x0
        lo = schedule.shrink(x0)
        while predicate(lo):
            if schedule.exhausted():
                raise BracketError(f"predicate holds for every x down to {lo:.6g}")
            hi = lo
            lo = schedule.shrink(lo)
        return lo, hi

    lo = x0
    hi = schedule.grow(x0)
    while not predicate(hi):
        if schedule.exhausted():
            raise BracketError(f"predicate never holds up to {hi:.6g}")
        lo = hi
        hi = schedule.grow(hi)
    return lo, hi
