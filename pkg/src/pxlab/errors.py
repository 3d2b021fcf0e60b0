"""
Exception hierarchy for pxlab.

Every error derives from PxLabError and from the closest builtin, so callers
can keep catching ValueError or ArithmeticError.
"""

from typing import Optional, Sequence


class PxLabError(Exception):
    """Base class for all pxlab errors."""


class ExponentRangeError(PxLabError, ValueError):
    """
    An exponent sample is outside (1, inf).

    Carries the flat node index and the node coordinates of the first
    offending sample.
    """

    def __init__(self, value: float, node: Optional[int] = None, location: Sequence[float] = ()):
        self.value = float(value)
        self.node = node
        self.location = tuple(float(c) for c in location)
        message = f"exponent out of range: p = {self.value:.6g}"
        if node is not None:
            coords = ", ".join(f"{c:.6g}" for c in self.location)
            message = f"{message} at node {node} ({coords})"
        super().__init__(message)


class DomainError(PxLabError, ValueError):
    """Invalid domain, grid, cover or geometry argument."""


class ZeroFunctionError(PxLabError, ValueError):
    """An operation needs u != 0 (or grad u != 0) and got the zero function."""


class NormalizationError(PxLabError, ValueError):
    """An input that must carry unit norm does not."""


class BoundsUnavailableError(PxLabError, ValueError):
    """sigma >= 1 or tau >= 1: the theorem bounds and the norm sandwich do not apply."""

    def __init__(self, constant: str, value: float):
        self.constant = constant
        self.value = float(value)
        super().__init__(f"theorem bounds unavailable: {constant} ≥ 1 ({constant} = {value:.6g})")


class ResolutionError(PxLabError, ValueError):
    """The grid is too coarse for the requested computation."""


class ShootingError(PxLabError, ArithmeticError):
    """The shooting method could not bracket the requested mode."""


class DegenerateSamplesError(PxLabError, ValueError):
    """Too few usable samples for a fit."""


class ConfigError(PxLabError, ValueError):
    """Malformed configuration or command-line usage."""


class InvariantViolation(PxLabError, AssertionError):
    """A verified inequality failed."""

    def __init__(self, inequality: str, detail: Optional[str] = None):
        self.inequality = inequality
        self.detail = detail
        message = f"invariant violated: {inequality}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)
