"""
Eigenvalue counting and the scaling arguments behind its growth window.

N(lambda) counts eigenvalues strictly below lambda. For exponents with spread
sigma < 1 it grows between lambda^(n/(1+sigma)) and lambda^(n/(1-sigma)); the
curves here carry that window with constants calibrated on a computed
spectrum, and the cube, homothety and join helpers reproduce the steps that
produce it.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .domain import Cube, Domain, ExponentStats, Grid
from .errors import DegenerateSamplesError, DomainError, NormalizationError, ZeroFunctionError
from .modular import GridFunction, lp_norm
from .oracle import normalized_half_period
from .spectrum import Spectrum

logger = logging.getLogger(__name__)

CURVE_SLACK = 1e-12
NORMALIZATION_TOL = 1e-9
JOIN_SLACK = 1e-9

# keeps floor(10.000000000000002) and floor(9.999999999999998) together
FLOOR_GUARD = 1e-12

MIN_FIT_SAMPLES = 5


def counting_function(spectrum: Spectrum, lam: float) -> int:
    """Number of spectral values strictly below ``lam``."""
    return int(np.searchsorted(np.sort(spectrum.values), lam, side="left"))


@dataclass(frozen=True)
class Calibration:
    """
    Anchor of the theorem curves.

    ``anchor`` is the largest positive spectral value not above the requested
    one. The lower curve is fitted to ``below`` = #{lambda_j < anchor} and the
    upper curve to ``at_or_below`` = #{lambda_j <= anchor}.
    """

    requested: float
    anchor: float
    below: int
    at_or_below: int

    def as_dict(self) -> dict:
        return {
            "requested": self.requested,
            "anchor": self.anchor,
            "below": self.below,
            "at_or_below": self.at_or_below,
        }


def calibrate(spectrum: Spectrum, anchor: float) -> Calibration:
    """
    Snap ``anchor`` down onto the spectrum and record both counts there.

    Raises:
        DomainError: if no positive spectral value lies at or below ``anchor``
    """
    values = np.sort(spectrum.values)
    eligible = values[(values > 0.0) & (values <= anchor)]
    if eligible.size == 0:
        raise DomainError(f"no positive spectral value at or below the anchor {anchor:.6g}")
    snapped = float(eligible[-1])
    below = int(np.searchsorted(values, snapped, side="left"))
    at_or_below = int(np.searchsorted(values, snapped, side="right"))
    if snapped != anchor:
        logger.info("counting anchor %.6g snapped to spectral value %.10g", anchor, snapped)
    return Calibration(float(anchor), snapped, below, at_or_below)


@dataclass(frozen=True, eq=False)
class CountingReport:
    """N(lambda) on a lambda grid next to the calibrated theorem curves."""

    lambdas: np.ndarray = field(repr=False)
    counts: np.ndarray = field(repr=False)
    lower: np.ndarray = field(repr=False)
    upper: np.ndarray = field(repr=False)
    stats: ExponentStats
    calibration: Optional[Calibration] = None
    c1: float = math.nan
    c2: float = math.nan
    violations: Tuple[int, ...] = ()
    fitted_exponent: Optional[float] = None

    def __len__(self) -> int:
        return len(self.lambdas)

    @property
    def holds(self) -> bool:
        return not self.violations

    def with_fit(self) -> "CountingReport":
        """Copy with ``fitted_exponent`` filled in."""
        return replace(self, fitted_exponent=fit_growth_exponent(self))

    def rows(self) -> List[dict]:
        return [
            {"lambda": float(lam), "N": int(n), "lower": float(lo), "upper": float(up)}
            for lam, n, lo, up in zip(self.lambdas, self.counts, self.lower, self.upper)
        ]

    def as_dict(self) -> dict:
        window = self.stats.exponent_window()
        return {
            "samples": len(self),
            "c1": self.c1,
            "c2": self.c2,
            "calibration": self.calibration.as_dict() if self.calibration else None,
            "exponent_window": list(window),
            "fitted_exponent": self.fitted_exponent,
            "violations": [float(self.lambdas[i]) for i in self.violations],
            "holds": self.holds,
        }


def theorem_bounds(
    stats: ExponentStats,
    domain: Domain,
    lambda_grid: Sequence[float],
    calibration: Calibration,
    spectrum: Spectrum,
) -> CountingReport:
    """
    Evaluate C1 |Omega| (lambda/kappa)^(n/(1+sigma)) and
    C2 |Omega| (kappa lambda)^(n/(1-sigma)) against N(lambda).

    C1 is fixed so the lower curve passes through ``calibration.below`` at the
    anchor and C2 so the upper curve passes through ``calibration.at_or_below``.
    Every sample where N leaves the band is listed in ``violations``.

    Raises:
        BoundsUnavailableError: if sigma >= 1 or tau >= 1
    """
    stats.require_bounds()
    lambdas = np.asarray(lambda_grid, dtype=float).ravel()
    measure = domain.measure
    lower_exponent, upper_exponent = stats.exponent_window()
    anchor = calibration.anchor

    c1 = calibration.below / (measure * (anchor / stats.kappa) ** lower_exponent)
    c2 = calibration.at_or_below / (measure * (stats.kappa * anchor) ** upper_exponent)

    values = np.sort(spectrum.values)
    counts = np.searchsorted(values, lambdas, side="left").astype(int)
    lower = c1 * measure * (lambdas / stats.kappa) ** lower_exponent
    upper = c2 * measure * (stats.kappa * lambdas) ** upper_exponent

    outside = (counts < lower * (1.0 - CURVE_SLACK)) | (counts > upper * (1.0 + CURVE_SLACK))
    violations = tuple(int(i) for i in np.flatnonzero(outside))
    for i in violations:
        logger.warning(
            "N(%.6g) = %d outside [%.6g, %.6g]", lambdas[i], counts[i], lower[i], upper[i]
        )
    return CountingReport(
        lambdas=lambdas,
        counts=counts,
        lower=lower,
        upper=upper,
        stats=stats,
        calibration=calibration,
        c1=float(c1),
        c2=float(c2),
        violations=violations,
    )


def fit_growth_exponent(report: CountingReport) -> float:
    """
    Least-squares slope of log N against log lambda over samples with N >= 1.

    Raises:
        DegenerateSamplesError: with fewer than 5 usable samples or a single lambda
    """
    lambdas = np.asarray(report.lambdas, dtype=float)
    counts = np.asarray(report.counts, dtype=float)
    usable = (counts >= 1) & (lambdas > 0)
    if np.count_nonzero(usable) < MIN_FIT_SAMPLES:
        raise DegenerateSamplesError(
            f"growth fit needs {MIN_FIT_SAMPLES} samples with N >= 1, got {np.count_nonzero(usable)}"
        )
    x = np.log(lambdas[usable])
    if np.ptp(x) == 0.0:
        raise DegenerateSamplesError("growth fit needs at least two distinct lambda values")
    slope, _ = np.polyfit(x, np.log(counts[usable]), 1)
    return float(slope)


def unit_cube_lambda0(stats: ExponentStats) -> float:
    """
    First Dirichlet value estimate on the unit cube: sqrt(n) pihat_p, taken at
    whichever of p- and p+ gives the larger value. Exact for constant p in 1D
    and for p = 2 on the unit square.
    """
    scale = math.sqrt(stats.dimension)
    return scale * max(normalized_half_period(stats.p_minus), normalized_half_period(stats.p_plus))


@dataclass(frozen=True)
class CubeEstimate:
    """Cube-counting lower and upper estimates at lambda < lambda_prime."""

    lam: float
    lam_prime: float
    lambda0: float
    r: int
    s: int
    a_side: float
    b_side: float
    lower_count: int
    upper_count: int

    def as_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "lambda_prime": self.lam_prime,
            "lambda0": self.lambda0,
            "r": self.r,
            "s": self.s,
            "a_side": self.a_side,
            "b_side": self.b_side,
            "lower_count": self.lower_count,
            "upper_count": self.upper_count,
        }


def _cover_cubes(cover: Domain) -> Tuple[Cube, ...]:
    if cover.kind == "cubes":
        return cover.cubes
    if cover.kind in ("interval", "box"):
        lengths = cover.lengths
        if all(math.isclose(length, lengths[0], rel_tol=1e-12) for length in lengths):
            return (Cube(tuple(a for a, _ in cover.bounds), lengths[0]),)
    raise DomainError(f"cube counts need a cube union, got a {cover.kind}; build one with cube_cover")


def _guarded_floor(x: np.ndarray) -> np.ndarray:
    return np.floor(x * (1.0 + FLOOR_GUARD)).astype(np.int64)


def cube_count_bounds(
    stats: ExponentStats,
    cover: Domain,
    lam: float,
    lam_prime: Optional[float] = None,
    lambda0: Optional[float] = None,
    r: int = 1,
    s: int = 1,
) -> CubeEstimate:
    """
    Count small cubes packed into each cube of ``cover``.

    Args:
        stats: exponent spread constants (sigma < 1 required)
        cover: cube union (or a single interval/box cube)
        lam: level of the lower count
        lam_prime: level of the upper count, defaults to lam * (1 + 1e-3)
        lambda0: seed level on the unit cube, defaults to ``unit_cube_lambda0``
        r: lower seed count on the unit cube
        s: upper seed count on the unit cube

    Returns:
        sums of r floor(a / a_side)^n and s (floor(a / b_side) + 1)^n over the
        cube sides a, with a_side = (lambda0/lam)^(1/(1+sigma)) and
        b_side = (lambda0/lam_prime)^(1/(1-sigma))
    """
    stats.require_bounds()
    lambda0 = unit_cube_lambda0(stats) if lambda0 is None else float(lambda0)
    lam_prime = lam * (1.0 + 1e-3) if lam_prime is None else float(lam_prime)
    if not lam > lambda0:
        raise DomainError(f"cube counts need lambda > lambda0, got {lam:.6g} <= {lambda0:.6g}")
    if not lam_prime > lam:
        raise DomainError(f"cube counts need lambda' > lambda, got {lam_prime:.6g} <= {lam:.6g}")

    a_side = (lambda0 / lam) ** (1.0 / (1.0 + stats.sigma))
    b_side = (lambda0 / lam_prime) ** (1.0 / (1.0 - stats.sigma))
    n = stats.dimension
    sides = np.array([cube.side for cube in _cover_cubes(cover)])
    lower_count = r * int(np.sum(_guarded_floor(sides / a_side) ** n))
    upper_count = s * int(np.sum((_guarded_floor(sides / b_side) + 1) ** n))
    return CubeEstimate(
        lam=float(lam),
        lam_prime=lam_prime,
        lambda0=lambda0,
        r=int(r),
        s=int(s),
        a_side=a_side,
        b_side=b_side,
        lower_count=lower_count,
        upper_count=upper_count,
    )


@dataclass(frozen=True)
class HomothetyReport:
    """Mixed-exponent quotients of u and of its shrunk copy v(y) = u(y / delta)."""

    delta: float
    ratio_plus_minus_before: float
    ratio_plus_minus_after: float
    ratio_minus_plus_before: float
    ratio_minus_plus_after: float
    expected_plus_minus: float
    expected_minus_plus: float
    rtol: float = 1e-8

    @property
    def factor_plus_minus(self) -> float:
        return self.ratio_plus_minus_after / self.ratio_plus_minus_before

    @property
    def factor_minus_plus(self) -> float:
        return self.ratio_minus_plus_after / self.ratio_minus_plus_before

    @property
    def holds(self) -> bool:
        return math.isclose(self.factor_plus_minus, self.expected_plus_minus, rel_tol=self.rtol) and math.isclose(
            self.factor_minus_plus, self.expected_minus_plus, rel_tol=self.rtol
        )

    def as_dict(self) -> dict:
        return {
            "delta": self.delta,
            "ratio_plus_minus_before": self.ratio_plus_minus_before,
            "ratio_plus_minus_after": self.ratio_plus_minus_after,
            "ratio_minus_plus_before": self.ratio_minus_plus_before,
            "ratio_minus_plus_after": self.ratio_minus_plus_after,
            "expected_plus_minus": self.expected_plus_minus,
            "expected_minus_plus": self.expected_minus_plus,
            "holds": self.holds,
        }


def _mixed_ratios(u: GridFunction, p_minus: float, p_plus: float) -> Tuple[float, float]:
    grad = u.gradient()
    return (
        lp_norm(grad, p_plus) / lp_norm(u, p_minus),
        lp_norm(grad, p_minus) / lp_norm(u, p_plus),
    )


def homothety_transport(u: GridFunction, delta: float, stats: ExponentStats) -> HomothetyReport:
    """
    Carry u to the domain shrunk by ``delta`` and compare the quotients
    ||grad u||_{p+} / ||u||_{p-} and ||grad u||_{p-} / ||u||_{p+} before and
    after. They scale by delta^(-sigma-1) and delta^(sigma-1).

    Raises:
        DomainError: if delta is not in (0, 1)
        ZeroFunctionError: if u or its gradient vanishes
    """
    if not 0.0 < delta < 1.0:
        raise DomainError(f"homothety factor must lie in (0, 1), got {delta}")
    if u.is_zero():
        raise ZeroFunctionError("homothety needs u != 0")
    if u.grid.dimension != stats.dimension:
        raise DomainError(f"{u.grid.dimension}D function with {stats.dimension}D exponent constants")

    v = GridFunction(u.grid.scaled(delta), u.values, u.boundary)
    try:
        before = _mixed_ratios(u, stats.p_minus, stats.p_plus)
        after = _mixed_ratios(v, stats.p_minus, stats.p_plus)
    except ZeroDivisionError as e:
        raise ZeroFunctionError("u vanishes at every cell center") from e
    if before[0] == 0.0:
        raise ZeroFunctionError("homothety needs a nonconstant u")

    return HomothetyReport(
        delta=float(delta),
        ratio_plus_minus_before=before[0],
        ratio_plus_minus_after=after[0],
        ratio_minus_plus_before=before[1],
        ratio_minus_plus_after=after[1],
        expected_plus_minus=delta ** (-stats.sigma - 1.0),
        expected_minus_plus=delta ** (stats.sigma - 1.0),
    )


def _power_mean(t: float, p: float) -> float:
    return ((1.0 - t) ** p + t ** p) ** (1.0 / p)


def mix_factor(t: float, p_plus: float, p_minus: float) -> float:
    """[(1-t)^p+ + t^p+]^(1/p+) / [(1-t)^p- + t^p-]^(1/p-), at most 1 when p- <= p+."""
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"mix weight must lie in [0, 1], got {t}")
    return _power_mean(t, p_plus) / _power_mean(t, p_minus)


def mix_factor_monotonicity(t: float, p_grid: Sequence[float]) -> bool:
    """Check that p -> [(1-t)^p + t^p]^(1/p) is nonincreasing along the sorted grid."""
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"mix weight must lie in [0, 1], got {t}")
    values = np.array([_power_mean(t, p) for p in sorted(p_grid)])
    return bool(np.all(np.diff(values) <= 4 * np.finfo(float).eps * values[:-1]))


def _k_hat(u: GridFunction, p_plus: float, p_minus: float) -> float:
    return lp_norm(u.gradient(), p_plus) / lp_norm(u, p_minus)


def _joined_grid(first: Grid, second: Grid) -> Tuple[Grid, int]:
    """Union grid of two adjacent grids and the axis they are stacked along."""
    if first.dimension != second.dimension:
        raise DomainError("cannot join grids of different dimension")
    if not np.allclose(first.spacing, second.spacing, rtol=1e-9, atol=0.0):
        raise DomainError(f"joined grids need equal spacing, got {first.spacing} and {second.spacing}")

    for axis in range(first.dimension):
        (a1, b1), (a2, b2) = first.bounds[axis], second.bounds[axis]
        others_match = all(
            first.bounds[k] == second.bounds[k] and first.shape[k] == second.shape[k]
            for k in range(first.dimension)
            if k != axis
        )
        if not others_match:
            continue
        if min(b1, b2) > max(a1, a2) + 1e-12 * max(abs(b1), abs(b2), 1.0):
            raise DomainError("joined domains overlap")
        if not math.isclose(b1, a2, rel_tol=1e-12, abs_tol=1e-14):
            continue
        bounds = list(first.bounds)
        bounds[axis] = (a1, b2)
        shape = list(first.shape)
        shape[axis] = first.shape[axis] + second.shape[axis] - 1
        return Grid(tuple(bounds), tuple(shape)), axis
    raise DomainError("joined domains must be adjacent boxes sharing a full face")


def join_normalized(u1: GridFunction, u2: GridFunction, t: float, p_plus: float, p_minus: float) -> GridFunction:
    """
    Normalized mix ((1-t) u1 + t u2) / ||.||_{p-} on the union of two
    adjacent boxes, each function extended by zero across the interface.

    Args:
        u1: dirichlet function with ||u1||_{p-} = 1
        u2: dirichlet function with ||u2||_{p-} = 1, on the box right of (or above) u1's
        t: mix weight in [0, 1]
        p_plus: upper exponent of the gradient norm
        p_minus: lower exponent of the normalization

    Raises:
        NormalizationError: if an input is not normalized
        DomainError: if the boxes overlap or are not adjacent
    """
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"mix weight must lie in [0, 1], got {t}")
    for name, u in (("u1", u1), ("u2", u2)):
        if u.boundary != "dirichlet":
            raise DomainError(f"{name} must vanish on its boundary to be extended by zero")
        norm = lp_norm(u, p_minus)
        if not math.isclose(norm, 1.0, rel_tol=NORMALIZATION_TOL):
            raise NormalizationError(f"{name} has ||.||_{{p-}} = {norm:.12g}, expected 1")

    try:
        grid, axis = _joined_grid(u1.grid, u2.grid)
        first, second = u1, u2
    except DomainError:
        grid, axis = _joined_grid(u2.grid, u1.grid)
        first, second = u2, u1
        t = 1.0 - t

    # the shared interface nodes are zero in both pieces
    tail = np.delete(second.values, 0, axis=axis)
    values = np.concatenate([(1.0 - t) * first.values, t * tail], axis=axis)
    joined = GridFunction(grid, values, "dirichlet")
    return joined * (1.0 / lp_norm(joined, p_minus))


@dataclass(frozen=True)
class JoinReport:
    t: float
    p_plus: float
    p_minus: float
    k_hat_first: float
    k_hat_second: float
    k_hat_join: float
    mix_factor: float

    @property
    def bound(self) -> float:
        return max(self.k_hat_first, self.k_hat_second) * self.mix_factor

    @property
    def holds(self) -> bool:
        return self.k_hat_join <= self.bound * (1.0 + JOIN_SLACK) and self.mix_factor <= 1.0 + JOIN_SLACK

    def as_dict(self) -> dict:
        return {
            "t": self.t,
            "p_plus": self.p_plus,
            "p_minus": self.p_minus,
            "k_hat_first": self.k_hat_first,
            "k_hat_second": self.k_hat_second,
            "k_hat_join": self.k_hat_join,
            "mix_factor": self.mix_factor,
            "bound": self.bound,
            "holds": self.holds,
        }


def join_bound_report(u1: GridFunction, u2: GridFunction, t: float, p_plus: float, p_minus: float) -> JoinReport:
    """K-hat = ||grad u||_{p+} / ||u||_{p-} of both pieces and of their normalized join."""
    joined = join_normalized(u1, u2, t, p_plus, p_minus)
    report = JoinReport(
        t=float(t),
        p_plus=float(p_plus),
        p_minus=float(p_minus),
        k_hat_first=_k_hat(u1, p_plus, p_minus),
        k_hat_second=_k_hat(u2, p_plus, p_minus),
        k_hat_join=_k_hat(joined, p_plus, p_minus),
        mix_factor=mix_factor(t, p_plus, p_minus),
    )
    if not report.holds:
        logger.warning("join bound violated at t = %g: %s", t, report)
    return report
