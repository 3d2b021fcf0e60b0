"""
Exact constant-exponent reference spectra.

For constant p the normalized quotient reduces to ||u'||_p / ||u||_p, whose
1D eigenfunctions are generalized sines. With

    pi_p = 2 * integral_0^1 (1 - t^p)^(-1/p) dt

the Dirichlet values on an interval of length L are j * pihat_p / L, where
pihat_p = (p-1)^(1/p) pi_p is the normalized half period. At p = 2 both
reduce to pi.
"""

import logging
import math
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq
from scipy.special import betaincinv

from .domain import Domain
from .errors import DomainError, ExponentRangeError, ShootingError
from .spectrum import Spectrum
from .utils.bracketing import BracketError, first_crossing
from .utils.tanh_sinh import integrate_unit

logger = logging.getLogger(__name__)

PI_P_TOLERANCE = 1e-10

SHOOTING_RTOL = 1e-11
SHOOTING_ATOL = 1e-13


def _check_exponent(p: float) -> float:
    p = float(p)
    if not p > 1 or not math.isfinite(p):
        raise ExponentRangeError(p)
    return p


def pi_p_closed_form(p: float) -> float:
    """2 pi / (p sin(pi/p))."""
    p = _check_exponent(p)
    return 2.0 * math.pi / (p * math.sin(math.pi / p))


@lru_cache(maxsize=256)
def pi_p(p: float) -> float:
    """
    Generalized pi by tanh-sinh quadrature of its defining integral.

    The singular factor (1 - t^p)^(-1/p) is evaluated from the node
    complement 1 - t, so the endpoint t = 1 costs no accuracy.
    """
    p = _check_exponent(p)

    def integrand(t: np.ndarray, c: np.ndarray) -> np.ndarray:
        near_one = t >= 0.5
        one_minus = np.where(near_one, -np.expm1(p * np.log1p(-c)), 1.0 - t ** p)
        return one_minus ** (-1.0 / p)

    value, error = integrate_unit(integrand, tol=1e-14)
    value *= 2.0
    closed = pi_p_closed_form(p)
    if abs(value - closed) > PI_P_TOLERANCE * closed:
        logger.warning("pi_p(%g): quadrature %.15g vs closed form %.15g", p, value, closed)
    return value


def normalized_half_period(p: float) -> float:
    """pihat_p = (p-1)^(1/p) pi_p, the first normalized Dirichlet value on a unit interval."""
    p = _check_exponent(p)
    return (p - 1.0) ** (1.0 / p) * pi_p(p)


def sin_p(p: float, t):
    """
    Generalized sine, vectorized over t.

    On [0, pi_p/2] it inverts s -> integral_0^s (1 - x^p)^(-1/p) dx, which is
    (pi_p/2) I_{s^p}(1/p, 1 - 1/p); elsewhere it is extended by the
    reflection about pi_p/2, antiperiodicity with period pi_p, and oddness.
    """
    p = _check_exponent(p)
    half = pi_p(p)
    t = np.asarray(t, dtype=float)

    r = np.mod(t, 2.0 * half)
    sign = np.where(r >= half, -1.0, 1.0)
    r = np.where(r >= half, r - half, r)
    r = np.where(r > 0.5 * half, half - r, r)

    fraction = np.clip(2.0 * r / half, 0.0, 1.0)
    s = betaincinv(1.0 / p, 1.0 - 1.0 / p, fraction) ** (1.0 / p)
    result = sign * s
    return float(result) if result.ndim == 0 else result


def _shoot(p: float, big_lambda: float, t_end: float, t0: float = 0.0, u0: float = 0.0):
    """
    Integrate (|u'|^{p-2} u')' + Lambda |u|^{p-2} u = 0 in the variables
    (u, w = |u'|^{p-2} u') from u(t0) = u0, u'(t0) = 1, recording zeros of u.
    """
    inverse = 1.0 / (p - 1.0)

    def rhs(t, y):
        u, w = y
        return [np.sign(w) * abs(w) ** inverse, -big_lambda * np.sign(u) * abs(u) ** (p - 1.0)]

    def crossing(t, y):
        return y[0]

    return solve_ivp(
        rhs,
        (t0, t_end),
        [u0, 1.0],
        method="DOP853",
        rtol=SHOOTING_RTOL,
        atol=SHOOTING_ATOL,
        events=crossing,
        dense_output=True,
    )


def sin_p_by_shooting(p: float, t: float) -> float:
    """
    sin_p(t) for 0 <= t <= pi_p/2 from the ODE (|u'|^{p-2}u')' + (p-1)|u|^{p-2}u = 0,
    u(0) = 0, u'(0) = 1. Independent of the incomplete beta inverse.
    """
    p = _check_exponent(p)
    if t == 0.0:
        return 0.0
    solution = _shoot(p, p - 1.0, float(t))
    if not solution.success:
        raise ShootingError(f"sin_p shooting failed: {solution.message}")
    return float(solution.y[0, -1])


def _zero_time(p: float, big_lambda: float, length: float, j: int) -> float:
    """Position of the j-th interior zero, clipped to 2 * length."""
    t0 = 1e-8 * length
    solution = _shoot(p, big_lambda, 2.0 * length, t0=t0, u0=t0)
    if not solution.success:
        raise ShootingError(f"shooting failed at Lambda = {big_lambda:.6g}: {solution.message}")
    zeros = solution.t_events[0]
    return float(zeros[j - 1]) if len(zeros) >= j else 2.0 * length


def shooting_check(p: float, length: float, j: int) -> float:
    """
    Normalized j-th Dirichlet value by shooting on the classical constant-p
    problem.

    Finds the classical eigenvalue Lambda_j whose solution started at the
    left end has its j-th zero at ``length`` and returns Lambda_j^(1/p),
    which is the normalized value j pihat_p / length.

    Raises:
        ShootingError: if no bracket for Lambda_j is found
    """
    p = _check_exponent(p)
    if j < 1:
        raise DomainError(f"mode index must be >= 1, got {j}")
    if not length > 0:
        raise DomainError(f"length must be positive, got {length}")

    def overshoot(big_lambda: float) -> float:
        return _zero_time(p, big_lambda, length, j) - length

    try:
        lo, hi = first_crossing(lambda lam: overshoot(lam) < 0.0, 1.0 / length ** p)
    except BracketError as e:
        raise ShootingError(f"cannot bracket mode {j} for p = {p}: {e}") from e

    big_lambda = brentq(overshoot, lo, hi, xtol=1e-300, rtol=1e-13, maxiter=200)
    logger.debug("shooting p = %g, j = %d: Lambda = %.12g", p, j, big_lambda)
    return big_lambda ** (1.0 / p)


def exact_spectrum_constant_p(p: float, length: float, boundary: str, j_max: int) -> Spectrum:
    """
    Normalized constant-p spectrum of an interval: lambda_j = j pihat_p / L
    (dirichlet) or mu_1 = 0, mu_j = (j-1) pihat_p / L (free).
    """
    p = _check_exponent(p)
    if not length > 0:
        raise DomainError(f"length must be positive, got {length}")
    j = np.arange(1, j_max + 1)
    steps = j if boundary == "dirichlet" else j - 1
    return Spectrum.from_values(steps * normalized_half_period(p) / length, boundary, "exact")


def classical_spectrum_constant_p(p: float, length: float, j_max: int) -> Spectrum:
    """
    Dirichlet values of the classical p-Laplacian, (p-1) (j pi_p / L)^p.

    Its counting function grows like lambda^(1/p) in 1D, against lambda for
    the normalized problem.
    """
    p = _check_exponent(p)
    j = np.arange(1, j_max + 1)
    return Spectrum.from_values((p - 1.0) * (j * pi_p(p) / length) ** p, "dirichlet", "exact")


def laplacian_box_spectrum(domain: Domain, boundary: str, j_max: int) -> Spectrum:
    """
    Normalized p = 2 spectrum of an interval or box, pi sqrt(sum (m_i / L_i)^2)
    with m_i >= 1 (dirichlet) or m_i >= 0 (free), multiplicities included.
    """
    if domain.kind not in ("interval", "box"):
        raise DomainError(f"box spectra need an interval or box, not a {domain.kind}")
    lengths = np.array(domain.lengths)
    first = 1 if boundary == "dirichlet" else 0
    cutoff = max(4, int(math.ceil(j_max ** (1.0 / domain.dimension))) + 2)

    while True:
        modes = np.meshgrid(*[np.arange(first, cutoff + 1)] * domain.dimension, indexing="ij")
        values = np.pi * np.sqrt(sum((m.ravel() / L) ** 2 for m, L in zip(modes, lengths)))
        values.sort()
        if len(values) >= j_max:
            # any omitted mode has some m_i > cutoff
            if values[j_max - 1] < np.pi * (cutoff + 1) / lengths.max():
                return Spectrum.from_values(values[:j_max], boundary, "exact")
        cutoff *= 2
