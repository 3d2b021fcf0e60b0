"""
First eigenpairs by projected descent on the unit sphere k(u) = 1, and
nodal-glued upper estimates for higher 1D Dirichlet modes.

Each descent step maps the Euler-Lagrange defect K'(u) - Q k'(u) through the
frozen-coefficient p(x)-stiffness (an inverse power step), backtracks with an
Armijo test on the quotient, and projects back to k = 1. Stationarity of the
iteration is exactly the discrete eigenvalue equation.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq, minimize

from .domain import Domain, ExponentField, exponent_stats
from .errors import DomainError, InvariantViolation, ResolutionError, ZeroFunctionError
from .modular import GridFunction, SandwichReport, check_quotient_sandwich, luxemburg_norm
from .oracle import normalized_half_period
from .rayleigh import HatBasis, defect_step, pairing_k_prime, power_kernel, rayleigh
from .spectrum import SpectralValue, Spectrum

logger = logging.getLogger(__name__)

MIN_SOLVER_NODES = 17
MIN_PIECE_NODES = 8

# quotient noise allowed by the sufficient-decrease test
ROUNDOFF_ALLOWANCE = 8 * np.finfo(float).eps

# largest |<k'(u), 1>| accepted on the balanced slice
BALANCE_TOL = 1e-9


@dataclass(frozen=True)
class SolverOptions:
    max_iter: int = 500
    tol: float = 1e-8
    seed: int = 0
    restarts: int = 5
    armijo: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 60
    stall: float = 1e-24

    def __post_init__(self):
        if not self.tol > 0:
            raise DomainError(f"solver tolerance must be positive, got {self.tol}")
        if self.max_iter < 0 or self.restarts < 1:
            raise DomainError("max_iter must be >= 0 and restarts >= 1")


@dataclass(frozen=True, eq=False)
class EigenpairResult:
    """
    Eigenvalue estimate with its normalized eigenfunction (k(u) = 1).

    ``lam`` equals K(u); ``trace`` holds the quotient after every accepted step.
    """

    lam: float
    u: GridFunction = field(repr=False)
    residual: float
    iterations: int
    converged: bool
    boundary: str
    trace: Tuple[float, ...] = field(default=(), repr=False)
    single_signed: bool = False

    def as_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "residual": self.residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "boundary": self.boundary,
            "single_signed": self.single_signed,
            "nodes": list(self.u.grid.shape),
        }


Constraint = Callable[[GridFunction, ExponentField], GridFunction]


def project_to_sphere(u: GridFunction, field: ExponentField) -> GridFunction:
    """Scale u to k(u) = 1."""
    if u.is_zero():
        raise ZeroFunctionError("cannot project the zero function")
    k = luxemburg_norm(u, field)
    if k == 0.0:
        raise ZeroFunctionError("u vanishes at every cell center")
    return u * (1.0 / k)


def balance_shift(u: GridFunction, field: ExponentField) -> GridFunction:
    """
    Shift u by the constant c that makes sum |b|^{p-2} b = 0 over the cells,
    where b = (u + c) / k(u + c). Then <k'(u + c), 1> = 0, the quotient is
    stationary along constants, and the balance survives any rescaling.
    """
    cells = u.cell_values().ravel()
    p = field.cell_values.ravel()
    top, bottom = float(cells.max()), float(cells.min())
    if top == bottom:
        raise ZeroFunctionError("a constant function has no balanced shift")

    def moment(c: float) -> float:
        b = (cells + c) / luxemburg_norm(u.with_values(u.values + c), field)
        return float(np.sum(power_kernel(np.abs(b), p) * b))

    shift = brentq(moment, -top, -bottom, xtol=1e-15 * max(abs(top), abs(bottom)), rtol=4 * np.finfo(float).eps)
    return u.with_values(u.values + shift)


def odd_reflection(u: GridFunction, field: ExponentField) -> GridFunction:
    """Antisymmetric part of u under reflection of the first axis."""
    return u.with_values(0.5 * (u.values - u.values[::-1]))


CONSTRAINTS: Dict[str, Constraint] = {
    "balanced": balance_shift,
    "odd": odd_reflection,
}


def _identity(u: GridFunction, field: ExponentField) -> GridFunction:
    return u


def _single_signed(u: GridFunction) -> bool:
    scale = float(np.max(np.abs(u.values)))
    return bool(np.all(u.values >= -1e-12 * scale) or np.all(u.values <= 1e-12 * scale))


def _descend(
    u0: GridFunction,
    field: ExponentField,
    opts: SolverOptions,
    constraint: Constraint = _identity,
) -> EigenpairResult:
    """Projected, preconditioned descent of K/k from u0."""
    basis = HatBasis(u0.grid, u0.boundary)
    u = project_to_sphere(constraint(u0, field), field)
    state = rayleigh(u, field)
    trace = [state.quotient]
    residual = np.inf
    converged = False

    for iteration in range(1, opts.max_iter + 1):
        residual, w, r = defect_step(state, state.quotient, basis)
        if residual < opts.tol:
            converged = True
            break

        direction = np.zeros(u.grid.num_nodes)
        direction[basis.dofs] = -w
        slope = -float(r @ w)
        if -slope <= opts.stall * state.quotient:
            logger.debug("descent stalled at iteration %d (slope %.3g)", iteration, slope)
            break

        q = state.quotient
        step = 1.0
        accepted = None
        for _ in range(opts.max_backtracks):
            try:
                candidate = constraint(u.with_values(u.values + step * direction.reshape(u.grid.shape)), field)
                trial = rayleigh(project_to_sphere(candidate, field), field)
            except ZeroFunctionError:
                trial = None
            if trial is not None and trial.quotient <= q + opts.armijo * step * slope + ROUNDOFF_ALLOWANCE * q:
                accepted = trial
                break
            step *= opts.backtrack
        if accepted is None:
            logger.debug("no acceptable step at iteration %d", iteration)
            break

        state = accepted
        u = state.u
        trace.append(state.quotient)
        logger.debug(
            "iteration %d: quotient %.15g, step %.3g, residual %.3g", iteration, state.quotient, step, residual
        )
    else:
        residual, _, _ = defect_step(state, state.quotient, basis)
        converged = residual < opts.tol

    if u.boundary == "dirichlet" and float(np.sum(u.values)) < 0.0:
        u = -u
    lam = luxemburg_norm(u.gradient(), field)
    return EigenpairResult(
        lam=lam,
        u=u,
        residual=float(residual),
        iterations=len(trace) - 1,
        converged=converged,
        boundary=u.boundary,
        trace=tuple(trace),
        single_signed=_single_signed(u),
    )


def _check_resolution(field: ExponentField, domain: Domain) -> None:
    grid = field.grid
    if tuple(grid.bounds) != tuple(domain.bounds) or domain.kind not in ("interval", "box"):
        raise DomainError("exponent field grid does not cover the domain")
    if min(grid.shape) < MIN_SOLVER_NODES:
        raise ResolutionError(f"eigensolver needs at least {MIN_SOLVER_NODES} nodes per axis, got {grid.shape}")


def _bump(grid, boundary: str) -> np.ndarray:
    if boundary == "dirichlet":
        values = np.ones(grid.shape)
        for (a, b), x in zip(grid.bounds, grid.mesh()):
            values *= (x - a) * (b - x)
        return values
    # odd linear profile along the longest axis
    axis = int(np.argmax([b - a for a, b in grid.bounds]))
    a, b = grid.bounds[axis]
    return grid.mesh()[axis] - 0.5 * (a + b)


def _starts(grid, boundary: str, opts: SolverOptions, initial: Optional[GridFunction] = None) -> List[GridFunction]:
    base = _bump(grid, boundary) if initial is None else initial.values
    rng = np.random.default_rng(opts.seed)
    starts = [base]
    for _ in range(opts.restarts - 1):
        starts.append(base * (1.0 + 0.5 * rng.uniform(-1.0, 1.0, grid.shape)))
    return [GridFunction.from_callable(grid, lambda *_, v=v: v, boundary) for v in starts]


def _best(results: Sequence[EigenpairResult]) -> EigenpairResult:
    converged = [r for r in results if r.converged]
    return min(converged or results, key=lambda r: r.lam)


def first_eigenpair(
    field: ExponentField,
    domain: Domain,
    boundary: str = "dirichlet",
    opts: Optional[SolverOptions] = None,
    constraint: Optional[str] = None,
    initial: Optional[GridFunction] = None,
) -> EigenpairResult:
    """
    First eigenpair of the normalized problem by projected descent.

    Args:
        field: exponent field on a grid over ``domain``
        domain: interval or box
        boundary: "dirichlet" or "free"
        opts: solver options; the best of ``opts.restarts`` seeded starts is kept
        constraint: None, "odd" or "balanced"; with boundary "free" and no
            constraint the minimum 0 is attained at constants and returned directly
        initial: first start on the same grid; the seeded restarts perturb it

    Returns:
        EigenpairResult; non-convergence is reported, never raised
    """
    opts = opts or SolverOptions()
    _check_resolution(field, domain)
    grid = field.grid
    if initial is not None and initial.grid.shape != grid.shape:
        raise DomainError(f"initial guess lives on {initial.grid.shape} nodes, field on {grid.shape}")

    if boundary == "free" and constraint is None:
        constant = project_to_sphere(GridFunction(grid, np.ones(grid.shape), "free"), field)
        return EigenpairResult(
            lam=0.0,
            u=constant,
            residual=0.0,
            iterations=0,
            converged=True,
            boundary="free",
            trace=(0.0,),
            single_signed=True,
        )

    projection = _identity if constraint is None else CONSTRAINTS[constraint]
    results = [_descend(start, field, opts, projection) for start in _starts(grid, boundary, opts, initial)]
    best = _best(results)
    logger.info(
        "first eigenpair (%s): lambda = %.12g, residual %.3g after %d iterations",
        boundary, best.lam, best.residual, best.iterations,
    )
    return best


def neumann_first_nontrivial(
    field: ExponentField,
    domain: Domain,
    opts: Optional[SolverOptions] = None,
) -> EigenpairResult:
    """
    First nonzero free-boundary eigenvalue, by descent on the balanced slice
    where <k'(u), 1> = 0. Constants are excluded and the minimizer there is a
    critical point of the unconstrained quotient.

    Raises:
        InvariantViolation: if the returned iterate is off the balanced slice
    """
    result = first_eigenpair(field, domain, "free", opts, constraint="balanced")
    ones = GridFunction(result.u.grid, np.ones(result.u.grid.shape), "free")
    balance = pairing_k_prime(result.u, ones, field)
    if abs(balance) > BALANCE_TOL:
        raise InvariantViolation("<k'(u), 1> = 0", f"got {balance:.3g}")
    return result


@dataclass(frozen=True, eq=False)
class NodalCandidate:
    """Glued candidate for the j-th 1D Dirichlet mode."""

    j: int
    value: float
    breakpoints: Tuple[int, ...]
    piece_values: Tuple[float, ...]
    u: GridFunction = field(repr=False)
    sandwich: Optional[SandwichReport] = None
    band: Tuple[float, float] = (0.0, np.inf)
    band_rtol: float = 0.0

    @property
    def in_band(self) -> bool:
        return self.band[0] * (1.0 - self.band_rtol) <= self.value <= self.band[1] * (1.0 + self.band_rtol)

    def as_dict(self) -> dict:
        return {
            "j": self.j,
            "value": self.value,
            "breakpoints": list(self.breakpoints),
            "piece_values": list(self.piece_values),
            "band": list(self.band),
            "band_rtol": self.band_rtol,
            "in_band": self.in_band,
            "sandwich_holds": None if self.sandwich is None else self.sandwich.holds,
        }


class _PieceSolver:
    """First Dirichlet eigenpairs of node ranges, cached by (start, stop)."""

    def __init__(self, field: ExponentField, opts: SolverOptions):
        self.field = field
        self.opts = SolverOptions(
            max_iter=opts.max_iter, tol=opts.tol, seed=opts.seed, restarts=1,
            armijo=opts.armijo, backtrack=opts.backtrack, max_backtracks=opts.max_backtracks,
        )
        self.cache: Dict[Tuple[int, int], EigenpairResult] = {}

    def __call__(self, start: int, stop: int) -> EigenpairResult:
        key = (start, stop)
        if key not in self.cache:
            sub = self.field.restrict(start, stop)
            u0 = GridFunction.from_callable(sub.grid, lambda x: (x - sub.grid.bounds[0][0]) * (sub.grid.bounds[0][1] - x))
            self.cache[key] = _descend(u0, sub, self.opts)
        return self.cache[key]

    def value(self, start: int, stop: int) -> float:
        return self(start, stop).lam


def _balance_breakpoints(solver: _PieceSolver, breaks: List[int], max_sweeps: int = 20) -> List[int]:
    """Coordinate descent on interior breakpoints, minimizing the largest piece value."""
    gap = MIN_PIECE_NODES - 1
    for _ in range(max_sweeps):
        moved = False
        for i in range(1, len(breaks) - 1):
            left, right = breaks[i - 1], breaks[i + 1]
            lo, hi = left + gap, right - gap
            # smallest b whose left piece is no higher than its right piece
            while lo < hi:
                mid = (lo + hi) // 2
                if solver.value(left, mid) <= solver.value(mid, right):
                    hi = mid
                else:
                    lo = mid + 1
            candidates = [b for b in (lo - 1, lo) if left + gap <= b <= right - gap]
            best = min(candidates, key=lambda b: max(solver.value(left, b), solver.value(b, right)))
            if best != breaks[i]:
                breaks[i] = best
                moved = True
        if not moved:
            break
    return breaks


def _glue(full_grid, pieces: Sequence[EigenpairResult], breaks: Sequence[int], coefficients: np.ndarray) -> GridFunction:
    values = np.zeros(full_grid.num_nodes)
    for c, piece, start in zip(coefficients, pieces, breaks[:-1]):
        values[start:start + piece.u.grid.num_nodes] += c * piece.u.values
    return GridFunction(full_grid, values, "dirichlet")


def _span_maximum(field: ExponentField, pieces: Sequence[EigenpairResult], breaks: Sequence[int]) -> Tuple[float, GridFunction]:
    """Largest quotient over the span of the pieces, by L-BFGS ascent from two starts."""
    grid = field.grid
    j = len(pieces)
    embedded = []
    for piece, start in zip(pieces, breaks[:-1]):
        v = np.zeros(grid.num_nodes)
        v[start:start + piece.u.grid.num_nodes] = piece.u.values
        embedded.append(v)
    embedded = np.array(embedded)

    def negative_quotient(c: np.ndarray):
        state = rayleigh(_glue(grid, pieces, breaks, c), field)
        gradient = embedded @ state.defect() / state.k
        return -state.quotient, -gradient

    alternating = np.array([(-1.0) ** i for i in range(j)])
    dominant = int(np.argmax([p.lam for p in pieces]))
    tilted = 1e-3 * alternating
    tilted[dominant] = alternating[dominant]

    best_value, best_c = pieces[dominant].lam, np.eye(j)[dominant] * alternating
    for start in (alternating, tilted):
        outcome = minimize(negative_quotient, start, jac=True, method="L-BFGS-B", options={"maxiter": 200})
        if -outcome.fun > best_value:
            best_value, best_c = float(-outcome.fun), outcome.x
    glued = project_to_sphere(_glue(grid, pieces, breaks, best_c), field)
    return float(best_value), glued


def nodal_mode_candidates(
    field: ExponentField,
    domain: Domain,
    j_max: int,
    opts: Optional[SolverOptions] = None,
) -> List[NodalCandidate]:
    """
    Glued upper estimates for the 1D Dirichlet modes j = 1..j_max.

    For each j the interval is split at grid nodes into j pieces, the
    breakpoints are balanced to minimize the largest piece eigenvalue, and the
    reported value is the largest quotient over the span of the alternating
    pieces. Each candidate carries its quotient sandwich and the kappa band of
    the constant-exponent values at p- and p+.
    """
    opts = opts or SolverOptions()
    grid = field.grid
    if grid.dimension != 1 or domain.dimension != 1:
        raise DomainError("nodal modes are built on 1D intervals")
    if j_max < 1:
        raise DomainError(f"j_max must be >= 1, got {j_max}")
    if j_max * (MIN_PIECE_NODES - 1) + 1 > grid.num_nodes:
        raise ResolutionError(
            f"{j_max} pieces of at least {MIN_PIECE_NODES} nodes need "
            f"{j_max * (MIN_PIECE_NODES - 1) + 1} grid nodes, got {grid.num_nodes}"
        )

    stats = exponent_stats(field, domain)
    length = domain.lengths[0]
    solver = _PieceSolver(field, opts)
    last = grid.num_nodes - 1
    candidates = []
    for j in range(1, j_max + 1):
        breaks = [int(round(i * last / j)) for i in range(j + 1)]
        breaks = _balance_breakpoints(solver, breaks)
        pieces = [solver(s, e) for s, e in zip(breaks[:-1], breaks[1:])]
        value, glued = _span_maximum(field, pieces, breaks)

        oracle = [j * normalized_half_period(p) / length for p in (stats.p_minus, stats.p_plus)]
        band = (min(oracle) / stats.kappa, max(oracle) * stats.kappa) if stats.tau < 1.0 else (0.0, np.inf)
        sandwich = check_quotient_sandwich(glued, field, stats) if stats.tau < 1.0 else None
        candidate = NodalCandidate(
            j=j,
            value=value,
            breakpoints=tuple(breaks),
            piece_values=tuple(p.lam for p in pieces),
            u=glued,
            sandwich=sandwich,
            band=band,
            # discrete values overshoot the continuum ones by O((j h / L)^2)
            band_rtol=(np.pi * j * grid.h / length) ** 2,
        )
        if not candidate.in_band:
            logger.warning("nodal mode %d value %.6g outside kappa band %s", j, value, band)
        candidates.append(candidate)
        logger.info("nodal mode %d: %.10g (breakpoints %s)", j, value, breaks)
    return candidates


def nodal_modes_1d(
    field: ExponentField,
    domain: Domain,
    j_max: int,
    opts: Optional[SolverOptions] = None,
) -> Spectrum:
    """Nodal-upper spectrum for j = 1..j_max; see ``nodal_mode_candidates``."""
    candidates = nodal_mode_candidates(field, domain, j_max, opts)
    return Spectrum(tuple(SpectralValue(c.j, c.value, "nodal-upper") for c in candidates), "dirichlet")


@dataclass(frozen=True)
class OrderingReport:
    pairs: Tuple[Tuple[int, float, float], ...]
    holds: bool

    def as_dict(self) -> dict:
        return {
            "pairs": [{"j": j, "mu": mu, "lambda": lam} for j, mu, lam in self.pairs],
            "holds": self.holds,
        }


def check_ordering(dirichlet: Spectrum, free: Spectrum, tol: float = 1e-8) -> OrderingReport:
    """mu_j <= lambda_j for every index present in both spectra."""
    free_values = {e.index: e.value for e in free.entries}
    pairs = tuple(
        (e.index, free_values[e.index], e.value) for e in dirichlet.entries if e.index in free_values
    )
    holds = all(mu <= lam + tol * max(1.0, lam) for _, mu, lam in pairs)
    return OrderingReport(pairs, holds)
