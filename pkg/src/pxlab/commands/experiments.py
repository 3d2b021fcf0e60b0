"""
Experiment commands: norm, eig, spectrum, count, verify and lambda-star.

Each handler reads a validated Settings, fills a ReportCollector and returns
the inequalities that failed. ``run`` writes the reports before raising
InvariantViolation for the first failure.
"""

import dataclasses
import math
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from ..counting import (
    calibrate,
    cube_count_bounds,
    homothety_transport,
    join_bound_report,
    mix_factor,
    mix_factor_monotonicity,
    theorem_bounds,
    unit_cube_lambda0,
)
from ..domain import Domain, ExponentField, ExponentStats, Grid, cube_cover, exponent_stats
from ..eigensolver import (
    check_ordering,
    first_eigenpair,
    neumann_first_nontrivial,
    nodal_mode_candidates,
    nodal_modes_1d,
)
from ..errors import ConfigError, DegenerateSamplesError, InvariantViolation, ZeroFunctionError
from ..expressions import compile_expression
from ..lambda_star import bump_family_explorer, default_bump, is_decaying, ramp_excess
from ..modular import (
    GridFunction,
    check_norm_sandwich,
    check_quotient_sandwich,
    lp_norm,
    luxemburg_norm,
    modular,
    young_gap,
)
from ..oracle import exact_spectrum_constant_p, laplacian_box_spectrum, normalized_half_period
from ..rayleigh import pairing_k_prime, pairing_K_prime, rayleigh
from ..spectrum import Spectrum
from ..utils.console import log_message, log_subtitle, log_title, log_warning
from .reports import ReportCollector
from .settings import Settings

COMMANDS = ("norm", "eig", "spectrum", "count", "verify", "lambda-star")

INEQUALITIES = {
    "norm_sandwich": "‖u‖_{p-}/(1+τ)^{1/p-} ≤ ‖u‖_{p(x)} ≤ ‖u‖_{p+}/(1-τ)^{1/p+}",
    "quotient_sandwich": "‖∇u‖_{p-}/(κ‖u‖_{p+}) ≤ K(u)/k(u) ≤ κ‖∇u‖_{p+}/‖u‖_{p-}",
    "euler_K": "<K'(u), u> = K(u)",
    "euler_k": "<k'(u), u> = k(u)",
    "pairing_k": "|<k'(u), v>| ≤ ‖v‖_{p(x)}",
    "pairing_K": "|<K'(u), v>| ≤ ‖∇v‖_{p(x)}",
    "young": "ab ≤ (1-1/p) a^{p/(p-1)} + b^p/p",
    "homothety": "‖∇v‖_{p+}/‖v‖_{p-} = δ^{-σ-1}‖∇u‖_{p+}/‖u‖_{p-} and ‖∇v‖_{p-}/‖v‖_{p+} = δ^{σ-1}‖∇u‖_{p-}/‖u‖_{p+}",
    "mix_factor": "[(1-t)^{p+}+t^{p+}]^{1/p+} / [(1-t)^{p-}+t^{p-}]^{1/p-} ≤ 1",
    "mix_monotone": "p ↦ [(1-t)^p+t^p]^{1/p} is nonincreasing",
    "join_bound": "K̂(join) ≤ max(K̂(u1), K̂(u2)) · mix factor",
    "kappa_band": "pihat_{p}/κ ≤ nodal value / j ≤ κ pihat_{p}",
    "ordering": "μ_j ≤ λ_j",
    "counting": "C1|Ω|(λ/κ)^{n/(1+σ)} ≤ N(λ) ≤ C2|Ω|(κλ)^{n/(1-σ)}",
}

RELATIVE_TOL = 1e-9


def _stats_dict(stats: ExponentStats) -> dict:
    data = dataclasses.asdict(stats)
    data["exponent_window"] = list(stats.exponent_window())
    return data


def _node_rows(grid: Grid, **columns: np.ndarray) -> List[dict]:
    names = ("x", "y")[: grid.dimension]
    coords = [m.ravel() for m in grid.mesh()]
    flat = {key: np.asarray(values).ravel() for key, values in columns.items()}
    rows = []
    for i in range(grid.num_nodes):
        row = {name: float(c[i]) for name, c in zip(names, coords)}
        row.update({key: float(values[i]) for key, values in flat.items()})
        rows.append(row)
    return rows


def _problem(settings: Settings) -> Tuple[Domain, ExponentField, ExponentStats]:
    domain = settings.get_domain()
    field = settings.get_exponent_field()
    return domain, field, exponent_stats(field, domain)


def _constant_oracle(field: ExponentField, domain: Domain, boundary: str, j_max: int) -> Optional[Spectrum]:
    """Exact spectrum when one is known: constant p in 1D, p = 2 on a box."""
    if not field.is_constant:
        return None
    if domain.dimension == 1:
        return exact_spectrum_constant_p(field.p_minus, domain.lengths[0], boundary, j_max)
    if field.p_minus == 2.0:
        return laplacian_box_spectrum(domain, boundary, j_max)
    return None


def run_norm(settings: Settings, report: ReportCollector) -> List[str]:
    log_title("Luxemburg norm")
    domain, field, stats = _problem(settings)
    grid = field.grid
    u = GridFunction.from_callable(grid, compile_expression(settings.function, grid.dimension, "function"), settings.boundary)

    k = luxemburg_norm(u, field)
    if k == 0.0:
        raise ZeroFunctionError(f"{settings.function!r} vanishes at every cell center")
    K = luxemburg_norm(u.gradient(), field)
    log_message(f"‖u‖_p(x) = {k:.12g}, ‖∇u‖_p(x) = {K:.12g}")
    report.update(
        norm=k,
        modular_at_norm=modular(u, k, field),
        gradient_norm=K,
        quotient=K / k,
        stats=_stats_dict(stats),
    )

    failures = []
    if stats.tau < 1.0:
        sandwich = check_norm_sandwich(u, field, stats)
        report.update(norm_sandwich=sandwich.as_dict())
        if not sandwich.holds:
            failures.append(INEQUALITIES["norm_sandwich"])
        if K > 0.0:
            quotient = check_quotient_sandwich(u, field, stats)
            report.update(quotient_sandwich=quotient.as_dict())
            if not quotient.holds:
                failures.append(INEQUALITIES["quotient_sandwich"])
    report.add_table("nodes", _node_rows(grid, u=u.values, p=field.values))
    return failures


def run_eig(settings: Settings, report: ReportCollector) -> List[str]:
    log_title("First eigenpair")
    domain, field, stats = _problem(settings)
    opts = settings.solver_options()

    if settings.boundary == "free":
        log_subtitle("free boundary: mu_1 = 0 at constants, solving for the first nonzero value")
        result = neumann_first_nontrivial(field, domain, opts)
        index = 2
    else:
        result = first_eigenpair(field, domain, "dirichlet", opts)
        index = 1
    log_message(f"lambda = {result.lam:.12g} (residual {result.residual:.3g}, {result.iterations} iterations)")
    if not result.converged:
        log_warning(f"descent stopped before reaching tol = {opts.tol:g}")

    summary = result.as_dict()
    summary["index"] = index
    oracle = _constant_oracle(field, domain, settings.boundary, index)
    if oracle is not None:
        exact = oracle.value(index)
        summary["exact"] = exact
        summary["relative_error"] = abs(result.lam - exact) / exact
    report.update(eigenpair=summary, stats=_stats_dict(stats))

    failures = []
    if stats.tau < 1.0:
        sandwich = check_quotient_sandwich(result.u, field, stats)
        report.update(quotient_sandwich=sandwich.as_dict())
        if not sandwich.holds:
            failures.append(INEQUALITIES["quotient_sandwich"])

    report.add_table("eigenfunction", _node_rows(field.grid, u=result.u.values, p=field.values))
    report.add_table("trace", [{"iteration": i, "quotient": q} for i, q in enumerate(result.trace)])
    return failures


def run_spectrum(settings: Settings, report: ReportCollector) -> List[str]:
    log_title("Nodal spectrum")
    domain, field, stats = _problem(settings)
    if domain.dimension != 1:
        raise ConfigError("nodal spectra are computed on 1D intervals only")
    opts = settings.solver_options()

    candidates = nodal_mode_candidates(field, domain, settings.j_max, opts)
    oracle = _constant_oracle(field, domain, "dirichlet", settings.j_max)
    failures = []
    rows = []
    for c in candidates:
        row = {
            "j": c.j,
            "value": c.value,
            "band_low": c.band[0],
            "band_high": c.band[1],
            "in_band": c.in_band,
            "sandwich_holds": None if c.sandwich is None else c.sandwich.holds,
            "exact": None if oracle is None else oracle.value(c.j),
        }
        rows.append(row)
        log_message(f"j = {c.j}: {c.value:.10g}")
        if not c.in_band:
            failures.append(f"{INEQUALITIES['kappa_band']} at j = {c.j}")
        if c.sandwich is not None and not c.sandwich.holds:
            failures.append(f"{INEQUALITIES['quotient_sandwich']} at j = {c.j}")
    report.add_table("spectrum", rows)
    report.update(stats=_stats_dict(stats), candidates=[c.as_dict() for c in candidates])

    if settings.boundary == "free":
        log_subtitle("free boundary ordering")
        mu = neumann_first_nontrivial(field, domain, opts)
        free = Spectrum.from_values([0.0, mu.lam], "free", "descent")
        dirichlet = Spectrum.from_values([c.value for c in candidates], "dirichlet", "nodal-upper")
        ordering = check_ordering(dirichlet, free, tol=max(opts.tol, 1e-6))
        report.update(free=free.as_dict(), ordering=ordering.as_dict())
        if not ordering.holds:
            failures.append(INEQUALITIES["ordering"])
    return failures


def _exact_count_spectrum(field: ExponentField, domain: Domain, boundary: str, lam_max: float) -> Spectrum:
    if domain.dimension == 1:
        length = domain.lengths[0]
        j_max = int(math.ceil(lam_max * length / normalized_half_period(field.p_minus))) + 3
        return exact_spectrum_constant_p(field.p_minus, length, boundary, j_max)
    if field.p_minus != 2.0:
        raise ConfigError("exact 2D spectra are only known for p = 2")
    # lattice points in the bounding box of the quarter disk
    j_max = int(np.prod([lam_max * length / math.pi + 2.0 for length in domain.lengths]))
    return laplacian_box_spectrum(domain, boundary, j_max)


def _counting_spectrum(settings: Settings, field: ExponentField, domain: Domain) -> Spectrum:
    source = settings.source
    if source == "auto":
        source = "exact" if field.is_constant else "nodal"
    if source == "exact":
        if not field.is_constant:
            raise ConfigError("exact spectra need a constant exponent")
        return _exact_count_spectrum(field, domain, settings.boundary, settings.lambda_max)

    if domain.dimension != 1 or settings.boundary != "dirichlet":
        raise ConfigError("nodal spectra are computed for 1D dirichlet problems only")
    spectrum = nodal_modes_1d(field, domain, settings.j_max, settings.solver_options())
    top = float(spectrum.values.max())
    if settings.lambda_max > top:
        log_warning(f"lambda_max = {settings.lambda_max:g} exceeds the largest computed value {top:.6g}; counts above it are lower bounds")
    return spectrum


def run_count(settings: Settings, report: ReportCollector) -> List[str]:
    log_title("Eigenvalue counting")
    domain, field, stats = _problem(settings)
    stats.require_bounds()
    spectrum = _counting_spectrum(settings, field, domain)
    log_message(f"{len(spectrum)} spectral values ({spectrum.entries[0].kind})")

    calibration = calibrate(spectrum, settings.anchor())
    counting = theorem_bounds(stats, domain, settings.lambda_grid(), calibration, spectrum)
    try:
        counting = counting.with_fit()
        log_message(f"fitted growth exponent {counting.fitted_exponent:.4f}, window {stats.exponent_window()}")
    except DegenerateSamplesError as e:
        log_warning(str(e))

    rows = counting.rows()
    for row in rows:
        row["fitted_exponent"] = counting.fitted_exponent
    report.add_table("counting", rows, ["lambda", "N", "lower", "upper", "fitted_exponent"])
    report.update(counting=counting.as_dict(), stats=_stats_dict(stats), spectrum_kind=spectrum.entries[0].kind)

    lambda0 = unit_cube_lambda0(stats)
    if settings.lambda_max > lambda0:
        inner, _ = cube_cover(domain, 1e-2)
        if inner.cubes:
            estimate = cube_count_bounds(stats, inner, settings.lambda_max, lambda0=lambda0)
            report.update(cube_estimate=estimate.as_dict())

    return [f"{INEQUALITIES['counting']} at λ = {counting.lambdas[i]:.6g}" for i in counting.violations]


class _Tally:
    """Per-inequality sample counts and worst margins; a negative margin is a failure."""

    def __init__(self):
        self.entries: Dict[str, List[float]] = {}

    def record(self, name: str, margin: float) -> None:
        self.entries.setdefault(name, []).append(float(margin))

    def rows(self) -> List[dict]:
        return [
            {
                "check": name,
                "inequality": INEQUALITIES[name],
                "samples": len(margins),
                "failures": sum(m < 0.0 for m in margins),
                "worst_margin": min(margins),
            }
            for name, margins in self.entries.items()
        ]

    def failures(self) -> List[str]:
        return [INEQUALITIES[name] for name, margins in self.entries.items() if min(margins) < 0.0]


def _random_function(grid: Grid, rng: np.random.Generator) -> GridFunction:
    scale = 10.0 ** rng.uniform(-2.0, 2.0)
    values = scale * rng.standard_normal(grid.shape)
    return GridFunction.from_callable(grid, lambda *_: values, "dirichlet")


def _split_grid(grid: Grid) -> Tuple[Grid, Grid]:
    """Two adjacent grids sharing the middle node line of the first axis."""
    x = grid.axes[0]
    middle = (grid.shape[0] - 1) // 2
    rest_bounds, rest_shape = grid.bounds[1:], grid.shape[1:]
    left = Grid(((float(x[0]), float(x[middle])),) + rest_bounds, (middle + 1,) + rest_shape)
    right = Grid(((float(x[middle]), float(x[-1])),) + rest_bounds, (grid.shape[0] - middle,) + rest_shape)
    return left, right


def _relative_margin(lhs: float, rhs: float) -> float:
    """rhs - lhs relative to the scale, shifted by the verification tolerance."""
    return (rhs - lhs) / max(1.0, abs(rhs)) + RELATIVE_TOL


def run_verify(settings: Settings, report: ReportCollector) -> List[str]:
    log_title("Inequality suite")
    domain, field, stats = _problem(settings)
    stats.require_bounds()
    grid = field.grid
    rng = np.random.default_rng(settings.seed)
    tally = _Tally()

    log_subtitle(f"{settings.samples} random functions")
    for _ in range(settings.samples):
        u = _random_function(grid, rng)
        v = _random_function(grid, rng)

        norm = check_norm_sandwich(u, field, stats)
        tally.record("norm_sandwich", min(_relative_margin(norm.lower, norm.mid), _relative_margin(norm.mid, norm.upper)))
        quotient = check_quotient_sandwich(u, field, stats)
        tally.record(
            "quotient_sandwich",
            min(_relative_margin(quotient.lower, quotient.mid), _relative_margin(quotient.mid, quotient.upper)),
        )

        state = rayleigh(u, field)
        tally.record("euler_K", RELATIVE_TOL - abs(pairing_K_prime(u, u, field) - state.K) / state.K)
        tally.record("euler_k", RELATIVE_TOL - abs(pairing_k_prime(u, u, field) - state.k) / state.k)
        tally.record("pairing_k", _relative_margin(abs(pairing_k_prime(u, v, field)), luxemburg_norm(v, field)))
        tally.record("pairing_K", _relative_margin(abs(pairing_K_prime(u, v, field)), luxemburg_norm(v.gradient(), field)))

        a, b = rng.exponential(size=(2, 16))
        p = rng.uniform(stats.p_minus, stats.p_plus, 16)
        tally.record("young", float(np.min(young_gap(a, b, p))) + RELATIVE_TOL)

        homothety = homothety_transport(u, float(rng.uniform(0.05, 0.95)), stats)
        tally.record(
            "homothety",
            RELATIVE_TOL
            - max(
                abs(homothety.factor_plus_minus / homothety.expected_plus_minus - 1.0),
                abs(homothety.factor_minus_plus / homothety.expected_minus_plus - 1.0),
            ),
        )

    log_subtitle("mix factor and join on a 99-point t grid")
    left, right = _split_grid(grid)
    p_grid = np.linspace(stats.p_minus, max(stats.p_plus, stats.p_minus + 1.0), 9)
    for t in np.linspace(0.01, 0.99, 99):
        tally.record("mix_factor", 1.0 - mix_factor(t, stats.p_plus, stats.p_minus) + RELATIVE_TOL)
        tally.record("mix_monotone", 1.0 if mix_factor_monotonicity(t, p_grid) else -1.0)

        u1 = _random_function(left, rng)
        u2 = _random_function(right, rng)
        u1 = u1 * (1.0 / lp_norm(u1, stats.p_minus))
        u2 = u2 * (1.0 / lp_norm(u2, stats.p_minus))
        join = join_bound_report(u1, u2, float(t), stats.p_plus, stats.p_minus)
        tally.record("join_bound", _relative_margin(join.k_hat_join, join.bound))

    rows = tally.rows()
    for row in rows:
        log_message(f"{row['check']}: {row['samples']} samples, {row['failures']} failures")
    report.add_table("checks", rows)
    report.update(stats=_stats_dict(stats), checks=rows)
    return tally.failures()


def run_lambda_star(settings: Settings, report: ReportCollector) -> List[str]:
    log_title("Modular quotient along plateau bumps")
    domain, field, _ = _problem(settings)
    bump = default_bump(field, domain)
    samples = bump_family_explorer(field, domain, bump, settings.t_grid())
    decaying = is_decaying(samples)
    ratio = samples[-1].quotient / samples[0].quotient if samples else None
    log_message(f"decaying: {decaying}, last/first = {ratio}")

    report.add_table("quotients", [{"t": s.t, "quotient": s.quotient} for s in samples], ["t", "quotient"])
    report.update(bump=bump.as_dict(), ramp_excess=ramp_excess(field, bump), decaying=decaying, last_over_first=ratio)
    return []


HANDLERS: Dict[str, Callable[[Settings, ReportCollector], List[str]]] = {
    "norm": run_norm,
    "eig": run_eig,
    "spectrum": run_spectrum,
    "count": run_count,
    "verify": run_verify,
    "lambda-star": run_lambda_star,
}


def run(settings: Settings, command: str) -> ReportCollector:
    """
    Run one experiment and write its reports.

    Raises:
        ConfigError: for an unknown command
        InvariantViolation: after writing, if a checked inequality failed
    """
    if command not in HANDLERS:
        raise ConfigError(f"unknown command {command!r}; choose from {', '.join(COMMANDS)}")
    report = ReportCollector(command, settings.out, settings.format, settings.seed)
    report.update(settings=settings.as_dict())
    failures = HANDLERS[command](settings, report)
    report.update(violations=failures)
    report.write()
    if failures:
        raise InvariantViolation(failures[0], f"{len(failures)} failing check(s)" if len(failures) > 1 else None)
    return report
