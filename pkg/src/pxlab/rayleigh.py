"""
Rayleigh calculus: K, k, S, the derivative pairings and the Euler-Lagrange
residual.

K(u) is the Luxemburg norm of grad u and k(u) the Luxemburg norm of u. The
pairings

    <K'(u), v> = sum w |a|^{p-2} a . grad v / sum w |a|^p,   a = grad u / K(u)
    <k'(u), v> = sum w |b|^{p-2} b v / sum w |b|^p,          b = u / k(u)

are the exact derivatives of the discrete K and k, so one quadrature pass
gives a nodal vector for each and every pairing is a dot product with it.
"""

import dataclasses
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .domain import ExponentField, Grid
from .errors import DomainError, ZeroFunctionError
from .modular import GridFunction, cell_operators, luxemburg_norm

logger = logging.getLogger(__name__)

# values below this contribute nothing to |w|^{p-2} w
KERNEL_FLOOR = 1e-300

# frozen-coefficient weights are floored at this fraction of their peak
FROZEN_FLOOR = 1e-3

# diagonal shift, relative to the mean stiffness diagonal, that removes the
# checkerboard null space of the one-point bilinear stiffness
HOURGLASS_SHIFT = 1e-6


def power_kernel(magnitude: np.ndarray, p: np.ndarray) -> np.ndarray:
    """|w|^{p-2} evaluated as |w|^{p-1} / |w|, zero where |w| is negligible."""
    out = np.zeros_like(magnitude)
    live = magnitude >= KERNEL_FLOOR
    out[live] = magnitude[live] ** (p[live] - 2.0)
    return out


def free_nodes(grid: Grid, boundary: str) -> np.ndarray:
    """Flat indices of the unknowns: interior nodes for dirichlet, all for free."""
    if boundary == "dirichlet":
        return np.flatnonzero(~grid.boundary_mask().ravel())
    return np.arange(grid.num_nodes)


@dataclass(frozen=True, eq=False)
class RayleighState:
    """
    u together with K(u), k(u), S(u) and the quotient K/k.

    ``K_vector`` and ``k_vector`` are the nodal vectors of K'(u) and k'(u):
    <K'(u), v> = K_vector . v. ``K_vector`` is zero when grad u = 0.
    """

    u: GridFunction
    K: float
    k: float
    S: float
    quotient: float
    field: ExponentField = dataclasses.field(repr=False)
    K_vector: np.ndarray = dataclasses.field(repr=False)
    k_vector: np.ndarray = dataclasses.field(repr=False)
    gradient_weights: np.ndarray = dataclasses.field(repr=False)
    value_weights: np.ndarray = dataclasses.field(repr=False)

    def defect(self, lam: Optional[float] = None) -> np.ndarray:
        """Nodal vector of K'(u) - lam k'(u); lam defaults to the quotient."""
        lam = self.quotient if lam is None else lam
        return self.K_vector - lam * self.k_vector

    def as_dict(self) -> dict:
        return {"K": self.K, "k": self.k, "S": self.S, "quotient": self.quotient}


def _k_prime(u: GridFunction, field_: ExponentField, k: float):
    """Returns (nodal vector of k'(u), unweighted modular of u/k, frozen mass weights)."""
    average, _ = cell_operators(u.grid)
    p = field_.cell_values.ravel()
    w = u.grid.cell_volume
    b = (average @ u.flat) / k
    mag = np.abs(b)
    kern = power_kernel(mag, p)
    denominator = w * float(np.sum(kern * mag ** 2))
    vector = average.T @ (w * kern * b) / denominator

    floor = FROZEN_FLOOR * float(np.max(mag))
    frozen = w * (p - 1.0) * np.maximum(mag, floor) ** (p - 2.0) / (k * denominator)
    return vector, denominator, frozen


def _K_prime(u: GridFunction, field_: ExponentField, K: float):
    """Returns (nodal vector of K'(u), unweighted modular of grad u/K, frozen stiffness weights)."""
    _, gradients = cell_operators(u.grid)
    p = field_.cell_values.ravel()
    w = u.grid.cell_volume
    a = np.stack([g @ u.flat for g in gradients]) / K
    mag = np.sqrt(np.sum(a ** 2, axis=0))
    kern = power_kernel(mag, p)
    denominator = w * float(np.sum(kern * mag ** 2))
    vector = sum(g.T @ (w * kern * a_d) for g, a_d in zip(gradients, a)) / denominator

    floor = FROZEN_FLOOR * float(np.max(mag))
    frozen = w * (p - 1.0) * np.maximum(mag, floor) ** (p - 2.0) / (K * denominator)
    return vector, denominator, frozen


def rayleigh(u: GridFunction, field: ExponentField) -> RayleighState:
    """
    Evaluate K, k, S and the quotient K/k at u.

    S is the ratio of the unweighted integrals of |grad u/K|^p and |u/k|^p;
    it is 1 for constant p and 0 when grad u = 0.

    Raises:
        ZeroFunctionError: if u is zero (or invisible to the cell quadrature)
    """
    if u.is_zero():
        raise ZeroFunctionError("rayleigh quotient of the zero function")
    k = luxemburg_norm(u, field)
    if k == 0.0:
        raise ZeroFunctionError("u vanishes at every cell center")
    k_vector, k_modular, mass_weights = _k_prime(u, field, k)

    K = luxemburg_norm(u.gradient(), field)
    if K > 0.0:
        K_vector, K_modular, stiffness_weights = _K_prime(u, field, K)
        S = K_modular / k_modular
    else:
        K_vector = np.zeros(u.grid.num_nodes)
        stiffness_weights = np.zeros(int(np.prod(u.grid.cell_shape)))
        S = 0.0

    return RayleighState(
        u=u,
        K=K,
        k=k,
        S=S,
        quotient=K / k,
        field=field,
        K_vector=K_vector,
        k_vector=k_vector,
        gradient_weights=stiffness_weights,
        value_weights=mass_weights,
    )


def pairing_k_prime(u: GridFunction, v: GridFunction, field: ExponentField) -> float:
    """<k'(u), v>; equals k(u) at v = u."""
    if u.is_zero():
        raise ZeroFunctionError("k'(u) needs u != 0")
    k = luxemburg_norm(u, field)
    if k == 0.0:
        raise ZeroFunctionError("u vanishes at every cell center")
    vector, _, _ = _k_prime(u, field, k)
    return float(vector @ v.flat)


def pairing_K_prime(u: GridFunction, v: GridFunction, field: ExponentField) -> float:
    """<K'(u), v>; equals K(u) at v = u."""
    K = luxemburg_norm(u.gradient(), field)
    if K == 0.0:
        raise ZeroFunctionError("K'(u) needs grad u != 0")
    vector, _, _ = _K_prime(u, field, K)
    return float(vector @ v.flat)


def frozen_operator(state: RayleighState, theta: float = 0.0) -> sparse.csc_matrix:
    """
    Frozen-coefficient linearization of the pairings at u, on the unknowns.

    Assembles A + theta M + shift I, where A is the p(x)-stiffness with cell
    weights (p-1) |grad u/K|^{p-2} and M the matching mass matrix, both
    scaled like the pairings so that A u = K'(u) and M u = k'(u) at p = 2.
    """
    grid = state.u.grid
    average, gradients = cell_operators(grid)
    dofs = free_nodes(grid, state.u.boundary)

    stiffness = sum(g.T @ sparse.diags(state.gradient_weights) @ g for g in gradients)
    operator = sparse.csr_matrix(stiffness)
    if theta:
        operator = operator + theta * (average.T @ sparse.diags(state.value_weights) @ average)
    operator = operator[dofs][:, dofs]

    diagonal = operator.diagonal()
    scale = float(np.mean(diagonal)) if diagonal.size and np.mean(diagonal) > 0 else 1.0
    operator = operator + HOURGLASS_SHIFT * scale * sparse.identity(len(dofs), format="csr")
    return sparse.csc_matrix(operator)


def factorize(operator: sparse.csc_matrix):
    """Sparse LU of a frozen operator."""
    return splu(operator)


class HatBasis:
    """
    Nodal hat functions at the unknowns of a grid.

    Stands for the whole discrete test space in ``el_residual``: the residual
    is taken over every hat and over the Riesz representer of the defect.
    """

    def __init__(self, grid: Grid, boundary: str = "dirichlet"):
        self.grid = grid
        self.boundary = boundary
        self.dofs = free_nodes(grid, boundary)
        self._cached_field = None
        self._cached_norms = None

    def __len__(self) -> int:
        return len(self.dofs)

    def functions(self) -> List[GridFunction]:
        hats = []
        for index in self.dofs:
            values = np.zeros(self.grid.num_nodes)
            values[index] = 1.0
            hats.append(GridFunction(self.grid, values, self.boundary))
        return hats

    def gradient_norms(self, field: ExponentField, iterations: int = 100) -> np.ndarray:
        """
        Luxemburg norms of every hat gradient, solved together by geometric
        bisection on a bracket read off the hat supports.
        """
        if self._cached_field is field:
            return self._cached_norms

        _, gradients = cell_operators(self.grid)
        columns = [g.tocsc()[:, self.dofs] for g in gradients]
        squared = sum(c.multiply(c) for c in columns).tocoo()
        hat = squared.col
        cell = squared.row
        log_m = 0.5 * np.log(squared.data)
        p = field.cell_values.ravel()[cell]
        weight = self.grid.cell_volume / p
        support = np.bincount(hat, minlength=len(self.dofs))

        # at lo one cell alone reaches modular 1; at hi every cell is below 1/support
        single = np.exp(log_m + np.log(weight) / p)
        spread = np.exp(log_m + np.log(weight * support[hat]) / p)
        lo = np.zeros(len(self.dofs))
        hi = np.zeros(len(self.dofs))
        np.maximum.at(lo, hat, single)
        np.maximum.at(hi, hat, spread)

        for _ in range(iterations):
            mid = np.sqrt(lo * hi)
            with np.errstate(over="ignore"):
                terms = weight * np.exp(p * (log_m - np.log(mid[hat])))
            value = np.bincount(hat, weights=terms, minlength=len(self.dofs))
            above = value > 1.0
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)

        self._cached_field = field
        self._cached_norms = np.sqrt(lo * hi)
        return self._cached_norms


def el_residual(
    u: GridFunction,
    lam: float,
    field: ExponentField,
    test_basis: Union[HatBasis, Sequence[GridFunction]],
) -> float:
    """
    Euler-Lagrange residual max_i |<K'(u), v_i> - lam <k'(u), v_i>| / K(v_i).

    Args:
        u: trial function, u != 0
        lam: eigenvalue candidate
        field: exponent field
        test_basis: explicit test functions, or a HatBasis for the full
            discrete space (hats plus the Riesz representer of the defect)

    Returns:
        The residual; test functions with grad v = 0 are skipped
    """
    if isinstance(test_basis, HatBasis):
        if len(test_basis) == 0:
            raise DomainError("empty test basis")
        residual, _, _ = defect_step(rayleigh(u, field), lam, test_basis)
        return residual

    basis = list(test_basis)
    if not basis:
        raise DomainError("empty test basis")
    state = rayleigh(u, field)
    defect = state.defect(lam)
    worst = 0.0
    for v in basis:
        scale = luxemburg_norm(v.gradient(), field)
        if scale == 0.0:
            continue
        worst = max(worst, abs(float(defect @ v.flat)) / scale)
    return worst


def defect_step(state: RayleighState, lam: float, basis: HatBasis):
    """
    Hat-basis residual of the defect K'(u) - lam k'(u) and its Riesz representer.

    Returns:
        (residual, w, r): r is the defect on the unknowns and w solves P w = r
        for the frozen operator P, so -w is an inverse-power descent direction
    """
    r = state.defect(lam)[basis.dofs]
    hats = float(np.max(np.abs(r) / basis.gradient_norms(state.field)))

    theta = lam if basis.boundary == "free" else 0.0
    w = factorize(frozen_operator(state, theta)).solve(r)
    representer = np.zeros(basis.grid.num_nodes)
    representer[basis.dofs] = w
    scale = luxemburg_norm(GridFunction(basis.grid, representer, basis.boundary).gradient(), state.field)
    riesz = abs(float(r @ w)) / scale if scale > 0.0 else 0.0
    return max(hats, riesz), w, r
