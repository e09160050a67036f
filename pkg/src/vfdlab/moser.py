"""Exponent bookkeeping of the Moser iterations.

Three iterations are covered.  The one on u starts at p0 = 1 and interpolates
between L^inf L^p and L^{p+2} L^{3p+6}; the two on theta start at 3 + eps and
4 + eps and interpolate with p - 2 in place of p + 2.  In every case the
exponents grow geometrically, p_{i+1} = H p_i, with

    r = (3 + eps)/(2 + eps),   K = 2/r - 1/3 = (9 + 5 eps)/(9 + 3 eps),
    H = (K + 1)/2 = (9 + 4 eps)/(9 + 3 eps).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np


class MoserError(ValueError):
    """Exponent outside the range where the interpolation is defined."""


class Variant(str, Enum):
    U = "u"
    THETA = "theta"
    THETA_BOUNDARY = "theta_boundary"


def _sign(variant: Variant) -> int:
    """+1 for the u-iteration (p + 2 shifts), -1 for the theta iterations (p - 2)."""
    return 1 if Variant(variant) is Variant.U else -1


def k_epsilon(eps: float) -> float:
    """(9 + 5 eps)/(9 + 3 eps)."""
    if eps < 0:
        raise MoserError("eps must be nonnegative")
    return (9 + 5 * eps) / (9 + 3 * eps)


def growth_factor(eps: float) -> float:
    """H = (9 + 4 eps)/(9 + 3 eps)."""
    if eps < 0:
        raise MoserError("eps must be nonnegative")
    return (9 + 4 * eps) / (9 + 3 * eps)


def conjugate_r(eps: float) -> float:
    """r = (3 + eps)/(2 + eps), the Hoelder exponent paired with L^{3+eps}."""
    return (3 + eps) / (2 + eps)


def default_p0(variant: Variant, eps: float) -> float:
    variant = Variant(variant)
    if variant is Variant.U:
        return 1.0
    if variant is Variant.THETA:
        return 3.0 + eps
    return 4.0 + eps


@dataclass(frozen=True)
class MoserSchedule:
    """Parameters of one iteration.  ``p0 = None`` picks the variant's start."""

    epsilon: float
    tau: float = 0.5
    variant: Variant = Variant.U
    p0: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.epsilon < 0:
            raise MoserError("eps must be nonnegative")
        if not 0 < self.tau < 1:
            raise MoserError("tau must lie in (0, 1)")
        if self.p0 is None:
            object.__setattr__(self, "p0", default_p0(self.variant, self.epsilon))
        _check_p(self.p0, self.variant)

    @property
    def H(self) -> float:
        return growth_factor(self.epsilon)

    @property
    def K_eps(self) -> float:
        return k_epsilon(self.epsilon)

    @property
    def r(self) -> float:
        return conjugate_r(self.epsilon)

    @property
    def closes(self) -> bool:
        """False when H = 1, i.e. the exponents never grow."""
        return self.H > 1.0


def _check_p(p, variant):
    p = np.asarray(p, dtype=float)
    if Variant(variant) is Variant.U:
        if np.any(p < 1):
            raise MoserError("the u-iteration needs p_i >= 1")
    elif np.any(p <= 2):
        raise MoserError("the theta iterations need p_i > 2")


def exponent_sequence(schedule: MoserSchedule, i_max: int) -> np.ndarray:
    """p_0, ..., p_{i_max} with p_i = p0 H^i."""
    if i_max < 0:
        raise MoserError("i_max must be >= 0")
    return schedule.p0 * schedule.H ** np.arange(i_max + 1, dtype=float)


def rho_exponent(p_i, eps: float, variant: Variant = Variant.U):
    """Interpolation exponent rho = a K / (1 + a K), a = p/(p + 2) or p/(p - 2)."""
    _check_p(p_i, variant)
    p = np.asarray(p_i, dtype=float)
    a = p / (p + 2 * _sign(variant)) * k_epsilon(eps)
    out = a / (1 + a)
    return out if out.ndim else float(out)


def next_exponent(p_i, eps: float, variant: Variant = Variant.U):
    """p_{i+1} from the first interpolation condition, given rho."""
    s = _sign(variant)
    rho = rho_exponent(p_i, eps, variant)
    return 0.5 * (np.asarray(p_i) + 2 * s) / (1 - rho) - s


def system_residual(p_i: float, p_next: float, rho: float, eps: float,
                    variant: Variant = Variant.U) -> tuple[float, float]:
    """Residuals of the two interpolation conditions.

    (1 - rho)/(p + 2s) = 1/(2 (p' + s)) and
    rho/p + (1 - rho)/(3 (p + 2s)) = 1/(r (p' + s)), with s = +1 or -1.
    """
    s = _sign(variant)
    r = conjugate_r(eps)
    e1 = (1 - rho) / (p_i + 2 * s) - 1 / (2 * (p_next + s))
    e2 = rho / p_i + (1 - rho) / (3 * (p_i + 2 * s)) - 1 / (r * (p_next + s))
    return e1, e2


def solve_system(p_i: float, eps: float, variant: Variant = Variant.U) -> tuple[float, float]:
    """Solve the interpolation conditions numerically for (rho, p_{i+1}).

    Both conditions are linear in rho and q = 1/(p_{i+1} + s), so this is a
    2x2 linear solve that never uses the closed form.
    """
    _check_p(p_i, variant)
    s = _sign(variant)
    r = conjugate_r(eps)
    d = p_i + 2 * s
    A = np.array([[-1 / d, -0.5], [1 / p_i - 1 / (3 * d), -1 / r]])
    b = np.array([-1 / d, -1 / (3 * d)])
    rho, q = np.linalg.solve(A, b)
    return float(rho), float(1 / q - s)


def feasibility(eps: float, eps_prime: float | None = None) -> tuple[bool, float]:
    """Check (4 + eps) H(eps') <= 2 (4 + eps - 2); returns (holds, slack)."""
    ep = eps if eps_prime is None else eps_prime
    lhs = (4 + eps) * growth_factor(ep)
    rhs = 2 * ((4 + eps) - 2)
    return lhs <= rhs, rhs - lhs


def time_shift_schedule(tau: float, i_max: int) -> dict:
    """t_i = 3 tau / (pi^2 i^2) for i = 1..i_max, whose full sum is tau/2.

    Returns the shifts, their partial sums and the tail bound
    sum_{i > i_max} t_i <= 3 tau / (pi^2 i_max).
    """
    if not 0 < tau < 1:
        raise MoserError("tau must lie in (0, 1)")
    if i_max < 1:
        raise MoserError("i_max must be >= 1")
    i = np.arange(1, i_max + 1, dtype=float)
    shifts = 3 * tau / (math.pi**2 * i**2)
    partial = np.cumsum(shifts)
    return {
        "shifts": shifts,
        "partial_sums": partial,
        "total": math.fsum(shifts),
        "tail_bound": 3 * tau / (math.pi**2 * i_max),
        "limit": tau / 2,
    }


@dataclass
class ProductBound:
    """Outcome of :func:`bound_products`.

    ``products[i-1]`` is prod_{k<=i} eta_k.  ``weights[k-1]`` is
    H^{-k} prod_{j=k+1}^{i_max} eta_j, the coefficient of zeta_{k-1}.  With
    zeta = log B and B proportional to c, the bound on log J scales like
    ``c_exponent * log c``.
    """

    eta: np.ndarray
    products: np.ndarray
    weights: np.ndarray
    zeta: np.ndarray
    zeta_sum: float
    c_exponent: float
    log_product_bound: float
    cauchy_steps: np.ndarray
    cauchy_index: int | None
    converged: bool


def bound_products(schedule: MoserSchedule, i_max: int = 200, c: float = 1.0, F: float = 1.0,
                   cauchy_tol: float = 1e-10) -> ProductBound:
    """Products of eta_k = (H^k + 2)/H^k and the weighted zeta sum.

    ``converged`` states whether the relative step P_i/P_{i-1} - 1 has dropped
    below ``cauchy_tol`` by ``i_max``; ``cauchy_index`` is the first i where it
    does (None if never within range).  For eps = 0 the product diverges and
    is only flagged.
    """
    if i_max < 1:
        raise MoserError("i_max must be >= 1")
    H = schedule.H
    k = np.arange(1, i_max + 1, dtype=float)
    eta = 1.0 + 2.0 * H ** (-k)
    log_eta = np.log1p(2.0 * H ** (-k))
    products = np.exp(np.cumsum(log_eta))
    # suffix products prod_{j=k+1}^{i_max} eta_j
    suffix = np.exp(np.concatenate([np.cumsum(log_eta[::-1])[::-1][1:], [0.0]]))
    weights = H ** (-k) * suffix
    i_prev = k - 1
    B = c * (i_prev ** (2 * H) * schedule.tau ** (-H) + H ** (i_prev + 1) * F + 1.0)
    zeta = np.log(B)
    steps = np.expm1(log_eta)
    hit = np.nonzero(steps <= cauchy_tol)[0]
    cauchy_index = int(hit[0] + 1) if hit.size else None
    if not schedule.closes:
        warnings.warn("H = 1: the iteration does not close and the product diverges", stacklevel=2)
    return ProductBound(
        eta=eta,
        products=products,
        weights=weights,
        zeta=zeta,
        zeta_sum=float(np.dot(weights, zeta)),
        c_exponent=float(weights.sum()),
        log_product_bound=2.0 / (H - 1.0) if H > 1 else math.inf,
        cauchy_steps=steps,
        cauchy_index=cauchy_index,
        converged=schedule.closes and cauchy_index is not None,
    )


def cauchy_index(eps: float, tol: float = 1e-10) -> int:
    """Smallest i with 2 H^{-i} <= tol, i.e. where the product has settled."""
    H = growth_factor(eps)
    if H <= 1:
        raise MoserError("no growth for eps = 0")
    return math.ceil(math.log(2.0 / tol) / math.log(H))


TABLE_COLUMNS = ("i", "p_i", "rho_i", "p_next", "H", "K_eps", "t_i", "eta_i", "product")


def schedule_table(schedule: MoserSchedule, i_max: int) -> list[dict]:
    """One row per iteration index, as emitted by the moser-table command."""
    p = exponent_sequence(schedule, i_max)
    shifts = time_shift_schedule(schedule.tau, max(i_max, 1))["shifts"]
    H = schedule.H
    rows = []
    product = 1.0
    for i in range(i_max + 1):
        eta_i = 1.0 + 2.0 * H ** (-i) if i >= 1 else math.nan
        if i >= 1:
            product *= eta_i
        rows.append({
            "i": i,
            "p_i": float(p[i]),
            "rho_i": rho_exponent(p[i], schedule.epsilon, schedule.variant),
            "p_next": float(p[i] * H),
            "H": H,
            "K_eps": schedule.K_eps,
            "t_i": float(shifts[i - 1]) if i >= 1 else math.nan,
            "eta_i": eta_i,
            "product": product,
        })
    return rows
