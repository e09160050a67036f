"""The singular map r -> -1/r and a globally defined C^2 surrogate.

The surrogate agrees with -1/r on a window [a, b] and is built from its
derivative profile: outside the window the slope is carried by a cubic
Hermite blend (matching value and slope of 1/r^2 at the knot) onto a constant
plateau.  Integrating the profile in closed form gives a bi-Lipschitz, C^2
function with explicit slope bounds.

Below the window the blend has width a/2 and ends on the plateau
M_R = 4/(3 a^2); above it has width b and ends on m_R = 1/(3 b^2).  Both
plateau values are the extreme ones for which the Hermite blend stays
monotone, so m_R and M_R are the true infimum and supremum of the slope.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial


class GammaDomainError(ValueError):
    """The singular branch was evaluated at a nonpositive temperature."""


def gamma_eval(r):
    """-1/r for r > 0."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise GammaDomainError("gamma(r) = -1/r is only defined for r > 0")
    out = -1.0 / r
    return out if out.ndim else float(out)


def gamma_prime(r):
    """1/r^2 for r != 0."""
    r = np.asarray(r, dtype=float)
    if np.any(r == 0):
        raise GammaDomainError("gamma'(0) is undefined")
    out = 1.0 / r**2
    return out if out.ndim else float(out)


def _hermite(v0, d0, v1, d1) -> Polynomial:
    """Cubic on t in [0, 1] with p(0)=v0, p'(0)=d0, p(1)=v1, p'(1)=d1."""
    c2 = 3 * (v1 - v0) - 2 * d0 - d1
    c3 = 2 * (v0 - v1) + d0 + d1
    return Polynomial([v0, d0, c2, c3])


@dataclass(frozen=True)
class RegularizedGamma:
    """C^2, bi-Lipschitz extension of -1/r outside ``[lower_knot, upper_knot]``."""

    lower_knot: float
    upper_knot: float
    lower_width: float
    upper_width: float
    slope_floor: float
    slope_cap: float
    lower_profile: Polynomial
    upper_profile: Polynomial
    lower_antiderivative: Polynomial
    upper_antiderivative: Polynomial

    @property
    def window(self) -> tuple[float, float]:
        return self.lower_knot, self.upper_knot

    @property
    def second_derivative_bound(self) -> float:
        """sup |gamma_R''|, attained at the lower knot."""
        return 2.0 / self.lower_knot**3

    def in_window(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return (r >= self.lower_knot) & (r <= self.upper_knot)

    def _pieces(self, r):
        a, b = self.lower_knot, self.upper_knot
        a0 = a - self.lower_width
        b1 = b + self.upper_width
        return a, b, a0, b1

    def value(self, r):
        r = np.asarray(r, dtype=float)
        a, b, a0, b1 = self._pieces(r)
        out = np.empty_like(r)
        mid = (r >= a) & (r <= b)
        out[mid] = -1.0 / r[mid]

        lo_blend = (r >= a0) & (r < a)
        t = (r[lo_blend] - a0) / self.lower_width
        # gamma(a) minus the profile integrated from r to a
        out[lo_blend] = -1.0 / a - self.lower_width * (
            self.lower_antiderivative(1.0) - self.lower_antiderivative(t)
        )
        at_a0 = -1.0 / a - self.lower_width * self.lower_antiderivative(1.0)
        below = r < a0
        out[below] = at_a0 + self.slope_cap * (r[below] - a0)

        hi_blend = (r > b) & (r <= b1)
        t = (r[hi_blend] - b) / self.upper_width
        out[hi_blend] = -1.0 / b + self.upper_width * self.upper_antiderivative(t)
        at_b1 = -1.0 / b + self.upper_width * self.upper_antiderivative(1.0)
        above = r > b1
        out[above] = at_b1 + self.slope_floor * (r[above] - b1)
        return out if out.ndim else float(out)

    __call__ = value

    def prime(self, r):
        r = np.asarray(r, dtype=float)
        a, b, a0, b1 = self._pieces(r)
        out = np.empty_like(r)
        mid = (r >= a) & (r <= b)
        out[mid] = 1.0 / r[mid] ** 2
        lo_blend = (r >= a0) & (r < a)
        out[lo_blend] = self.lower_profile((r[lo_blend] - a0) / self.lower_width)
        out[r < a0] = self.slope_cap
        hi_blend = (r > b) & (r <= b1)
        out[hi_blend] = self.upper_profile((r[hi_blend] - b) / self.upper_width)
        out[r > b1] = self.slope_floor
        return out if out.ndim else float(out)

    def second(self, r):
        r = np.asarray(r, dtype=float)
        a, b, a0, b1 = self._pieces(r)
        out = np.zeros_like(r)
        mid = (r >= a) & (r <= b)
        out[mid] = -2.0 / r[mid] ** 3
        lo_blend = (r >= a0) & (r < a)
        out[lo_blend] = (
            self.lower_profile.deriv()((r[lo_blend] - a0) / self.lower_width)
            / self.lower_width
        )
        hi_blend = (r > b) & (r <= b1)
        out[hi_blend] = (
            self.upper_profile.deriv()((r[hi_blend] - b) / self.upper_width)
            / self.upper_width
        )
        return out if out.ndim else float(out)


def build_regularized(theta_lower: float, theta_upper: float) -> RegularizedGamma:
    """Surrogate that equals -1/r on [theta_lower / 2, 2 theta_upper]."""
    if not (theta_lower > 0 and theta_upper > 0):
        raise ValueError("window bounds must be positive")
    if not theta_lower < theta_upper:
        raise ValueError(f"need theta_lower < theta_upper, got {theta_lower} >= {theta_upper}")
    a = theta_lower / 2.0
    b = 2.0 * theta_upper
    wa = a / 2.0
    wb = b
    cap = 4.0 / (3.0 * a**2)
    floor = 1.0 / (3.0 * b**2)
    # profiles in the local variable t, slopes rescaled by the blend width
    lower = _hermite(cap, 0.0, 1.0 / a**2, -2.0 / a**3 * wa)
    upper = _hermite(1.0 / b**2, -2.0 / b**3 * wb, floor, 0.0)
    return RegularizedGamma(
        lower_knot=a,
        upper_knot=b,
        lower_width=wa,
        upper_width=wb,
        slope_floor=floor,
        slope_cap=cap,
        lower_profile=lower,
        upper_profile=upper,
        lower_antiderivative=lower.integ(),
        upper_antiderivative=upper.integ(),
    )


class SingularGamma:
    """The exact map -1/r behind the same interface as :class:`RegularizedGamma`."""

    def value(self, r):
        return -1.0 / np.asarray(r, dtype=float)

    __call__ = value

    def prime(self, r):
        return 1.0 / np.asarray(r, dtype=float) ** 2

    def second(self, r):
        return -2.0 / np.asarray(r, dtype=float) ** 3

    def in_window(self, r):
        return np.asarray(r) > 0


class IdentityMap:
    """Linear stand-in (u = r) used to test the Newton machinery."""

    window = (-np.inf, np.inf)

    def value(self, r):
        return np.asarray(r, dtype=float).copy()

    __call__ = value

    def prime(self, r):
        return np.ones_like(np.asarray(r, dtype=float))

    def second(self, r):
        return np.zeros_like(np.asarray(r, dtype=float))

    def in_window(self, r):
        return np.ones(np.shape(r), dtype=bool)
