"""Exact and manufactured solutions, and the convergence ladders built on them.

The explicit solution Theta(t, x) = 2 ((T - t)^+ / |x|^2)^{1/2} in three
dimensions solves theta_t + Lap(1/theta) = 0.  It is singular at the origin,
so it is used on a spherical shell with the boundary values pinned.

The manufactured profile lives on the disk of radius R:

    theta_m = 2 + c(t) psi,   psi = x + x y  (harmonic),

so with u = -1/theta_m

    f = c' psi + 2 c^2 |grad psi|^2 / theta_m^3,
    g = alpha c' psi - beta c Lap_Gamma psi + c dn psi / theta_m^2,

where on the circle Lap_Gamma psi = -cos(phi)/R - 2 sin(2 phi) and
dn psi = cos(phi) + R sin(2 phi).  g balances the dynamic boundary law
alpha eta_t - beta Lap_Gamma eta = -dn u + g.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import domain as dom
from .stepper import BCMode, RunConfig, State, run


class OracleError(ValueError):
    """Invalid evaluation point or profile."""


class SolutionKind(str, Enum):
    SINGULAR_RADIAL = "singular_radial"
    CONSTANT = "constant"
    MANUFACTURED = "manufactured"


def singular_radial(t, r, T: float = 1.0):
    """2 sqrt((T - t)^+) / r."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise OracleError("the explicit solution is singular at r = 0")
    out = 2.0 * np.sqrt(np.maximum(T - np.asarray(t, dtype=float), 0.0)) / r
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ExactSolution:
    """A closed-form solution with the sources that make it exact.

    ``theta(t, x)`` takes points of shape ``(m, dim)``; ``forcing`` is the
    bulk source f and ``boundary_source(t, x)`` the boundary source g (both
    zero for the explicit and constant solutions).
    """

    kind: SolutionKind
    dim: int
    theta: Callable
    forcing: Callable
    boundary_source: Callable | None = None
    T_extinction: float | None = None
    alpha: float = 0.0
    beta: float = 0.0
    radius: float | None = None


def _zero(t, x):
    return np.zeros(np.asarray(x).shape[0])


def singular_solution(T: float = 1.0) -> ExactSolution:
    """The explicit radial solution in R^3."""
    if T <= 0:
        raise OracleError("extinction time must be positive")

    def theta(t, x):
        return singular_radial(t, np.linalg.norm(np.atleast_2d(x), axis=1), T)

    return ExactSolution(SolutionKind.SINGULAR_RADIAL, 3, theta, _zero, _zero, T_extinction=T)


def constant_solution(c: float, dim: int = 2) -> ExactSolution:
    if c <= 0:
        raise OracleError("constant must be positive")
    return ExactSolution(
        SolutionKind.CONSTANT, dim, lambda t, x: np.full(np.asarray(x).shape[0], float(c)),
        _zero, _zero,
    )


def _time_profile(mode: str, amplitude: float):
    """c(t) and c'(t) for the manufactured profile."""
    if mode == "linear":
        return (lambda t: amplitude * (1.0 + t)), (lambda t: amplitude)
    if mode == "oscillating":
        w = 2.0 * math.pi
        return (
            lambda t: amplitude * (1.0 + 0.5 * math.sin(w * t)),
            lambda t: amplitude * 0.5 * w * math.cos(w * t),
        )
    raise OracleError(f"unknown time mode {mode!r}")


def make_manufactured(alpha: float = 1.0, beta: float = 1.0, amplitude: float = 0.25,
                      time_mode: str = "linear", radius: float = 1.0,
                      t_max: float = 1.0) -> ExactSolution:
    """Manufactured disk solution 2 + c(t)(x + x y) and its sources.

    ``linear`` uses c = amplitude (1 + t), which backward Euler integrates
    without time error, isolating the spatial error.  ``oscillating`` uses
    c = amplitude (1 + sin(2 pi t)/2).
    """
    c, dc = _time_profile(time_mode, amplitude)
    ts = np.linspace(0.0, t_max, 201)
    c_max = max(abs(c(t)) for t in ts)
    psi_max = radius + radius**2 / 2
    if 2.0 - c_max * psi_max <= 0:
        raise OracleError("manufactured profile is not positive on the disk")

    def psi(x):
        return x[:, 0] + x[:, 0] * x[:, 1]

    def grad_sq(x):
        return (1.0 + x[:, 1]) ** 2 + x[:, 0] ** 2

    def theta(t, x):
        x = np.atleast_2d(x)
        return 2.0 + c(t) * psi(x)

    def forcing(t, x):
        x = np.atleast_2d(x)
        th = 2.0 + c(t) * psi(x)
        return dc(t) * psi(x) + 2.0 * c(t) ** 2 * grad_sq(x) / th**3

    def boundary_source(t, x):
        x = np.atleast_2d(x)
        phi = np.arctan2(x[:, 1], x[:, 0])
        R = np.hypot(x[:, 0], x[:, 1])
        th = 2.0 + c(t) * psi(x)
        lap_gamma = -np.cos(phi) / R - 2.0 * np.sin(2 * phi)
        dn = np.cos(phi) + R * np.sin(2 * phi)
        return alpha * dc(t) * psi(x) - beta * c(t) * lap_gamma + c(t) * dn / th**2

    return ExactSolution(
        SolutionKind.MANUFACTURED, 2, theta, forcing, boundary_source,
        alpha=alpha, beta=beta, radius=radius,
    )


# --------------------------------------------------------------------------
# independent finite-difference probes
# --------------------------------------------------------------------------

_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_OFF = np.arange(-2, 3)


def _fd_t(fun, t, x, h):
    return sum(c * fun(t + o * h, x) for c, o in zip(_D1, _OFF)) / h


def _fd_lap(fun, t, x, h):
    x = np.atleast_2d(x)
    out = np.zeros(x.shape[0])
    for d in range(x.shape[1]):
        e = np.zeros(x.shape[1])
        e[d] = h
        out += sum(c * fun(t, x + o * e) for c, o in zip(_D2, _OFF)) / h**2
    return out


def pde_residual_probe(sol: ExactSolution, t, x, h: float = 1e-3) -> float:
    """max |theta_t + Lap(1/theta) - f| by fourth-order centred differences in Cartesian space."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    t = np.broadcast_to(np.asarray(t, dtype=float), (x.shape[0],))
    res = np.empty(x.shape[0])
    for k in range(x.shape[0]):
        xk = x[k:k + 1]
        tk = float(t[k])
        inv = lambda s, y: 1.0 / sol.theta(s, y)  # noqa: E731
        res[k] = (_fd_t(sol.theta, tk, xk, h) + _fd_lap(inv, tk, xk, h) - sol.forcing(tk, xk))[0]
    return float(np.max(np.abs(res)))


def boundary_residual_probe(sol: ExactSolution, t: float, phi, h: float = 1e-3) -> float:
    """max |alpha eta_t - beta Lap_Gamma eta - dn(1/theta) - g| on the circle, by finite differences."""
    if sol.kind is not SolutionKind.MANUFACTURED:
        raise OracleError("the boundary probe needs a manufactured solution on the disk")
    R = sol.radius
    phi = np.atleast_1d(np.asarray(phi, dtype=float))

    def on_circle(s, ang, rad=R):
        return sol.theta(s, np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=1))

    x = np.stack([R * np.cos(phi), R * np.sin(phi)], axis=1)
    eta_t = sum(c * on_circle(t + o * h, phi) for c, o in zip(_D1, _OFF)) / h
    lap_g = sum(c * on_circle(t, phi + o * h / R) for c, o in zip(_D2, _OFF)) / h**2
    dn_inv = sum(c / on_circle(t, phi, R + o * h) for c, o in zip(_D1, _OFF)) / h
    res = sol.alpha * eta_t - sol.beta * lap_g - dn_inv - sol.boundary_source(t, x)
    return float(np.max(np.abs(res)))


# --------------------------------------------------------------------------
# convergence ladders
# --------------------------------------------------------------------------


@dataclass
class LadderRow:
    label: str
    n: int
    h: float
    dt: float
    error: float
    ratio: float = math.nan


def _ratios(rows):
    for prev, cur in zip(rows, rows[1:]):
        cur.ratio = prev.error / cur.error if cur.error > 0 else math.inf
    return rows


def annulus_ladder(levels=(16, 32), T: float = 1.0, t_end: float = 0.5, dt_factor: float = 0.5,
                   r_inner: float = 1.0, r_outer: float = 3.0) -> list[LadderRow]:
    """Sup-norm error against the explicit solution with pinned boundary values, dt = dt_factor h^2."""
    rows = []
    for n in levels:
        d = dom.annulus(r_inner, r_outer, n)
        r = d.nodes[:, 0]
        h = d.spacing
        dt = dt_factor * h * h
        rb = r[d.boundary_index]
        cfg = RunConfig(
            alpha=0.0, beta=0.0, dt=dt, t_end=t_end, bc_mode=BCMode.DIRICHLET_ORACLE,
            theta_lower=singular_radial(t_end, r_outer, T), theta_upper=singular_radial(0.0, r_inner, T),
            dirichlet_values=lambda t, rb=rb: singular_radial(t, rb, T),
        )
        final, _ = run(cfg, State(singular_radial(0.0, r, T)), None, d)
        err = float(np.max(np.abs(final.theta - singular_radial(final.t, r, T))))
        rows.append(LadderRow("annulus", n, h, dt, err))
    return _ratios(rows)


def _mms_run(n_r: int, n_phi: int, dt: float, t_end: float, sol: ExactSolution):
    d = dom.disk(sol.radius, n_r, n_phi)
    x = d.nodes
    xb = x[d.boundary_index]
    cfg = RunConfig(
        alpha=sol.alpha, beta=sol.beta, dt=dt, t_end=t_end, theta_lower=0.5, theta_upper=3.0,
        newton_tol=1e-12, mms_boundary_source=lambda t: sol.boundary_source(t, xb),
    )
    final, recs = run(cfg, State(sol.theta(0.0, x)), lambda t: sol.forcing(t, x), d)
    err = float(np.max(np.abs(final.theta - sol.theta(final.t, x))))
    return d, err, recs


def mms_space_ladder(levels=(8, 16, 32), phi_factor: int = 4, alpha: float = 1.0, beta: float = 1.0,
                     t_end: float = 0.2, dt: float = 0.05) -> list[LadderRow]:
    """Sup-norm error on refined disks; the linear-in-time profile carries no time error."""
    sol = make_manufactured(alpha, beta, time_mode="linear")
    rows = []
    for n_r in levels:
        d, err, _ = _mms_run(n_r, phi_factor * n_r, dt, t_end, sol)
        rows.append(LadderRow("mms_space", n_r, sol.radius / n_r, dt, err))
    return _ratios(rows)


def mms_time_ladder(dts=(0.04, 0.02, 0.01), n_r: int = 32, phi_factor: int = 4, alpha: float = 1.0,
                    beta: float = 1.0, t_end: float = 0.4) -> list[LadderRow]:
    """Sup-norm error for decreasing dt on a fixed fine disk, oscillating profile."""
    sol = make_manufactured(alpha, beta, time_mode="oscillating")
    rows = []
    for dt in dts:
        d, err, _ = _mms_run(n_r, phi_factor * n_r, dt, t_end, sol)
        rows.append(LadderRow("mms_time", n_r, sol.radius / n_r, dt, err))
    return _ratios(rows)


def probe_order(sol: ExactSolution, t, x, hs=(4e-2, 2e-2, 1e-2)) -> list[tuple[float, float]]:
    """Residual probe at decreasing spacings, as (h, residual) pairs."""
    return [(h, pde_residual_probe(sol, t, x, h)) for h in hs]
