"""Backward Euler for the coupled bulk/boundary system, solved by damped Newton.

The unknown is the nodal temperature on every grid node; boundary nodes carry
both their bulk half-cell and the boundary mass.  Eliminating the boundary
flux between the bulk balance of a boundary control volume and the dynamic
boundary law gives one row per node:

    M_i (theta_i - theta_old_i) / dt - (K u)_i - beta (S theta)_i = w_i f_i + s_i g_i

with u = gamma_R(theta), M = w + alpha s, K the bulk flux matrix and S the
boundary Laplace-Beltrami matrix.  Summing all rows, the K and S terms drop
out, so integrate_dm(theta) changes exactly by dt * sum(w f + s g).
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from . import diagnostics as diag
from .domain import DiscreteDomain, warn_point_boundary
from .nonlinearity import RegularizedGamma, build_regularized

log = logging.getLogger(__name__)

_EPS = np.finfo(float).eps


class ConfigError(ValueError):
    """Inconsistent run configuration."""


class NewtonError(RuntimeError):
    """Newton did not reach the tolerance."""

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


class SolverFailure(RuntimeError):
    """Time step fell below ``dt_min``; carries the diagnostics gathered so far."""

    def __init__(self, message, state=None, records=()):
        super().__init__(message)
        self.state = state
        self.records = list(records)


class BCMode(str, Enum):
    DYNAMIC = "dynamic"
    NEUMANN = "neumann"
    DIRICHLET_ORACLE = "dirichlet_oracle"


@dataclass
class RunConfig:
    """Physical and numerical parameters of one run.

    ``boundary_mass_penalty = n`` switches on the study mode with alpha = 0,
    beta > 0, in which the boundary carries mass 1/n instead of alpha.
    ``mms_boundary_source(t)`` returns the boundary source g on the boundary
    nodes, and ``dirichlet_values(t)`` the pinned boundary temperature.
    """

    alpha: float = 1.0
    beta: float = 0.0
    dt: float = 1e-3
    t_end: float = 1.0
    newton_tol: float = 1e-11
    newton_max_iter: int = 25
    dt_min: float = 1e-10
    bc_mode: BCMode = BCMode.DYNAMIC
    theta_lower: float = 0.1
    theta_upper: float = 10.0
    boundary_mass_penalty: int | None = None
    mms_boundary_source: Callable | None = None
    dirichlet_values: Callable | None = None

    def __post_init__(self):
        self.bc_mode = BCMode(self.bc_mode)

    def validate(self) -> "RunConfig":
        if self.alpha < 0 or self.beta < 0:
            raise ConfigError("alpha and beta must be nonnegative")
        if self.dt <= 0 or self.t_end < 0 or self.dt_min <= 0:
            raise ConfigError("dt and dt_min must be positive, t_end nonnegative")
        if not 0 < self.theta_lower < self.theta_upper:
            raise ConfigError("need 0 < theta_lower < theta_upper")
        both_zero = self.alpha == 0 and self.beta == 0
        if self.bc_mode is BCMode.NEUMANN and not both_zero:
            raise ConfigError("neumann mode requires alpha = beta = 0")
        if self.bc_mode is BCMode.DYNAMIC and both_zero:
            raise ConfigError("alpha = beta = 0 is the neumann mode; set bc_mode = 'neumann'")
        if self.bc_mode is BCMode.DIRICHLET_ORACLE and self.dirichlet_values is None:
            raise ConfigError("dirichlet_oracle mode needs dirichlet_values")
        if self.boundary_mass_penalty is not None:
            if self.alpha != 0 or self.beta <= 0:
                raise ConfigError("the boundary-mass penalty study needs alpha = 0 and beta > 0")
            if self.boundary_mass_penalty < 1:
                raise ConfigError("boundary_mass_penalty must be a positive integer")
        elif self.alpha == 0 and self.beta > 0 and self.bc_mode is BCMode.DYNAMIC:
            raise ConfigError(
                "alpha = 0 with beta > 0 is only available as the penalised study "
                "(set boundary_mass_penalty)"
            )
        return self

    @property
    def boundary_mass(self) -> float:
        """Coefficient of the boundary time derivative actually used."""
        if self.boundary_mass_penalty is not None:
            return 1.0 / self.boundary_mass_penalty
        return self.alpha

    def gamma(self) -> RegularizedGamma:
        return build_regularized(self.theta_lower, self.theta_upper)


@dataclass
class State:
    """Nodal temperature and time.  u = gamma_R(theta) is always derived."""

    theta: np.ndarray
    t: float = 0.0
    window_ok: bool = True

    def eta(self, domain: DiscreteDomain) -> np.ndarray:
        return self.theta[domain.boundary_index]

    def u(self, gamma) -> np.ndarray:
        return gamma.value(self.theta)


@dataclass
class NewtonResult:
    x: np.ndarray
    iterations: int
    history: list = field(default_factory=list)


def _max_abs(r):
    return float(np.max(np.abs(r)))


def newton_solve(x0, residual, jacobian, tol, max_iter, norm=_max_abs, max_halvings=30):
    """Damped Newton iteration.

    The step is halved while the residual norm fails to decrease, at most
    ``max_halvings`` times.  Raises :class:`NewtonError` when ``max_iter``
    iterations do not bring the residual norm below ``tol``.
    """
    x = np.array(x0, dtype=float)
    r = residual(x)
    nr = norm(r)
    history = [nr]
    it = 0
    while not nr <= tol:
        if it >= max_iter:
            raise NewtonError(f"no convergence in {max_iter} iterations (|R| = {nr:.3e})", history)
        J = jacobian(x)
        if sp.issparse(J):
            dx = spsolve(J, -r)
        else:
            dx = np.linalg.solve(J, -r)
        lam = 1.0
        for _ in range(max_halvings + 1):
            xt = x + lam * dx
            rt = residual(xt)
            nt = norm(rt)
            if np.isfinite(nt) and nt < nr:
                break
            lam *= 0.5
        else:
            raise NewtonError(f"line search failed at |R| = {nr:.3e}", history)
        x, r, nr = xt, rt, nt
        it += 1
        history.append(nr)
    return NewtonResult(x, it, history)


def _as_forcing(forcing, domain):
    if forcing is None:
        return lambda t: np.zeros(domain.n_nodes)
    if hasattr(forcing, "slice"):
        return lambda t: forcing.slice(t, domain)
    return forcing


class ImplicitProblem:
    """Residual and Jacobian of one backward Euler step on a fixed domain."""

    def __init__(self, domain: DiscreteDomain, cfg: RunConfig, gamma=None):
        cfg.validate()
        warn_point_boundary(domain, cfg.beta)
        self.domain = domain
        self.cfg = cfg
        self.gamma = gamma if gamma is not None else cfg.gamma()
        self.w = domain.bulk_weights
        self.s = domain.boundary_weights_full()
        self.mass = self.w + cfg.boundary_mass * self.s
        self.K = domain.stiffness.tocsr()
        self.S = (cfg.beta * domain.boundary_stiffness).tocsr()
        self.KS_abs = abs(self.K) + abs(self.S)
        self.pinned = None
        if cfg.bc_mode is BCMode.DIRICHLET_ORACLE:
            self.pinned = domain.boundary_index
        self._pattern()

    def _pattern(self):
        # fixed CSC pattern of diag + K + S; only the values change per iterate
        n = self.domain.n_nodes
        eye = sp.identity(n, format="csc")
        pat = (eye + abs(self.K) + abs(self.S)).tocsc()
        pat.sort_indices()
        rows = pat.indices
        cols = np.repeat(np.arange(n), np.diff(pat.indptr))
        self._k_vals = np.asarray(self.K[rows, cols]).ravel()
        self._s_vals = np.asarray(self.S[rows, cols]).ravel()
        self._is_diag = rows == cols
        if self.pinned is not None:
            frozen = np.isin(rows, self.pinned)
            self._k_vals[frozen] = 0.0
            self._s_vals[frozen] = 0.0
        self._rows, self._cols, self._template = rows, cols, pat

    def residual(self, theta, theta_old, dt, f, g=None, pinned_values=None):
        u = self.gamma.value(theta)
        R = self.mass * (theta - theta_old) / dt - self.K @ u - self.S @ theta - self.w * f
        if g is not None:
            R[self.domain.boundary_index] -= self.domain.boundary_weights * g
        if self.pinned is not None:
            p = self.pinned
            R[p] = (theta[p] - pinned_values) * self.mass[p] / dt
        return R

    def jacobian(self, theta, dt):
        """Exact derivative of :meth:`residual`: diag(M/dt) - K diag(gamma_R') - S."""
        d = self.gamma.prime(theta)
        data = self._is_diag * (self.mass[self._cols] / dt) - self._k_vals * d[self._cols] - self._s_vals
        t = self._template
        return sp.csc_matrix((data, t.indices, t.indptr), shape=t.shape)

    def scaled_norm(self, dt):
        scale = dt / self.mass
        return lambda R: float(np.max(np.abs(R) * scale))

    def roundoff_floor(self, theta, dt):
        """Residual level below which the scaled norm is pure rounding noise."""
        u = np.abs(self.gamma.value(theta))
        terms = self.mass * np.abs(theta) / dt + self.KS_abs @ np.maximum(u, np.abs(theta))
        return float(64 * _EPS * np.max(terms * dt / self.mass))

    def solve(self, theta_old, t_new, dt, f, g=None, pinned_values=None):
        tol = max(self.cfg.newton_tol, self.roundoff_floor(theta_old, dt))
        return newton_solve(
            theta_old,
            lambda th: self.residual(th, theta_old, dt, f, g, pinned_values),
            lambda th: self.jacobian(th, dt),
            tol,
            self.cfg.newton_max_iter,
            norm=self.scaled_norm(dt),
        )


@dataclass
class StepResult:
    state: State
    dt: float
    iterations: int
    rejected: int
    forcing: np.ndarray


def step(state: State, cfg: RunConfig, domain: DiscreteDomain, gamma=None, forcing=None,
         dt: float | None = None, problem: ImplicitProblem | None = None) -> StepResult:
    """Advance one backward Euler step.

    A step whose Newton solve fails is rejected and retried with half the time
    step; once the step would fall below ``cfg.dt_min`` a :class:`SolverFailure`
    is raised.
    """
    if problem is None:
        problem = ImplicitProblem(domain, cfg, gamma)
    forcing = _as_forcing(forcing, domain)
    dt = cfg.dt if dt is None else dt
    rejected = 0
    while True:
        if dt < cfg.dt_min:
            raise SolverFailure(
                f"time step {dt:.3e} below dt_min = {cfg.dt_min:.3e} at t = {state.t:.6g}",
                state=state,
            )
        t_new = state.t + dt
        f = np.asarray(forcing(t_new), dtype=float)
        g = cfg.mms_boundary_source(t_new) if cfg.mms_boundary_source is not None else None
        pinned = cfg.dirichlet_values(t_new) if problem.pinned is not None else None
        try:
            res = problem.solve(state.theta, t_new, dt, f, g, pinned)
        except NewtonError as exc:
            log.debug("step rejected at t=%.6g dt=%.3e: %s", state.t, dt, exc)
            rejected += 1
            dt *= 0.5
            continue
        break
    inside = bool(np.all(problem.gamma.in_window(res.x)))
    if not inside and state.window_ok:
        log.warning("solution left the gamma_R window at t = %.6g", t_new)
    new_state = State(res.x, t_new, state.window_ok and inside)
    return StepResult(new_state, dt, res.iterations, rejected, f)


def run(cfg: RunConfig, initial: State, forcing, domain: DiscreteDomain, gamma=None,
        p_list=(1, 2, 4), on_step: Callable | None = None):
    """Integrate from ``initial`` to ``cfg.t_end``.

    Returns the final state and one :class:`~vfdlab.diagnostics.DiagnosticsRecord`
    per accepted step.  ``on_step(state)`` is called after every accepted step.
    """
    problem = ImplicitProblem(domain, cfg, gamma)
    gamma = problem.gamma
    if np.any(initial.theta <= 0):
        raise ConfigError("initial temperature must be strictly positive")
    state = replace(
        initial, window_ok=initial.window_ok and bool(np.all(gamma.in_window(initial.theta)))
    )
    records = []
    dt_target = cfg.dt
    t_end = cfg.t_end
    slack = 1e-12 * max(1.0, t_end)
    while state.t < t_end - slack:
        dt_try = min(dt_target, t_end - state.t)
        try:
            res = step(state, cfg, domain, gamma, forcing, dt=dt_try, problem=problem)
        except SolverFailure as exc:
            raise SolverFailure(str(exc), state=state, records=records) from exc
        records.append(
            diag.record(
                domain, res.state.theta, res.state.t, res.dt, cfg.boundary_mass, cfg.beta,
                gamma, p_list=p_list, f=res.forcing, theta_prev=state.theta,
                newton_iterations=res.iterations, window_ok=res.state.window_ok,
            )
        )
        if res.rejected:
            dt_target = res.dt
        dt_target = min(cfg.dt, dt_target * 1.5)
        state = res.state
        if on_step is not None:
            on_step(state)
    return state, records
