"""Per-step monitored quantities and post-run verdicts.

Everything is computed with the normalised quadrature of
:mod:`vfdlab.domain`, i.e. in units where |Omega| = 1.  Records are pure
functions of the nodal temperature, the domain and the run parameters, so a
recomputation reproduces them bit for bit.
"""

from __future__ import annotations

import csv
import json
import math
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .domain import (
    DiscreteDomain,
    DomainError,
    boundary_dirichlet_form,
    dirichlet_form,
    face_gradient_l1,
    integrate_dm,
)

#: Column order of ``series.csv``.  ``lp_*`` columns are appended per p.
BASE_COLUMNS = (
    "t", "dt", "energy", "mass", "bulk_mass", "sup_theta", "inf_theta", "sup_u",
    "dissipation", "log_minus", "v_l1", "grad_v_l1", "logp_c1", "logp_c2",
    "dtheta_dt", "u_form_residual", "f_l65", "newton_iterations", "window_ok",
)


@dataclass
class DiagnosticsRecord:
    """Monitored quantities at one accepted time level.

    ``lp_norms`` maps p to ``(bulk, boundary)`` discrete L^p norms.
    ``logp_c1``/``logp_c2`` are the smallest constants of the logarithmic
    Poincare inequality implied by this state with the other constant set to
    zero.  ``u_form_residual`` is NaN when the step left the gamma window.
    """

    t: float
    dt: float
    energy: float
    mass: float
    bulk_mass: float
    sup_theta: float
    inf_theta: float
    sup_u: float
    dissipation: float
    log_minus: float
    v_l1: float
    grad_v_l1: float
    logp_c1: float
    logp_c2: float
    dtheta_dt: float = 0.0
    u_form_residual: float = 0.0
    f_l65: float = 0.0
    newton_iterations: int = 0
    window_ok: bool = True
    lp_norms: dict = field(default_factory=dict)

    def as_row(self) -> dict:
        row = {k: getattr(self, k) for k in BASE_COLUMNS}
        for p, (bulk, bnd) in sorted(self.lp_norms.items()):
            row[f"lp_{_pkey(p)}"] = bulk
            row[f"lp_{_pkey(p)}_boundary"] = bnd
        return row


def _pkey(p) -> str:
    return f"{p:g}"


def _check_positive(theta):
    theta = np.asarray(theta, dtype=float)
    if np.any(~(theta > 0)):
        raise DomainError("energy is undefined for nonpositive temperatures")
    return theta


def energy(domain: DiscreteDomain, theta, alpha: float) -> float:
    """Quadrature of theta - log theta over the bulk plus alpha times the boundary."""
    theta = _check_positive(theta)
    phi = theta - np.log(theta)
    return integrate_dm(domain, phi, alpha)


def lp_norm(domain: DiscreteDomain, theta, p: float) -> tuple[float, float]:
    """Discrete ``(||theta||_p, ||eta||_{p,Gamma})``; ``p = inf`` gives sup norms."""
    theta = np.asarray(theta, dtype=float)
    eta = theta[domain.boundary_index]
    if math.isinf(p):
        return float(np.max(np.abs(theta))), float(np.max(np.abs(eta)))
    bulk = float(np.dot(domain.bulk_weights, np.abs(theta) ** p) ** (1.0 / p))
    bnd = float(np.dot(domain.boundary_weights, np.abs(eta) ** p) ** (1.0 / p))
    return bulk, bnd


def dissipation(domain: DiscreteDomain, theta, u, beta: float) -> float:
    """Discrete ||grad u||^2 + beta <grad_Gamma eta, grad_Gamma u>.

    With u = -1/theta the boundary term is the edge analogue of
    beta ||grad_Gamma log eta||^2; it is nonnegative because u is increasing
    in theta.
    """
    d = dirichlet_form(domain, u)
    if beta > 0:
        d += beta * boundary_dirichlet_form(domain, theta, u)
    return d


def log_minus(domain: DiscreteDomain, theta) -> float:
    """Bulk quadrature of log^- theta = max(-log theta, 0)."""
    theta = _check_positive(theta)
    return float(np.dot(domain.bulk_weights, np.maximum(-np.log(theta), 0.0)))


def log_poincare_constants(v_l1: float, k: float, grad_l1: float) -> tuple[float, float]:
    """Implied ``(C1 with C2 = 0, C2 with C1 = 0)`` for ||v||_1 <= e^{C1 K} + C2 ||grad v||_1."""
    excess = v_l1 - 1.0
    if excess <= 0:
        return 0.0, 0.0
    c1 = math.log(v_l1) / k if k > 0 else math.inf
    c2 = excess / grad_l1 if grad_l1 > 0 else math.inf
    return c1, c2


def u_form_residual(domain: DiscreteDomain, theta, theta_prev, dt: float, f=None) -> float:
    """Max over interior nodes of |(u - u_prev)/dt - u^2 (Lap u + f)| with u = -1/theta.

    The backward-Euler theta-form makes this vanish up to O(dt) terms; it is a
    consistency cross-check between the two forms of the equation.
    """
    theta = _check_positive(theta)
    theta_prev = _check_positive(theta_prev)
    u = -1.0 / theta
    u_prev = -1.0 / theta_prev
    lap = (domain.stiffness @ u) / domain.bulk_weights
    f = np.zeros_like(u) if f is None else np.asarray(f, dtype=float)
    res = (u - u_prev) / dt - u**2 * (lap + f)
    inner = domain.interior_mask()
    return float(np.max(np.abs(res[inner]))) if inner.any() else 0.0


def record(domain: DiscreteDomain, theta, t: float, dt: float, alpha: float, beta: float,
           gamma, p_list: Sequence[float] = (1, 2, 4), f=None, theta_prev=None,
           newton_iterations: int = 0, window_ok: bool = True) -> DiagnosticsRecord:
    """Evaluate every monitored quantity for the nodal field ``theta``.

    ``alpha`` is the boundary mass coefficient actually used by the solver
    (1/n in the penalised study).
    """
    theta = np.asarray(theta, dtype=float)
    u = gamma.value(theta)
    v = -u
    vl1 = float(np.dot(domain.bulk_weights, np.abs(v)))
    gl1 = face_gradient_l1(domain, v)
    if np.all(theta > 0):
        en = energy(domain, theta, alpha)
        lm = log_minus(domain, theta)
    else:
        en = lm = math.nan
    c1, c2 = log_poincare_constants(vl1, lm, gl1)
    rec = DiagnosticsRecord(
        t=float(t),
        dt=float(dt),
        energy=en,
        mass=integrate_dm(domain, theta, alpha),
        bulk_mass=float(np.dot(domain.bulk_weights, theta)),
        sup_theta=float(theta.max()),
        inf_theta=float(theta.min()),
        sup_u=float(np.max(np.abs(u))),
        dissipation=dissipation(domain, theta, u, beta),
        log_minus=lm,
        v_l1=vl1,
        grad_v_l1=gl1,
        logp_c1=c1,
        logp_c2=c2,
        newton_iterations=int(newton_iterations),
        window_ok=bool(window_ok),
        lp_norms={p: lp_norm(domain, theta, p) for p in p_list},
    )
    if f is not None:
        f = np.asarray(f, dtype=float)
        rec.f_l65 = float(np.dot(domain.bulk_weights, np.abs(f) ** 1.2) ** (1 / 1.2))
    if theta_prev is not None and dt > 0:
        rate = (theta - np.asarray(theta_prev)) / dt
        rec.dtheta_dt = float(np.sqrt(np.dot(domain.bulk_weights, rate**2)))
        if window_ok and np.all(theta_prev > 0) and np.all(theta > 0):
            rec.u_form_residual = u_form_residual(domain, theta, theta_prev, dt, f)
        else:
            rec.u_form_residual = math.nan
    return rec


# --------------------------------------------------------------------------
# verdicts
# --------------------------------------------------------------------------


@dataclass
class Verdict:
    """Outcome of one monitored inequality.

    ``passed`` is None for report-only probes whose constant is not known.
    """

    name: str
    passed: bool | None
    value: float
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return _jsonable(asdict(self))


def energy_budget_check(series: Sequence[DiagnosticsRecord], e0: float,
                        tol: float = 1e-8, step_tol: float = 1e-10) -> Verdict:
    """E(t) + sum dt * dissipation against the initial energy.

    With zero forcing this is a strict check (both the cumulative budget and
    per-step monotonicity).  With forcing the ratio
    (LHS - E0) / ||f||^2_{L^2 L^{6/5}} is reported as an empirical constant.
    Steps outside the gamma window are excluded from the strict checks.
    """
    if not series:
        return Verdict("energy_budget", True, 0.0, {"steps": 0})
    energies = np.array([r.energy for r in series])
    dt = np.array([r.dt for r in series])
    diss = np.array([r.dissipation for r in series])
    lhs = energies + np.cumsum(dt * diss)
    excess = lhs - e0
    f2 = float(np.sum(dt * np.array([r.f_l65 for r in series]) ** 2))
    ok = np.array([r.window_ok for r in series])
    if f2 > 0:
        c = float(np.max(excess) / f2)
        return Verdict("energy_budget", None, c, {"f_norm_sq": f2, "max_excess": float(np.max(excess))})
    prev = np.concatenate([[e0], energies[:-1]])
    increase = energies - prev
    worst_step = float(np.max(increase[ok])) if ok.any() else math.nan
    worst_budget = float(np.max(excess[ok])) if ok.any() else math.nan
    passed = bool(ok.any() and worst_step <= step_tol and worst_budget <= tol)
    return Verdict(
        "energy_budget", passed, worst_budget,
        {"max_step_increase": worst_step, "steps_checked": int(ok.sum()), "tol": tol, "step_tol": step_tol},
    )


def mass_drift_check(series: Sequence[DiagnosticsRecord], m0: float, tol: float = 1e-11) -> Verdict:
    """Relative drift of integrate_dm over the run (zero-mean forcing only)."""
    drift = max((abs(r.mass - m0) for r in series), default=0.0) / abs(m0)
    return Verdict("mass_conservation", drift <= tol, drift, {"tol": tol})


def lp_conservation_check(series: Sequence[DiagnosticsRecord], p: float, alpha: float,
                          initial: DiagnosticsRecord | None = None) -> Verdict:
    """Report sup_t ||theta||_p + alpha ||eta||_{p,Gamma} and its time profile.

    Passes when the supremum is finite; no monotonicity is asserted.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    recs = ([initial] if initial is not None else []) + list(series)
    profile = [r.lp_norms[p][0] + alpha * r.lp_norms[p][1] for r in recs]
    sup = max(profile, default=0.0)
    return Verdict(f"lp_{_pkey(p)}", bool(np.isfinite(sup)), sup,
                   {"times": [r.t for r in recs], "profile": profile})


def regularization_probe(series: Sequence[DiagnosticsRecord], taus: Sequence[float]) -> list[dict]:
    """For each tau, sup over t >= tau of sup_u and sup_theta."""
    rows = []
    for tau in taus:
        later = [r for r in series if r.t >= tau - 1e-12]
        rows.append({
            "tau": float(tau),
            "sup_u": max((r.sup_u for r in later), default=math.nan),
            "sup_theta": max((r.sup_theta for r in later), default=math.nan),
            "reliable": all(r.window_ok for r in later),
        })
    return rows


def l1_distance(domain: DiscreteDomain, theta_a, theta_b, alpha: float) -> float:
    """||theta_a - theta_b||_1 + alpha ||eta_a - eta_b||_{1,Gamma}."""
    return integrate_dm(domain, np.abs(np.asarray(theta_a) - np.asarray(theta_b)), alpha)


def l1_contraction_check(domain: DiscreteDomain, states_a, states_b, alpha: float,
                         tol: float = 1e-9) -> Verdict:
    """D(t) nonincreasing within ``tol`` per step and never above D(0).

    ``states_a`` and ``states_b`` are sequences of ``(t, theta)`` pairs from two
    runs with the same forcing, coefficients and time grid, initial state first.
    """
    if len(states_a) != len(states_b):
        raise DomainError("runs have different numbers of steps")
    ta = np.array([s[0] for s in states_a])
    tb = np.array([s[0] for s in states_b])
    if not np.array_equal(ta, tb):
        raise DomainError("runs were taken on different time grids")
    d = np.array([l1_distance(domain, a[1], b[1], alpha) for a, b in zip(states_a, states_b)])
    steps = np.diff(d)
    worst = float(steps.max()) if steps.size else 0.0
    passed = bool(worst <= tol and np.all(d <= d[0] + tol))
    return Verdict("l1_contraction", passed, worst, {"times": ta.tolist(), "distance": d.tolist(), "tol": tol})


def log_approx_check(domain: DiscreteDomain, raw, prepared) -> Verdict:
    """Report c = int log^- prepared / (1 + int log^- raw)."""
    c = log_minus(domain, prepared) / (1.0 + log_minus(domain, raw))
    return Verdict("log_approx", None, c)


# --------------------------------------------------------------------------
# serialisation
# --------------------------------------------------------------------------


def fmt(x) -> str:
    """17 significant digits, so regression diffs are exact."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % float(x)


def series_columns(series: Sequence[DiagnosticsRecord]) -> list[str]:
    if not series:
        return list(BASE_COLUMNS)
    return list(series[0].as_row().keys())


def write_series_csv(path, series: Sequence[DiagnosticsRecord]) -> None:
    cols = series_columns(series)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in series:
            row = r.as_row()
            w.writerow([fmt(row[c]) for c in cols])


def read_series_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if hasattr(obj, "value") and hasattr(obj, "name"):
        return obj.value
    return obj


def write_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def record_fields() -> list[str]:
    return [f.name for f in fields(DiagnosticsRecord)]
