from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vfdlab import domain as D
from vfdlab import diagnostics as G
from vfdlab import nonlinearity as N
from vfdlab import oracle as O
from vfdlab import stepper as S


def _cfg(**kw):
    base = dict(alpha=1.0, beta=0.0, dt=1e-2, t_end=0.1, theta_lower=0.5, theta_upper=3.0)
    base.update(kw)
    return S.RunConfig(**base)


def _smooth(dom):
    x = dom.nodes[:, 0]
    y = dom.nodes[:, 1] if dom.nodes.shape[1] > 1 else 0.0
    return 1.5 + 0.4 * np.cos(2.0 * x) + 0.2 * np.sin(3.0 * y)


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------


def test_config_validation():
    with pytest.raises(S.ConfigError):
        _cfg(bc_mode="neumann").validate()
    with pytest.raises(S.ConfigError):
        _cfg(alpha=0.0, beta=0.0).validate()
    with pytest.raises(S.ConfigError):
        _cfg(alpha=0.0, beta=1.0).validate()
    with pytest.raises(S.ConfigError):
        _cfg(boundary_mass_penalty=10).validate()
    with pytest.raises(S.ConfigError):
        _cfg(bc_mode="dirichlet_oracle").validate()
    with pytest.raises(S.ConfigError):
        _cfg(theta_lower=2.0, theta_upper=1.0).validate()
    _cfg(alpha=0.0, beta=0.0, bc_mode="neumann").validate()
    c = _cfg(alpha=0.0, beta=1.0, boundary_mass_penalty=100).validate()
    assert c.boundary_mass == pytest.approx(0.01)


# --------------------------------------------------------------------------
# single steps
# --------------------------------------------------------------------------


@pytest.mark.parametrize("alpha,beta", [(0.0, 0.0), (1.0, 0.0), (0.5, 2.0)])
def test_constant_is_fixed_point(alpha, beta):
    dom = D.disk(1.0, 6, 12)
    mode = "neumann" if alpha == beta == 0 else "dynamic"
    cfg = _cfg(alpha=alpha, beta=beta, bc_mode=mode)
    res = S.step(S.State(np.full(dom.n_nodes, 1.7)), cfg, dom)
    assert np.all(res.state.theta == 1.7)
    assert res.iterations == 0


@pytest.mark.parametrize("make", [lambda: D.interval(1.0, 30), lambda: D.disk(1.0, 8, 12),
                                  lambda: D.annulus(1.0, 2.0, 20)])
def test_one_step_mass_balance(make):
    dom = make()
    rng = np.random.default_rng(1)
    theta = _smooth(dom) + 0.05 * rng.uniform(size=dom.n_nodes)
    f = rng.normal(size=dom.n_nodes)
    cfg = _cfg(alpha=0.7, beta=0.0, dt=0.05)
    res = S.step(S.State(theta), cfg, dom, forcing=lambda t: f)
    before = D.integrate_dm(dom, theta, 0.7)
    after = D.integrate_dm(dom, res.state.theta, 0.7)
    assert abs(after - before - 0.05 * np.dot(dom.bulk_weights, f)) <= 1e-12 * before


@settings(max_examples=25, deadline=None)
@given(
    alpha=st.floats(0.0, 3.0),
    beta=st.floats(0.0, 3.0),
    seed=st.integers(0, 10_000),
    dt=st.floats(1e-3, 0.2),
)
def test_mass_conservation_property(alpha, beta, seed, dt):
    dom = D.disk(1.0, 5, 9)
    if alpha == 0 and beta == 0:
        cfg = _cfg(alpha=0.0, beta=0.0, bc_mode="neumann", dt=dt, t_end=3 * dt)
    elif alpha == 0:
        cfg = _cfg(alpha=0.0, beta=beta, boundary_mass_penalty=7, dt=dt, t_end=3 * dt)
    else:
        cfg = _cfg(alpha=alpha, beta=beta, dt=dt, t_end=3 * dt)
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.6, 2.5, dom.n_nodes)
    f = rng.normal(size=dom.n_nodes)
    f -= D.mean_omega(dom, f)
    final, recs = S.run(cfg, S.State(theta), lambda t: f, dom)
    m0 = D.integrate_dm(dom, theta, cfg.boundary_mass)
    assert max(abs(r.mass - m0) for r in recs) <= 1e-11 * m0


def test_mms_single_step_accuracy():
    sol = O.make_manufactured(1.0, 1.0, time_mode="oscillating")
    errs = []
    for n_r, dt in ((8, 4e-3), (16, 1e-3)):
        dom = D.disk(1.0, n_r, 4 * n_r)
        x = dom.nodes
        xb = x[dom.boundary_index]
        cfg = _cfg(alpha=1.0, beta=1.0, dt=dt, newton_tol=1e-13,
                   mms_boundary_source=lambda t, xb=xb: sol.boundary_source(t, xb))
        res = S.step(S.State(sol.theta(0.1, x), 0.1), cfg, dom, forcing=lambda t, x=x: sol.forcing(t, x))
        errs.append(np.abs(res.state.theta - sol.theta(0.1 + dt, x)).max())
    # the local error of one step is dt * O(dt + h^2); dt = h^2 / 4 at both levels
    assert errs[1] < errs[0] / 4


# --------------------------------------------------------------------------
# Newton
# --------------------------------------------------------------------------


def test_newton_linear_one_iteration():
    dom = D.interval(1.0, 9)
    cfg = _cfg()
    prob = S.ImplicitProblem(dom, cfg, gamma=N.IdentityMap())
    old = np.linspace(1.0, 2.0, dom.n_nodes)
    f = np.sin(dom.nodes[:, 0])
    res = prob.solve(old, 0.01, 0.01, f)
    assert res.iterations == 1


def test_newton_quadratic_decay():
    dom = D.disk(1.0, 8, 12)
    cfg = _cfg(beta=1.0, newton_tol=1e-14)
    prob = S.ImplicitProblem(dom, cfg)
    theta_old = _smooth(dom)
    f = np.zeros(dom.n_nodes)
    conv = prob.solve(theta_old, 0.01, 0.05, f).x
    rng = np.random.default_rng(2)
    start = conv * (1 + 0.2 * rng.uniform(-1, 1, conv.size))
    hist = S.newton_solve(
        start,
        lambda th: prob.residual(th, theta_old, 0.05, f),
        lambda th: prob.jacobian(th, 0.05),
        1e-14, 20, norm=prob.scaled_norm(0.05),
    ).history
    ratios = [b / a for a, b in zip(hist, hist[1:]) if b > 1e-13]
    assert len(hist) >= 4
    assert ratios[-1] < 0.1 * ratios[0]
    # quadratic: e_{k+1} ~ C e_k^2
    assert hist[-2] < 10 * hist[-3] ** 2 / hist[-4] + 1e-13


@pytest.mark.parametrize("beta", [0.0, 1.0])
def test_jacobian_matches_finite_differences(beta):
    dom = D.interval(1.0, 9) if beta == 0 else D.disk(1.0, 3, 3)
    assert dom.n_nodes == 10
    prob = S.ImplicitProblem(dom, _cfg(beta=beta))
    rng = np.random.default_rng(4)
    th = rng.uniform(0.1, 8.0, dom.n_nodes)
    old = th + 0.1
    f = rng.normal(size=dom.n_nodes)
    J = prob.jacobian(th, 0.01).toarray()
    Jfd = np.empty_like(J)
    h = 1e-6
    for k in range(th.size):
        e = np.zeros_like(th)
        e[k] = h
        Jfd[:, k] = (prob.residual(th + e, old, 0.01, f) - prob.residual(th - e, old, 0.01, f)) / (2 * h)
    assert np.abs(J - Jfd).max() <= 1e-5 * np.abs(J).max()


def test_jacobian_dirichlet_rows():
    dom = D.annulus(1.0, 2.0, 9)
    rb = dom.nodes[dom.boundary_index, 0]
    cfg = _cfg(alpha=0.0, bc_mode="dirichlet_oracle", dirichlet_values=lambda t: 1.0 / rb)
    prob = S.ImplicitProblem(dom, cfg)
    th = np.linspace(1.0, 2.0, dom.n_nodes)
    J = prob.jacobian(th, 0.1).toarray()
    for i in dom.boundary_index:
        row = np.zeros(dom.n_nodes)
        row[i] = prob.mass[i] / 0.1
        assert np.array_equal(J[i], row)


def test_newton_error_carries_history():
    with pytest.raises(S.NewtonError) as info:
        S.newton_solve(np.array([10.0]), np.arctan, lambda x: np.array([[1.0 / (1 + x[0] ** 2)]]), 1e-30, 3)
    assert len(info.value.history) >= 1


# --------------------------------------------------------------------------
# run
# --------------------------------------------------------------------------


def test_run_zero_time():
    dom = D.interval(1.0, 10)
    init = S.State(np.full(dom.n_nodes, 2.0))
    final, recs = S.run(_cfg(t_end=0.0), init, None, dom)
    assert recs == [] and final.t == 0.0
    assert np.array_equal(final.theta, init.theta)


def test_constant_run_records_identical():
    dom = D.interval(1.0, 20)
    final, recs = S.run(_cfg(dt=1e-3, t_end=0.1), S.State(np.full(dom.n_nodes, 1.2)), None, dom)
    assert len(recs) == 100
    ref = recs[0].as_row()
    for r in recs[1:]:
        row = r.as_row()
        for k, v in row.items():
            if k not in ("t", "dt"):
                assert v == ref[k]


def test_time_refinement_first_order():
    dom = D.interval(1.0, 40)
    theta = _smooth(dom)
    finals = []
    for dt in (0.02, 0.01, 0.005):
        final, _ = S.run(_cfg(dt=dt, t_end=0.2), S.State(theta), None, dom)
        finals.append(final.theta)
    d1 = np.abs(finals[0] - finals[1]).max()
    d2 = np.abs(finals[1] - finals[2]).max()
    assert 1.6 < d1 / d2 < 2.4


def test_last_step_clipped_to_t_end():
    dom = D.interval(1.0, 10)
    final, recs = S.run(_cfg(dt=0.03, t_end=0.1), S.State(_smooth(dom)), None, dom)
    assert final.t == pytest.approx(0.1, abs=1e-15)
    assert recs[-1].dt == pytest.approx(0.01)


def test_rejection_then_geometric_recovery():
    dom = D.interval(1.0, 100)
    x = dom.nodes[:, 0]
    theta = 1.0 - 0.99 * np.exp(-((x - 0.5) / 0.03) ** 2)
    cfg = _cfg(dt=0.02, t_end=0.2, newton_max_iter=4, theta_lower=0.01, theta_upper=2.0)
    final, recs = S.run(cfg, S.State(theta), None, dom)
    dts = [r.dt for r in recs]
    assert min(dts) < cfg.dt
    k = int(np.argmin(dts))
    # after the smallest accepted step the step grows by 1.5 until capped
    follow = dts[k:k + 4]
    for a, b in zip(follow, follow[1:]):
        assert b == pytest.approx(min(1.5 * a, cfg.dt)) or b <= 1.5 * a
    assert final.t == pytest.approx(0.2)


def test_hard_failure_carries_records():
    dom = D.interval(1.0, 100)
    x = dom.nodes[:, 0]
    theta = 1.0 - 0.999 * np.exp(-((x - 0.5) / 0.03) ** 2)
    cfg = _cfg(dt=0.05, t_end=0.5, newton_max_iter=1, dt_min=0.01, theta_lower=1e-3, theta_upper=2.0)
    with pytest.raises(S.SolverFailure) as info:
        S.run(cfg, S.State(theta), None, dom)
    assert isinstance(info.value.records, list)
    assert info.value.state is not None


def test_window_exit_is_flagged_not_fatal():
    dom = D.interval(1.0, 20)
    theta = np.full(dom.n_nodes, 1.0)
    theta[10] = 0.2
    cfg = _cfg(theta_lower=0.9, theta_upper=1.2)
    final, recs = S.run(cfg, S.State(theta), None, dom)
    assert not recs[0].window_ok
    assert np.isnan(recs[0].u_form_residual)


def test_energy_decreases_on_disk():
    dom = D.disk(1.0, 10, 16)
    theta = _smooth(dom)
    cfg = _cfg(alpha=1.0, beta=1.0, dt=5e-3, t_end=0.05)
    final, recs = S.run(cfg, S.State(theta), None, dom)
    e = [G.energy(dom, theta, 1.0)] + [r.energy for r in recs]
    assert np.all(np.diff(e) <= 1e-10)


def test_positivity_comparison():
    dom = D.interval(1.0, 60)
    theta = _smooth(dom)
    final, recs = S.run(_cfg(dt=5e-3, t_end=0.2), S.State(theta), None, dom)
    assert min(r.inf_theta for r in recs) >= theta.min() - 1e-12


def test_l1_contraction_pair():
    dom = D.interval(1.0, 50)
    x = dom.nodes[:, 0]
    a = 1.3 + 0.4 * np.cos(np.pi * x)
    b = 1.3 - 0.4 * np.cos(np.pi * x)
    f = np.sin(2 * np.pi * x)
    f -= D.mean_omega(dom, f)
    cfg = _cfg(dt=5e-3, t_end=0.1)
    runs = []
    for init in (a, b):
        states = [(0.0, init.copy())]
        S.run(cfg, S.State(init), lambda t: f, dom, on_step=lambda s: states.append((s.t, s.theta.copy())))
        runs.append(states)
    v = G.l1_contraction_check(dom, runs[0], runs[1], 1.0)
    assert v.passed
    d = v.details["distance"]
    assert d[1] < d[0]


def test_dirichlet_oracle_run_tracks_exact_solution():
    dom = D.annulus(1.0, 3.0, 16)
    r = dom.nodes[:, 0]
    rb = r[dom.boundary_index]
    cfg = _cfg(alpha=0.0, bc_mode="dirichlet_oracle", dt=4e-3, t_end=0.2, theta_lower=0.4, theta_upper=2.0,
               dirichlet_values=lambda t: O.singular_radial(t, rb, 1.0))
    final, _ = S.run(cfg, S.State(O.singular_radial(0.0, r, 1.0)), None, dom)
    assert np.abs(final.theta - O.singular_radial(0.2, r, 1.0)).max() < 2e-3
    assert np.array_equal(final.theta[dom.boundary_index], O.singular_radial(final.t, rb, 1.0))
