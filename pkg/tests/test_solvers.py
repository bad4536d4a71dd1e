import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import deblur_params, piecewise_image, recovery_small
from tvam import ObjectiveParams, PeriodicTV, make_kernel, vec
from tvam.linsolve import build_normal
from tvam.prox import objective_phi, objective_psi
from tvam.solvers import (
    TRACE_HEADER, MomentumState, SolverConfig, admm_solve, am_solve, beta_for_epsilon,
    convergence_bound, convergence_bound_check, momentum_next, q_norm_sq, sam_solve, stop_check,
)


def _momentum(k):
    s = MomentumState()
    states = [s]
    for _ in range(k - 1):
        s = momentum_next(s)
        states.append(s)
    return states


def test_momentum_sequence_values():
    # t2 = (1 + sqrt 5)/2, t3 = (1 + sqrt(1 + 4 t2^2))/2, computed by hand
    s = _momentum(100)
    assert s[0].t == 1.0 and s[0].tau == 0.0
    assert abs(s[1].t - 1.618033989) < 1e-9
    assert abs(s[2].t - 2.193527085) < 1e-9
    # tau_1 = (t_1 - 1)/t_2 = 0, tau_2 = (t_2 - 1)/t_3
    assert s[1].tau == 0.0
    assert abs(s[2].tau - 0.281753525) < 1e-9
    assert 50 <= s[99].t <= 52
    assert abs(s[99].t - 51.481830) < 1e-5


@given(st.integers(2, 400))
@settings(max_examples=40, deadline=None)
def test_momentum_properties(k):
    s = _momentum(k)
    ts = [x.t for x in s]
    assert all(b > a for a, b in zip(ts, ts[1:]))
    assert all(0 <= x.tau < 1 for x in s)
    # t_k >= (k + 1)/2
    assert all(t >= (i + 2) / 2 - 1e-12 for i, t in enumerate(ts))


def test_stop_check_boundary():
    x_old = np.array([0.5, 0.0])
    x_new = x_old + np.array([1e-3, 0.0])
    # change measured against max(1, |x_old|) = 1, exactly at the tolerance: not below it
    assert not stop_check(x_new, x_old, 1e-3)
    assert stop_check(x_new, x_old, 1.1e-3)
    assert not stop_check(x_new, x_old, 0.0)


def test_tol_zero_runs_full_budget():
    p, _ = deblur_params(8, 8)
    res = sam_solve(p, SolverConfig(tol=0, max_iter=25))
    assert res.iterations == 25 and not res.converged


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(tol=-1e-3)
    with pytest.raises(ValueError):
        SolverConfig(tol=1.0)
    with pytest.raises(ValueError):
        SolverConfig(max_iter=0)


def test_am_objective_is_monotone():
    p, img = deblur_params(16, 16)
    res = am_solve(p, SolverConfig(tol=0, max_iter=80), x_true=img)
    psi = res.trace.column("psi")
    assert np.all(np.diff(psi) <= 1e-12 * psi[:-1])


def test_am_first_iterate_from_observation():
    p, _ = deblur_params(16, 16)
    seen = []
    am_solve(p, SolverConfig(tol=0, max_iter=1), callback=lambda k, x, z: seen.append(z))
    from tvam.prox import group_shrink
    np.testing.assert_allclose(seen[0], group_shrink(p.D.apply(p.f), 1 / p.beta))


@pytest.mark.parametrize("maker", [lambda: deblur_params(16, 16)[0], lambda: recovery_small()[0]])
def test_sam_iterates_satisfy_normal_equations(maker):
    p = maker()
    sys_ = build_normal(p)
    worst = []

    def cb(k, x, z, **_):
        r = sys_.apply_W(x) - sys_.rhs(z)
        worst.append(np.linalg.norm(r) / (1 + np.linalg.norm(sys_.b)))

    sam_solve(p, SolverConfig(tol=0, max_iter=40, record_trace=False), system=sys_, callback=cb)
    assert max(worst) <= 1e-9


def test_sam_shortcut_matches_explicit_solves():
    p, _ = deblur_params(16, 16)
    xs = {}
    for flag in (True, False):
        got = []
        sam_solve(p, SolverConfig(tol=0, max_iter=50, record_trace=False), shortcut=flag,
                  callback=lambda k, x, z, xbar, **_: got.append(xbar.copy()))
        xs[flag] = np.array(got)
    err = np.linalg.norm(xs[True] - xs[False], axis=1) / np.linalg.norm(xs[False], axis=1)
    assert err.max() <= 1e-9


def test_sam_solve_counts():
    p, _ = deblur_params(8, 8)
    res = sam_solve(p, SolverConfig(tol=0, max_iter=10))
    assert res.solves == [2, 2] + [1] * 8
    assert res.n_solves == 12
    res = sam_solve(p, SolverConfig(tol=0, max_iter=10), shortcut=False)
    assert res.n_solves == 20
    assert am_solve(p, SolverConfig(tol=0, max_iter=10)).n_solves == 10


def test_sam_reaches_lower_objective_than_am():
    p, img = deblur_params(32, 32, kernel="motion:9:30", sigma=1e-3)
    sys_ = build_normal(p)
    cfg = SolverConfig(tol=0, max_iter=60)
    a = am_solve(p, cfg, system=sys_)
    s = sam_solve(p, cfg, system=sys_)
    assert s.trace.column("psi")[-1] <= a.trace.column("psi")[-1]


def test_admm_feasible_at_convergence():
    img = piecewise_image(16, 16)
    p = ObjectiveParams(50.0, 2.0 ** 7, make_kernel("delta", (16, 16)), PeriodicTV((16, 16)), vec(img))
    res = admm_solve(p, SolverConfig(tol=1e-10, max_iter=50000, record_trace=False))
    assert res.converged
    assert np.linalg.norm(p.D.apply(res.x) - res.z) <= 1e-6 * np.linalg.norm(res.z)


@pytest.mark.slow
def test_admm_phi_limit_matches_sam_at_large_beta():
    # SAM minimises the penalised model; its Phi approaches the constrained optimum as beta grows
    p, _ = deblur_params(16, 16, beta=2.0 ** 12)
    ad = admm_solve(p, SolverConfig(tol=1e-12, max_iter=40000, record_trace=False, rho=10.0))
    sm = sam_solve(p, SolverConfig(tol=0, max_iter=20000, record_trace=False))
    phi_a, phi_s = objective_phi(ad.x, p), objective_phi(sm.x, p)
    assert abs(phi_a - phi_s) <= 1e-4 * phi_a
    assert phi_a <= phi_s


def test_monotone_returns_best_psi():
    p, _ = deblur_params(16, 16)
    res = sam_solve(p, SolverConfig(tol=0, max_iter=60, monotone=True))
    assert objective_psi(res.x, res.z, p) <= res.trace.column("psi").min() + 1e-12


def test_trace_csv_header(tmp_path):
    p, img = deblur_params(8, 8)
    res = sam_solve(p, SolverConfig(tol=0, max_iter=5), x_true=img)
    path = tmp_path / "trace.csv"
    res.trace.write_csv(path)
    rows = list(csv.reader(open(path)))
    assert tuple(rows[0]) == TRACE_HEADER == ("iter", "psi", "phi", "snr_db", "rel_change", "time_s")
    assert [r[0] for r in rows[1:]] == ["1", "2", "3", "4", "5"]
    res = sam_solve(p, SolverConfig(tol=0, max_iter=2))
    res.trace.write_csv(path)
    assert list(csv.reader(open(path)))[1][3] == ""


def test_beta_for_epsilon_values():
    assert beta_for_epsilon(1.0, 1.0)[0] == 32.0
    assert beta_for_epsilon(2.0, 0.5)[0] == 256.0
    beta, k = beta_for_epsilon(1.0, 1.0, z_gap=1.0)
    assert k == 15.0
    assert beta_for_epsilon(1.0, 1.0, z_gap=0.0)[1] == 1.0
    with pytest.raises(ValueError):
        beta_for_epsilon(0.0, 1.0)


def test_q_norm_dominates_euclidean(rng):
    p, _ = deblur_params(8, 8)
    sys_ = build_normal(p)
    for _ in range(5):
        v = rng.standard_normal((2, 64))
        q = q_norm_sq(v, sys_)
        assert np.sum(v * v) <= q <= 2 * np.sum(v * v) + 1e-9


def test_rate_bound_holds_on_small_problem():
    p, _ = deblur_params(12, 12)
    sys_ = build_normal(p)
    ref = sam_solve(p, SolverConfig(tol=0, max_iter=20000, record_trace=False), system=sys_)
    psi_star = objective_psi(ref.x, ref.z, p)
    x0 = p.initial_x()
    z0 = p.D.apply(x0)
    res = sam_solve(p, SolverConfig(tol=0, max_iter=300), x0=x0, z0=z0, system=sys_)
    assert convergence_bound_check(res.trace, z0, ref.z, psi_star, sys_)
    bound = convergence_bound([1, 10], z0, ref.z, sys_)
    assert bound[0] / bound[1] == pytest.approx((11 / 2) ** 2)
    assert math.isfinite(psi_star)
