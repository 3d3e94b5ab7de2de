import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eigflow import asymptotics as asy
from eigflow.core import PayoffData, ValueSlice, affine, ball, build_grid, constant, static
from eigflow.dpp import ConvergenceError, DppConfig, solve_parabolic

DISK = ball([0.0, 0.0], 1.0)


@pytest.mark.parametrize("r,c", [(1, 2), (0.5, 1), (2, 0.1), (3, 5)])
def test_radial_barrier_identities(r, c):
    rep = asy.verify_radial_barrier(r, c)
    assert rep["passed"], rep


def test_radial_barrier_constants():
    rep = asy.verify_radial_barrier(1.0, 2.0)
    assert rep["c1"] == 1.0 and rep["c2"] == 0.75 and rep["a_center"] == 0.75
    a, hess, _, _ = asy.radial_barrier(1.0, 2.0)
    assert a(np.array([[1.0, 0.0]]))[0] == 0.0
    lam = np.linalg.eigvalsh(hess(np.array([[0.75, 0.0]])))[0]
    assert lam[-1] == pytest.approx(0.0, abs=1e-15) and lam[0] < 0


def test_radial_barrier_rejects_bad_parameters():
    with pytest.raises(ValueError):
        asy.radial_barrier(0.0, 1.0)


def _slices(grid, values_by_t):
    return [ValueSlice(t, v, grid.epsilon) for t, v in values_by_t]


def test_first_times():
    times = np.array([0.0, 1.0, 2.0, 3.0])
    ok = np.array([[True, False, True, False],
                   [True, True, True, False],
                   [True, False, True, True],
                   [True, True, True, True]])
    assert np.array_equal(asy._first_times(times, ok), [0.0, 3.0, 0.0, 2.0])
    assert np.isinf(asy._first_times(times, ~ok)[3])


def test_initial_data_equal_to_stationary_gives_zero_time():
    grid = build_grid(DISK, 0.1, 0.2)
    pi = affine([1.0, -1.0], 0.2)
    payoff = PayoffData(g=static(pi), u0=pi)
    res = solve_parabolic(DISK, payoff, DppConfig(epsilon=0.2, j=1, T=0.2, resolution=8), keep=1, grid=grid)
    rep = asy.detect_coincidence(res.slices, pi, grid, 0.02)
    assert rep.T_star == 0.0
    fit = asy.fit_decay(res.slices, pi, grid)
    assert fit.coincided and fit.mu is None


def test_below_coincidence_trivial_for_negative_data():
    zero = PayoffData(g=static(constant(0.0)), u0=lambda x: -np.maximum(0, 1 - np.sum(x ** 2, axis=1)))
    res = solve_parabolic(DISK, zero, DppConfig(epsilon=0.2, j=1, T=0.3, resolution=8), keep=1)
    rep = asy.one_sided_coincidence(res.slices, np.zeros(res.grid.size), res.grid, 0.02, "below")
    assert rep.T_star == 0.0


@settings(max_examples=20, deadline=None)
@given(st.floats(0.01, 0.3), st.floats(0.01, 0.3))
def test_coincidence_time_monotone_in_tolerance(t1, t2):
    grid = build_grid(DISK, 0.1, 0.2)
    rng = np.random.default_rng(0)
    slices = []
    for k in range(12):
        v = np.full(grid.size, np.nan)
        v[grid.interior] = math.exp(-0.5 * k) * rng.uniform(0.5, 1.5, len(grid.interior))
        slices.append(ValueSlice(0.1 * k, v, 0.2))
    z = np.zeros(grid.size)
    lo, hi = sorted((t1, t2))
    tight = asy.detect_coincidence(slices, z, grid, lo)
    loose = asy.detect_coincidence(slices, z, grid, hi)
    assert np.all(tight.t_star >= loose.t_star)


def test_fit_decay_recovers_a_known_rate():
    grid = build_grid(DISK, 0.1, 0.2)
    base = np.full(grid.size, np.nan)
    base[grid.interior] = 1.0 - np.sum(grid.points[grid.interior] ** 2, axis=1)
    slices = [ValueSlice(t, 3.0 * math.exp(-2.5 * t) * base, 0.2) for t in np.linspace(0, 2, 21)]
    fit = asy.fit_decay(slices, np.zeros(grid.size), grid)
    assert fit.mu == pytest.approx(2.5, rel=1e-9) and fit.r2 == pytest.approx(1.0)


def test_fit_decay_needs_levels():
    grid = build_grid(DISK, 0.1, 0.2)
    v = np.full(grid.size, np.nan)
    v[grid.interior] = 1.0
    with pytest.raises(ValueError):
        asy.fit_decay([ValueSlice(0.0, v, 0.2), ValueSlice(0.1, v, 0.2)], np.zeros(grid.size), grid)


def test_interval_eigenpair():
    interval = ball([0.5], 0.5)
    est = asy.estimate_principal_eigenvalue(interval, "lambdaN", DppConfig(epsilon=0.02, h=0.02))
    mu, profile = est
    assert mu == pytest.approx(math.pi ** 2, rel=0.15)
    g = build_grid(interval, 0.02, 0.02)
    x = g.points[g.interior, 0]
    assert np.max(np.abs(profile.values[g.interior] - np.sin(np.pi * x))) < 0.05
    dual = asy.estimate_principal_eigenvalue(interval, "lambda1", DppConfig(epsilon=0.02, h=0.02))
    assert dual.mu == mu
    assert np.array_equal(dual.profile.values[g.interior], -profile.values[g.interior])


def test_interval_eigenvalue_with_finite_differences():
    interval = ball([0.5], 0.5)
    est = asy.estimate_principal_eigenvalue(interval, "lambdaN", DppConfig(epsilon=0.05, h=0.05), method="fd")
    assert est.mu == pytest.approx(math.pi ** 2, rel=0.02)


def test_eigenvalue_scales_with_radius():
    small = asy.estimate_principal_eigenvalue(DISK, "lambdaN", DppConfig(epsilon=0.1, h=0.05, resolution=18))
    big = asy.estimate_principal_eigenvalue(ball([0, 0], 2.0), "lambdaN",
                                            DppConfig(epsilon=0.2, h=0.1, resolution=18))
    assert small.mu / big.mu == pytest.approx(4.0, rel=0.2)


def test_eigen_iteration_reports_non_convergence():
    with pytest.raises(ConvergenceError):
        asy.estimate_principal_eigenvalue(DISK, "lambda1", DppConfig(epsilon=0.2, resolution=8), max_iter=5)


def test_lower_bound_check_shapes():
    t = np.linspace(0, 3, 31)
    ok = asy.lower_bound_check(t, 0.7 * np.exp(-2.0 * t), 2.0)
    assert ok["ok"] and ok["k_min"] == pytest.approx(0.7)
    fast = asy.lower_bound_check(t, 0.7 * np.exp(-4.0 * t), 2.0)
    assert not fast["ok"]


def test_halfspace_degenerate_case_is_affine():
    cfg = DppConfig(epsilon=0.2, h=0.1, j=1, T=2.5, resolution=12)
    out = asy.halfspace_scenario(DISK, [0.3, -0.2], 0.1, [1.0, 0.0], -5.0, cfg)
    rep = out["report"]
    assert len(rep.nodes) == len(out["result"].grid.interior)
    assert rep.T_star <= 2.5
    assert out["violations"] <= 0.02 * out["pairs_checked"]
