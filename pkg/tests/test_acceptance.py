"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``criterion NN PASS|FAIL`` line through the
``report`` fixture; the terminal summary repeats them in order.
"""

import time

import numpy as np
import pytest

from eigflow import asymptotics as asy
from eigflow.cli import run_scenario
from eigflow.scenarios import (
    SCENARIOS,
    default_config,
    dpp_config,
    eigenvalue_sum_pairs,
    make_domain,
    quadratic_step_errors,
)

pytestmark = pytest.mark.slow

_CACHE = {}


def scenario(name, seed=0):
    if name not in _CACHE:
        start = time.perf_counter()
        out = SCENARIOS[name](default_config(name), seed)
        _CACHE[name] = (out, time.perf_counter() - start)
    return _CACHE[name]


def checks(name):
    out, _ = scenario(name)
    return {c["name"]: c for c in out.checks}


def test_01_heat_reduction(report):
    out, secs = scenario("heat1d")
    c = {x["name"]: x for x in out.checks}
    m1, m2 = c["dpp_vs_fourier"]["measured"], c["decay_rate"]["measured"]
    ok = c["dpp_vs_fourier"]["passed"] and c["decay_rate"]["passed"] and secs < 30
    report(1, "1D heat reduction", ok,
           f"sup_err={m1['sup_error']:.2e} tol={m1['tolerance']} mu={m2['mu']:.4f} "
           f"rel={m2['rel_error']:.3f} runtime={secs:.1f}s")
    assert ok


def test_02_quadratic_exactness(report):
    cfg = default_config("matrix-props")
    dom = make_domain(cfg)
    rng = np.random.default_rng(20)
    worst = {j: quadratic_step_errors(dom, dpp_config(cfg, j=j, resolution=90), rng, 50) for j in (1, 2)}
    ok = max(worst.values()) <= 1.0
    report(2, "quadratic exactness", ok, f"error/allowance={worst} (50 quadratics each, res 90)")
    assert ok


def test_03_eigenvalue_inequalities(report):
    worst = eigenvalue_sum_pairs(np.random.default_rng(30), 1000)
    ok = worst <= 1e-9
    report(3, "eigenvalue sum inequalities", ok, f"worst violation={worst:.2e} over 1000 pairs")
    assert ok


def test_04_envelope_agreement(report):
    out, secs = scenario("disk-envelope")
    c = {x["name"]: x for x in out.checks}
    a, b = c["elliptic_j1_vs_convex_envelope"], c["elliptic_jN_vs_concave_envelope"]
    ok = a["passed"] and b["passed"] and secs < 300
    report(4, "envelope agreement", ok,
           f"j=1 err={a['measured']['sup_error']:.4f} j=2 err={b['measured']['sup_error']:.4f} "
           f"tol={a['measured']['tolerance']} runtime={secs:.1f}s")
    assert ok


def test_05_exponential_stabilization(report):
    c = checks("eigen-decay")
    names = ("fits_accepted", "fits_pairwise", "fits_vs_eigenvalue")
    ok = all(c[n]["passed"] for n in names)
    m = c["fits_accepted"]["measured"]
    mus = {k: round(v, 4) for k, v in m["mu"].items()}
    r2 = {k: round(v, 4) for k, v in m["r2"].items()}
    report(5, "exponential stabilization", ok,
           f"mu={mus} r2={r2} spread={c['fits_pairwise']['measured']['max_rel_spread']:.3f} "
           f"vs_eigen={c['fits_vs_eigenvalue']['measured']['max_rel_error']:.3f} "
           f"mu_eigen={c['fits_vs_eigenvalue']['measured']['mu_eigen']:.4f}")
    assert ok


def test_06_finite_time_coincidence(report):
    c = checks("affine-coincidence")
    wanted = ("coincidence_j2_both", "coincidence_j1_below", "coincidence_j3_above")
    ok = all(c[n]["passed"] for n in wanted)
    T = {n: round(c[n]["measured"]["T_star"], 4) for n in wanted}
    report(6, "finite-time coincidence", ok,
           f"T*={T} bound={c[wanted[0]]['measured']['bound']} tol={c[wanted[0]]['measured']['tol']:.2f}")
    assert ok


def test_07_game_dpp_agreement(report):
    c = checks("game-vs-dpp")
    wanted = ("value_agreement", "martingale_identity", "exit_tail_decay")
    ok = all(c[n]["passed"] for n in wanted)
    probes = c["value_agreement"]["measured"]["probes"]
    worst = max(abs(p["game"] - p["dpp"]) / p["tol"] for p in probes)
    mart = c["martingale_identity"]["measured"]
    report(7, "game vs DPP agreement", ok,
           f"worst |game-dpp|/tol={worst:.3f} martingale gap={mart['gap']:.2e} "
           f"(4se={4 * mart['pooled_stderr']:.2e}) tail slope={c['exit_tail_decay']['measured']['slope']:.3f}")
    assert ok


def test_08_affine_strategy_bound(report):
    c = checks("game-vs-dpp")["orthogonal_strategy_bound"]
    m = c["measured"]
    ok = c["passed"] and m["trajectories"] >= 10000
    report(8, "orthogonal strategy exit bound", ok,
           f"violations={m['violations']} of {m['trajectories']} (exact ceil matches={m['exact_matches']})")
    assert ok


def test_09_segment_example(report):
    c = checks("segment-example")
    wanted = ("segment_positive", "segment_stable", "off_segment_coincide")
    ok = all(c[n]["passed"] for n in wanted)
    report(9, "segment example", ok,
           f"c over eps levels={[round(v, 4) for v in c['segment_positive']['measured']['c']]} "
           f"ratio={c['segment_stable']['measured']['ratio']:.3f} "
           f"off-segment T*={[round(v, 3) for v in c['off_segment_coincide']['measured']['T_star']]}")
    assert ok


def test_10_radial_barrier(report):
    reps = {(r, c): asy.verify_radial_barrier(r, c, tol=1e-12) for r, c in ((1, 2), (0.5, 1), (2, 0.1))}
    ok = all(v["passed"] for v in reps.values())
    report(10, "radial barrier identities", ok, f"cases={list(reps)} all within 1e-12")
    assert ok


def test_11_determinism(report, tmp_path):
    diffs = []
    for name in SCENARIOS:
        dirs = [tmp_path / f"{name}-{k}" for k in (0, 1)]
        codes = [run_scenario(name, None, d, seed=7) for d in dirs]
        a = sorted(p.name for p in dirs[0].iterdir())
        b = sorted(p.name for p in dirs[1].iterdir())
        if codes[0] != codes[1] or a != b:
            diffs.append(name)
            continue
        if any((dirs[0] / f).read_bytes() != (dirs[1] / f).read_bytes() for f in a):
            diffs.append(name)
    ok = not diffs
    report(11, "determinism", ok, f"{len(SCENARIOS)} scenarios run twice, differing={diffs}")
    assert ok
