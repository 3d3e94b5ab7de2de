"""Named experiments run by the command line tool.

Each scenario takes a resolved :class:`~eigflow.cli.RunConfig` and a seed and
returns a :class:`ScenarioResult`: fields to export, a decay curve and a list
of checks carrying their measured numbers and thresholds.  Nothing here
reads the clock, so artifacts depend only on the configuration and the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import asymptotics as asy
from .cli import RunConfig, overlay
from .core import (
    Domain,
    PayoffData,
    ball,
    build_grid,
    constant,
    ellipsoid,
    field_slice,
    static,
)
from .dpp import DppConfig, dpp_update, solve_elliptic, solve_parabolic
from .eig import courant_fischer, eigenvalues_sym, generate_frames, jacobi_eigh, lambda_j
from .envelope import boundary_data, concave_envelope, convex_envelope, directional_envelope_bound
from .fdiff import FdConfig, solve_fd
from . import game


@dataclass
class ScenarioResult:
    fields: list = field(default_factory=list)  # (level label, points, values)
    decay: list = field(default_factory=list)  # (t, gap)
    checks: list = field(default_factory=list)


def check(name: str, passed: bool, **measured) -> dict:
    return {"name": name, "passed": bool(passed), "measured": measured}


def make_domain(cfg: RunConfig) -> Domain:
    d = cfg.domain
    if d.kind == "ellipsoid":
        return ellipsoid(d.center, d.semi_axes)
    return ball(d.center, d.radius)


def dpp_config(cfg: RunConfig, **override) -> DppConfig:
    s = cfg.solver
    kw = dict(epsilon=s.epsilon, j=s.j, T=s.T, resolution=s.resolution,
              h=s.h if s.h > 0 else None, tol=s.tol, max_sweeps=s.max_sweeps,
              sphere_resolution=s.sphere_resolution or None)
    kw.update(override)
    return DppConfig(**kw)


def export_levels(result, count: int) -> list:
    grid = result.grid
    pts = grid.points[grid.interior]
    picks = np.unique(np.rint(np.linspace(0, len(result.slices) - 1, count)).astype(int))
    return [(result.levels[i], pts, result.slices[i].values[grid.interior]) for i in picks]


def _sq(x):
    return np.sum(np.asarray(x) ** 2, axis=1)


def _cos2(x, t=None):
    x = np.asarray(x, dtype=float)
    r2 = np.maximum(_sq(x), 1e-300)
    return (x[:, 0] ** 2 - x[:, 1] ** 2) / r2


# ------------------------------------------------------------------ heat1d

def heat1d(cfg: RunConfig, seed: int) -> ScenarioResult:
    dom = make_domain(cfg)
    if dom.dim != 1:
        raise ValueError("heat1d runs in one dimension")
    lo, hi = dom.bounding_box()
    L = float(hi[0] - lo[0])
    mode = lambda x: np.sin(math.pi * (x[:, 0] - lo[0]) / L)  # noqa: E731
    payoff = PayoffData(g=static(constant(0.0)), u0=mode)
    dc = dpp_config(cfg)
    res = solve_parabolic(dom, payoff, dc, keep=1)
    grid = res.grid
    pts = grid.points[grid.interior]
    mu_exact = (math.pi / L) ** 2
    T = res.slices[-1].t
    exact = math.exp(-mu_exact * T) * mode(pts)
    err = float(np.max(np.abs(res.slices[-1].values[grid.interior] - exact)))
    tol = max(0.05, 5 * dc.epsilon)
    fit = asy.fit_decay(res.slices, np.zeros(grid.size), grid, skip=0.1 * T)
    fd = solve_fd(dom, payoff, FdConfig(h=dc.spacing, j=1, T=T), keep=None)
    fd_last = fd.slices[-1]
    fd_err = float(np.max(np.abs(fd_last.values[fd.grid.interior]
                                 - math.exp(-mu_exact * fd_last.t) * mode(fd.grid.points[fd.grid.interior]))))
    out = ScenarioResult()
    out.fields = export_levels(res, cfg.output.levels)
    out.decay = list(zip(fit.times.tolist(), fit.gaps.tolist()))
    rel = abs(fit.mu - mu_exact) / mu_exact if fit.mu is not None else math.inf
    out.checks = [
        check("dpp_vs_fourier", err <= tol, sup_error=err, tolerance=tol, t=T),
        check("decay_rate", rel <= 0.15, mu=fit.mu, mu_exact=mu_exact, rel_error=rel, r2=fit.r2),
        check("fd_vs_fourier", fd_err <= tol, sup_error=fd_err, tolerance=tol),
    ]
    return out


# ------------------------------------------------------- affine-coincidence

def _affine(cfg: RunConfig, dim: int):
    coeffs = cfg.data.affine if cfg.data.affine else tuple([0.3, -0.2, 0.5, 0.1, -0.1, 0.2][:dim])
    a = np.asarray(coeffs, dtype=float)
    c = cfg.data.affine_const
    return (lambda x: np.asarray(x, dtype=float) @ a + c), a, c


def affine_coincidence(cfg: RunConfig, seed: int) -> ScenarioResult:
    dom = make_domain(cfg)
    N = dom.dim
    center, R = dom.enclosing_ball()
    pi, _, _ = _affine(cfg, N)
    bump = lambda x: 1.0 - _sq(np.asarray(x) - center) / R ** 2  # noqa: E731
    bound = 2 * R ** 2 + 0.5
    eps = cfg.solver.epsilon
    tol = asy.default_tolerance(eps)
    out = ScenarioResult()

    def run(j, sign, side):
        payoff = PayoffData(g=static(pi), u0=lambda x: pi(x) + sign * bump(x))
        res = solve_parabolic(dom, payoff, dpp_config(cfg, j=j), keep=1)
        if side == "both":
            rep = asy.detect_coincidence(res.slices, pi, res.grid, tol, required=2 * R ** 2)
        else:
            rep = asy.one_sided_coincidence(res.slices, pi, res.grid, tol, side, required=2 * R ** 2)
        return res, rep

    j = cfg.solver.j
    side = "both" if 1 < j < N else ("below" if j == 1 else "above")
    res, rep = run(j, 1.0 if side != "above" else -1.0, side)
    times, diffs = asy.gap_matrix(res.slices, pi, res.grid)
    out.fields = export_levels(res, cfg.output.levels)
    out.decay = list(zip(times.tolist(), np.max(np.abs(diffs), axis=1).tolist()))
    out.checks.append(check(f"coincidence_j{j}_{side}", rep.T_star <= bound and not rep.censored,
                            T_star=rep.T_star, bound=bound, tol=tol, horizon=rep.horizon))
    if N >= 2:
        for jj, sign, sd in ((1, 1.0, "below"), (N, -1.0, "above")):
            if jj == j:
                continue
            _, r2 = run(jj, sign, sd)
            out.checks.append(check(f"coincidence_j{jj}_{sd}", r2.T_star <= bound and not r2.censored,
                                    T_star=r2.T_star, bound=bound, tol=tol, horizon=r2.horizon))
    return out


# ------------------------------------------------------------ disk-envelope

def disk_envelope(cfg: RunConfig, seed: int) -> ScenarioResult:
    dom = make_domain(cfg)
    if dom.dim != 2:
        raise ValueError("disk-envelope runs in two dimensions")
    dc = dpp_config(cfg, j=1)
    eps = dc.epsilon
    tol = max(0.05, 5 * eps)
    grid = build_grid(dom, dc.spacing, eps)
    samples = boundary_data(dom, _cos2, dc.spacing)
    low = convex_envelope(dom, samples, grid)
    up = concave_envelope(dom, samples, grid)
    z1 = solve_elliptic(dom, _cos2, dc, initial="min", grid=grid)
    z2 = solve_elliptic(dom, _cos2, dpp_config(cfg, j=2), initial="max", grid=grid)
    I = grid.interior
    e1 = float(np.max(np.abs(z1.slice.values[I] - low.values[I])))
    e2 = float(np.max(np.abs(z2.slice.values[I] - up.values[I])))
    c = dom.interior_point()
    o = grid.nearest(c)[0]
    probes = [c + np.array([0.0, 0.3]), c + np.array([0.2, -0.5])]
    bounds = [directional_envelope_bound(dom, _cos2, p, [0]) for p in probes]
    from .core import interpolate

    zp = interpolate(z1.slice, grid, np.array(probes))
    slack = float(np.max(zp - np.array(bounds)))
    out = ScenarioResult()
    pts = grid.points[I]
    out.fields = [("inf_j1", pts, z1.slice.values[I]), ("inf_j2", pts, z2.slice.values[I])]
    out.checks = [
        check("elliptic_j1_vs_convex_envelope", e1 <= tol, sup_error=e1, tolerance=tol, sweeps=z1.sweeps),
        check("elliptic_jN_vs_concave_envelope", e2 <= tol, sup_error=e2, tolerance=tol, sweeps=z2.sweeps),
        check("envelope_center_values", abs(low.values[o] + 1) <= 0.01 and abs(up.values[o] - 1) <= 0.01,
              convex=float(low.values[o]), concave=float(up.values[o])),
        check("sectional_upper_bound", slack <= tol, bounds=bounds, values=zp.tolist(), excess=slack),
    ]
    return out


# ------------------------------------------------------------- eigen-decay

INITIAL_PROFILES = {
    "parabola": lambda x: -(1.0 - _sq(x)),
    "quartic": lambda x: -(1.0 - _sq(x)) ** 2,
    "tilted": lambda x: -(1.0 - _sq(x)) * (1.0 + 0.5 * x[:, 0]),
}


def eigen_decay(cfg: RunConfig, seed: int) -> ScenarioResult:
    dom = make_domain(cfg)
    center, R = dom.enclosing_ball()
    dc = dpp_config(cfg, j=1)
    zero = static(constant(0.0))
    fits, first = {}, None
    skip = 0.25 * dc.T
    for name, f in INITIAL_PROFILES.items():
        u0 = (lambda f: lambda x: np.minimum(f((np.asarray(x) - center) / R), 0.0))(f)
        res = solve_parabolic(dom, PayoffData(g=zero, u0=u0), dc, keep=1)
        fits[name] = asy.fit_decay(res.slices, np.zeros(res.grid.size), res.grid, skip=skip)
        if first is None:
            first = res
    e1 = asy.estimate_principal_eigenvalue(dom, "lambda1", dc, grid=first.grid)
    eN = asy.estimate_principal_eigenvalue(dom, "lambdaN", dc, grid=first.grid)
    big = Domain(dom.kind, tuple(tuple(2 * np.asarray(c)) for c in dom.centers),
                 tuple(2 * r for r in dom.radii))
    dc2 = DppConfig(2 * dc.epsilon, 1, dc.T, dc.resolution, dc.seed, 2 * dc.spacing)
    e_big = asy.estimate_principal_eigenvalue(big, "lambda1", dc2)
    mus = {k: f.mu for k, f in fits.items()}
    ok_fits = all(f.mu is not None and f.mu > 0 and f.r2 >= asy.R2_MIN for f in fits.values())
    vals = [m for m in mus.values() if m is not None]
    pair = max(abs(a - b) / min(a, b) for a in vals for b in vals) if len(vals) == 3 else math.inf
    vs_eig = max(abs(m - e1.mu) / e1.mu for m in vals) if vals else math.inf
    I = first.grid.interior
    dual = float(np.max(np.abs(e1.profile.values[I] + eN.profile.values[I])))
    psi = eN.profile
    sand = asy.sandwich_check(first.slices, np.zeros(first.grid.size), first.grid, psi, e1.mu,
                              slack=asy.default_tolerance(dc.epsilon))
    ratio = e1.mu / e_big.mu
    out = ScenarioResult()
    out.fields = export_levels(first, cfg.output.levels)
    fit0 = next(iter(fits.values()))
    out.decay = list(zip(fit0.times.tolist(), fit0.gaps.tolist()))
    out.checks = [
        check("fits_accepted", ok_fits, mu=mus, r2={k: f.r2 for k, f in fits.items()}),
        check("fits_pairwise", pair <= 0.2, max_rel_spread=pair),
        check("fits_vs_eigenvalue", vs_eig <= 0.2, mu_eigen=e1.mu, max_rel_error=vs_eig),
        check("duality", dual <= 1e-12 and abs(e1.mu - eN.mu) <= 1e-12 * e1.mu,
              profile_gap=dual, mu_lambda1=e1.mu, mu_lambdaN=eN.mu),
        check("radius_scaling", abs(ratio - 4.0) <= 0.8, ratio=ratio),
        check("sandwich", sand["ok"], **sand),
    ]
    return out


# --------------------------------------------------------- segment-example

def segment_example(cfg: RunConfig, seed: int) -> ScenarioResult:
    dom = make_domain(cfg)
    if dom.dim != 2 or dom.kind != "ball":
        raise ValueError("segment-example runs on a disk")
    c, R = dom.enclosing_ball()
    g = lambda x, t: np.abs(np.asarray(x)[:, 1] - c[1])  # noqa: E731
    z = lambda x: np.abs(np.asarray(x)[:, 1] - c[1])  # noqa: E731
    payoff = PayoffData(g=g, u0=lambda x: 1.0 - _sq((np.asarray(x) - c) / R) + z(x))
    base = cfg.solver.epsilon
    out = ScenarioResult()
    cs, offs = [], []
    for k, eps in enumerate((base, 0.7 * base, 0.5 * base)):
        dc = dpp_config(cfg, epsilon=eps, h=eps / 2, j=1)
        res = solve_parabolic(dom, payoff, dc, keep=1)
        grid = res.grid
        P = grid.points[grid.interior] - c
        seg = (np.abs(P[:, 1]) < 1e-9) & (np.abs(P[:, 0]) <= 0.5 * R)
        _, diffs = asy.gap_matrix(res.slices, z, grid)
        seg_min = diffs[:, seg].min(axis=1)
        cs.append(float(seg_min.min()))
        tol = asy.default_tolerance(eps)
        rep = asy.detect_coincidence(res.slices, z, grid, tol, mask=np.abs(P[:, 1]) >= 0.3 * R)
        offs.append((eps, rep.T_star, tol))
        if k == 2:
            out.fields = export_levels(res, cfg.output.levels)
            out.decay = list(zip(res.times.tolist(), seg_min.tolist()))
            section = ball([c[0]], R)
            mu_hat = asy.estimate_principal_eigenvalue(section, "lambdaN", DppConfig(eps, 1)).mu
            lb = asy.lower_bound_check(res.times, seg_min, mu_hat, skip=0.5)
    seg_pts = [c + np.array([s, 0.0]) for s in (-0.5 * R, 0.0, 0.5 * R)]
    zd = [directional_envelope_bound(dom, g, p, [0]) for p in seg_pts]
    out.checks = [
        check("segment_positive", min(cs) > 0, c=cs),
        check("segment_stable", min(cs) > 0 and min(cs) / max(cs) >= 0.5,
              ratio=min(cs) / max(cs) if max(cs) > 0 else 0.0),
        check("off_segment_coincide", all(np.isfinite(T) for _, T, _ in offs),
              T_star=[T for _, T, _ in offs], tol=[t for _, _, t in offs]),
        check("section_envelope_zero", max(abs(v) for v in zd) <= 1e-12, values=zd),
        check("exponential_lower_bound", lb["ok"], mu_hat=mu_hat, **lb),
    ]
    return out


# ---------------------------------------------------------------- halfspace

def halfspace(cfg: RunConfig, seed: int) -> ScenarioResult:
    dom = make_domain(cfg)
    N = dom.dim
    _, coeffs, const = _affine(cfg, N)
    w = np.eye(N)[0]
    theta = cfg.data.halfspace_offset
    dc = dpp_config(cfg, j=1)
    tol = asy.default_tolerance(dc.epsilon)
    main = asy.halfspace_scenario(dom, coeffs, const, w, theta, dc, tol=tol)
    tight = asy.halfspace_scenario(dom, coeffs, const, w, theta, dc, tol=tol / 2)
    rep = main["report"]
    res = main["result"]
    pts = res.grid.points[rep.nodes]
    far_side = pts @ w > theta + 0.5
    center, R = dom.enclosing_ball()
    whole = asy.halfspace_scenario(dom, coeffs, const, w, float(center @ w - 2 * R), dc, tol=tol)
    out = ScenarioResult()
    out.fields = export_levels(res, cfg.output.levels)
    pi = lambda x: np.asarray(x) @ coeffs + const  # noqa: E731
    times, diffs = asy.gap_matrix(res.slices, pi, res.grid)
    inside = res.grid.points[res.grid.interior] @ w > theta
    out.decay = list(zip(times.tolist(), np.max(np.maximum(diffs[:, inside], 0.0), axis=1).tolist()))
    frac = lambda d: d["violations"] / max(d["pairs_checked"], 1)  # noqa: E731
    out.checks = [
        check("far_side_coincides", bool(np.all(np.isfinite(rep.t_star[far_side]))),
              T_star_far=float(np.max(rep.t_star[far_side])), censored_nodes=int(rep.never.sum())),
        check("monotone_along_w", frac(main) <= 0.02 and frac(tight) <= 0.02,
              violations=main["violations"], violations_tight=tight["violations"],
              pairs=main["pairs_checked"]),
        check("degenerate_halfspace", whole["report"].T_star <= 2 * R ** 2 + 0.5,
              T_star=whole["report"].T_star),
    ]
    return out


# -------------------------------------------------------------- game-vs-dpp

def game_vs_dpp(cfg: RunConfig, seed: int) -> ScenarioResult:
    dom = make_domain(cfg)
    if dom.dim != 2:
        raise ValueError("game-vs-dpp runs in two dimensions")
    center, R = dom.enclosing_ball()
    dc = dpp_config(cfg, j=1)
    eps = dc.epsilon
    u0 = lambda x: (x[:, 0] - center[0]) ** 2 - (x[:, 1] - center[1]) ** 2 + 0.3 * x[:, 0]  # noqa: E731
    g = lambda x, t: _cos2(np.asarray(x) - center)  # noqa: E731
    payoff = PayoffData(g=g, u0=u0)
    res = solve_parabolic(dom, payoff, dc, keep=1)
    grid = res.grid
    t0 = res.slices[-1].t
    frames = dc.frames(2)
    smin, smax = game.value_strategy_pair(res, frames, payoff=payoff)
    runs = cfg.game.runs
    agree = []
    for i, off in enumerate([(0, 0), (0.5, 0), (0, -0.5), (0.3, 0.4), (-0.6, 0.2)]):
        node = grid.nearest(center + R * np.asarray(off))[0]
        x0 = grid.points[node]
        est = game.estimate_value(dom, payoff, smin, smax, (x0, t0), eps, runs, seed + i)
        dpp_val = float(res.slices[-1].values[node])
        agree.append({"x0": x0.tolist(), "dpp": dpp_val, "game": est.mean, "radius": est.radius,
                      "tol": max(0.02, 3 * est.radius), "ok": abs(est.mean - dpp_val) <= max(0.02, 3 * est.radius)})
    rnd_max = game.random_maximizer(frames)
    node = grid.nearest(center)[0]
    sub = game.estimate_value(dom, payoff, smin, rnd_max, (grid.points[node], t0), eps, runs, seed + 11)
    sub_bound = float(res.slices[-1].values[node]) + sub.radius + 0.02

    n_diag = cfg.game.diagnostic_runs
    rmin, rmax = game.random_minimizer(frames), game.random_maximizer(frames)
    batch = game.simulate(dom, payoff, rmin, rmax, np.tile(center, (n_diag, 1)), eps, seed + 21)
    mart = game.martingale_diagnostics(batch)
    tail = game.exit_tail(batch, np.linspace(0.0, 2.0 * R ** 2, 41))
    mean_bound = (R + eps) ** 2 / 2

    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 31])))
    starts = rng.uniform(-1, 1, size=(4 * n_diag, 2))
    starts = center + R * starts[_sq(starts) < 1.0][:n_diag]
    ortho = game.simulate(dom, payoff, game.orthogonal_minimizer(center), rmax, starts, eps, seed + 41)
    d2 = _sq(starts - center)
    allowed = np.ceil((R ** 2 - d2) / eps ** 2 - 1e-9)
    violations = int(np.sum(ortho.tau > allowed))

    lifted_ok = True
    t_long = 40 * dc.dt
    k_max = int(math.ceil(2 * t_long / eps ** 2 - 1e-9))
    for r in range(50):
        x0 = starts[r]
        a = game.play(dom, payoff, rmin, rmax, (x0, None), eps, seed + 51, r)
        b = game.play(dom, payoff, game.lift(rmin), game.lift(rmax), (x0, t_long), eps, seed + 51, r)
        m = min(a.tau, b.tau, k_max - 1) + 1
        lifted_ok &= bool(np.array_equal(a.states[:m], b.states[:m]))
    out = ScenarioResult()
    out.fields = export_levels(res, cfg.output.levels)
    out.checks = [
        check("value_agreement", all(a["ok"] for a in agree), probes=agree),
        check("random_maximizer_suboptimal", sub.mean <= sub_bound, mean=sub.mean, bound=sub_bound),
        check("martingale_identity", mart["identity_ok"] and mart["drift_ok"], **mart),
        check("exit_tail_decay", tail["slope"] < 0 and tail["monotone"] and not tail["censored_report"],
              slope=tail["slope"], fit_points=tail["fit_points"], censored=tail["censored"]),
        check("mean_exit_time", tail["mean_exit_time"] <= mean_bound + 3 * tail["exit_time_stderr"],
              mean=tail["mean_exit_time"], bound=mean_bound, stderr=tail["exit_time_stderr"]),
        check("orthogonal_strategy_bound", violations == 0, trajectories=len(starts), violations=violations,
              exact_matches=int(np.sum(ortho.tau == allowed))),
        check("lifted_strategy_replay", lifted_ok, games=50),
    ]
    return out


# ------------------------------------------------------------- matrix-props

def random_symmetric(rng: np.random.Generator, n: int, count: int) -> np.ndarray:
    a = rng.normal(size=(count, n, n))
    return 0.5 * (a + np.swapaxes(a, 1, 2))


def quadratic_step_errors(dom: Domain, dc: DppConfig, rng: np.random.Generator, count: int):
    """Errors of one DPP step on random quadratics against q + eps^2/2 lambda_j(A)."""
    grid = build_grid(dom, dc.spacing, dc.epsilon)
    frames = dc.frames(dom.dim)
    from .dpp import DppOperator

    op = DppOperator(grid, frames, dc.epsilon)
    worst = 0.0
    for A in random_symmetric(rng, dom.dim, count):
        b = rng.normal(size=dom.dim)
        q = lambda x, A=A, b=b: 0.5 * np.einsum("pi,ij,pj->p", x, A, x) + x @ b  # noqa: E731
        payoff = PayoffData(g=static(q), u0=q)
        prev = field_slice(grid, q, t=dc.dt)
        new = dpp_update(prev, grid, payoff, frames, dc.epsilon, 2 * dc.dt, op=op)
        pts = grid.points[grid.interior]
        target = q(pts) + dc.dt * lambda_j(A, dc.j)
        norm = float(np.linalg.norm(A, 2))
        allow = dc.dt * 0.02 * norm + grid.h ** 2 / 8 * float(np.sum(np.abs(np.diag(A))))
        worst = max(worst, float(np.max(np.abs(new.values[grid.interior] - target))) / allow)
    return worst


def eigenvalue_sum_pairs(rng: np.random.Generator, count: int) -> float:
    """Largest violation of lambda_1(A)+lambda_j(B) <= lambda_j(A+B) <= lambda_N(A)+lambda_j(B)."""
    worst = -math.inf
    for n in range(1, 7):
        k = count // 6 + (1 if n <= count % 6 else 0)
        A, B = random_symmetric(rng, n, k), random_symmetric(rng, n, k)
        la, lb, lab = eigenvalues_sym(A), eigenvalues_sym(B), eigenvalues_sym(A + B)
        lower = la[:, :1] + lb - lab
        upper = lab - (la[:, -1:] + lb)
        worst = max(worst, float(lower.max()), float(upper.max()))
    return worst


def matrix_props(cfg: RunConfig, seed: int) -> ScenarioResult:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 7])))
    worst_sum = eigenvalue_sum_pairs(rng, 1000)
    mats = random_symmetric(rng, 5, 500)
    jac = float(np.max(np.abs(jacobi_eigh(mats)[0] - np.linalg.eigvalsh(mats))))
    cf = 0.0
    for n, j in ((2, 1), (2, 2), (3, 1), (3, 2), (3, 3)):
        fs = generate_frames(n, j, 90 if n == 2 else 256, seed)
        for A in random_symmetric(rng, n, 10):
            cf = max(cf, abs(courant_fischer(A, j, fs) - lambda_j(A, j)) / np.linalg.norm(A, 2))
    dom = make_domain(cfg)
    quad = {}
    for j in range(1, dom.dim + 1):
        quad[j] = quadratic_step_errors(dom, dpp_config(cfg, j=j), rng, 50)
    barrier = {f"{r},{c}": asy.verify_radial_barrier(r, c) for r, c in ((1, 2), (0.5, 1), (2, 0.1))}
    out = ScenarioResult()
    out.checks = [
        check("eigenvalue_sum_inequalities", worst_sum <= 1e-9, worst=worst_sum, pairs=1000),
        check("jacobi_vs_lapack", jac <= 1e-10, max_error=jac),
        check("courant_fischer", cf <= 0.02, max_rel_error=cf),
        check("quadratic_exactness", max(quad.values()) <= 1.0, error_over_allowance=quad),
        check("radial_barrier", all(b["passed"] for b in barrier.values()), **barrier),
    ]
    return out


SCENARIOS = {
    "heat1d": heat1d,
    "affine-coincidence": affine_coincidence,
    "disk-envelope": disk_envelope,
    "eigen-decay": eigen_decay,
    "segment-example": segment_example,
    "halfspace": halfspace,
    "game-vs-dpp": game_vs_dpp,
    "matrix-props": matrix_props,
}

_DEFAULTS = {
    "heat1d": dict(domain=dict(dim=1, center=(0.5,), radius=0.5),
                   solver=dict(epsilon=0.02, h=0.02, T=0.5, resolution=1)),
    "affine-coincidence": dict(domain=dict(dim=3, center=(0.0, 0.0, 0.0)),
                               data=dict(affine=(0.3, -0.2, 0.5), affine_const=0.1),
                               solver=dict(epsilon=0.1, h=0.1, j=2, T=3.0, resolution=16,
                                           sphere_resolution=12)),
    "disk-envelope": dict(solver=dict(epsilon=0.05, h=0.05, resolution=90)),
    "eigen-decay": dict(solver=dict(epsilon=0.1, h=0.05, T=2.0)),
    "segment-example": dict(solver=dict(epsilon=0.1, h=0.05, T=3.0)),
    "halfspace": dict(data=dict(affine=(0.3, -0.2), affine_const=0.1),
                      solver=dict(epsilon=0.1, h=0.05, T=3.0)),
    "game-vs-dpp": dict(solver=dict(epsilon=0.1, h=0.05, T=0.25)),
    "matrix-props": dict(solver=dict(epsilon=0.1, h=0.05, resolution=90)),
}


def default_config(name: str) -> RunConfig:
    """Scenario defaults layered over the global ones."""
    return overlay(RunConfig(), **_DEFAULTS[name])
