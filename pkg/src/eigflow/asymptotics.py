"""Long-time behaviour: decay fits, principal eigenpairs, coincidence times.

Everything here post-processes lattice slices produced by the DPP or
finite-difference solvers; the only new solver is the renormalized power
iteration behind :func:`estimate_principal_eigenvalue`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import Domain, Grid, PayoffData, ValueSlice, build_grid, constant, static
from .dpp import ConvergenceError, DppConfig, DppOperator, solve_parabolic
from .eig import jacobi_eigh, lambda_j
from .fdiff import FdConfig, _stencil, hessians

R2_MIN = 0.9


def default_tolerance(epsilon: float) -> float:
    """Coincidence tolerance max(0.02, 3*eps)."""
    return max(0.02, 3.0 * epsilon)


def _values(z, grid: Grid) -> np.ndarray:
    if isinstance(z, ValueSlice):
        return z.values[grid.interior]
    if callable(z):
        return np.asarray(z(grid.points[grid.interior]), dtype=float)
    z = np.asarray(z, dtype=float)
    return z[grid.interior] if z.shape == (grid.size,) else z


def gap_matrix(slices, z, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Times (L,) and signed differences u - z at interior nodes (L, I)."""
    zi = _values(z, grid)
    times = np.array([s.t for s in slices])
    diffs = np.stack([s.values[grid.interior] - zi for s in slices])
    return times, diffs


# ------------------------------------------------------------------- decay

@dataclass(frozen=True)
class DecayFit:
    times: np.ndarray
    gaps: np.ndarray
    mu: float | None
    C: float | None
    window: tuple[float, float] | None
    r2: float | None
    coincided: bool = False

    @property
    def accepted(self) -> bool:
        return self.mu is not None


def fit_decay(slices, z, grid: Grid, tol: float = 1e-8, skip: float = 0.0,
              min_levels: int = 10) -> DecayFit:
    """Least-squares fit log d(t) = log C - mu t of the sup-norm gap d(t).

    Levels with t < ``skip`` (the initial transient) or d(t) <= 10*tol are left
    out.  When no level remains the run has already converged and the fit is
    replaced by a coincidence flag.  ``mu`` is only reported for R^2 >= 0.9.
    """
    times, diffs = gap_matrix(slices, z, grid)
    gaps = np.max(np.abs(diffs), axis=1)
    use = (times >= skip) & (gaps > 10.0 * tol)
    if not use.any():
        return DecayFit(times, gaps, None, None, None, None, coincided=True)
    if use.sum() < min_levels:
        raise ValueError(f"only {int(use.sum())} usable levels, need {min_levels}")
    t, y = times[use], np.log(gaps[use])
    slope, intercept = np.polyfit(t, y, 1)
    resid = y - (slope * t + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    ok = r2 >= R2_MIN
    return DecayFit(times, gaps, float(-slope) if ok else None,
                    float(math.exp(intercept)) if ok else None,
                    (float(t[0]), float(t[-1])), float(r2))


# ------------------------------------------------------------- eigenpairs

@dataclass(frozen=True)
class EigenEstimate:
    mu: float
    profile: ValueSlice
    iterations: int
    factors: np.ndarray = field(repr=False)

    def __iter__(self):
        return iter((self.mu, self.profile))


def estimate_principal_eigenvalue(domain: Domain, mode: str, config: DppConfig,
                                  method: str = "dpp", tol: float = 1e-11, profile_tol: float = 1e-8,
                                  max_iter: int = 200_000, grid: Grid | None = None) -> EigenEstimate:
    """Principal rate of the zero-boundary problem by renormalized evolution.

    ``mode="lambda1"`` evolves u_t = lambda_1(D^2 u) from a negative start,
    ``mode="lambdaN"`` evolves u_t = lambda_N(D^2 u) from a positive one.
    After every step the field is rescaled to sup norm 1; the step factor f
    converges and mu = -log(f)/dt.  The iteration runs on the lazy map
    (v + T v)/2, whose factor is (1 + f)/2 for the same eigenvector.  Iteration stops once both f and the
    normalized profile stop changing (``tol`` and ``profile_tol``).  ``method`` picks the DPP step
    (dt = eps^2/2) or the explicit finite-difference step (h from the config).
    """
    N = domain.dim
    if mode not in ("lambda1", "lambdaN"):
        raise ValueError("mode must be 'lambda1' or 'lambdaN'")
    j = 1 if mode == "lambda1" else N
    sign = -1.0 if mode == "lambda1" else 1.0
    zero = PayoffData(g=static(constant(0.0)), u0=constant(0.0))
    if method == "dpp":
        cfg = DppConfig(config.epsilon, j, config.T, config.resolution, config.seed, config.h,
                        config.tol, config.max_sweeps, config.sphere_resolution)
        if grid is None:
            grid = build_grid(domain, cfg.spacing, cfg.epsilon)
        op = DppOperator(grid, cfg.frames(N), cfg.epsilon)
        dt = cfg.dt

        def step(v):
            return op.apply(v, zero, 1.0)
    elif method == "fd":
        h = config.spacing
        fd = FdConfig(h, j)
        dt = fd.time_step(N)
        if grid is None:
            grid = build_grid(domain, h, h)
        stencil = _stencil(grid, grid.interior)

        def step(v):
            H = hessians(v, grid, grid.interior, stencil)
            lam = H[:, 0, 0] if N == 1 else jacobi_eigh(H)[0][:, j - 1]
            return v[grid.interior] + dt * lam
    else:
        raise ValueError("method must be 'dpp' or 'fd'")
    vals = np.full(grid.size, np.nan)
    vals[grid.active] = 0.0
    vals[grid.interior] = sign
    factors = []
    prev_f = math.inf
    for it in range(1, max_iter + 1):
        # lazy step (v + T v)/2: same eigenvector, factor (1 + f)/2, and no
        # sign-alternating modes of modulus close to the principal one
        new = 0.5 * (vals[grid.interior] + step(vals))
        f = float(np.max(np.abs(new)))
        if not f > 0:
            raise ConvergenceError("field collapsed to zero", math.inf, it)
        change = float(np.max(np.abs(new / f - vals[grid.interior])))
        vals[grid.interior] = new / f
        factors.append(f)
        if abs(f - prev_f) < tol and change < profile_tol:
            mu = -math.log(2.0 * f - 1.0) / dt
            prof = vals.copy()
            return EigenEstimate(mu, ValueSlice(math.inf, prof, grid.epsilon), it, np.array(factors))
        prev_f = f
    raise ConvergenceError("decay factor did not stabilize", abs(f - prev_f), max_iter,
                           ValueSlice(math.inf, vals, grid.epsilon))


# -------------------------------------------------------------- barriers

def radial_barrier(r: float, c: float, center=None, dim: int = 2):
    """The barrier a and its analytic Hessian, as two vectorized callables."""
    if not (r > 0 and c > 0):
        raise ValueError("need r > 0 and c > 0")
    y = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
    c1 = c * r / 2.0
    c2 = c1 * r / 2.0 + (c / 2.0) * (r / 2.0) ** 2

    def a(x):
        rho = np.linalg.norm(np.atleast_2d(x) - y, axis=1)
        return np.where(rho >= r / 2.0, c1 * (r - rho), c2 - 0.5 * c * rho ** 2)

    def hess(x):
        d = np.atleast_2d(x) - y
        rho = np.linalg.norm(d, axis=1)
        n = d.shape[1]
        out = np.broadcast_to(-c * np.eye(n), (len(d), n, n)).copy()
        outer = rho >= r / 2.0
        if outer.any():
            u = d[outer] / rho[outer, None]
            proj = np.eye(n) - np.einsum("pi,pk->pik", u, u)
            out[outer] = -(c1 / rho[outer])[:, None, None] * proj
        return out

    return a, hess, c1, c2


def verify_radial_barrier(r: float, c: float, samples=None, dim: int = 2, tol: float = 1e-12) -> dict:
    """Check the explicit radial barrier's identities at sample points."""
    a, hess, c1, c2 = radial_barrier(r, c, dim=dim)
    if samples is None:
        rng = np.random.default_rng(0)
        dirs = rng.normal(size=(400, dim))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        radii = r * np.linspace(0.0, 1.0, 400)
        samples = dirs * radii[:, None]
    x = np.atleast_2d(np.asarray(samples, dtype=float))
    rho = np.linalg.norm(x, axis=1)
    lam_n = lambda_j(hess(x), dim)
    lam_n = np.atleast_1d(lam_n)
    inner, outer = rho < r / 2.0, rho >= r / 2.0
    err_inner = float(np.max(np.abs(-lam_n[inner] - c), initial=0.0))
    err_outer = float(np.max(np.abs(lam_n[outer]), initial=0.0)) if dim > 1 else 0.0
    e = np.eye(dim)[0]
    half = r / 2.0
    cont_value = abs(c1 * (r - half) - (c2 - 0.5 * c * half ** 2))
    cont_slope = abs(-c1 - (-c * half))
    boundary = float(abs(a(r * e[None, :])[0]))
    checks = {
        "c1": c1,
        "c2": c2,
        "a_center": float(a(np.zeros((1, dim)))[0]),
        "inner_error": err_inner,
        "annulus_error": err_outer,
        "continuity_value": cont_value,
        "continuity_slope": cont_slope,
        "boundary_value": boundary,
        "tangential_negative": bool(dim == 1 or np.all(
            np.atleast_1d(lambda_j(hess(x[outer & (rho > 0)]), 1)) < 0)),
    }
    checks["passed"] = bool(max(err_inner, err_outer, cont_value, cont_slope, boundary) <= tol
                            and checks["tangential_negative"]
                            and abs(checks["a_center"] - c2) <= tol)
    return checks


# ------------------------------------------------------------ coincidence

@dataclass(frozen=True)
class CoincidenceReport:
    """Per-node first time after which every computed level is within ``tol``.

    ``t_star`` is ``inf`` for nodes still outside the band at the last level.
    """

    t_star: np.ndarray
    T_star: float
    tol: float
    side: str
    horizon: float
    censored: bool
    nodes: np.ndarray = field(repr=False)

    @property
    def never(self) -> np.ndarray:
        return ~np.isfinite(self.t_star)


def _first_times(times: np.ndarray, ok: np.ndarray) -> np.ndarray:
    L = len(times)
    bad = ~ok
    any_bad = bad.any(axis=0)
    last_bad = L - 1 - np.argmax(bad[::-1], axis=0)
    out = np.where(any_bad, np.inf, times[0])
    fin = any_bad & (last_bad < L - 1)
    out[fin] = times[last_bad[fin] + 1]
    return out


def _report(slices, z, grid, tol, side, mask, required) -> CoincidenceReport:
    times, diffs = gap_matrix(slices, z, grid)
    if side == "both":
        ok = np.abs(diffs) <= tol
    elif side == "below":
        ok = diffs <= tol
    elif side == "above":
        ok = diffs >= -tol
    else:
        raise ValueError("side must be 'below', 'above' or 'both'")
    nodes = grid.interior
    if mask is not None:
        ok, nodes = ok[:, mask], nodes[mask]
    t_star = _first_times(times, ok)
    horizon = float(times[-1])
    T = float(np.max(t_star)) if len(t_star) else 0.0
    return CoincidenceReport(t_star, T, float(tol), side, horizon,
                             bool(required is not None and horizon < required), nodes)


def detect_coincidence(slices, z, grid: Grid, tol: float, mask=None,
                       required: float | None = None) -> CoincidenceReport:
    """Two-sided coincidence |u - z| <= tol.  ``required`` flags short horizons."""
    return _report(slices, z, grid, tol, "both", mask, required)


def one_sided_coincidence(slices, z, grid: Grid, tol: float, side: str, mask=None,
                          required: float | None = None) -> CoincidenceReport:
    """``side="below"`` tests u <= z + tol, ``"above"`` tests u >= z - tol."""
    return _report(slices, z, grid, tol, side, mask, required)


def halfspace_payoff(pi_coeffs, pi_const: float, w, theta: float, bump: float = 1.0):
    """Boundary datum equal to pi on {x.w > theta}, raised linearly below it."""
    a = np.asarray(pi_coeffs, dtype=float)
    w = np.asarray(w, dtype=float)

    def g(x, t):
        x = np.asarray(x, dtype=float)
        return x @ a + pi_const + bump * np.maximum(0.0, theta - x @ w)

    return g


def halfspace_scenario(domain: Domain, pi_coeffs, pi_const: float, w, theta: float,
                       config: DppConfig, u0=None, tol: float | None = None,
                       g=None, jitter_levels: int = 2) -> dict:
    """Below-coincidence with pi on the half-space part of the domain (j = 1).

    Returns the coincidence report restricted to nodes with x.w > theta and a
    monotonicity count of t*(x) along lattice lines parallel to w (w must be a
    coordinate axis for that count).
    """
    w = np.asarray(w, dtype=float)
    pi = lambda x: np.asarray(x, dtype=float) @ np.asarray(pi_coeffs, dtype=float) + pi_const  # noqa: E731
    g = halfspace_payoff(pi_coeffs, pi_const, w, theta) if g is None else g
    if u0 is None:
        u0 = lambda x: pi(x) + 1.0 - np.sum(np.asarray(x) ** 2, axis=1)  # noqa: E731
    payoff = PayoffData(g=g, u0=u0)
    res = solve_parabolic(domain, payoff, config, keep=1)
    grid = res.grid
    tol = default_tolerance(config.epsilon) if tol is None else tol
    pts = grid.points[grid.interior]
    mask = pts @ w > theta
    rep = one_sided_coincidence(res.slices, pi, grid, tol, "below", mask=mask)
    violations, checked = _monotone_violations(grid, rep, w, jitter_levels * config.dt)
    return {"report": rep, "result": res, "violations": violations, "pairs_checked": checked,
            "tol": tol}


def _monotone_violations(grid: Grid, rep: CoincidenceReport, w: np.ndarray, jitter: float):
    axis = np.flatnonzero(np.abs(w) > 1e-12)
    if len(axis) != 1 or abs(abs(w[axis[0]]) - 1) > 1e-12:
        return None, 0
    ax = int(axis[0])
    stride = int(grid.strides[ax]) * int(np.sign(w[ax]))
    where = {int(n): i for i, n in enumerate(rep.nodes)}
    bad = checked = 0
    for i, n in enumerate(rep.nodes):
        nxt = where.get(int(n) + stride)
        if nxt is None:
            continue
        checked += 1
        a, b = rep.t_star[i], rep.t_star[nxt]
        if np.isinf(b) and not np.isinf(a):
            bad += 1
        elif np.isfinite(b) and b > a + jitter:
            bad += 1
    return bad, checked


# --------------------------------------------------------- sandwich / bounds

def sandwich_check(slices, z, grid: Grid, psi: ValueSlice, mu: float, slack: float,
                   floor: float = 0.05) -> dict:
    """u between z - A e^{-mu t} psi and z + B e^{-mu t} psi at all levels.

    ``psi`` is a nonnegative principal profile on the same lattice.  A and B
    are fitted at the first level from nodes where psi >= ``floor``; the check
    at later levels is inflated by ``slack``.
    """
    times, diffs = gap_matrix(slices, z, grid)
    p = np.maximum(psi.values[grid.interior], 0.0)
    sel = p >= floor
    first = diffs[0] * math.exp(mu * times[0])
    A = float(max(0.0, np.max(-first[sel] / p[sel])))
    B = float(max(0.0, np.max(first[sel] / p[sel])))
    env = np.exp(-mu * times)[:, None] * p[None, :]
    lower_violation = float(np.max(-A * env - diffs))
    upper_violation = float(np.max(diffs - B * env))
    return {"A": A, "B": B, "lower_violation": lower_violation,
            "upper_violation": upper_violation,
            "ok": bool(lower_violation <= slack and upper_violation <= slack)}


def lower_bound_check(times, gaps, mu_hat: float, skip: float = 0.0, rate_slack: float = 0.2) -> dict:
    """Is gap(t) >= k e^{-mu_hat t} with some k > 0 over the horizon?

    k(t) = gap(t) e^{mu_hat t}; the check asks k > 0 throughout and that k does
    not decay faster than a ``rate_slack`` fraction of mu_hat would allow.
    """
    times = np.asarray(times, dtype=float)
    gaps = np.asarray(gaps, dtype=float)
    use = times >= skip
    t, g = times[use], gaps[use]
    k = g * np.exp(mu_hat * t)
    k_min = float(np.min(k))
    span = float(t[-1] - t[0])
    allowed = math.exp(-rate_slack * mu_hat * span)
    ratio = float(k[-1] / k[0]) if k[0] > 0 else 0.0
    return {"k_min": k_min, "k_first": float(k[0]), "k_last": float(k[-1]),
            "ratio": ratio, "allowed_ratio": allowed,
            "ok": bool(k_min > 0 and ratio >= allowed)}
