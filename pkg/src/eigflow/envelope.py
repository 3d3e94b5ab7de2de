"""Brute-force convex and concave envelopes of boundary data.

The convex envelope at x is the smallest value sum(l_i * g_i) over all
simplices of boundary samples whose barycentric coordinates l of x are
non-negative.  :func:`lower_hull` enumerates every simplex; it is the
reference, kept simple enough to trust, and only practical for a few dozen
samples.  :func:`lifted_envelope` gets the same numbers from the lower facets
of the lifted point cloud (qhull) and is what the grid routines use.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from itertools import combinations

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .core import Domain, Grid, ValueSlice
from .eig import _line_set

FEASIBILITY_TOL = 1e-9
MAX_ENVELOPE_DIM = 3


def workers() -> int:
    return max(1, int(os.environ.get("EIGFLOW_WORKERS", "1")))


def boundary_data(domain: Domain, g, spacing: float) -> tuple[np.ndarray, np.ndarray]:
    """Boundary samples of ``domain`` with spacing <= ``spacing`` and g there."""
    pts = domain.boundary_samples(spacing)
    return pts, np.asarray(g(pts, 1.0), dtype=float)


def _simplices(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """All non-degenerate (N+1)-subsets and their inverse barycentric matrices."""
    m, n = points.shape
    combos = np.array(list(combinations(range(m), n + 1)), dtype=np.int64)
    if len(combos) == 0:
        raise ValueError("not enough boundary samples for a simplex")
    mats = np.ones((len(combos), n + 1, n + 1))
    mats[:, :n, :] = np.transpose(points[combos], (0, 2, 1))
    det = np.linalg.det(mats)
    scale = np.max(np.abs(points)) ** n + 1e-300
    ok = np.abs(det) > 1e-12 * scale
    combos, mats = combos[ok], mats[ok]
    return combos, np.linalg.inv(mats)


def lower_hull(points: np.ndarray, values: np.ndarray, query: np.ndarray,
               chunk: int = 4096) -> np.ndarray:
    """Convex envelope of the samples (points, values) evaluated at ``query``.

    Returns +inf where no simplex contains the query point.
    """
    points = np.asarray(points, dtype=float)
    values = np.asarray(values, dtype=float)
    query = np.atleast_2d(np.asarray(query, dtype=float))
    n = points.shape[1]
    if n > MAX_ENVELOPE_DIM:
        raise ValueError(f"brute-force envelope limited to N <= {MAX_ENVELOPE_DIM}")
    combos, inv = _simplices(points)
    qh = np.vstack([query.T, np.ones(len(query))])  # (n+1, P)
    best = np.full(len(query), np.inf)

    def run(lo: int) -> np.ndarray:
        sl = slice(lo, lo + chunk)
        lam = inv[sl] @ qh  # (c, n+1, P)
        feasible = np.all(lam >= -FEASIBILITY_TOL, axis=1)
        val = np.einsum("ck,ckp->cp", values[combos[sl]], lam)
        val[~feasible] = np.inf
        return val.min(axis=0)

    starts = range(0, len(combos), chunk)
    if workers() > 1:
        with ThreadPoolExecutor(workers()) as ex:
            for part in ex.map(run, starts):
                best = np.minimum(best, part)
    else:
        for lo in starts:
            best = np.minimum(best, run(lo))
    return best


def _pull_inside(points: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Move query points lying outside the sample hull radially onto it.

    Nodes within the sagitta of the sampled boundary fall just outside the
    inscribed polytope; they are evaluated at the nearest hull point on the
    ray towards the sample centroid.
    """
    n = points.shape[1]
    o = points.mean(axis=0)
    if n == 1:
        return np.clip(query, points.min(), points.max())
    hull = ConvexHull(points)
    normal, off = hull.equations[:, :n], hull.equations[:, n]
    d = query - o
    num = -(normal @ o + off)  # > 0 since o is inside
    den = d @ normal.T  # (P, F)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(den > 0, num[None, :] / den, np.inf).min(axis=1)
    s = np.minimum(1.0, s * (1.0 - 1e-12))
    return o + s[:, None] * d


def lifted_envelope(points: np.ndarray, values: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Convex envelope at ``query`` from the lower facets of the lifted samples.

    Query points must lie in the convex hull of ``points``.
    """
    points = np.asarray(points, dtype=float)
    values = np.asarray(values, dtype=float)
    query = np.atleast_2d(np.asarray(query, dtype=float))
    n = points.shape[1]
    lifted = np.column_stack([points, values])
    spread = np.ptp(values)
    if spread <= 1e-12 * max(1.0, np.abs(values).max()):
        return np.full(len(query), values.mean())
    try:
        hull = ConvexHull(lifted)
    except QhullError:
        # affine data: all lifted points are coplanar, the envelope is the plane
        A = np.column_stack([points, np.ones(len(points))])
        coef, *_ = np.linalg.lstsq(A, values, rcond=None)
        return query @ coef[:n] + coef[n]
    eq = hull.equations
    lower = eq[:, n] < -1e-12
    normal, nz, off = eq[lower, :n], eq[lower, n], eq[lower, n + 1]
    planes = -(query @ normal.T + off[None, :]) / nz[None, :]
    return planes.max(axis=1)


def convex_envelope(domain: Domain, samples, grid: Grid) -> ValueSlice:
    """Convex envelope of boundary samples at the interior nodes of ``grid``.

    ``samples`` is a pair (points (M, N), values (M,)).  Non-interior nodes
    hold NaN.
    """
    pts, vals = samples
    nodes = _pull_inside(np.asarray(pts, dtype=float), grid.points[grid.interior])
    env = lifted_envelope(pts, vals, nodes)
    if not np.all(np.isfinite(env)):
        raise AssertionError("interior node not representable by boundary samples")
    out = np.full(grid.size, np.nan)
    out[grid.interior] = env
    return ValueSlice(np.inf, out, grid.epsilon)


def concave_envelope(domain: Domain, samples, grid: Grid) -> ValueSlice:
    pts, vals = samples
    neg = convex_envelope(domain, (pts, -np.asarray(vals, dtype=float)), grid)
    return ValueSlice(np.inf, -neg.values, grid.epsilon)


def section_boundary(domain: Domain, p, axes, resolution: int = 64) -> np.ndarray:
    """Relative-boundary points of the section of ``domain`` through p along ``axes``."""
    p = np.asarray(p, dtype=float)
    if not domain.contains(p[None, :])[0]:
        raise ValueError("empty section: p is not inside the domain")
    axes = list(axes)
    j = len(axes)
    basis = np.eye(domain.dim)[axes]
    if j == 1:
        local = np.array([[1.0], [-1.0]])
    else:
        lines = _line_set(j, resolution, 0)
        local = np.concatenate([lines, -lines])
    dirs = local @ basis
    s = domain.ray_exit(np.broadcast_to(p, dirs.shape), dirs)
    return p + s[:, None] * dirs


def directional_envelope_bound(domain: Domain, g, p, axes, resolution: int = 64) -> float:
    """Concave envelope at p of g restricted to an axis-aligned section through p.

    It bounds the stationary value at p from above.
    """
    p = np.asarray(p, dtype=float)
    bpts = section_boundary(domain, p, axes, resolution)
    vals = np.asarray(g(bpts, 1.0), dtype=float)
    local = (bpts - p)[:, list(axes)]
    env = -lower_hull(local, -vals, np.zeros((1, len(axes))))[0]
    if not np.isfinite(env):
        raise AssertionError("section point not representable")
    return float(env)
