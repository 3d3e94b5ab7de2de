"""Domains, lattices, payoff data and value slices shared by every solver.

A :class:`Grid` is a uniform Cartesian lattice aligned with the integer
multiples of ``h``.  Nodes are classified analytically against the domain:
``INTERIOR`` (inside the open domain), ``STRIP`` (outside, within the strip
width of the closure) and ``FAR`` (everything else, never read).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

INTERIOR, STRIP, FAR = 0, 1, 2
MAX_DIM = 6

ScalarField = Callable[[np.ndarray], np.ndarray]
TimeField = Callable[[np.ndarray, float], np.ndarray]


def _as_points(x, dim: int) -> np.ndarray:
    pts = np.asarray(x, dtype=float)
    if pts.ndim == 0:
        pts = pts.reshape(1, 1)
    elif pts.ndim == 1:
        pts = pts.reshape(-1, dim) if dim == 1 and pts.shape[0] != 1 else pts.reshape(1, -1)
    if pts.shape[-1] != dim:
        raise ValueError(f"points have dimension {pts.shape[-1]}, expected {dim}")
    return pts


@dataclass(frozen=True)
class Domain:
    """Bounded open convex domain with an exact membership test.

    ``kind`` is one of ``"ball"``, ``"ellipsoid"`` or ``"intersection"``
    (intersection of balls).  For balls and intersections ``radii`` holds one
    radius per center; for an ellipsoid it holds the N semi-axes of the single
    (axis-aligned) ellipsoid.
    """

    kind: str
    centers: tuple[tuple[float, ...], ...]
    radii: tuple[float, ...]

    def __post_init__(self):
        if self.kind not in ("ball", "ellipsoid", "intersection"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if not self.centers:
            raise ValueError("domain needs at least one center")
        dims = {len(c) for c in self.centers}
        if len(dims) != 1:
            raise ValueError("centers have inconsistent dimensions")
        dim = dims.pop()
        if not 1 <= dim <= MAX_DIM:
            raise ValueError(f"dimension must be in 1..{MAX_DIM}, got {dim}")
        if any(r <= 0 for r in self.radii):
            raise ValueError("radii / semi-axes must be positive")
        if self.kind == "ellipsoid":
            if len(self.centers) != 1 or len(self.radii) != dim:
                raise ValueError("an ellipsoid has one center and N semi-axes")
        elif len(self.radii) != len(self.centers):
            raise ValueError("one radius per center is required")
        if self.kind == "intersection" and not self._has_interior():
            raise ValueError("intersection of balls is empty")

    @property
    def dim(self) -> int:
        return len(self.centers[0])

    @property
    def _c(self) -> np.ndarray:
        return np.asarray(self.centers, dtype=float)

    @property
    def _r(self) -> np.ndarray:
        return np.asarray(self.radii, dtype=float)

    def _has_interior(self) -> bool:
        p = self.interior_point()
        return bool(self.contains(p[None, :])[0])

    def interior_point(self) -> np.ndarray:
        """A point well inside the domain (used as a ray-casting origin)."""
        if self.kind != "intersection":
            return self._c[0].copy()
        from scipy.optimize import minimize

        c, r = self._c, self._r

        def worst_margin(p):
            return float(np.max(np.linalg.norm(c - p, axis=1) - r))

        res = minimize(worst_margin, c.mean(axis=0), method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 20000})
        return np.asarray(res.x, dtype=float)

    def contains(self, x) -> np.ndarray:
        pts = _as_points(x, self.dim)
        if self.kind == "ellipsoid":
            q = np.sum(((pts - self._c[0]) / self._r) ** 2, axis=1)
            return q < 1.0
        d2 = np.sum((pts[:, None, :] - self._c[None, :, :]) ** 2, axis=2)
        return np.all(d2 < self._r[None, :] ** 2, axis=1)

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        if self.kind == "ellipsoid":
            return self._c[0] - self._r, self._c[0] + self._r
        lo = np.max(self._c - self._r[:, None], axis=0)
        hi = np.min(self._c + self._r[:, None], axis=0)
        return lo, hi

    def enclosing_ball(self) -> tuple[np.ndarray, float]:
        if self.kind == "ellipsoid":
            return self._c[0].copy(), float(self._r.max())
        i = int(np.argmin(self._r))
        return self._c[i].copy(), float(self._r[i])

    def distance(self, x) -> np.ndarray:
        """Euclidean distance to the closure of the domain (0 inside)."""
        pts = _as_points(x, self.dim)
        if self.kind == "ball":
            return np.maximum(np.linalg.norm(pts - self._c[0], axis=1) - self._r[0], 0.0)
        if self.kind == "ellipsoid":
            return _ellipsoid_distance(pts - self._c[0], self._r)
        return _intersection_distance(pts, self._c, self._r)

    def ray_exit(self, p, d) -> np.ndarray:
        """Distance s > 0 with p + s d on the boundary, for p inside and unit d."""
        p = _as_points(p, self.dim)
        d = _as_points(d, self.dim)
        if self.kind == "ellipsoid":
            a = (p - self._c[0]) / self._r
            b = d / self._r
            return _ray_sphere(a, b, 1.0)
        out = np.full(max(len(p), len(d)), np.inf)
        for c, r in zip(self._c, self._r):
            out = np.minimum(out, _ray_sphere(p - c, d, r))
        return out

    def boundary_samples(self, spacing: float) -> np.ndarray:
        """Points on the boundary with neighbor spacing at most ``spacing``."""
        n = self.dim
        o = self.interior_point()
        if n == 1:
            dirs = np.array([[-1.0], [1.0]])
        elif n == 2:
            lo, hi = self.bounding_box()
            m = max(8, int(math.ceil(math.pi * float(np.sum(hi - lo)) / 2 / spacing)))
            while True:
                ang = 2.0 * math.pi * np.arange(m) / m
                dirs = np.column_stack([np.cos(ang), np.sin(ang)])
                pts = o + self.ray_exit(np.broadcast_to(o, dirs.shape), dirs)[:, None] * dirs
                gaps = np.linalg.norm(pts - np.roll(pts, 1, axis=0), axis=1)
                if gaps.max() <= spacing:
                    return pts
                m = int(math.ceil(m * gaps.max() / spacing)) + 1
        else:
            _, rad = self.enclosing_ball()
            area = 4.0 * math.pi * rad ** (n - 1)
            m = max(32, int(math.ceil(2.0 * area / spacing ** (n - 1))))
            dirs = fibonacci_directions(n, m)
        s = self.ray_exit(np.broadcast_to(o, dirs.shape), dirs)
        return o + s[:, None] * dirs


def ball(center, radius: float) -> Domain:
    c = tuple(float(v) for v in np.atleast_1d(center))
    return Domain("ball", (c,), (float(radius),))


def ellipsoid(center, semi_axes) -> Domain:
    c = tuple(float(v) for v in np.atleast_1d(center))
    return Domain("ellipsoid", (c,), tuple(float(a) for a in semi_axes))


def intersection_of_balls(centers, radii) -> Domain:
    cs = tuple(tuple(float(v) for v in np.atleast_1d(c)) for c in centers)
    return Domain("intersection", cs, tuple(float(r) for r in radii))


def fibonacci_directions(n: int, m: int) -> np.ndarray:
    """Quasi-uniform unit vectors on the sphere in R^n (n >= 2)."""
    if n == 2:
        ang = 2.0 * math.pi * np.arange(m) / m
        return np.column_stack([np.cos(ang), np.sin(ang)])
    if n == 3:
        k = np.arange(m) + 0.5
        z = 1.0 - 2.0 * k / m
        phi = math.pi * (1.0 + math.sqrt(5.0)) * k
        r = np.sqrt(1.0 - z * z)
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    from scipy.stats import norm, qmc

    u = qmc.Halton(d=n, scramble=False).random(m + 1)[1:]
    g = norm.ppf(np.clip(u, 1e-12, 1 - 1e-12))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _ray_sphere(a: np.ndarray, b: np.ndarray, r: float) -> np.ndarray:
    # |a + s b|^2 = r^2, positive root
    bb = np.sum(b * b, axis=1)
    ab = np.sum(a * b, axis=1)
    cc = np.sum(a * a, axis=1) - r * r
    disc = np.maximum(ab * ab - bb * cc, 0.0)
    return (-ab + np.sqrt(disc)) / bb


def _ellipsoid_distance(y: np.ndarray, a: np.ndarray) -> np.ndarray:
    out = np.zeros(len(y))
    outside = np.sum((y / a) ** 2, axis=1) > 1.0
    if not outside.any():
        return out
    yo = y[outside]
    a2 = a * a
    t = np.zeros(len(yo))
    # f(t) = sum (a_i y_i / (a_i^2 + t))^2 - 1 is convex decreasing; Newton from 0 is monotone.
    for _ in range(100):
        den = a2 + t[:, None]
        f = np.sum((a * yo / den) ** 2, axis=1) - 1.0
        df = -2.0 * np.sum(a2 * yo * yo / den ** 3, axis=1)
        step = f / df
        t = t - step
        if np.all(np.abs(step) <= 1e-15 * (1.0 + t)):
            break
    proj = a2 * yo / (a2 + t[:, None])
    out[outside] = np.linalg.norm(yo - proj, axis=1)
    return out


def _intersection_distance(pts: np.ndarray, c: np.ndarray, r: np.ndarray) -> np.ndarray:
    # Dykstra's alternating projections onto the balls.
    x = pts.copy()
    incr = np.zeros((len(c),) + pts.shape)
    for _ in range(2000):
        x_old = x
        for i in range(len(c)):
            y = x + incr[i]
            d = y - c[i]
            nrm = np.linalg.norm(d, axis=1, keepdims=True)
            scale = np.where(nrm > r[i], r[i] / np.maximum(nrm, 1e-300), 1.0)
            proj = c[i] + d * scale
            incr[i] = y - proj
            x = proj
        if np.max(np.abs(x - x_old), initial=0.0) < 1e-13:
            break
    return np.linalg.norm(pts - x, axis=1)


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform lattice with interior / strip / far node classification."""

    domain: Domain
    h: float
    epsilon: float
    strip_width: float
    lower: np.ndarray
    shape: tuple[int, ...]
    kind: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @cached_property
    def points(self) -> np.ndarray:
        axes = [self.lower[i] + self.h * np.arange(self.shape[i]) for i in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        pts.flags.writeable = False
        return pts

    @cached_property
    def interior(self) -> np.ndarray:
        return np.flatnonzero(self.kind == INTERIOR)

    @cached_property
    def strip(self) -> np.ndarray:
        return np.flatnonzero(self.kind == STRIP)

    @cached_property
    def active(self) -> np.ndarray:
        return np.flatnonzero(self.kind != FAR)

    @cached_property
    def strides(self) -> np.ndarray:
        s = np.ones(self.dim, dtype=np.int64)
        for i in range(self.dim - 2, -1, -1):
            s[i] = s[i + 1] * self.shape[i + 1]
        return s

    def nearest(self, x) -> np.ndarray:
        """Flat index of the nearest lattice node."""
        pts = _as_points(x, self.dim)
        idx = np.rint((pts - self.lower) / self.h).astype(np.int64)
        if np.any(idx < 0) or np.any(idx >= np.asarray(self.shape)):
            raise ValueError("point outside grid coverage")
        return idx @ self.strides

    def interpolation_weights(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Corner indices and multilinear weights, each of shape (P, 2**N)."""
        pts = _as_points(x, self.dim)
        rel = (pts - self.lower) / self.h
        shape = np.asarray(self.shape)
        base = np.floor(rel).astype(np.int64)
        base = np.clip(base, 0, shape - 2)
        frac = rel - base
        if np.any(frac < -1e-9) or np.any(frac > 1.0 + 1e-9):
            raise ValueError("interpolation point outside grid coverage")
        frac = np.clip(frac, 0.0, 1.0)
        n = self.dim
        corners = 1 << n
        idx = np.empty((len(pts), corners), dtype=np.int64)
        w = np.empty((len(pts), corners))
        for c in range(corners):
            bits = np.array([(c >> (n - 1 - i)) & 1 for i in range(n)])
            idx[:, c] = (base + bits) @ self.strides
            w[:, c] = np.prod(np.where(bits == 1, frac, 1.0 - frac), axis=1)
        return idx, w


def build_grid(domain: Domain, h: float, epsilon: float, strip_width: float | None = None) -> Grid:
    """Lattice covering the domain plus its boundary strip.

    The default strip width is ``epsilon + h*sqrt(N)``: wide enough for the
    DPP's ``x +- epsilon*v`` probes, the interpolation corners around them, and
    the diagonal stencil of the discrete Hessian.
    """
    n = domain.dim
    if not 1 <= n <= MAX_DIM:
        raise ValueError(f"dimension must be in 1..{MAX_DIM}")
    if not (h > 0 and epsilon > 0):
        raise ValueError("h and epsilon must be positive")
    if h > epsilon * (1 + 1e-12):
        raise ValueError(f"grid spacing h={h} exceeds epsilon={epsilon}")
    width = epsilon + h * math.sqrt(n) if strip_width is None else float(strip_width)
    if width < epsilon:
        raise ValueError("strip width must be at least epsilon")
    lo, hi = domain.bounding_box()
    pad = width + h
    ilo = np.floor((lo - pad) / h - 1e-9).astype(np.int64)
    ihi = np.ceil((hi + pad) / h + 1e-9).astype(np.int64)
    shape = tuple(int(v) for v in ihi - ilo + 1)
    lower = ilo * h
    axes = [lower[i] + h * np.arange(shape[i]) for i in range(n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    kind = np.full(len(pts), FAR, dtype=np.int8)
    inside = domain.contains(pts)
    kind[inside] = INTERIOR
    cand = np.flatnonzero(~inside)
    dist = domain.distance(pts[cand])
    kind[cand[dist <= width + 1e-12]] = STRIP
    kind.flags.writeable = False
    return Grid(domain, float(h), float(epsilon), float(width), lower, shape, kind)


@dataclass(frozen=True)
class PayoffData:
    """Boundary datum ``g(x, t)`` and initial datum ``u0(x)``.

    Both callables are vectorized over an (P, N) array of points; ``g`` also
    receives the time.  ``u0`` must be defined on the interior and the strip.
    """

    g: TimeField
    u0: ScalarField
    time_dependent: bool = False


def payoff_values(data: PayoffData, domain: Domain, x, t: float) -> np.ndarray:
    """Vectorized payoff h(x, t): u0 for t <= 0, g outside the domain otherwise."""
    pts = _as_points(x, domain.dim)
    if t <= 0:
        return np.asarray(data.u0(pts), dtype=float).reshape(len(pts))
    if np.any(domain.contains(pts)):
        raise ValueError("payoff queried at an interior point with t > 0")
    return np.asarray(data.g(pts, t), dtype=float).reshape(len(pts))


def eval_payoff(data: PayoffData, domain: Domain, x, t: float) -> float:
    return float(payoff_values(data, domain, x, t)[0])


@dataclass(frozen=True, eq=False)
class ValueSlice:
    """One time level of a lattice field; FAR nodes hold NaN."""

    t: float
    values: np.ndarray
    epsilon: float

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)


def initial_slice(grid: Grid, data: PayoffData) -> ValueSlice:
    vals = np.full(grid.size, np.nan)
    vals[grid.active] = data.u0(grid.points[grid.active])
    return ValueSlice(0.0, vals, grid.epsilon)


def field_slice(grid: Grid, f: ScalarField, t: float = 0.0) -> ValueSlice:
    """Slice holding ``f`` sampled at every non-far node."""
    vals = np.full(grid.size, np.nan)
    vals[grid.active] = f(grid.points[grid.active])
    return ValueSlice(t, vals, grid.epsilon)


def interpolate(slice_: ValueSlice, grid: Grid, x) -> np.ndarray:
    """Multilinear interpolation of a slice at arbitrary points inside coverage."""
    idx, w = grid.interpolation_weights(x)
    if np.any(grid.kind[idx[w > 0]] == FAR):
        raise ValueError("interpolation stencil touches a far node")
    return np.sum(slice_.values[idx] * w, axis=1)


def affine(coeffs, const: float = 0.0) -> ScalarField:
    a = np.asarray(coeffs, dtype=float)

    def f(x):
        return np.asarray(x, dtype=float) @ a + const

    return f


def constant(c: float) -> ScalarField:
    def f(x):
        return np.full(len(x), float(c))

    return f


def static(f: ScalarField) -> TimeField:
    """Lift a time-independent field to the g(x, t) signature."""

    def g(x, t):
        return f(x)

    return g
