"""Dynamic Programming Principle solvers on a lattice.

One DPP step replaces the value at every interior node x by

    inf over frames S  of  sup over sampled unit v in S  of
        u(x + eps v, t - eps^2/2) / 2 + u(x - eps v, t - eps^2/2) / 2

with u read by multilinear interpolation inside the domain and from the
payoff h outside it (or from u0 once the previous level is at t <= 0).
The interior-landing part of the average is linear in the previous slice, so
it is assembled once as a sparse matrix; the payoff part is a fixed vector
for time-independent data.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .core import (
    FAR,
    Domain,
    Grid,
    PayoffData,
    ValueSlice,
    build_grid,
    initial_slice,
    interpolate,
)
from .eig import FrameSet, generate_frames

log = logging.getLogger(__name__)


class ConvergenceError(RuntimeError):
    """Fixed-point or power iteration stopped before reaching its tolerance."""

    def __init__(self, message: str, residual: float, iterations: int, last=None):
        super().__init__(f"{message} (residual={residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations
        self.last = last


@dataclass(frozen=True)
class DppConfig:
    epsilon: float
    j: int = 1
    T: float = 1.0
    resolution: int = 36
    seed: int = 0
    h: float | None = None
    tol: float = 1e-8
    max_sweeps: int = 200_000
    sphere_resolution: int | None = None

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not self.T > 0:
            raise ValueError("T must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.h is not None and not 0 < self.h <= self.epsilon * (1 + 1e-12):
            raise ValueError("need 0 < h <= epsilon")
        if self.j < 1:
            raise ValueError("j must be >= 1")

    @property
    def spacing(self) -> float:
        return self.epsilon / 2 if self.h is None else self.h

    @property
    def dt(self) -> float:
        return self.epsilon ** 2 / 2

    @property
    def levels(self) -> int:
        return int(math.floor(self.T / self.dt + 1e-9))

    def frames(self, N: int) -> FrameSet:
        if self.j > N:
            raise ValueError(f"j={self.j} exceeds dimension {N}")
        return generate_frames(N, self.j, self.resolution, self.seed, self.sphere_resolution)


class DppOperator:
    """Precomputed averaging operator for one (grid, frames, epsilon) triple."""

    def __init__(self, grid: Grid, frames: FrameSet, epsilon: float):
        if frames.N != grid.dim:
            raise ValueError("frame dimension does not match grid dimension")
        self.grid = grid
        self.frames = frames
        self.epsilon = float(epsilon)
        dirs = frames.directions(half=True)
        self.n_frames, self.n_per_frame = dirs.shape[:2]
        self.dirs = dirs.reshape(-1, grid.dim)
        self.nodes = grid.points[grid.interior]
        n_int = len(self.nodes)
        rows_in, cols_in, w_in = [], [], []
        ext_rows, ext_pts = [], []
        domain = grid.domain
        row_base = np.arange(n_int)
        for d, v in enumerate(self.dirs):
            for sign in (1.0, -1.0):
                pts = self.nodes + sign * self.epsilon * v
                inside = domain.contains(pts)
                rows = d * n_int + row_base
                if inside.any():
                    idx, w = grid.interpolation_weights(pts[inside])
                    if np.any(grid.kind[idx[w > 0]] == FAR):
                        raise AssertionError("interpolation stencil reached a far node")
                    rows_in.append(np.repeat(rows[inside], idx.shape[1]))
                    cols_in.append(idx.ravel())
                    w_in.append(0.5 * w.ravel())
                if (~inside).any():
                    ext_rows.append(rows[~inside])
                    ext_pts.append(pts[~inside])
        n_rows = len(self.dirs) * n_int
        if rows_in:
            r, c, w = np.concatenate(rows_in), np.concatenate(cols_in), np.concatenate(w_in)
        else:
            r = c = np.zeros(0, dtype=np.int64)
            w = np.zeros(0)
        self.matrix = sp.csr_matrix((w, (r, c)), shape=(n_rows, grid.size))
        self.ext_rows = np.concatenate(ext_rows) if ext_rows else np.zeros(0, dtype=np.int64)
        self.ext_pts = np.concatenate(ext_pts) if ext_pts else np.zeros((0, grid.dim))
        if len(self.ext_pts):
            overshoot = float(np.max(domain.distance(self.ext_pts)))
            if overshoot > self.epsilon * (1 + 1e-9):
                raise AssertionError("a DPP probe landed beyond the boundary strip")
        self._ext_cache: dict = {}

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    def _exterior(self, payoff: PayoffData, t: float) -> np.ndarray:
        key = (id(payoff), None if not payoff.time_dependent else t)
        if key not in self._ext_cache:
            vals = np.asarray(payoff.g(self.ext_pts, t), dtype=float) if len(self.ext_pts) else np.zeros(0)
            self._ext_cache = {key: np.bincount(self.ext_rows, weights=0.5 * vals, minlength=self.n_rows)}
        return self._ext_cache[key]

    def averages(self, prev: np.ndarray, payoff: PayoffData, t_prev: float) -> np.ndarray:
        """Two-point averages for every (direction, interior node): shape (D, I)."""
        n_int = len(self.nodes)
        if t_prev <= 0:
            out = np.empty((len(self.dirs), n_int))
            for d, v in enumerate(self.dirs):
                out[d] = 0.5 * (payoff.u0(self.nodes + self.epsilon * v)
                                + payoff.u0(self.nodes - self.epsilon * v))
            return out
        vals = self.matrix @ np.nan_to_num(prev, nan=0.0) + self._exterior(payoff, t_prev)
        return vals.reshape(len(self.dirs), n_int)

    def inf_sup(self, avg: np.ndarray, return_argmin: bool = False):
        per_frame = avg.reshape(self.n_frames, self.n_per_frame, -1).max(axis=1)
        if return_argmin:
            return per_frame.min(axis=0), per_frame.argmin(axis=0)
        return per_frame.min(axis=0)

    def apply(self, prev: np.ndarray, payoff: PayoffData, t_prev: float) -> np.ndarray:
        """New interior values from the previous full slice."""
        return self.inf_sup(self.averages(prev, payoff, t_prev))


def _fill_strip(grid: Grid, payoff: PayoffData, values: np.ndarray, t: float) -> None:
    pts = grid.points[grid.strip]
    if t <= 0:
        values[grid.strip] = payoff.u0(pts)
    else:
        values[grid.strip] = payoff.g(pts, t)


def dpp_update(prev: ValueSlice, grid: Grid, payoff: PayoffData, frames: FrameSet,
               epsilon: float, t: float, op: DppOperator | None = None) -> ValueSlice:
    """One DPP time step producing the slice at time ``t`` from the one at ``t - eps^2/2``."""
    if frames.N != grid.dim:
        raise ValueError("frame dimension does not match grid dimension")
    dt = epsilon ** 2 / 2
    if not math.isclose(prev.t, t - dt, rel_tol=1e-9, abs_tol=1e-12):
        raise ValueError(f"previous slice is at t={prev.t}, expected {t - dt}")
    if op is None:
        op = DppOperator(grid, frames, epsilon)
    vals = np.full(grid.size, np.nan)
    vals[grid.interior] = op.apply(prev.values, payoff, prev.t)
    _fill_strip(grid, payoff, vals, t)
    return ValueSlice(t, vals, epsilon)


@dataclass
class ParabolicResult:
    grid: Grid
    frames: FrameSet
    slices: list[ValueSlice]
    levels: list[int]
    log: dict = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.slices])

    def slice_at(self, t: float) -> ValueSlice:
        i = int(np.argmin(np.abs(self.times - t)))
        if not math.isclose(self.slices[i].t, t, rel_tol=1e-9, abs_tol=1e-12):
            raise ValueError(f"no stored slice at t={t}")
        return self.slices[i]


def solve_parabolic(domain: Domain, payoff: PayoffData, config: DppConfig, keep: int | None = 1,
                    grid: Grid | None = None, op: DppOperator | None = None,
                    initial: ValueSlice | None = None) -> ParabolicResult:
    """March the DPP backwards-in-game-time from the t <= 0 data up to ``config.T``.

    ``keep`` is the stride of stored levels (the final level is always kept);
    ``keep=None`` stores only the first and last levels.
    """
    if grid is None:
        grid = build_grid(domain, config.spacing, config.epsilon)
    if op is None:
        op = DppOperator(grid, config.frames(domain.dim), config.epsilon)
    dt = config.dt
    n_levels = config.levels
    cur = initial if initial is not None else initial_slice(grid, payoff)
    slices, levels = [cur], [0]
    vals = cur.values.copy()
    lo, hi = np.nanmin(vals), np.nanmax(vals)
    for k in range(1, n_levels + 1):
        t = k * dt
        new = np.full(grid.size, np.nan)
        if initial is not None and k == 1:
            # lattice-given initial data: interpolate it, read g outside
            avg = op.matrix @ np.nan_to_num(vals, nan=0.0) + op._exterior(payoff, dt)
            new[grid.interior] = op.inf_sup(avg.reshape(-1, len(grid.interior)))
        else:
            new[grid.interior] = op.apply(vals, payoff, (k - 1) * dt)
        _fill_strip(grid, payoff, new, t)
        vals = new
        lo, hi = min(lo, np.nanmin(vals)), max(hi, np.nanmax(vals))
        if (keep is not None and k % keep == 0) or k == n_levels:
            slices.append(ValueSlice(t, vals, config.epsilon))
            levels.append(k)
    run_log = {
        "levels": n_levels,
        "dt": dt,
        "interior_nodes": int(len(grid.interior)),
        "directions": int(op.n_rows // max(len(grid.interior), 1)),
        "frames": int(op.n_frames),
        "value_range": [float(lo), float(hi)],
    }
    log.debug("solve_parabolic: %s", run_log)
    return ParabolicResult(grid, op.frames, slices, levels, run_log)


@dataclass
class EllipticResult:
    slice: ValueSlice
    sweeps: int
    residual: float
    grid: Grid
    frames: FrameSet


def _static_payoff(g) -> PayoffData:
    return PayoffData(g=g, u0=lambda x: g(x, 1.0), time_dependent=False)


def solve_elliptic(domain: Domain, g, config: DppConfig, initial="min",
                   grid: Grid | None = None, op: DppOperator | None = None) -> EllipticResult:
    """Fixed point of the time-independent DPP by whole-slice sweeps.

    ``g`` is a time-independent boundary datum with the ``g(x, t)`` signature.
    ``initial`` is ``"min"``, ``"max"`` (constant guesses at the extreme
    boundary values), a number, or a :class:`ValueSlice`.
    """
    if grid is None:
        grid = build_grid(domain, config.spacing, config.epsilon)
    if op is None:
        op = DppOperator(grid, config.frames(domain.dim), config.epsilon)
    payoff = _static_payoff(g)
    vals = np.full(grid.size, np.nan)
    strip_vals = np.asarray(g(grid.points[grid.strip], 1.0), dtype=float)
    vals[grid.strip] = strip_vals
    if isinstance(initial, ValueSlice):
        vals[grid.interior] = initial.values[grid.interior]
    elif initial == "min":
        vals[grid.interior] = strip_vals.min()
    elif initial == "max":
        vals[grid.interior] = strip_vals.max()
    else:
        vals[grid.interior] = float(initial)
    residual = math.inf
    for sweep in range(1, config.max_sweeps + 1):
        new = op.apply(vals, payoff, 1.0)
        residual = float(np.max(np.abs(new - vals[grid.interior]), initial=0.0))
        vals[grid.interior] = new
        if residual < config.tol:
            return EllipticResult(ValueSlice(math.inf, vals, config.epsilon), sweep, residual,
                                  grid, op.frames)
    raise ConvergenceError("elliptic DPP did not converge", residual, config.max_sweeps,
                           ValueSlice(math.inf, vals, config.epsilon))


class FieldEvaluator:
    """u^eps at arbitrary points and stored time levels (for game strategies)."""

    def __init__(self, result: ParabolicResult, payoff: PayoffData):
        self.result = result
        self.grid = result.grid
        self.domain = result.grid.domain
        self.payoff = payoff
        self.epsilon = result.slices[0].epsilon
        self.dt = self.epsilon ** 2 / 2
        self._by_level = {lvl: s for lvl, s in zip(result.levels, result.slices)}

    def level(self, t: float) -> int:
        k = int(round(t / self.dt))
        if abs(k * self.dt - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"t={t} is not a DPP time level")
        return k

    def __call__(self, x: np.ndarray, t: float) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if t <= 1e-12:
            return np.asarray(self.payoff.u0(x), dtype=float)
        k = self.level(t)
        if k not in self._by_level:
            raise ValueError(f"time level {k} (t={t}) not stored; solve with keep=1")
        out = np.empty(len(x))
        inside = self.domain.contains(x)
        if inside.any():
            out[inside] = interpolate(self._by_level[k], self.grid, x[inside])
        if (~inside).any():
            out[~inside] = self.payoff.g(x[~inside], t)
        return out

    def averages(self, x: np.ndarray, t: float, dirs: np.ndarray) -> np.ndarray:
        """Two-point averages at time ``t`` for points (R, N) and directions (R, D, N)."""
        R, D, N = dirs.shape
        eps = self.epsilon
        plus = (x[:, None, :] + eps * dirs).reshape(-1, N)
        minus = (x[:, None, :] - eps * dirs).reshape(-1, N)
        tp = t - self.dt
        return (0.5 * (self(plus, tp) + self(minus, tp))).reshape(R, D)
