"""Explicit finite-difference route u^{n+1} = u^n + dt * lambda_j(D_h^2 u^n).

This is a cross-check for the DPP solver, not a monotone scheme: the
central cross differences can break comparison for rough data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import FAR, Domain, Grid, PayoffData, ValueSlice, build_grid, initial_slice
from .eig import jacobi_eigh


@dataclass(frozen=True)
class FdConfig:
    h: float
    j: int = 1
    T: float = 1.0
    dt: float | None = None

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("h must be positive")
        if not self.T > 0:
            raise ValueError("T must be positive")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")

    def budget(self, N: int) -> float:
        return self.h ** 2 / (2 * N)

    def time_step(self, N: int) -> float:
        dt = self.budget(N) if self.dt is None else self.dt
        if dt > self.budget(N) * (1 + 1e-12):
            raise ValueError(f"dt={dt} violates the stability budget h^2/(2N)={self.budget(N)}")
        return dt


def _stencil(grid: Grid, nodes: np.ndarray):
    """Flat indices of axis and diagonal neighbours; raises if any is a far node."""
    n = grid.dim
    s = grid.strides
    axis_p = nodes[:, None] + s[None, :]
    axis_m = nodes[:, None] - s[None, :]
    pairs = [(i, k) for i in range(n) for k in range(i + 1, n)]
    diag = {}
    for i, k in pairs:
        diag[(i, k)] = (nodes + s[i] + s[k], nodes + s[i] - s[k],
                        nodes - s[i] + s[k], nodes - s[i] - s[k])
    used = [axis_p.ravel(), axis_m.ravel()] + [a for quad in diag.values() for a in quad]
    allidx = np.concatenate(used) if used else np.zeros(0, dtype=np.int64)
    if np.any(allidx < 0) or np.any(allidx >= grid.size) or np.any(grid.kind[allidx] == FAR):
        raise ValueError("finite-difference stencil reaches beyond the boundary strip")
    return axis_p, axis_m, diag


def hessians(values: np.ndarray, grid: Grid, nodes: np.ndarray, stencil=None) -> np.ndarray:
    """Central-difference Hessians at the given flat node indices, shape (M, N, N)."""
    nodes = np.atleast_1d(np.asarray(nodes, dtype=np.int64))
    axis_p, axis_m, diag = _stencil(grid, nodes) if stencil is None else stencil
    h2 = grid.h ** 2
    n = grid.dim
    H = np.empty((len(nodes), n, n))
    u = values[nodes]
    for i in range(n):
        H[:, i, i] = (values[axis_p[:, i]] - 2.0 * u + values[axis_m[:, i]]) / h2
    for (i, k), (pp, pm, mp, mm) in diag.items():
        hik = (values[pp] - values[pm] - values[mp] + values[mm]) / (4.0 * h2)
        H[:, i, k] = hik
        H[:, k, i] = hik
    return H


def discrete_hessian(slice_: ValueSlice, grid: Grid, node) -> np.ndarray:
    """Hessian at one interior node, given by flat index or by coordinates."""
    idx = node if np.ndim(node) == 0 and isinstance(node, (int, np.integer)) else grid.nearest(node)[0]
    return hessians(slice_.values, grid, np.array([idx]))[0]


@dataclass
class FdResult:
    grid: Grid
    slices: list[ValueSlice]
    dt: float
    log: dict = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.slices])


def solve_fd(domain: Domain, payoff: PayoffData, config: FdConfig, keep: int | None = 1,
             grid: Grid | None = None) -> FdResult:
    """Explicit Euler integration; strip nodes are pinned to g at every level."""
    N = domain.dim
    if not 1 <= config.j <= N:
        raise ValueError(f"j={config.j} outside 1..{N}")
    dt = config.time_step(N)
    steps = int(math.ceil(config.T / dt - 1e-9))
    dt = config.T / steps
    if grid is None:
        grid = build_grid(domain, config.h, config.h)
    nodes = grid.interior
    stencil = _stencil(grid, nodes)
    cur = initial_slice(grid, payoff)
    vals = cur.values.copy()
    slices = [cur]
    strip_pts = grid.points[grid.strip]
    for n_step in range(1, steps + 1):
        t = n_step * dt
        H = hessians(vals, grid, nodes, stencil)
        lam = H[:, 0, 0] if N == 1 else jacobi_eigh(H)[0][:, config.j - 1]
        new = vals.copy()
        new[nodes] = vals[nodes] + dt * lam
        new[grid.strip] = payoff.g(strip_pts, t)
        vals = new
        if (keep is not None and n_step % keep == 0) or n_step == steps:
            slices.append(ValueSlice(t, vals, grid.h))
    return FdResult(grid, slices, dt, {"steps": steps, "dt": dt, "interior_nodes": int(len(nodes))})
