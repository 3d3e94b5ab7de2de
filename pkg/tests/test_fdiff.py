import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eigflow.core import PayoffData, ball, build_grid, constant, field_slice, static
from eigflow.dpp import DppConfig, solve_elliptic
from eigflow.fdiff import FdConfig, discrete_hessian, hessians, solve_fd


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=6, max_size=6))
def test_hessian_exact_on_quadratics(c):
    A = np.array([[c[0], c[1], c[2]], [c[1], c[3], c[4]], [c[2], c[4], c[5]]])
    q = lambda x: 0.5 * np.einsum("pi,ij,pj->p", x, A, x)  # noqa: E731
    grid = build_grid(ball([0, 0, 0], 1.0), 0.1, 0.1)
    s = field_slice(grid, q)
    H = hessians(s.values, grid, grid.interior[::50])
    assert np.allclose(H, A, atol=1e-9)


def test_discrete_hessian_by_coordinates():
    grid = build_grid(ball([0, 0], 1.0), 0.1, 0.1)
    s = field_slice(grid, lambda x: x[:, 0] * x[:, 1])
    assert np.allclose(discrete_hessian(s, grid, [0.2, 0.3]), [[0, 1], [1, 0]])


def test_time_step_budget():
    with pytest.raises(ValueError, match="budget"):
        FdConfig(h=0.1, dt=0.01).time_step(2)
    assert FdConfig(h=0.1).time_step(2) == pytest.approx(0.0025)


def test_heat_reduction():
    interval = ball([0.5], 0.5)
    payoff = PayoffData(g=static(constant(0.0)), u0=lambda x: np.sin(np.pi * x[:, 0]))
    res = solve_fd(interval, payoff, FdConfig(h=0.05, T=0.5), keep=None)
    g = res.grid
    last = res.slices[-1]
    exact = math.exp(-np.pi ** 2 * last.t) * np.sin(np.pi * g.points[g.interior, 0])
    assert np.max(np.abs(last.values[g.interior] - exact)) < 5e-4


def test_fd_long_time_matches_dpp_fixed_point():
    disk = ball([0, 0], 1.0)
    g = lambda x, t: np.cos(2 * np.arctan2(x[:, 1], x[:, 0]))  # noqa: E731
    payoff = PayoffData(g=g, u0=lambda x: x[:, 0] ** 2 - x[:, 1] ** 2)
    fd = solve_fd(disk, payoff, FdConfig(h=0.1, j=1, T=3.0), keep=None)
    z = solve_elliptic(disk, g, DppConfig(epsilon=0.1, h=0.1, resolution=36))
    I = fd.grid.interior
    assert np.max(np.abs(fd.slices[-1].values[I] - z.slice.values[I])) < 0.5


def _shared_gap(a, b, h):
    """Sup distance between two final slices over lattice nodes both grids share."""
    key = lambda q: tuple(np.rint(q / h).astype(int))  # noqa: E731
    index = {key(q): k for k, q in zip(b.grid.interior, b.grid.points[b.grid.interior])}
    gaps = [abs(a.slices[-1].values[n] - b.slices[-1].values[index[key(q)]])
            for n, q in zip(a.grid.interior, a.grid.points[a.grid.interior]) if key(q) in index]
    return max(gaps)


@pytest.mark.slow
@pytest.mark.parametrize("j", [1, 2])
def test_routes_agree_better_under_joint_refinement(j):
    # h shrinks like eps^2: with h proportional to eps the interpolation error
    # accumulated over 2T/eps^2 steps does not vanish
    from eigflow.dpp import solve_parabolic

    disk = ball([0, 0], 1.0)
    g = lambda x, t: x[:, 0] ** 2 - 0.5 * x[:, 1] ** 2  # noqa: E731
    payoff = PayoffData(g=g, u0=lambda x: g(x, 0) + 0.5 * np.maximum(0, 1 - np.sum(x ** 2, axis=1)) ** 2)
    gaps = []
    for eps, h, res in ((0.2, 0.05, 18), (0.14, 0.025, 26), (0.1, 0.0125, 36)):
        a = solve_parabolic(disk, payoff, DppConfig(epsilon=eps, h=h, j=j, T=0.1, resolution=res), keep=None)
        b = solve_fd(disk, payoff, FdConfig(h=h, j=j, T=a.slices[-1].t), keep=None)
        gaps.append(_shared_gap(a, b, h))
    assert gaps[0] >= gaps[1] >= gaps[2], gaps
