import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from eigflow.core import ball, build_grid
from eigflow.envelope import (
    boundary_data,
    concave_envelope,
    convex_envelope,
    directional_envelope_bound,
    lifted_envelope,
    lower_hull,
    section_boundary,
)

DISK = ball([0.0, 0.0], 1.0)


def cos2(x, t=None):
    return (x[:, 0] ** 2 - x[:, 1] ** 2) / np.sum(x ** 2, axis=1)


@pytest.fixture(scope="module")
def disk_envelopes():
    grid = build_grid(DISK, 0.05, 0.05)
    samples = boundary_data(DISK, cos2, 0.05)
    return grid, samples, convex_envelope(DISK, samples, grid), concave_envelope(DISK, samples, grid)


def test_affine_boundary_values_give_the_plane():
    grid = build_grid(DISK, 0.1, 0.1)
    pi = lambda x, t: 0.3 * x[:, 0] - 2 * x[:, 1] + 1  # noqa: E731
    env = convex_envelope(DISK, boundary_data(DISK, pi, 0.1), grid)
    pts = grid.points[grid.interior]
    assert np.allclose(env.values[grid.interior], pi(pts, 0), atol=1e-12)


def test_interval_endpoints_give_the_chord():
    grid = build_grid(ball([0.5], 0.5), 0.05, 0.05)
    env = convex_envelope(None, (np.array([[0.0], [1.0]]), np.array([2.0, -1.0])), grid)
    x = grid.points[grid.interior, 0]
    assert np.allclose(env.values[grid.interior], 2 - 3 * x)


def test_disk_cos2_origin(disk_envelopes):
    grid, _, low, up = disk_envelopes
    o = grid.nearest([0.0, 0.0])[0]
    assert low.values[o] == pytest.approx(-1.0, abs=2e-3)
    assert up.values[o] == pytest.approx(1.0, abs=2e-3)


def test_disk_cos2_closed_form(disk_envelopes):
    # convex envelope of cos(2 theta) on the unit circle is 2 x1^2 - 1
    grid, _, low, up = disk_envelopes
    x = grid.points[grid.interior]
    assert np.max(np.abs(low.values[grid.interior] - (2 * x[:, 0] ** 2 - 1))) < 5e-3
    assert np.max(np.abs(up.values[grid.interior] - (1 - 2 * x[:, 1] ** 2))) < 5e-3


def test_duality_by_negation(disk_envelopes):
    grid, (pts, vals), _, up = disk_envelopes
    neg = convex_envelope(DISK, (pts, -vals), grid)
    assert np.array_equal(up.values[grid.interior], -neg.values[grid.interior])


def test_discrete_convexity_along_lattice_lines(disk_envelopes):
    grid, _, low, _ = disk_envelopes
    v = low.values
    for stride in grid.strides:
        idx = grid.interior
        nb = np.isin(idx + stride, idx) & np.isin(idx - stride, idx)
        c = idx[nb]
        assert np.min(v[c + stride] - 2 * v[c] + v[c - stride]) >= -grid.h


def test_envelope_bounded_by_data_at_samples(disk_envelopes):
    _, (pts, vals), _, _ = disk_envelopes
    assert np.allclose(lifted_envelope(pts, vals, pts), vals, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(arrays(np.float64, (9,), elements=st.floats(-2, 2)), st.integers(0, 10 ** 6))
def test_lifted_hull_matches_brute_force(values, seed):
    rng = np.random.default_rng(seed)
    ang = np.sort(rng.uniform(0, 2 * np.pi, 9))
    pts = np.column_stack([np.cos(ang), np.sin(ang)])
    q = rng.uniform(-0.3, 0.3, size=(20, 2))
    brute = lower_hull(pts, values, q)
    ok = np.isfinite(brute)
    assert np.allclose(lifted_envelope(pts, values, q)[ok], brute[ok], atol=1e-9)


def test_brute_force_reports_unrepresentable_points():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    assert np.isinf(lower_hull(pts, np.zeros(3), np.array([[2.0, 2.0]]))[0])


def test_directional_bound_examples():
    # chord value of cos(2 theta) on the horizontal section through (0, 0.3)
    assert directional_envelope_bound(DISK, cos2, [0.0, 0.3], [0]) == pytest.approx(1 - 2 * 0.09)
    absx2 = lambda x, t: np.abs(x[:, 1])  # noqa: E731
    for p in ([0.0, 0.0], [0.4, 0.0], [-0.7, 0.0]):
        assert directional_envelope_bound(DISK, absx2, p, [0]) == 0.0
    pi = lambda x, t: 2 * x[:, 0] - x[:, 1]  # noqa: E731
    assert directional_envelope_bound(DISK, pi, [0.2, 0.1], [0]) == pytest.approx(0.3)


def test_empty_section():
    with pytest.raises(ValueError, match="empty section"):
        section_boundary(DISK, [2.0, 0.0], [0])
