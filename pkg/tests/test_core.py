import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eigflow.core import (
    FAR,
    INTERIOR,
    STRIP,
    PayoffData,
    ValueSlice,
    affine,
    ball,
    build_grid,
    constant,
    ellipsoid,
    eval_payoff,
    field_slice,
    interpolate,
    intersection_of_balls,
    payoff_values,
    static,
)


def test_ball_membership_is_strict():
    d = ball([0, 0], 1.0)
    assert d.contains([[0.0, 0.0], [0.999, 0.0]]).all()
    assert not d.contains([[1.0, 0.0]])[0]


def test_ellipsoid_distance_matches_brute_force():
    d = ellipsoid([0.0, 0.0], [2.0, 1.0])
    p = np.array([[3.0, 1.5], [0.0, 2.0], [-2.5, 0.0]])
    ang = np.linspace(0, 2 * np.pi, 200001)
    curve = np.column_stack([2 * np.cos(ang), np.sin(ang)])
    brute = np.min(np.linalg.norm(p[:, None, :] - curve[None], axis=2), axis=1)
    assert np.allclose(d.distance(p), brute, atol=1e-8)


def test_intersection_distance_and_interior_point():
    d = intersection_of_balls([[0.0, 0.0], [1.0, 0.0]], [1.0, 1.0])
    o = d.interior_point()
    assert d.contains(o[None, :])[0]
    # (0.5, 2) is nearest to the lens tip (0.5, sqrt(3)/2)
    assert d.distance([[0.5, 2.0]])[0] == pytest.approx(2.0 - math.sqrt(3) / 2, abs=1e-8)


def test_empty_intersection_rejected():
    with pytest.raises(ValueError):
        intersection_of_balls([[0.0, 0.0], [3.0, 0.0]], [1.0, 1.0])


@given(st.floats(0, 2 * math.pi), st.floats(0.0, 0.9))
def test_ray_exit_lands_on_sphere(angle, r):
    d = ball([0.2, -0.1], 1.3)
    p = np.array([[0.2 + r * math.cos(angle + 1), -0.1 + r * math.sin(angle + 1)]])
    v = np.array([[math.cos(angle), math.sin(angle)]])
    s = d.ray_exit(p, v)[0]
    assert np.linalg.norm(p[0] + s * v[0] - [0.2, -0.1]) == pytest.approx(1.3, abs=1e-12)


@pytest.mark.parametrize("dom", [ball([0, 0], 1.0), ellipsoid([0, 0], [1.5, 0.7]), ball([0, 0, 0], 1.0)])
def test_boundary_samples_on_boundary_and_dense(dom):
    pts = dom.boundary_samples(0.1)
    assert np.all(dom.distance(pts) < 1e-9)
    if dom.dim == 2:
        gaps = np.linalg.norm(pts - np.roll(pts, 1, axis=0), axis=1)
        assert gaps.max() <= 0.1


def test_grid_classification_and_strip_width():
    d = ball([0, 0], 1.0)
    g = build_grid(d, 0.05, 0.1)
    pts = g.points
    assert np.all(d.contains(pts[g.kind == INTERIOR]))
    dist = d.distance(pts[g.kind == STRIP])
    assert dist.max() <= g.strip_width + 1e-12
    assert g.strip_width >= 0.1 + 0.05 * math.sqrt(2) - 1e-12
    assert np.all(d.distance(pts[g.kind == FAR]) > g.strip_width)


def test_grid_rejects_coarse_spacing():
    with pytest.raises(ValueError, match="exceeds"):
        build_grid(ball([0, 0], 1.0), 0.2, 0.1)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=3, max_size=3), st.floats(-1, 1))
def test_interpolation_exact_for_affine(coeffs, c):
    d = ball([0, 0, 0], 1.0)
    g = build_grid(d, 0.1, 0.1)
    f = affine(coeffs, c)
    s = field_slice(g, f)
    x = np.random.default_rng(0).uniform(-0.6, 0.6, size=(50, 3))
    assert np.allclose(interpolate(s, g, x), f(x), atol=1e-12)


def test_nearest_and_interpolation_out_of_coverage():
    g = build_grid(ball([0, 0], 1.0), 0.1, 0.1)
    with pytest.raises(ValueError):
        g.nearest([[5.0, 0.0]])
    with pytest.raises(ValueError):
        g.interpolation_weights([[5.0, 0.0]])


def test_payoff_reads_initial_data_at_nonpositive_times():
    d = ball([0.0], 1.0)
    data = PayoffData(g=static(constant(2.0)), u0=constant(-1.0))
    assert eval_payoff(data, d, [1.5], 0.3) == 2.0
    assert eval_payoff(data, d, [0.0], 0.0) == -1.0
    assert eval_payoff(data, d, [0.0], -0.01) == -1.0
    with pytest.raises(ValueError):
        payoff_values(data, d, [[0.0]], 0.3)


def test_value_slice_is_read_only():
    s = ValueSlice(0.0, np.zeros(3), 0.1)
    with pytest.raises(ValueError):
        s.values[0] = 1.0
