import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ifstile.attractor import (
    AttractorError,
    attractor_box,
    attractor_mask,
    chaos_game,
    default_window,
    distance_field,
    fixed_point,
    moran_dimension,
    moran_weights,
)
from ifstile.geometry import GeometryError, IfsSpec, Similitude
from ifstile.raster import Window

from oracles import SQ3, bisect_moran, brute_force_distances, point_in_convex, tri_distance


def test_chaos_game_is_seeded(specs):
    a = chaos_game(specs["sierpinski"], 5000, seed=3)
    b = chaos_game(specs["sierpinski"], 5000, seed=3)
    c = chaos_game(specs["sierpinski"], 5000, seed=4)
    assert np.array_equal(a.points, b.points)
    assert not np.array_equal(a.points, c.points)
    assert a.points.shape == (5000, 2)


def test_chaos_game_stays_on_attractor(specs):
    pts = chaos_game(specs["sierpinski"], 20000, seed=0).points
    tri = np.array([[0, 0], [1, 0], [0.5, SQ3 / 2]])
    assert point_in_convex(tri, pts).all()
    # the central removed triangle stays empty
    hole = np.array([[0.5, 0.0], [0.75, SQ3 / 4], [0.25, SQ3 / 4]])
    shrunk = hole.mean(0) + 0.98 * (hole - hole.mean(0))
    assert not point_in_convex(shrunk, pts).any()
    dy = chaos_game(specs["dyadic-1d"], 4000, seed=0).points
    assert dy.min() >= 0 and dy.max() <= 1


def test_chaos_game_rejects_bad_count(specs):
    with pytest.raises(AttractorError):
        chaos_game(specs["sierpinski"], 0)


def test_fixed_point():
    f = Similitude.scale_rotate(0.5, 0.3, (1.0, 2.0))
    p = fixed_point(f)
    np.testing.assert_allclose(f(p), p, atol=1e-12)


def test_attractor_box_exact_for_axis_maps(specs):
    box = attractor_box(specs["sierpinski"])
    np.testing.assert_allclose(box.lo, [0, 0], atol=1e-12)
    np.testing.assert_allclose(box.hi, [1, SQ3 / 2], atol=1e-12)
    box = attractor_box(specs["dyadic-1d"])
    np.testing.assert_allclose([box.lo[0], box.hi[0]], [0, 1], atol=1e-12)


@pytest.mark.parametrize("name", ["sierpinski", "golden", "quartic", "fern", "crack", "newgrowth"])
def test_box_contains_cloud(specs, name):
    pts = chaos_game(specs[name], 5000, seed=1).points
    box = attractor_box(specs[name])
    assert box.contains(pts, tol=1e-9).all()
    assert default_window(specs[name]).contains(pts).all()


def test_moran_against_bisection(specs):
    for spec in specs.values():
        d = moran_dimension(spec.ratios)
        assert d == pytest.approx(bisect_moran(spec.ratios), abs=1e-12)
        assert abs(math.fsum(r**d for r in spec.ratios) - 1) < 1e-12
    assert moran_dimension(specs["dyadic-1d"].ratios) == pytest.approx(1.0, abs=1e-12)
    assert moran_dimension(specs["sierpinski"].ratios) == pytest.approx(math.log(3) / math.log(2), abs=1e-10)
    assert moran_dimension(specs["fern"].ratios) == pytest.approx(1.670874542073, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.05, 0.9), min_size=2, max_size=5), st.integers(0, 4), st.floats(0.01, 0.5))
def test_moran_decreases_with_smaller_ratio(ratios, k, shrink):
    k = k % len(ratios)
    smaller = list(ratios)
    smaller[k] *= 1 - shrink
    assert moran_dimension(smaller) < moran_dimension(ratios)


def test_moran_rejects_bad_ratios():
    with pytest.raises(AttractorError):
        moran_dimension([0.5])
    with pytest.raises(AttractorError):
        moran_dimension([0.5, 1.0])


def test_moran_weights_sum_to_one(specs):
    w = moran_weights(specs["golden"])
    assert w.sum() == pytest.approx(1.0)
    assert w[0] > w[1]


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.integers(5, 40))
def test_distance_field_matches_brute_force(seed, res):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1, 1, size=(200, 2))
    win = Window((-1.5, -1.2), (1.3, 1.4))
    field = distance_field(pts, win, (res, res + 3))
    ref = brute_force_distances(pts, field.centers())
    np.testing.assert_allclose(field.samples.ravel(), ref, atol=1e-12)


def test_distance_field_is_lipschitz(specs):
    pts = chaos_game(specs["sierpinski"], 20000, seed=0)
    win = default_window(specs["sierpinski"])
    field = distance_field(pts, win, 200)
    d = field.samples
    px = field.pixel_size
    assert np.all(np.abs(np.diff(d, axis=1)) <= px[0] * (1 + 1e-9))
    assert np.all(np.abs(np.diff(d, axis=0)) <= px[1] * (1 + 1e-9))


def test_distance_field_1d(specs):
    pts = chaos_game(specs["dyadic-1d"], 2000, seed=0)
    field = distance_field(pts, Window((-1.0,), (2.0,)), 300)
    x = field.centers().ravel()
    ref = np.maximum(0, np.maximum(-x, x - 1))
    # the cloud is dense in [0,1], so only the outside distance survives
    np.testing.assert_allclose(field.samples, ref, atol=5e-3)


def test_attractor_mask_sierpinski(specs):
    spec = specs["sierpinski"]
    win = Window((0.0, 0.0), (1.0, 1.0))
    mask = attractor_mask(spec, win, 128, depth=6)
    c = mask.centers()
    on = mask.samples.ravel().astype(bool)
    tri = np.array([[0, 0], [1, 0], [0.5, SQ3 / 2]])
    # every on-pixel is within a pixel of the hull, and the big hole is off
    far_out = np.array([tri_distance(p, tri) > 0.02 for p in c])
    assert not (on & far_out).any()
    hole = np.array([[0.5, 0.0], [0.75, SQ3 / 4], [0.25, SQ3 / 4]])
    core = hole.mean(0) + 0.8 * (hole - hole.mean(0))
    assert not on[point_in_convex(core, c)].any()
    assert 0.1 < on.mean() < 0.5


def test_non_contractive_rejected():
    with pytest.raises(GeometryError):
        IfsSpec((Similitude.scale_rotate(0.5), Similitude.scale_rotate(1.0, t=(1.0, 0.0))))
