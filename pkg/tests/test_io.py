"""Spec files, shapes and raster I/O."""

import json
import math

import numpy as np
import pytest

from ifstile.raster import RasterField, Window, parse_resolution, read_pgm, read_points_csv, write_pgm, write_points_csv
from ifstile.shapes import BoxShape, CloudShape, IntervalShape, PolygonShape, ShapeError, shape_from_json
from ifstile.specfile import SpecFileError, bundled_names, load_spec, parse_spec, suggested_costs


def test_bundled_names():
    assert set(bundled_names()) == {"dyadic-1d", "square-4map", "sierpinski", "golden", "quartic", "fern", "crack", "newgrowth"}


def test_golden_and_quartic_ratios(specs):
    s = (math.sqrt(5) - 1) / 2
    assert specs["golden"].ratios == pytest.approx((s, s * s), abs=1e-15)
    q = specs["quartic"].ratios[0]
    assert q + q**4 == pytest.approx(1.0, abs=1e-14)


def test_fern_and_crack(specs):
    assert suggested_costs("fern") == [1, 8, 8]
    assert suggested_costs("crack") == [1, 2]
    assert specs["fern"].m == 3 and specs["crack"].m == 2
    forced = load_spec("fern", costs=[1, 8, 8])
    assert forced.costs == (1.0, 8.0, 8.0)


def test_parse_errors():
    with pytest.raises(SpecFileError):
        parse_spec({"maps": "x"})
    with pytest.raises(SpecFileError):
        parse_spec([1, 2])
    with pytest.raises(SpecFileError):
        parse_spec({"maps": [{"matrix": [[0.5]]}]})
    with pytest.raises(SpecFileError):
        parse_spec({"dimension": 2, "maps": [{"matrix": [[0.5]], "translation": [0]}, {"matrix": [[0.5]], "translation": [1]}]})
    with pytest.raises(SpecFileError):
        parse_spec({"maps": [{"matrix": [[0.5]], "translation": [0], "cost": 1}, {"matrix": [[0.5]], "translation": [1]}]})
    with pytest.raises(FileNotFoundError):
        load_spec("does/not/exist.json")


def test_per_map_costs(tmp_path):
    doc = {"maps": [{"matrix": [[0.5]], "translation": [0], "cost": 1}, {"matrix": [[0.25]], "translation": [0.75], "cost": 2}]}
    p = tmp_path / "s.json"
    p.write_text(json.dumps(doc))
    spec = load_spec(str(p))
    assert spec.costs == (1.0, 2.0)
    assert spec.costs_are_exponents()


def test_shapes_contain():
    box = BoxShape((0, 0), (1, 2))
    pts = np.array([[0.5, 1.0], [1.0, 2.0], [1.1, 0.5]])
    assert box.contains(pts).tolist() == [True, True, False]
    tri = PolygonShape([[0, 0], [1, 0], [0, 1]])
    assert tri.contains(np.array([[0.2, 0.2], [0.6, 0.6], [0.5, 0.5]])).tolist() == [True, False, True]
    assert tri.area() == pytest.approx(0.5)
    iv = IntervalShape(-1, 2)
    assert iv.contains(np.array([[-1.0], [2.5]])).tolist() == [True, False]
    with pytest.raises(ShapeError):
        IntervalShape(1, 0)


def test_shape_json_roundtrip():
    for shape in [BoxShape((0, 0), (1, 1)), PolygonShape([[0, 0], [2, 0], [1, 1]]), IntervalShape(0, 1)]:
        again = shape_from_json(shape.to_json())
        pts = np.random.default_rng(0).uniform(-0.5, 2.5, size=(200, shape.bounds().dimension))
        assert np.array_equal(again.contains(pts), shape.contains(pts))
    with pytest.raises(ShapeError):
        shape_from_json({"kind": "star"})


def test_cloud_shape():
    pts = np.array([[0.0, 0.0], [1.0, 0.0]])
    c = CloudShape(pts, 0.1)
    assert c.contains(np.array([[0.05, 0.0], [0.5, 0.0]])).tolist() == [True, False]


def test_window_parse():
    w = Window.parse("0,1,-1,2")
    assert w.lo == (0.0, -1.0) and w.hi == (1.0, 2.0)
    assert Window.parse("0.6,1.4").dimension == 1
    assert parse_resolution("800x600") == (800, 600)
    assert parse_resolution("64") == (64,)


def test_pgm_roundtrip(tmp_path):
    samples = np.zeros((5, 7), dtype=bool)
    samples[0, 0] = True  # bottom-left pixel
    field = RasterField(Window((0.0, 0.0), (7.0, 5.0)), samples, "mask")
    p = tmp_path / "m.pgm"
    write_pgm(p, field)
    img = read_pgm(p)
    assert img.shape == (5, 7)
    # images are stored top row first
    assert img[-1, 0] > 0 and img.sum() == img[-1, 0]


def test_points_csv_roundtrip(tmp_path):
    pts = np.random.default_rng(1).normal(size=(20, 2))
    p = tmp_path / "p.csv"
    write_points_csv(p, pts)
    np.testing.assert_array_equal(read_points_csv(p), pts)


def test_raster_lookup():
    field = RasterField(Window((0.0,), (1.0,)), np.arange(4.0), "distance")
    assert field.lookup(np.array([[0.1], [0.9], [2.0]]), outside=-1).tolist() == [0.0, 3.0, -1.0]
