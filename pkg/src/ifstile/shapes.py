"""Closed bounded sets used as the prototile T.

Every shape answers membership queries for points in its own coordinates,
so a tile ``g(T)`` is rasterised by pulling pixel centres back through
``g^-1``.  Shapes also provide outlines for vector output.
"""

from __future__ import annotations

import numpy as np
import shapely.geometry as sg
from scipy.spatial import cKDTree
from skimage import measure

from .raster import RasterField, Window

BOUNDARY_TOL = 1e-12


class ShapeError(ValueError):
    pass


class TileShape:
    kind = "shape"
    label = "T"
    dimension = 2

    def bounds(self) -> Window:
        raise NotImplementedError

    def contains(self, pts, tol: float = BOUNDARY_TOL) -> np.ndarray:
        raise NotImplementedError

    def outlines(self) -> list:
        """Closed polylines in shape coordinates (2D) or endpoint pairs (1D)."""
        raise NotImplementedError

    def sample_points(self) -> np.ndarray:
        raise NotImplementedError

    def area(self) -> float:
        raise NotImplementedError

    def meets_window(self, transform, window: Window) -> bool:
        """Whether ``transform(self)`` meets the closed window."""
        pts = transform(self.sample_points())
        return bool(window.contains(pts).any())

    def to_json(self) -> dict:
        raise NotImplementedError


class IntervalShape(TileShape):
    kind = "interval"
    dimension = 1

    def __init__(self, lo: float, hi: float, label: str = "T"):
        if not hi > lo:
            raise ShapeError("interval must have hi > lo")
        self.lo, self.hi, self.label = float(lo), float(hi), label

    def bounds(self):
        return Window((self.lo,), (self.hi,))

    def contains(self, pts, tol=BOUNDARY_TOL):
        x = np.asarray(pts, dtype=float).reshape(-1)
        return (x >= self.lo - tol) & (x <= self.hi + tol)

    def outlines(self):
        return [np.array([[self.lo], [self.hi]])]

    def sample_points(self):
        return np.array([[self.lo], [self.hi]])

    def area(self):
        return self.hi - self.lo

    def meets_window(self, transform, window):
        a, b = transform(self.sample_points())[:, 0]
        lo, hi = min(a, b), max(a, b)
        return lo <= window.hi[0] and window.lo[0] <= hi

    def image_interval(self, transform):
        a, b = transform(self.sample_points())[:, 0]
        return min(a, b), max(a, b)

    def to_json(self):
        return {"kind": self.kind, "label": self.label, "data": [self.lo, self.hi]}


class PolygonShape(TileShape):
    kind = "polygon"

    def __init__(self, vertices, label: str = "T"):
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise ShapeError("polygon needs at least three 2D vertices")
        poly = sg.Polygon(v)
        if not poly.is_valid or poly.area <= 0:
            raise ShapeError("polygon must be simple with positive area")
        self.vertices = v
        self.label = label
        self._poly = poly

    def bounds(self):
        return Window(tuple(self.vertices.min(0)), tuple(self.vertices.max(0)))

    def contains(self, pts, tol=BOUNDARY_TOL):
        p = np.asarray(pts, dtype=float).reshape(-1, 2)
        a = self.vertices
        b = np.roll(a, -1, axis=0)
        x, y = p[:, 0:1], p[:, 1:2]
        crosses = ((a[:, 1] > y) != (b[:, 1] > y)) & (
            x < (b[:, 0] - a[:, 0]) * (y - a[:, 1]) / np.where(b[:, 1] != a[:, 1], b[:, 1] - a[:, 1], 1) + a[:, 0]
        )
        inside = np.count_nonzero(crosses, axis=1) % 2 == 1
        if tol > 0:
            e = b - a
            rel = p[:, None, :] - a[None]
            t = np.clip((rel * e).sum(-1) / (e * e).sum(-1), 0, 1)
            d = np.linalg.norm(rel - t[..., None] * e, axis=-1).min(axis=1)
            inside |= d <= tol
        return inside

    def outlines(self):
        return [np.vstack([self.vertices, self.vertices[:1]])]

    def sample_points(self):
        return self.vertices

    def area(self):
        return float(self._poly.area)

    def meets_window(self, transform, window):
        img = sg.Polygon(transform(self.vertices))
        return img.intersects(sg.box(window.lo[0], window.lo[1], window.hi[0], window.hi[1]))

    def to_json(self):
        return {"kind": self.kind, "label": self.label, "data": self.vertices.tolist()}


class BoxShape(PolygonShape):
    kind = "box"

    def __init__(self, lo, hi, label: str = "T"):
        self.lo = tuple(float(v) for v in lo)
        self.hi = tuple(float(v) for v in hi)
        if len(self.lo) != 2:
            raise ShapeError("box shapes are 2D; use IntervalShape in 1D")
        (x0, y0), (x1, y1) = self.lo, self.hi
        super().__init__([[x0, y0], [x1, y0], [x1, y1], [x0, y1]], label)

    def contains(self, pts, tol=BOUNDARY_TOL):
        p = np.asarray(pts, dtype=float).reshape(-1, 2)
        return np.all((p >= np.asarray(self.lo) - tol) & (p <= np.asarray(self.hi) + tol), axis=1)

    def to_json(self):
        return {"kind": self.kind, "label": self.label, "data": [list(self.lo), list(self.hi)]}


class CloudShape(TileShape):
    """A point cloud thickened by ``radius`` (the attractor, approximately)."""

    kind = "attractor-cloud"

    def __init__(self, points, radius: float, label: str = "A"):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if len(pts) == 0:
            raise ShapeError("empty cloud")
        self.points = pts
        self.radius = float(radius)
        self.label = label
        self.dimension = pts.shape[1]
        self._tree = None

    def bounds(self):
        return Window(tuple(self.points.min(0) - self.radius), tuple(self.points.max(0) + self.radius))

    def contains(self, pts, tol=BOUNDARY_TOL):
        if self._tree is None:
            self._tree = cKDTree(self.points)
        q = np.asarray(pts, dtype=float).reshape(-1, self.dimension)
        d, _ = self._tree.query(q, k=1, distance_upper_bound=self.radius + tol)
        return np.isfinite(d)

    def outlines(self):
        return []

    def sample_points(self):
        return self.points

    def area(self):
        return float("nan")

    def to_json(self):
        return {"kind": self.kind, "label": self.label, "data": {"count": len(self.points), "radius": self.radius}}


class StencilShape(TileShape):
    """A binary raster with its window: pixel on means the pixel's cell is in the set."""

    def __init__(self, mask: RasterField, label: str = "C", kind: str = "central-set-stencil"):
        m = np.asarray(mask.samples, dtype=bool)
        if not m.any():
            raise ShapeError("empty stencil")
        self.mask = mask.with_samples(m, "mask")
        self.label = label
        self.kind = kind
        self.dimension = mask.dimension

    def bounds(self):
        on = np.nonzero(self.mask.samples)
        lo = np.asarray(self.mask.window.lo)
        ps = self.mask.pixel_size
        idx = np.stack(on[::-1], axis=1)
        return Window(tuple(lo + idx.min(0) * ps), tuple(lo + (idx.max(0) + 1) * ps))

    def contains(self, pts, tol=BOUNDARY_TOL):
        return self.mask.lookup(np.asarray(pts, dtype=float).reshape(-1, self.dimension), outside=False).astype(bool)

    def outlines(self):
        if self.dimension == 1:
            xs = self.mask.centers()[:, 0]
            on = self.mask.samples
            edges = np.nonzero(np.diff(np.r_[False, on, False].astype(int)))[0]
            half = self.mask.pixel_size[0] / 2
            return [np.array([[xs[a] - half], [xs[b - 1] + half]]) for a, b in zip(edges[::2], edges[1::2])]
        padded = np.pad(self.mask.samples.astype(float), 1)
        lo = np.asarray(self.mask.window.lo)
        ps = self.mask.pixel_size
        out = []
        for c in measure.find_contours(padded, 0.5):
            out.append(lo + (c[:, ::-1] - 1 + 0.5) * ps)
        return out

    def sample_points(self):
        return self.mask.centers()[self.mask.samples.ravel()]

    def area(self):
        return float(self.mask.samples.sum()) * self.mask.pixel_area

    def to_json(self):
        return {
            "kind": self.kind,
            "label": self.label,
            "data": {
                "window": self.mask.window.to_json(),
                "resolution": list(self.mask.resolution),
                "on_pixels": int(self.mask.samples.sum()),
            },
        }


def shape_from_json(obj, spec=None) -> TileShape:
    """Build a shape from a spec file's ``tile`` entry."""
    kind = obj.get("kind")
    data = obj.get("data")
    label = obj.get("label", "T")
    if kind == "interval":
        return IntervalShape(data[0], data[1], label)
    if kind == "box":
        return BoxShape(data[0], data[1], label)
    if kind == "polygon":
        return PolygonShape(data, label)
    if kind in ("attractor", "attractor-cloud"):
        if spec is None:
            raise ShapeError("attractor shape needs the IFS")
        return attractor_shape(spec)
    raise ShapeError(f"unknown tile kind {kind!r}")


def attractor_shape(spec, count: int = 20_000, seed: int = 0) -> CloudShape:
    from .attractor import attractor_box, chaos_game

    cloud = chaos_game(spec, count, seed=seed)
    radius = attractor_box(spec).diameter / max(64.0, count ** (1 / 2))
    return CloudShape(cloud.points, radius, label="A")
