"""SVG and raster drawings of tilings, point clouds, masks and boundary curves.

1D scenes are drawn on a strip: the viewport gives the x range and every
interval becomes a bar of fixed height.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np
from scipy import ndimage

from .attractor import PointCloud
from .centralset import BoundaryCurve
from .raster import RasterField, Window, pixel_centers, write_ppm
from .shapes import CloudShape, IntervalShape, PolygonShape, StencilShape
from .tiling import Tiling, _rasterise

PALETTE = (
    "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2",
    "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac",
)
BAR = (0.3, 0.7)  # strip rows used for 1D bars
MAX_CIRCLES = 20_000


class RenderError(ValueError):
    pass


@dataclass(frozen=True)
class Style:
    fill: str | None = "scale"  # "#rrggbb", "scale" (palette by tile size class) or None
    stroke: str | None = "#202020"
    stroke_width: float = 1.0
    alpha: float = 1.0
    radius: float = 0.75  # point radius in output pixels


@dataclass(frozen=True)
class Circles:
    """Rows ``(x, y, r)`` in world coordinates."""

    rows: np.ndarray


@dataclass
class Layer:
    source: object
    style: Style = field(default_factory=Style)
    name: str = ""


@dataclass
class Scene:
    layers: list
    viewport: Window
    size: tuple = (800, 800)
    background: str = "#ffffff"

    def __post_init__(self):
        if self.viewport.dimension not in (1, 2):
            raise RenderError("only 1D and 2D scenes can be drawn")
        w, h = (int(v) for v in self.size)
        if w < 2 or h < 2:
            raise RenderError("output size must be at least 2x2")
        self.size = (w, h)

    @property
    def is_empty(self) -> bool:
        return not any(_layer_nonempty(layer) for layer in self.layers)

    @classmethod
    def fit(cls, layers, size=(800, 800), pad: float = 0.05, **kw) -> "Scene":
        """Scene whose viewport is the padded union of the layers' bounds."""
        boxes = [b for b in (_bounds(layer.source) for layer in layers) if b is not None]
        if not boxes:
            raise RenderError("empty scene")
        lo = np.min([b.lo for b in boxes], axis=0)
        hi = np.max([b.hi for b in boxes], axis=0)
        span = np.maximum(hi - lo, 1e-9)
        vp = Window(tuple(lo - pad * span), tuple(hi + pad * span))
        if vp.dimension == 2:
            # keep the aspect ratio of the output
            w, h = size
            sx, sy = vp.size
            want = sx / w * h
            if want > sy:
                vp = Window((vp.lo[0], vp.center[1] - want / 2), (vp.hi[0], vp.center[1] + want / 2))
            else:
                wx = sy / h * w
                vp = Window((vp.center[0] - wx / 2, vp.lo[1]), (vp.center[0] + wx / 2, vp.hi[1]))
        return cls(list(layers), vp, size, **kw)


def _layer_nonempty(layer: Layer) -> bool:
    src = layer.source
    if isinstance(src, (Tiling, PointCloud, BoundaryCurve)):
        return len(src) > 0
    if isinstance(src, Circles):
        return len(src.rows) > 0
    if isinstance(src, RasterField):
        return bool(np.asarray(src.samples).any())
    return False


def _bounds(src):
    if isinstance(src, Tiling):
        return src.union_bounds() if len(src) else None
    if isinstance(src, PointCloud):
        return src.bounds() if len(src) else None
    if isinstance(src, BoundaryCurve):
        pts = src.points()
        return Window(tuple(pts.min(0)), tuple(pts.max(0))) if len(pts) else None
    if isinstance(src, RasterField):
        return src.window
    if isinstance(src, Circles) and len(src.rows):
        r = src.rows
        return Window((float((r[:, 0] - r[:, 2]).min()), float((r[:, 1] - r[:, 2]).min())),
                      (float((r[:, 0] + r[:, 2]).max()), float((r[:, 1] + r[:, 2]).max())))
    return None


def scale_classes(t: Tiling) -> np.ndarray:
    """Index of each tile's size class, largest tiles first."""
    if len(t) == 0:
        return np.zeros(0, dtype=int)
    logs = np.log(t.scales)
    reps = np.unique(np.round(logs / 1e-9) * 1e-9)[::-1]
    return np.abs(logs[:, None] - reps[None, :]).argmin(axis=1)


def _fill_for(style: Style, cls: int) -> str | None:
    if style.fill == "scale":
        return PALETTE[cls % len(PALETTE)]
    return style.fill


# -------------------------------------------------------------------- SVG


class _Frame:
    """World to SVG user units (y flipped)."""

    def __init__(self, scene: Scene):
        self.vp = scene.viewport
        self.w, self.h = scene.size
        self.one_d = self.vp.dimension == 1

    def x(self, v):
        return (np.asarray(v) - self.vp.lo[0]) / self.vp.size[0] * self.w

    def y(self, v):
        if self.one_d:
            return (1 - np.asarray(v)) * self.h
        return (self.vp.hi[1] - np.asarray(v)) / self.vp.size[1] * self.h

    def points(self, pts):
        pts = np.asarray(pts, dtype=float)
        if self.one_d:
            return np.stack([self.x(pts[:, 0]), np.full(len(pts), self.h / 2)], axis=1)
        return np.stack([self.x(pts[:, 0]), self.y(pts[:, 1])], axis=1)


def _num(v: float) -> str:
    s = f"{v:.6f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _path(polys) -> str:
    parts = []
    for p in polys:
        parts.append("M" + " L".join(f"{_num(x)} {_num(y)}" for x, y in p) + " Z")
    return " ".join(parts)


def _svg_attrs(fill, style: Style) -> str:
    out = [f'fill="{fill}"' if fill else 'fill="none"']
    if fill and style.alpha < 1:
        out.append(f'fill-opacity="{_num(style.alpha)}"')
    if style.stroke:
        out.append(f'stroke="{style.stroke}" stroke-width="{_num(style.stroke_width)}"')
    return " ".join(out)


def _svg_tiling(t: Tiling, style: Style, fr: _Frame) -> list:
    out = []
    classes = scale_classes(t)
    per_tile = max(200, MAX_CIRCLES // max(1, len(t)))
    for p in range(len(t)):
        shape = t.shape_of(p)
        M, g = t.matrices[p], t.translations[p]
        attrs = _svg_attrs(_fill_for(style, int(classes[p])), style)
        if isinstance(shape, IntervalShape) or (fr.one_d and isinstance(shape, StencilShape)):
            for seg in shape.outlines():
                a, b = sorted((seg[:, 0] * M[0, 0] + g[0]).tolist())
                x0, x1 = fr.x(a), fr.x(b)
                y0, y1 = fr.y(BAR[1]), fr.y(BAR[0])
                out.append(f'<rect x="{_num(x0)}" y="{_num(y0)}" width="{_num(x1 - x0)}" height="{_num(y1 - y0)}" {attrs}/>')
        elif isinstance(shape, (PolygonShape, StencilShape)):
            polys = [fr.points(line @ M.T + g) for line in shape.outlines()]
            out.append(f'<path d="{_path(polys)}" fill-rule="evenodd" {attrs}/>')
        elif isinstance(shape, CloudShape):
            pts = fr.points(_thin(shape.points, per_tile) @ M.T + g)
            out.append(_svg_dots(pts, _fill_for(style, int(classes[p])) or "#000000", style.radius))
    return out


def _thin(pts, limit: int = MAX_CIRCLES):
    step = max(1, int(np.ceil(len(pts) / limit)))
    return pts[::step]


def _svg_dots(pts, color: str, radius: float) -> str:
    body = "".join(f'<circle cx="{_num(x)}" cy="{_num(y)}" r="{_num(radius)}"/>' for x, y in pts)
    return f'<g fill="{color}" stroke="none">{body}</g>'


def render_svg(scene: Scene) -> str:
    """An SVG 1.1 document; identical scenes give identical text."""
    if scene.is_empty:
        raise RenderError("empty scene")
    fr = _Frame(scene)
    w, h = scene.size
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="{scene.background}"/>',
    ]
    for layer in scene.layers:
        src, st = layer.source, layer.style
        out.append(f'<g id="{escape(layer.name)}">' if layer.name else "<g>")
        if isinstance(src, Tiling):
            out.extend(_svg_tiling(src, st, fr))
        elif isinstance(src, PointCloud):
            out.append(_svg_dots(fr.points(_thin(src.points)), st.fill if st.fill not in (None, "scale") else "#000000", st.radius))
        elif isinstance(src, BoundaryCurve):
            color = st.stroke or "#000000"
            for line in src.polylines:
                if fr.one_d:
                    for x in line[:, 0]:
                        out.append(f'<line x1="{_num(fr.x(x))}" y1="0" x2="{_num(fr.x(x))}" y2="{h}" stroke="{color}" stroke-width="{_num(st.stroke_width)}"/>')
                else:
                    pts = fr.points(line)
                    d = "M" + " L".join(f"{_num(x)} {_num(y)}" for x, y in pts)
                    out.append(f'<path d="{d}" fill="none" stroke="{color}" stroke-width="{_num(st.stroke_width)}"/>')
        elif isinstance(src, Circles):
            color = st.stroke or "#000000"
            sx = w / scene.viewport.size[0]
            for x, y, r in src.rows:
                cx, cy = fr.points(np.array([[x, y]]))[0]
                out.append(f'<circle cx="{_num(cx)}" cy="{_num(cy)}" r="{_num(r * sx)}" fill="none" stroke="{color}" stroke-width="{_num(st.stroke_width)}"/>')
        elif isinstance(src, RasterField):
            shape = StencilShape(src, label=layer.name or "mask", kind="mask")
            polys = [fr.points(line) for line in shape.outlines()]
            if fr.one_d:
                for seg in shape.outlines():
                    x0, x1 = fr.x(seg[0, 0]), fr.x(seg[1, 0])
                    out.append(f'<rect x="{_num(x0)}" y="{_num(fr.y(BAR[1]))}" width="{_num(x1 - x0)}" height="{_num(fr.y(BAR[0]) - fr.y(BAR[1]))}" {_svg_attrs(_fill_for(st, 0), st)}/>')
            else:
                out.append(f'<path d="{_path(polys)}" fill-rule="evenodd" {_svg_attrs(_fill_for(st, 0), st)}/>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


# ----------------------------------------------------------------- raster


@dataclass(frozen=True, eq=False)
class RgbImage:
    window: Window
    pixels: np.ndarray  # (h, w, 3) uint8, row 0 at the bottom

    def write_ppm(self, path) -> None:
        write_ppm(path, self.pixels)

    def tobytes(self) -> bytes:
        return np.ascontiguousarray(self.pixels[::-1]).tobytes()


def _rgb(color: str) -> np.ndarray:
    c = color.lstrip("#")
    if len(c) != 6:
        raise RenderError(f"colors must be #RRGGBB, got {color!r}")
    return np.array([int(c[k : k + 2], 16) for k in (0, 2, 4)], dtype=float)


def _blend(img: np.ndarray, mask: np.ndarray, color: str, alpha: float) -> None:
    if mask.any():
        img[mask] = (1 - alpha) * img[mask] + alpha * _rgb(color)


def render_raster(scene: Scene, resolution=None) -> RgbImage:
    """Pixel-centre sampling with per-layer alpha compositing.

    A tile's stroke is its inner boundary (on-pixels with an off 4-neighbour
    inside the image), so two touching tiles show the stroke on their shared edge.
    """
    if scene.is_empty:
        raise RenderError("empty scene")
    w, h = (int(v) for v in (resolution or scene.size))
    vp = scene.viewport
    one_d = vp.dimension == 1
    img = np.empty((h, w, 3), dtype=float)
    img[:] = _rgb(scene.background)
    win2 = vp if not one_d else Window((vp.lo[0], 0.0), (vp.hi[0], 1.0))
    bar = np.zeros((h,), dtype=bool)
    ys = (np.arange(h) + 0.5) / h
    bar[(ys >= BAR[0]) & (ys <= BAR[1])] = True
    for layer in scene.layers:
        src, st = layer.source, layer.style
        if isinstance(src, Tiling):
            _raster_tiling(img, src, st, vp, (w, h), bar if one_d else None)
        elif isinstance(src, PointCloud):
            m = _splat(src.points, win2, (w, h), one_d)
            _blend(img, m, st.fill if st.fill not in (None, "scale") else "#000000", st.alpha)
        elif isinstance(src, RasterField):
            m = _resample(src, vp, (w, h))
            if one_d:
                m = bar[:, None] & m[None, :]
            if st.fill:
                _blend(img, m, _fill_for(st, 0), st.alpha)
            if st.stroke:
                _blend(img, _edge(m), st.stroke, 1.0)
        elif isinstance(src, BoundaryCurve):
            m = np.zeros((h, w), dtype=bool)
            for line in src.polylines:
                m |= _trace(line, win2, (w, h), one_d)
            _blend(img, m, st.stroke or "#000000", 1.0)
        elif isinstance(src, Circles):
            m = np.zeros((h, w), dtype=bool)
            t = np.linspace(0, 2 * np.pi, 256)
            for x, y, r in src.rows:
                ring = np.stack([x + r * np.cos(t), y + r * np.sin(t)], axis=1)
                m |= _trace(ring, win2, (w, h), False)
            _blend(img, m, st.stroke or "#000000", 1.0)
    return RgbImage(win2, np.round(img).clip(0, 255).astype(np.uint8))


def _raster_tiling(img, t: Tiling, st: Style, vp: Window, size, bar):
    w, h = size
    res = (w,) if bar is not None else (w, h)
    classes = scale_classes(t)
    edges = np.zeros((h, w), dtype=bool)
    rasters = _rasterise(t, vp, res)
    for p, r in enumerate(rasters):
        if r is None:
            continue
        m = np.zeros((w,) if bar is not None else (h, w), dtype=bool)
        sl = tuple(reversed([slice(int(a), int(a) + s) for a, s in zip(r.origin, reversed(r.mask.shape))]))
        m[sl] = r.mask
        if bar is not None:
            m = bar[:, None] & m[None, :]
        fill = _fill_for(st, int(classes[p]))
        if fill:
            _blend(img, m, fill, st.alpha)
        if st.stroke:
            edges |= _edge(m)
    if st.stroke:
        _blend(img, edges, st.stroke, 1.0)


def _edge(m: np.ndarray) -> np.ndarray:
    return m & ~ndimage.binary_erosion(m, border_value=1)


def _resample(field: RasterField, vp: Window, size) -> np.ndarray:
    w, h = size
    res = (w,) if vp.dimension == 1 else (w, h)
    centers = pixel_centers(vp, res)
    return field.lookup(centers, outside=0).astype(bool).reshape(tuple(reversed(res)))


def _pixel(pts, win: Window, size):
    w, h = size
    ij = np.floor((pts - np.asarray(win.lo)) / win.size * np.array([w, h])).astype(np.int64)
    ok = (ij[:, 0] >= 0) & (ij[:, 0] < w) & (ij[:, 1] >= 0) & (ij[:, 1] < h)
    return ij[ok]


def _splat(pts, win: Window, size, one_d: bool) -> np.ndarray:
    w, h = size
    pts = np.asarray(pts, dtype=float)
    if one_d:
        pts = np.stack([pts[:, 0], np.full(len(pts), 0.5)], axis=1)
    m = np.zeros((h, w), dtype=bool)
    ij = _pixel(pts, win, size)
    m[ij[:, 1], ij[:, 0]] = True
    return m


def _trace(line, win: Window, size, one_d: bool) -> np.ndarray:
    w, h = size
    line = np.asarray(line, dtype=float)
    m = np.zeros((h, w), dtype=bool)
    if one_d:
        for x in line[:, 0]:
            ij = _pixel(np.array([[x, 0.5]]), win, size)
            if len(ij):
                m[:, ij[0, 0]] = True
        return m
    if len(line) == 1:
        line = np.vstack([line, line])
    seg = np.diff(line, axis=0)
    px = np.abs(seg / win.size * np.array([w, h])).max(axis=1)
    pts = [line[:1]]
    for a, d, n in zip(line[:-1], seg, px):
        k = int(np.ceil(n * 2)) + 1
        pts.append(a + np.linspace(0, 1, k)[:, None] * d)
    ij = _pixel(np.concatenate(pts), win, size)
    m[ij[:, 1], ij[:, 0]] = True
    return m
