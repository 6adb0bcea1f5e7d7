"""Raster estimate of the central open set ``C = {x : d(x, A) < d(x, H)}``.

Also boundary extraction (marching squares on ``d(x,H) - d(x,A)``),
feasibility checks on the estimate, and conversion into a tile stencil.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from skimage import measure

from .attractor import (
    PointCloud,
    attractor_diameter,
    chaos_game,
    default_window,
    distance_field,
    moran_dimension,
    moran_weights,
)
from .geometry import IfsSpec, Similitude, invert
from .neighbors import fast_basin_slice
from .raster import RasterField, Window, sample_shape

log = logging.getLogger(__name__)

TIE_EPS = 1e-12
BAND_PIXELS = 2
# C usually reaches beyond the attractor's box (the Sierpinski hexagon does)
CENTRAL_PAD = 0.3
NEAR_EMPTY_FRACTION = 0.02


class CentralSetError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CentralSetEstimate:
    mask: RasterField
    dA: RasterField
    dH: RasterField
    margin: RasterField
    depth: int
    attractor: PointCloud = None
    fast_basin: PointCloud = None
    flags: tuple = ()

    @property
    def window(self) -> Window:
        return self.mask.window

    @property
    def is_empty(self) -> bool:
        return not bool(self.mask.samples.any())

    @property
    def area(self) -> float:
        """Measure of the on-pixels (length in 1D)."""
        return float(self.mask.samples.sum()) * self.mask.pixel_area

    @property
    def unbounded_suspected(self) -> bool:
        return "unbounded-suspected" in self.flags


def _touches_edge(mask: np.ndarray) -> bool:
    if mask.ndim == 1:
        return bool(mask[0] or mask[-1])
    return bool(mask[0].any() or mask[-1].any() or mask[:, 0].any() or mask[:, -1].any())


def estimate_central_set(
    spec: IfsSpec,
    window: Window | None = None,
    resolution=1024,
    neighbor_depth: int = 4,
    cloud_size: int = 1_000_000,
    seed: int = 0,
    weighted: bool = True,
) -> CentralSetEstimate:
    """Chaos-game cloud for A, neighbor images for H, two distance fields, compare.

    ``weighted`` picks maps with probability ``ratio_i ** D`` so the cloud
    covers A evenly; for equal ratios this is the uniform choice.
    """
    window = window or default_window(spec, pad=CENTRAL_PAD)
    resolution = tuple(int(r) for r in np.atleast_1d(resolution))
    if len(resolution) == 1 and spec.dimension == 2:
        resolution = resolution * 2
    probs = moran_weights(spec) if weighted else None
    cloud = chaos_game(spec, cloud_size, seed=seed, probabilities=probs)
    if len(cloud) == 0:
        raise CentralSetError("empty attractor cloud")
    if not window.intersects(cloud.bounds()):
        raise CentralSetError("window does not meet the attractor")
    dA = distance_field(cloud, window, resolution)
    # an H point further than max d(., A) from the window cannot flip any pixel
    reach = float(dA.samples.max()) + 2 * dA.pixel_diagonal
    # sample H about four points per pixel width along A
    dim = moran_dimension(spec.ratios)
    per_piece = math.ceil((4 * attractor_diameter(spec) / float(np.min(dA.pixel_size))) ** dim)
    H = fast_basin_slice(spec, cloud, neighbor_depth, cutoff=reach, region=window, density=per_piece)
    flags = []
    if len(H) == 0:
        dH = dA.with_samples(np.full(dA.samples.shape, np.inf), "distance")
        flags.append("no-fast-basin-points")
    else:
        dH = distance_field(H, window, resolution)
    margin = dH.samples - dA.samples
    on = margin > TIE_EPS
    mask = RasterField(window, on, "mask")
    if not on.any():
        flags.append("empty")
        warnings.warn("central set estimate is empty: no evidence for the open set condition", stacklevel=2)
    else:
        if on.mean() < NEAR_EMPTY_FRACTION:
            flags.append("near-empty")
            warnings.warn("central set estimate is nearly empty: the open set condition probably fails", stacklevel=2)
        if _touches_edge(on):
            flags.append("unbounded-suspected")
    return CentralSetEstimate(
        mask=mask,
        dA=dA,
        dH=dH,
        margin=dA.with_samples(margin, "margin"),
        depth=neighbor_depth,
        attractor=cloud,
        fast_basin=H,
        flags=tuple(flags),
    )


# ----------------------------------------------------------- feasibility


def _image_mask(est: CentralSetEstimate, f: Similitude) -> np.ndarray:
    """Raster of ``f(C~)`` on the estimate's grid, by pulling pixel centres back through f."""
    centers = est.mask.centers()
    pre = invert(f)(centers)
    return est.mask.lookup(pre, outside=False).astype(bool).reshape(est.mask.samples.shape)


@dataclass(frozen=True)
class FeasibilityReport:
    passed: bool
    band_pixels: int
    containment_violations: tuple  # per map: pixels of f_i(C~) outside C~ beyond the band
    containment_fraction: tuple  # same, as a fraction of f_i(C~)
    overlap_pixels: dict  # (i, j) -> pixels of f_i(C~) n f_j(C~) deeper than the band in both
    raw_overlap_pixels: dict
    message: str = ""

    def to_json(self):
        return {
            "passed": self.passed,
            "band_pixels": self.band_pixels,
            "containment_violations": list(self.containment_violations),
            "containment_fraction": list(self.containment_fraction),
            "overlap_pixels": {f"{i},{j}": v for (i, j), v in self.overlap_pixels.items()},
            "raw_overlap_pixels": {f"{i},{j}": v for (i, j), v in self.raw_overlap_pixels.items()},
            "message": self.message,
        }


def feasibility_check(spec: IfsSpec, est: CentralSetEstimate, band: int = BAND_PIXELS) -> FeasibilityReport:
    """Raster evidence for ``F(C~) in C~`` and pairwise disjoint images.

    Discrepancies within ``band`` pixels of a boundary are tolerated: a pixel
    counts as a containment violation only when it lies more than ``band``
    pixels outside ``C~``, and as an overlap only when it lies more than
    ``band`` pixels inside both images.
    """
    m = spec.m
    if est.is_empty:
        return FeasibilityReport(False, band, (), (), {}, {}, "OSC evidence: fails (empty central set estimate)")
    base = est.mask.samples
    outside_depth = ndimage.distance_transform_edt(~base)
    images = [_image_mask(est, f) for f in spec.maps]
    depths = [ndimage.distance_transform_edt(im) for im in images]
    viol, frac = [], []
    for im in images:
        bad = im & (outside_depth > band)
        viol.append(int(bad.sum()))
        frac.append(float(bad.sum()) / max(1, int(im.sum())))
    overlap, raw = {}, {}
    for i in range(m):
        for j in range(i + 1, m):
            both = images[i] & images[j]
            raw[(i + 1, j + 1)] = int(both.sum())
            overlap[(i + 1, j + 1)] = int((both & (depths[i] > band) & (depths[j] > band)).sum())
    passed = sum(viol) == 0 and sum(overlap.values()) == 0
    msg = "OSC evidence: consistent within band" if passed else "OSC evidence: violations beyond band"
    return FeasibilityReport(passed, band, tuple(viol), tuple(frac), overlap, raw, msg)


# -------------------------------------------------------------- boundary


@dataclass(frozen=True, eq=False)
class BoundaryCurve:
    polylines: tuple  # of (K, n) arrays in world coordinates

    def __len__(self):
        return len(self.polylines)

    def points(self) -> np.ndarray:
        if not self.polylines:
            return np.empty((0, 2))
        return np.concatenate(self.polylines)

    def to_csv(self) -> str:
        lines = []
        for k, line in enumerate(self.polylines):
            for p in line:
                lines.append(",".join([str(k)] + [repr(float(v)) for v in p]))
        return "\n".join(lines) + ("\n" if lines else "")


def extract_boundary(est: CentralSetEstimate) -> BoundaryCurve:
    """Zero level of the margin field, linearly interpolated between pixel centres.

    2D uses marching squares; 1D returns one single-point polyline per sign change.
    """
    if est.is_empty:
        raise CentralSetError("empty central set estimate")
    margin = np.asarray(est.margin.samples, dtype=float)
    margin = np.where(np.isfinite(margin), margin, np.nanmax(np.where(np.isfinite(margin), margin, np.nan)) + 1.0)
    win = est.window
    psize = est.mask.pixel_size
    lo = np.asarray(win.lo)
    if margin.ndim == 1:
        xs = lo[0] + (np.arange(len(margin)) + 0.5) * psize[0]
        pos = margin > TIE_EPS
        out = []
        for k in np.nonzero(pos[1:] != pos[:-1])[0]:
            a, b = margin[k], margin[k + 1]
            t = a / (a - b) if a != b else 0.5
            out.append(np.array([[xs[k] + t * (xs[k + 1] - xs[k])]]))
        return BoundaryCurve(tuple(out))
    contours = measure.find_contours(margin, 0.0)
    lines = []
    for c in contours:
        # (row, col) -> (x, y)
        xy = lo + (c[:, ::-1] + 0.5) * psize
        lines.append(xy)
    return BoundaryCurve(tuple(lines))


def inscribed_circles(est: CentralSetEstimate, boundary: BoundaryCurve, every: int = 8):
    """Circles centred on boundary samples touching A: ``(x, y, r)`` rows.

    At a boundary point ``d(x, A) == d(x, H)``, so each circle also touches H.
    """
    rows = []
    for line in boundary.polylines:
        for p in line[::every]:
            r = float(est.dA.lookup(p[None])[0])
            rows.append([*p, r])
    return np.asarray(rows).reshape(-1, est.mask.dimension + 1)


# --------------------------------------------------------------- stencil


def tile_shape_from_mask(est: CentralSetEstimate, label: str = "C"):
    from .shapes import StencilShape

    if est.is_empty:
        raise CentralSetError("empty central set estimate")
    return StencilShape(est.mask, label=label, kind="central-set-stencil")
