"""Attractor point clouds and masks, distance fields, Moran dimension."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.spatial import cKDTree

from .geometry import IfsSpec, Similitude, stack_maps
from .raster import RasterField, Window, pixel_centers, sample_shape

log = logging.getLogger(__name__)

DEFAULT_BURN_IN = 50
DEFAULT_COUNT = 1_000_000


class AttractorError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.size and not np.all(np.isfinite(pts)):
            raise AttractorError("non-finite points in cloud")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]

    def bounds(self) -> Window:
        return Window(tuple(self.points.min(axis=0)), tuple(self.points.max(axis=0)))

    def head(self, n: int) -> "PointCloud":
        return PointCloud(self.points[: max(0, int(n))], dict(self.provenance, head=int(n)))


def fixed_point(f: Similitude) -> np.ndarray:
    n = f.dimension
    return np.linalg.solve(np.eye(n) - f.matrix, f.translation)


def moran_weights(spec: IfsSpec) -> np.ndarray:
    d = moran_dimension(spec.ratios)
    w = np.asarray(spec.ratios) ** d
    return w / w.sum()


def chaos_game(
    spec: IfsSpec,
    count: int = DEFAULT_COUNT,
    burn_in: int = DEFAULT_BURN_IN,
    seed: int = 0,
    orbits: int | None = None,
    probabilities=None,
) -> PointCloud:
    """Random-iteration approximation of the attractor.

    ``orbits`` independent orbits are advanced in lockstep, each with its own
    burn-in, and interleaved step by step, so any prefix of the result is
    spread over the whole attractor.  Every orbit starts at the fixed point of
    ``f_1``.  Map choices are uniform unless ``probabilities`` is given.
    """
    if count < 1:
        raise AttractorError("count must be >= 1")
    if any(not r < 1 for r in spec.ratios):
        raise AttractorError("non-contractive map in spec")
    if orbits is None:
        orbits = min(count, 1024)
    orbits = max(1, min(int(orbits), count))
    steps = -(-count // orbits)
    rng = np.random.default_rng(seed)
    p = None if probabilities is None else np.asarray(probabilities, dtype=float) / np.sum(probabilities)
    choices = rng.choice(spec.m, size=(burn_in + steps, orbits), p=p)
    mats, trans = stack_maps(spec.maps)
    x = np.tile(fixed_point(spec.maps[0]), (orbits, 1))
    out = np.empty((steps, orbits, spec.dimension))
    for k in range(burn_in + steps):
        u = choices[k]
        x = np.einsum("oij,oj->oi", mats[u], x) + trans[u]
        if k >= burn_in:
            out[k - burn_in] = x
    pts = out.reshape(-1, spec.dimension)[:count]
    return PointCloud(
        pts,
        {"seed": seed, "count": count, "burn_in": burn_in, "orbits": orbits, "weighted": p is not None},
    )


def invariant_ball(spec: IfsSpec):
    """Centre and radius of a ball mapped into itself by every f_i."""
    c = np.mean([fixed_point(f) for f in spec.maps], axis=0)
    r = max(np.linalg.norm(f(c) - c) / (1 - f.ratio) for f in spec.maps)
    return c, float(r) * (1 + 1e-12) + 1e-15


def attractor_box(spec: IfsSpec, max_iter: int = 2000) -> Window:
    """Smallest fixed point of ``B -> bbox(f_1(B) u ... u f_m(B))`` above the invariant ball.

    The result contains the attractor and is itself mapped into itself.  For
    maps that only permute axes it equals the attractor's bounding box.
    """
    c, r = invariant_ball(spec)
    lo, hi = c - r, c + r
    mats, trans = stack_maps(spec.maps)
    for _ in range(max_iter):
        mid = (lo + hi) / 2
        half = (hi - lo) / 2
        centers = np.einsum("mij,j->mi", mats, mid) + trans
        halves = np.einsum("mij,j->mi", np.abs(mats), half)
        nlo = (centers - halves).min(axis=0)
        nhi = (centers + halves).max(axis=0)
        if np.allclose(nlo, lo, rtol=0, atol=1e-15) and np.allclose(nhi, hi, rtol=0, atol=1e-15):
            lo, hi = nlo, nhi
            break
        lo, hi = nlo, nhi
    if np.any(hi - lo <= 0):
        pad = 1e-9 * max(1.0, r)
        lo, hi = np.where(hi - lo <= 0, lo - pad, lo), np.where(hi - lo <= 0, hi + pad, hi)
    return Window(tuple(lo), tuple(hi))


def attractor_diameter(spec: IfsSpec) -> float:
    return attractor_box(spec).diameter


def default_window(spec: IfsSpec, pad: float = 0.15) -> Window:
    return attractor_box(spec).padded(pad, square=spec.dimension == 2)


# ----------------------------------------------------------------- masks


def _polygon_distance(px, poly):
    """Distance from points ``px (N, K, 2)`` to convex polygons ``poly (N, V, 2)``; 0 inside."""
    a = poly
    b = np.roll(poly, -1, axis=1)
    e = b - a  # (N, V, 2)
    rel = px[:, :, None, :] - a[:, None, :, :]  # (N, K, V, 2)
    cross = e[:, None, :, 0] * rel[..., 1] - e[:, None, :, 1] * rel[..., 0]
    inside = np.all(cross >= 0, axis=2) | np.all(cross <= 0, axis=2)
    ee = np.einsum("nvd,nvd->nv", e, e)[:, None, :]
    tpar = np.clip(np.einsum("nkvd,nvd->nkv", rel, e) / np.where(ee > 0, ee, 1), 0, 1)
    foot = a[:, None, :, :] + tpar[..., None] * e[:, None, :, :]
    d = np.linalg.norm(px[:, :, None, :] - foot, axis=3).min(axis=2)
    return np.where(inside, 0.0, d)


def _paint_cylinders(mask, window: Window, polys, reach: float):
    """Set pixels whose centre lies within ``reach`` of any convex polygon (2D)."""
    res = np.asarray(mask.shape[::-1])
    psize = window.size / res
    lo = np.asarray(window.lo)
    pmin = polys.min(axis=1) - reach
    pmax = polys.max(axis=1) + reach
    i0 = np.clip(np.ceil((pmin - lo) / psize - 0.5), 0, res - 1).astype(int)
    i1 = np.clip(np.floor((pmax - lo) / psize - 0.5), 0, res - 1).astype(int)
    ok = np.all(i1 >= i0, axis=1) & np.all((pmax >= lo) & (pmin <= np.asarray(window.hi)), axis=1)
    polys, i0, i1 = polys[ok], i0[ok], i1[ok]
    span = i1 - i0 + 1
    small = np.all(span <= 4, axis=1)
    offs = np.stack(np.meshgrid(np.arange(4), np.arange(4), indexing="ij"), -1).reshape(-1, 2)
    sp, s0, s1 = polys[small], i0[small], i1[small]
    for c in range(0, len(sp), 50_000):
        cand = s0[c : c + 50_000, None, :] + offs[None, :, :]  # (N, 16, 2)
        valid = np.all(cand <= s1[c : c + 50_000, None, :], axis=2)
        ctr = lo + (cand + 0.5) * psize
        d = _polygon_distance(ctr, sp[c : c + 50_000])
        sel = cand[valid & (d <= reach)]
        mask[sel[:, 1], sel[:, 0]] = True
    for poly, a, b in zip(polys[~small], i0[~small], i1[~small]):
        xs = np.arange(a[0], b[0] + 1)
        ys = np.arange(a[1], b[1] + 1)
        gx, gy = np.meshgrid(xs, ys)
        ctr = lo + (np.stack([gx.ravel(), gy.ravel()], 1) + 0.5) * psize
        d = _polygon_distance(ctr[None], poly[None])[0]
        hit = d <= reach
        mask[gy.ravel()[hit], gx.ravel()[hit]] = True


def attractor_mask(spec: IfsSpec, window: Window, resolution, depth: int, max_cylinders: int = 4_000_000) -> RasterField:
    """Binary mask of the depth-``depth`` cylinder images of the attractor box.

    A pixel is on iff its centre lies within half a pixel diagonal of some
    ``f_w(B)``, ``|w| = depth``, with ``B = attractor_box(spec)``.  Cylinders
    whose invariant ball misses the window are pruned early.
    """
    if depth < 1:
        raise AttractorError("depth must be >= 1")
    n = spec.dimension
    if window.dimension != n:
        raise AttractorError("window dimension does not match spec")
    resolution = tuple(int(r) for r in np.atleast_1d(resolution))
    if len(resolution) == 1 and n == 2:
        resolution = resolution * 2
    mask = np.zeros(sample_shape(resolution), dtype=bool)
    field_ = RasterField(window, mask, "mask")
    reach = field_.pixel_diagonal / 2
    box = attractor_box(spec)
    c, r = invariant_ball(spec)
    r = max(r, float(np.max(np.linalg.norm(box.corners() - c, axis=1))))
    mats, trans = stack_maps(spec.maps)
    cm = np.eye(n)[None]
    ct = np.zeros((1, n))
    cr = np.ones(1)
    ratios = np.asarray(spec.ratios)
    wlo, whi = np.asarray(window.lo), np.asarray(window.hi)
    for _ in range(depth):
        new_m = np.einsum("kij,mjl->kmil", cm, mats).reshape(-1, n, n)
        new_t = (np.einsum("kij,mj->kmi", cm, trans) + ct[:, None, :]).reshape(-1, n)
        new_r = (cr[:, None] * ratios[None, :]).ravel()
        centers = np.einsum("kij,j->ki", new_m, c) + new_t
        rad = new_r * r + reach
        keep = np.all((centers + rad[:, None] >= wlo) & (centers - rad[:, None] <= whi), axis=1)
        cm, ct, cr = new_m[keep], new_t[keep], new_r[keep]
        if len(cr) > max_cylinders:
            raise AttractorError(f"more than {max_cylinders} cylinders at this depth; lower depth")
    if len(cr) == 0:
        warnings.warn("window does not meet the attractor; mask is empty", stacklevel=2)
        return field_.with_samples(mask)
    if n == 1:
        a = np.einsum("kij,j->ki", cm, np.asarray(box.lo)) + ct
        b = np.einsum("kij,j->ki", cm, np.asarray(box.hi)) + ct
        seg_lo = np.minimum(a, b)[:, 0] - reach
        seg_hi = np.maximum(a, b)[:, 0] + reach
        xs = pixel_centers(window, resolution)[:, 0]
        order = np.argsort(seg_lo)
        seg_lo, seg_hi = seg_lo[order], seg_hi[order]
        run_hi = np.maximum.accumulate(seg_hi)
        j = np.searchsorted(seg_lo, xs, side="right") - 1
        on = (j >= 0) & (run_hi[np.maximum(j, 0)] >= xs)
        return field_.with_samples(on)
    if n != 2:
        raise AttractorError("masks are only rasterised in 1D and 2D")
    corners = box.corners()[[0, 1, 3, 2]]  # counter-clockwise
    polys = np.einsum("kij,vj->kvi", cm, corners) + ct[:, None, :]
    _paint_cylinders(mask, window, polys, reach)
    return field_.with_samples(mask)


# ------------------------------------------------------------- dimension


def moran_dimension(ratios) -> float:
    """Unique ``D > 0`` with ``sum(r_i ** D) == 1``."""
    r = np.asarray(ratios, dtype=float)
    if r.size < 2:
        raise AttractorError("need at least two ratios")
    if np.any((r <= 0) | (r >= 1)):
        raise AttractorError("ratios must lie in (0, 1)")

    def g(d):
        return math.fsum(r**d) - 1.0

    hi = math.log(r.size) / -math.log(r.max())
    if g(hi) == 0.0:
        return hi
    return brentq(g, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


# -------------------------------------------------------------- distances


def nearest_tree(pts) -> cKDTree:
    # sliding-midpoint splits without compaction: much faster on the highly
    # structured clouds fractals produce (points on lines, repeated coordinates)
    return cKDTree(pts, balanced_tree=False, compact_nodes=False)


def distance_field(cloud, window: Window, resolution) -> RasterField:
    """Exact Euclidean distance from each pixel centre to the nearest cloud point."""
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if len(pts) == 0:
        raise AttractorError("empty point cloud")
    resolution = tuple(int(r) for r in np.atleast_1d(resolution))
    if len(resolution) == 1 and window.dimension == 2:
        resolution = resolution * 2
    centers = pixel_centers(window, resolution)
    d, _ = nearest_tree(pts).query(centers, k=1)
    return RasterField(window, d.reshape(sample_shape(resolution)), "distance")

