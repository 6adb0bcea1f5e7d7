"""Cost-function tilings.

For a budget ``B`` the cut set is every word ``w`` with ``c(w minus last digit) <= B < c(w)``.
The tiling of prefix ``i|k`` pulls the cut-set images ``f_w(T)`` at budget
``c(i|k)`` back through ``f_{-(i|k)}``.  Tilings are kept as transform sets;
shapes only matter for rasterising, overlap measurement and drawing.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .geometry import (
    UNCHECKED,
    Address,
    CostFunction,
    IfsSpec,
    Similitude,
    cost,
    format_word,
    invert,
    shift,
    stack_maps,
    word_map_inverse,
)
from .neighbors import _dedup
from .raster import Window, pixel_centers
from .shapes import TileShape

CUT_CAP = 1_000_000
SET_RTOL = 1e-9
BAND_PIXELS = 2


class TilingError(ValueError):
    pass


class CutSetCapError(TilingError):
    pass


def _threshold(budget: float) -> float:
    # costs are sums of floats; a word whose cost equals the budget up to
    # rounding must not be emitted
    return budget + 1e-9 * max(1.0, abs(budget))


# ---------------------------------------------------------------- cut sets


@dataclass(frozen=True)
class CutSet:
    words: tuple
    costs: tuple
    budget: float

    def __len__(self):
        return len(self.words)

    def __iter__(self):
        return iter(self.words)

    def __contains__(self, w):
        return tuple(w) in set(self.words)


def _enumerate(costs, budget: float, cap: int, maps=None):
    """Level-by-level expansion of the word tree.

    Returns the cut-set words in lexicographic order, their costs and, when
    ``maps`` is given, the stacked ``f_w``.
    """
    if budget < 0:
        raise TilingError("budget must be >= 0")
    c = np.asarray(costs, dtype=float)
    m = len(c)
    thr = _threshold(budget)
    words = [()]
    wc = np.zeros(1)
    if maps is not None:
        mats, trans = stack_maps(maps)
        n = mats.shape[1]
        wm, wt = np.eye(n)[None], np.zeros((1, n))
    out_w, out_c, out_m, out_t = [], [], [], []
    total = 0
    while words:
        nc = (wc[:, None] + c[None, :]).ravel()
        nw = [w + (d,) for w in words for d in range(1, m + 1)]
        if maps is not None:
            nm = np.einsum("kij,mjl->kmil", wm, mats).reshape(-1, n, n)
            nt = (np.einsum("kij,mj->kmi", wm, trans) + wt[:, None, :]).reshape(-1, n)
        emit = nc > thr
        total += int(emit.sum())
        keep = np.nonzero(~emit)[0]
        if total + len(keep) > cap:
            raise CutSetCapError(f"cut set at budget {budget:g} exceeds {cap} words")
        hit = np.nonzero(emit)[0]
        out_w.extend(nw[i] for i in hit)
        out_c.append(nc[hit])
        if maps is not None:
            out_m.append(nm[hit])
            out_t.append(nt[hit])
            wm, wt = nm[keep], nt[keep]
        words = [nw[i] for i in keep]
        wc = nc[keep]
    order = sorted(range(len(out_w)), key=out_w.__getitem__)
    out_c = np.concatenate(out_c)[order]
    if maps is None:
        return [out_w[i] for i in order], out_c
    return [out_w[i] for i in order], out_c, np.concatenate(out_m)[order], np.concatenate(out_t)[order]


def cut_set(cf: CostFunction, budget: float, cap: int = CUT_CAP) -> CutSet:
    """Words whose cost first exceeds ``budget``: ``c(w[:-1]) <= budget < c(w)``."""
    words, costs = _enumerate(cf.costs, float(budget), cap)
    return CutSet(tuple(words), tuple(float(v) for v in costs), float(budget))


# ------------------------------------------------------------------ tilings


@dataclass(frozen=True, eq=False)
class Tile:
    transform: Similitude
    shape: str
    word_i: tuple
    word_j: tuple
    cost: float

    @property
    def scale(self) -> float:
        return self.transform.ratio


class Tiling:
    """An ordered, deduplicated set of tile transforms with a shape table.

    Tiles are sorted by ``(word_i, word_j)``; of several tiles with the same
    transform (within ``1e-9`` relative) the first in that order is kept.
    """

    def __init__(self, matrices, translations, word_i, word_j, costs, shapes, labels=None, meta=None, dedup=True):
        mats = np.asarray(matrices, dtype=float)
        trans = np.asarray(translations, dtype=float)
        if mats.ndim != 3 or trans.ndim != 2 or len(mats) != len(trans):
            raise TilingError("transform arrays have inconsistent shapes")
        n = trans.shape[1] if len(trans) else (mats.shape[1] if mats.ndim == 3 else 0)
        if isinstance(shapes, (str, TileShape)):
            shapes = {_label(shapes): shapes if isinstance(shapes, TileShape) else None}
        self.shapes = dict(shapes)
        default = next(iter(self.shapes)) if self.shapes else "T"
        word_i = list(word_i)
        word_j = list(word_j)
        labels = list(labels) if labels is not None else [default] * len(mats)
        costs = np.asarray(costs, dtype=float).reshape(-1)
        order = sorted(range(len(mats)), key=lambda p: (word_i[p], word_j[p]))
        mats, trans, costs = mats[order], trans[order], costs[order]
        word_i = [word_i[p] for p in order]
        word_j = [word_j[p] for p in order]
        labels = [labels[p] for p in order]
        if dedup and len(mats) > 1:
            vecs = np.hstack([mats.reshape(len(mats), -1), trans])
            keep = np.sort(_dedup_keyed(vecs, labels, _set_tol(vecs)))
            mats, trans, costs = mats[keep], trans[keep], costs[keep]
            word_i = [word_i[p] for p in keep]
            word_j = [word_j[p] for p in keep]
            labels = [labels[p] for p in keep]
        self.matrices = mats
        self.translations = trans
        self.word_i = tuple(word_i)
        self.word_j = tuple(word_j)
        self.costs = costs
        self.labels = tuple(labels)
        self.dimension = n
        self.meta = dict(meta or {})
        self._tiles = None

    def __len__(self):
        return len(self.matrices)

    @property
    def tiles(self) -> list:
        if self._tiles is None:
            self._tiles = [
                Tile(Similitude(M, t, tol=UNCHECKED), lab, wi, wj, float(c))
                for M, t, lab, wi, wj, c in zip(
                    self.matrices, self.translations, self.labels, self.word_i, self.word_j, self.costs
                )
            ]
        return self._tiles

    def vectors(self) -> np.ndarray:
        return np.hstack([self.matrices.reshape(len(self), -1), self.translations])

    @property
    def scales(self) -> np.ndarray:
        if len(self) == 0:
            return np.zeros(0)
        return np.abs(np.linalg.det(self.matrices)) ** (1.0 / self.dimension)

    def subset(self, idx, **meta) -> "Tiling":
        idx = np.asarray(idx, dtype=int)
        return Tiling(
            self.matrices[idx].reshape(-1, self.dimension, self.dimension),
            self.translations[idx].reshape(-1, self.dimension),
            [self.word_i[p] for p in idx],
            [self.word_j[p] for p in idx],
            self.costs[idx],
            self.shapes,
            [self.labels[p] for p in idx],
            {**self.meta, **meta},
            dedup=False,
        )

    def transformed(self, g: Similitude) -> "Tiling":
        """``g`` applied to every tile: transforms become ``g o t``."""
        mats = np.einsum("ij,pjk->pik", g.matrix, self.matrices)
        trans = self.translations @ g.matrix.T + g.translation
        return Tiling(mats, trans, self.word_i, self.word_j, self.costs, self.shapes, self.labels, self.meta, dedup=False)

    def with_shape(self, shape: TileShape) -> "Tiling":
        """Same transforms, every tile drawn with ``shape``."""
        return Tiling(
            self.matrices, self.translations, self.word_i, self.word_j, self.costs,
            {shape.label: shape}, [shape.label] * len(self), self.meta, dedup=False,
        )

    def shape_of(self, p: int) -> TileShape:
        shape = self.shapes.get(self.labels[p])
        if shape is None:
            raise TilingError(f"no geometry attached for shape {self.labels[p]!r}")
        return shape

    def tile_bounds(self) -> tuple:
        """Per-tile axis-aligned boxes of the transformed shape bounds, as (lo, hi) arrays."""
        lo = np.empty((len(self), self.dimension))
        hi = np.empty_like(lo)
        cache = {}
        for p in range(len(self)):
            lab = self.labels[p]
            if lab not in cache:
                cache[lab] = self.shape_of(p).bounds().corners()
            img = cache[lab] @ self.matrices[p].T + self.translations[p]
            lo[p], hi[p] = img.min(0), img.max(0)
        return lo, hi

    def union_bounds(self) -> Window:
        lo, hi = self.tile_bounds()
        return Window(tuple(lo.min(0)), tuple(hi.max(0)))

    # -- set comparisons

    def contains_transforms(self, other: "Tiling", tol: float | None = None) -> bool:
        """Every transform of ``other`` appears in ``self``."""
        if len(other) == 0:
            return True
        if len(self) == 0:
            return False
        mine = self.vectors()
        theirs = other.vectors()
        tol = tol if tol is not None else _set_tol(np.vstack([mine, theirs]))
        d, _ = cKDTree(mine).query(theirs, k=1, p=np.inf)
        return bool(np.all(d <= tol))

    def same_transforms(self, other: "Tiling", tol: float | None = None) -> bool:
        return len(self) == len(other) and self.contains_transforms(other, tol) and other.contains_transforms(self, tol)

    # -- export

    def to_json(self) -> dict:
        table = {}
        for lab, shape in self.shapes.items():
            table[lab] = shape.to_json() if shape is not None else {"kind": "unattached", "label": lab}
        tiles = []
        for p in range(len(self)):
            tiles.append(
                {
                    "m": self.matrices[p].ravel().tolist(),
                    "t": self.translations[p].tolist(),
                    "word_i": format_word(self.word_i[p]),
                    "word_j": format_word(self.word_j[p]),
                    "cost": float(self.costs[p]),
                    "scale": float(self.scales[p]),
                    "shape": self.labels[p],
                }
            )
        return {"meta": self.meta, "shape_table": table, "tiles": tiles}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        n = self.dimension
        if n == 2:
            w.writerow(["a", "b", "e", "c", "d", "g", "word_i", "word_j", "cost"])
        else:
            w.writerow([f"m{r}{c}" for r in range(n) for c in range(n)] + [f"t{r}" for r in range(n)] + ["word_i", "word_j", "cost"])
        for p in range(len(self)):
            M, t = self.matrices[p], self.translations[p]
            if n == 2:
                row = [M[0, 0], M[0, 1], t[0], M[1, 0], M[1, 1], t[1]]
            else:
                row = list(M.ravel()) + list(t)
            w.writerow([repr(float(v)) for v in row] + [format_word(self.word_i[p]), format_word(self.word_j[p]), repr(float(self.costs[p]))])
        return buf.getvalue()


def _label(shape) -> str:
    return shape.label if isinstance(shape, TileShape) else str(shape)


def _set_tol(vecs: np.ndarray) -> float:
    scale = float(np.abs(vecs).max()) if vecs.size else 1.0
    return SET_RTOL * max(1.0, scale)


def _dedup_keyed(vecs, labels, tol) -> np.ndarray:
    """Like the plain transform dedup, but tiles with different shapes never merge."""
    out = []
    labels = np.asarray(labels, dtype=object)
    for lab in dict.fromkeys(labels.tolist()):
        idx = np.nonzero(labels == lab)[0]
        out.append(idx[_dedup(vecs[idx], tol)])
    return np.concatenate(out)


def empty_tiling(dimension: int, shapes=None, meta=None) -> Tiling:
    return Tiling(np.zeros((0, dimension, dimension)), np.zeros((0, dimension)), [], [], [], shapes or {"T": None}, meta=meta)


# --------------------------------------------------------------- builders


def _cost_function(spec: IfsSpec, cf) -> CostFunction:
    cf = spec.cost_function if cf is None else cf
    if not isinstance(cf, CostFunction):
        cf = CostFunction(tuple(cf))
    if cf.m != spec.m:
        raise TilingError(f"{cf.m} costs for {spec.m} maps")
    return cf


def tiling_prefix(spec: IfsSpec, T, i_prefix, cf=None, cap: int = CUT_CAP) -> Tiling:
    """Tiles ``f_{-(i|k)} f_w (T)`` for the cut set ``w`` at budget ``c(i|k)``."""
    cf = _cost_function(spec, cf)
    i_prefix = spec.check_word(i_prefix)
    budget = cost(cf, i_prefix)
    words, costs, wm, wt = _enumerate(cf.costs, budget, cap, spec.maps)
    g = word_map_inverse(spec, i_prefix)
    mats = np.einsum("ij,pjk->pik", g.matrix, wm)
    trans = wt @ g.matrix.T + g.translation
    meta = {"word_i": format_word(i_prefix), "budget": budget, "costs": list(cf.costs)}
    return Tiling(mats, trans, [i_prefix] * len(words), words, costs, T, meta=meta)


def tiling_sequence(spec: IfsSpec, T, address: Address, k_max: int, cf=None, cap: int = CUT_CAP) -> list:
    """Tilings of prefixes ``i|0 .. i|k_max``; raises if one fails to contain its predecessor."""
    if k_max < 1:
        raise TilingError("k_max must be >= 1")
    if address.max_digit() > spec.m:
        raise TilingError(f"address uses digit {address.max_digit()} but the IFS has {spec.m} maps")
    out = []
    for k in range(k_max + 1):
        t = tiling_prefix(spec, T, address.prefix(k), cf, cap)
        if out and not t.contains_transforms(out[-1]):
            raise TilingError(f"nesting fails between k={k - 1} and k={k}")
        out.append(t)
    return out


def _integer_costs(spec: IfsSpec) -> tuple:
    ints = spec.integer_exponents(1e-9)
    if ints is None:
        raise TilingError("scale exponents are not integers; canonical tilings need integer exponents")
    return ints


def canonical_tiling(spec: IfsSpec, k: int, shape=None, cap: int = CUT_CAP) -> Tiling:
    """``s^-k`` times the cut-set images of A at budget ``k``, costs set to the exponents."""
    if k < 0 or int(k) != k:
        raise TilingError("k must be a non-negative integer")
    ints = _integer_costs(spec)
    words, costs, wm, wt = _enumerate(ints, float(k), cap, spec.maps)
    z = spec.base_scale ** (-int(k))
    shape = "A" if shape is None else shape
    meta = {"canonical_k": int(k), "budget": float(k), "costs": list(ints)}
    return Tiling(wm * z, wt * z, [()] * len(words), words, costs, shape, meta=meta)


def canonical_relation_check(spec: IfsSpec, address: Address, k: int) -> bool:
    """Does the prefix tiling of ``i|k`` equal ``f_{-(i|k)} s^c T_c`` with ``c = c(i|k)``?"""
    ints = _integer_costs(spec)
    cf = CostFunction(ints)
    w = address.prefix(k)
    c = int(round(cost(cf, w)))
    lhs = tiling_prefix(spec, "A", w, cf)
    g = word_map_inverse(spec, w) @ Similitude(np.eye(spec.dimension) * spec.base_scale**c, np.zeros(spec.dimension))
    rhs = canonical_tiling(spec, c).transformed(g)
    return lhs.same_transforms(rhs)


def shift_equivalence_check(spec: IfsSpec, T, i: Address, j: Address, p: int, q: int, k_max: int, cf=None) -> Similitude:
    """The map ``E`` with ``Pi(i|p+r) = E Pi(j|q+r)``, verified for ``r = 0..k_max``.

    Needs ``shift^p i == shift^q j`` and ``c(i|p) == c(j|q)``, with costs equal
    to integer scale exponents.
    """
    cf = _cost_function(spec, cf)
    ints = spec.integer_exponents(1e-9)
    if ints is None or any(abs(a - b) > 1e-9 for a, b in zip(cf.costs, ints)):
        raise TilingError("costs must equal the integer scale exponents")
    if shift(i, p) != shift(j, q):
        raise TilingError("the tails after p and q digits differ")
    wi, wj = i.prefix(p), j.prefix(q)
    if abs(cost(cf, wi) - cost(cf, wj)) > 1e-9:
        raise TilingError("prefix costs differ")
    E = word_map_inverse(spec, wi) @ invert(word_map_inverse(spec, wj))
    for r in range(k_max + 1):
        a = tiling_prefix(spec, T, i.prefix(p + r), cf)
        b = tiling_prefix(spec, T, j.prefix(q + r), cf).transformed(E)
        if not a.same_transforms(b):
            raise TilingError(f"transform sets differ at r={r}")
    return E


# --------------------------------------------------------------- analysis


@dataclass(frozen=True)
class Commensurability:
    commensurate: bool
    ratio: float | None
    scales: tuple

    def __str__(self):
        return f"commensurate(ratio {self.ratio:.12g})" if self.commensurate else "incommensurate"


def _distinct(values: np.ndarray, tol: float) -> np.ndarray:
    v = np.sort(values)
    keep = np.r_[True, np.diff(v) > tol]
    return v[keep]


def commensurability(t: Tiling, max_denominator: int = 64) -> Commensurability:
    """Are all tile sizes powers of one ratio ``r`` (up to a common factor)?"""
    if len(t) < 2:
        raise TilingError("need at least two tiles")
    logs = _distinct(np.log(t.scales), 1e-9)
    scales = tuple(float(v) for v in np.exp(logs))
    if len(logs) == 1:
        return Commensurability(True, scales[0], scales)
    d = logs - logs[0]
    g = float(np.min(np.diff(logs)))
    for q in range(1, max_denominator + 1):
        step = g / q
        n = np.round(d / step)
        if np.all(np.abs(d - n * step) <= 1e-9 * np.maximum(1.0, np.abs(d))):
            return Commensurability(True, math.exp(-step), scales)
    return Commensurability(False, None, scales)


def scale_census(t: Tiling) -> dict:
    """Distinct tile scales with their counts."""
    if len(t) == 0:
        return {}
    logs = np.log(t.scales)
    reps = _distinct(logs, 1e-9)
    idx = np.abs(logs[:, None] - reps[None, :]).argmin(axis=1)
    counts = np.bincount(idx, minlength=len(reps))
    return {float(np.exp(r)): int(c) for r, c in zip(reps, counts)}


def patch(t: Tiling, window: Window) -> Tiling:
    """Tiles meeting the closed window."""
    if len(t) == 0:
        return t
    lo, hi = t.tile_bounds()
    wlo, whi = np.asarray(window.lo), np.asarray(window.hi)
    coarse = np.nonzero(np.all((lo <= whi) & (hi >= wlo), axis=1))[0]
    keep = [p for p in coarse if t.shape_of(p).meets_window(_similitude(t, p), window)]
    return t.subset(keep, patch_window=window.to_json())


def _similitude(t: Tiling, p: int) -> Similitude:
    return Similitude(t.matrices[p], t.translations[p], tol=UNCHECKED)


# ---------------------------------------------------------- rasterisation


@dataclass(frozen=True, eq=False)
class _TileRaster:
    origin: np.ndarray  # pixel index of mask[0...0], coordinate order
    mask: np.ndarray  # sample order (rows = y)


def _grid(window: Window, resolution):
    res = tuple(int(r) for r in np.atleast_1d(resolution))
    if len(res) == 1 and window.dimension == 2:
        res = res * 2
    if len(res) != window.dimension:
        raise TilingError("resolution does not match the window's dimension")
    return res, window.size / np.asarray(res)


def _rasterise(t: Tiling, window: Window, resolution, indices=None) -> list:
    """Per tile, the on-pixels of ``g(T)`` inside the window (None when it misses)."""
    res, psize = _grid(window, resolution)
    lo_w = np.asarray(window.lo)
    blo, bhi = t.tile_bounds()
    out = []
    inv = np.linalg.inv(t.matrices)
    for p in range(len(t)) if indices is None else indices:
        a = np.floor((blo[p] - lo_w) / psize - 0.5).astype(int)
        b = np.ceil((bhi[p] - lo_w) / psize - 0.5).astype(int) + 1
        a = np.maximum(a, 0)
        b = np.minimum(b, res)
        if np.any(b <= a):
            out.append(None)
            continue
        sub = Window(tuple(lo_w + a * psize), tuple(lo_w + b * psize))
        centers = pixel_centers(sub, tuple(b - a))
        pre = (centers - t.translations[p]) @ inv[p].T
        m = t.shape_of(p).contains(pre).reshape(tuple(reversed(tuple(b - a))))
        out.append(_TileRaster(a, m) if m.any() else None)
    return out


def coverage_fraction(t: Tiling, window: Window, resolution) -> float:
    """Fraction of window pixels whose centre lies in at least one tile."""
    res, _ = _grid(window, resolution)
    if len(t) == 0:
        return 0.0
    lo, hi = t.tile_bounds()
    wlo, whi = np.asarray(window.lo), np.asarray(window.hi)
    near = np.nonzero(np.all((lo <= whi) & (hi >= wlo), axis=1))[0]
    cover = np.zeros(tuple(reversed(res)), dtype=bool)
    for r in _rasterise(t, window, res, near):
        if r is not None:
            cover[_slices(r)] |= r.mask
    return float(cover.mean())


def _slices(r: _TileRaster, pad: int = 0):
    sl = [slice(int(a) - pad, int(a) + s - pad) for a, s in zip(r.origin, reversed(r.mask.shape))]
    return tuple(reversed(sl))


@dataclass
class OverlapReport:
    band_pixels: int
    resolution: tuple
    window: Window
    pairs: list = field(default_factory=list)  # only pairs that touch or overlap
    tiles: int = 0

    @property
    def overlapping(self) -> list:
        return [p for p in self.pairs if p["class"] == "overlapping"]

    @property
    def touching(self) -> list:
        return [p for p in self.pairs if p["class"] == "touching"]

    def counts(self) -> dict:
        n = self.tiles * (self.tiles - 1) // 2
        o, tch = len(self.overlapping), len(self.touching)
        return {"overlapping": o, "touching": tch, "disjoint": n - o - tch}

    def to_json(self) -> dict:
        return {
            "band_pixels": self.band_pixels,
            "resolution": list(self.resolution),
            "window": self.window.to_json(),
            "tiles": self.tiles,
            "counts": self.counts(),
            "pairs": self.pairs,
        }


def overlap_report(t: Tiling, resolution, window: Window | None = None, band: int = BAND_PIXELS) -> OverlapReport:
    """Pairwise raster intersections of the tiles.

    A pair is "overlapping" if some pixel lies more than ``band`` pixels deep
    inside both tiles, "touching" if the tiles share pixels or come within
    ``band`` pixels without that, and disjoint otherwise (not listed).
    ``measure`` is the shared pixel count times the pixel area (length in 1D).
    """
    if len(t) == 0:
        raise TilingError("empty tiling")
    window = window or t.union_bounds().padded(0.02)
    res, psize = _grid(window, resolution)
    rep = OverlapReport(band, res, window, tiles=len(t))
    if len(t) < 2:
        return rep
    rasters = _rasterise(t, window, res)
    idx = [p for p, r in enumerate(rasters) if r is not None]
    if len(idx) < 2:
        return rep
    lo = np.array([rasters[p].origin for p in idx])
    hi = np.array([rasters[p].origin + np.array(rasters[p].mask.shape[::-1]) for p in idx])
    cell = float(np.prod(psize))
    reach = band + 1
    for a in range(len(idx)):
        cand = np.nonzero(np.all((lo[a + 1 :] < hi[a] + reach) & (hi[a + 1 :] + reach > lo[a]), axis=1))[0] + a + 1
        for b in cand:
            pa, pb = idx[a], idx[b]
            cls, shared = _classify(rasters[pa], rasters[pb], band)
            if cls != "disjoint":
                rep.pairs.append({"i": int(pa), "j": int(pb), "class": cls, "pixels": int(shared), "measure": shared * cell})
    return rep


def _classify(ra: _TileRaster, rb: _TileRaster, band: int):
    pad = band + 2
    lo = np.minimum(ra.origin, rb.origin) - pad
    hi = np.maximum(ra.origin + np.array(ra.mask.shape[::-1]), rb.origin + np.array(rb.mask.shape[::-1])) + pad
    shape = tuple(reversed(tuple(hi - lo)))

    def place(r):
        m = np.zeros(shape, dtype=bool)
        off = r.origin - lo
        sl = tuple(reversed([slice(int(o), int(o) + s) for o, s in zip(off, reversed(r.mask.shape))]))
        m[sl] = r.mask
        return m

    ma, mb = place(ra), place(rb)
    both = ma & mb
    shared = int(both.sum())
    if shared:
        deep = both & (ndimage.distance_transform_edt(ma) > band) & (ndimage.distance_transform_edt(mb) > band)
        return ("overlapping" if deep.any() else "touching"), shared
    gap = ndimage.distance_transform_edt(~ma)[mb].min()
    return ("touching" if gap <= band else "disjoint"), 0


# ---------------------------------------------------------- reversibility


def reversible_witness(spec: IfsSpec, address: Address, max_len: int = 16, box: Window | None = None):
    """First ``(k, l)``, ``k < l``, with ``f_{i_l} ... f_{i_k}`` mapping a box around A into its interior.

    Only evidence: the box is the attractor's bounding box, so this is exact
    when A is that box and a heuristic otherwise.
    """
    from .attractor import attractor_box

    box = box or attractor_box(spec)
    verts = box.corners()
    # the box comes from an iteration and can exceed the true hull by rounding
    margin = 1e-9 * box.diameter
    lo, hi = np.asarray(box.lo) + margin, np.asarray(box.hi) - margin
    digits = address.prefix(max_len)
    for k in range(1, max_len + 1):
        g = Similitude.identity(spec.dimension)
        for l in range(k, max_len + 1):
            g = spec.maps[digits[l - 1] - 1] @ g
            if l == k:
                continue
            img = g(verts)
            if np.all(img > lo) and np.all(img < hi):
                return k, l
    return None
