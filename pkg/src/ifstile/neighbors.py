"""Neighbor maps ``h = f_i^-1 f_j`` (i_1 != j_1), separation estimate, fast-basin slice."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .attractor import PointCloud, attractor_box, invariant_ball, moran_dimension
from .geometry import SIMILARITY_RTOL, UNCHECKED, IfsSpec, Similitude, all_words, format_word, stack_maps
from .raster import Window


class NeighborError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class NeighborSet:
    maps: tuple
    words: tuple  # (word_i, word_j) per map, the first pair found
    depth: int
    tol: float

    def __len__(self):
        return len(self.maps)

    def arrays(self):
        return stack_maps(self.maps)

    def to_json(self) -> list:
        out = []
        for h, (wi, wj) in zip(self.maps, self.words):
            out.append(
                {
                    "matrix": h.matrix.tolist(),
                    "translation": h.translation.tolist(),
                    "word_i": format_word(wi),
                    "word_j": format_word(wj),
                    "lambda": h.ratio,
                }
            )
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1) + "\n"


def word_map_arrays(spec: IfsSpec, depth: int):
    """All words of length 1..depth with their maps ``f_w`` as stacked arrays."""
    n = spec.dimension
    mats, trans = stack_maps(spec.maps)
    words, ms, ts = [], [], []
    lvl_w = [()]
    lvl_m = np.eye(n)[None]
    lvl_t = np.zeros((1, n))
    for _ in range(depth):
        # f_{w d} = f_w o f_d
        lvl_m2 = np.einsum("kij,mjl->kmil", lvl_m, mats).reshape(-1, n, n)
        lvl_t2 = (np.einsum("kij,mj->kmi", lvl_m, trans) + lvl_t[:, None, :]).reshape(-1, n)
        lvl_w = [w + (d,) for w in lvl_w for d in range(1, spec.m + 1)]
        lvl_m, lvl_t = lvl_m2, lvl_t2
        words.extend(lvl_w)
        ms.append(lvl_m)
        ts.append(lvl_t)
    return words, np.concatenate(ms), np.concatenate(ts)


def _dedup(vecs: np.ndarray, tol: float) -> np.ndarray:
    """Indices of first representatives; a row within ``tol`` (max-norm) of an earlier row is dropped."""
    if len(vecs) == 0:
        return np.zeros(0, dtype=int)
    pairs = cKDTree(vecs).query_pairs(r=tol, p=np.inf, output_type="ndarray")
    dup = np.zeros(len(vecs), dtype=bool)
    dup[pairs.max(axis=1)] = True
    return np.nonzero(~dup)[0]


def _box_distance(pts, box: Window) -> np.ndarray:
    lo, hi = np.asarray(box.lo), np.asarray(box.hi)
    gap = np.maximum(0.0, np.maximum(lo - pts, pts - hi))
    return np.linalg.norm(gap, axis=-1)


def enumerate_neighbors(spec: IfsSpec, depth: int = 4, prune: bool = False, cutoff: float | None = None) -> NeighborSet:
    """Neighbor maps from all word pairs of length <= depth with different first digits.

    Maps equal within ``1e-9 (1 + diam A)`` entrywise are merged; the identity
    is dropped.  With ``prune`` only maps whose image of the attractor's
    invariant ball comes within ``cutoff`` (default ``2 diam A``) of the
    attractor box are kept.
    """
    if depth < 1:
        raise NeighborError("depth must be >= 1")
    n = spec.dimension
    box = attractor_box(spec)
    diam = box.diameter
    tol = 1e-9 * (1 + diam)
    words, wm, wt = word_map_arrays(spec, depth)
    first = np.array([w[0] for w in words])
    inv = np.linalg.inv(wm)
    ii, jj = np.nonzero(first[:, None] != first[None, :])
    hm = np.einsum("pij,pjk->pik", inv[ii], wm[jj])
    ht = np.einsum("pij,pj->pi", inv[ii], wt[jj] - wt[ii])
    vecs = np.hstack([hm.reshape(len(ii), -1), ht])
    ident = np.hstack([np.eye(n).ravel(), np.zeros(n)])
    not_id = np.max(np.abs(vecs - ident), axis=1) > tol
    cand = np.nonzero(not_id)[0]
    keep = cand[_dedup(vecs[cand], tol)]
    if prune:
        cutoff = 2 * diam if cutoff is None else cutoff
        c, r = invariant_ball(spec)
        ratios = np.abs(np.linalg.det(hm[keep])) ** (1.0 / n)
        centers = np.einsum("pij,j->pi", hm[keep], c) + ht[keep]
        near = _box_distance(centers, box) - ratios * r < cutoff
        keep = keep[near]
    tolsim = max(f.tol for f in spec.maps)
    tol_h = max(tolsim, SIMILARITY_RTOL) if tolsim <= SIMILARITY_RTOL else UNCHECKED
    maps = tuple(Similitude(hm[p], ht[p], tol=tol_h) for p in keep)
    prov = tuple((words[ii[p]], words[jj[p]]) for p in keep)
    return NeighborSet(maps, prov, depth, tol)


def kappa_estimate(ns: NeighborSet, reference_box: Window):
    """``min_h max_{x in box} |h(x) - x|`` with the achieving map's index.

    ``h - id`` is affine, so the max over the box is attained at a vertex.
    """
    if len(ns) == 0:
        raise NeighborError("empty neighbor set")
    verts = reference_box.corners()
    hm, ht = ns.arrays()
    moved = np.einsum("pij,vj->pvi", hm, verts) + ht[:, None, :] - verts[None]
    sep = np.linalg.norm(moved, axis=2).max(axis=1)
    k = int(np.argmin(sep))
    return float(sep[k]), k


def fast_basin_slice(
    spec: IfsSpec,
    attractor: PointCloud,
    depth: int = 4,
    cutoff: float | None = None,
    max_ratio: float = 1.0,
    min_points: int = 256,
    max_points: int = 40_000_000,
    region: Window | None = None,
    density: int | None = None,
) -> PointCloud:
    """Points of ``H = U h(A)`` lying within ``cutoff`` of ``region``.

    ``region`` defaults to the attractor cloud's bounding box.

    Expanding neighbor maps are refined into pieces ``h f_w`` of ratio at most
    ``max_ratio`` and far pieces are culled, so sampling density near the
    attractor stays comparable to the input cloud.  A piece of ratio ``r``
    receives the first ``len(cloud) * r**D`` cloud points (D the Moran
    dimension), at least ``min_points``; ``density`` replaces ``len(cloud)``
    in that rule when sparser sampling is enough.
    """
    pts = attractor.points
    if len(pts) == 0:
        raise NeighborError("empty attractor cloud")
    if region is not None:
        box = region
    elif np.all(np.ptp(pts, axis=0) > 0):
        box = Window(tuple(pts.min(axis=0)), tuple(pts.max(axis=0)))
    else:
        box = attractor_box(spec)
    diam = attractor_box(spec).diameter
    cutoff = 2 * diam if cutoff is None else float(cutoff)
    n = spec.dimension
    if cutoff <= 0:
        return PointCloud(np.empty((0, n)), {"depth": depth, "cutoff": cutoff})
    ns = enumerate_neighbors(spec, depth)
    hm, ht = ns.arrays()
    c, r = invariant_ball(spec)
    dim = moran_dimension(spec.ratios)
    mats, trans = stack_maps(spec.maps)
    ratios = np.asarray(spec.ratios)
    cur_m, cur_t = hm, ht
    cur_r = np.abs(np.linalg.det(hm)) ** (1.0 / n)
    pieces_m, pieces_t, pieces_r = [], [], []
    for _ in range(64):
        centers = np.einsum("pij,j->pi", cur_m, c) + cur_t
        near = _box_distance(centers, box) - cur_r * r < cutoff
        cur_m, cur_t, cur_r = cur_m[near], cur_t[near], cur_r[near]
        done = cur_r <= max_ratio * (1 + 1e-12)
        pieces_m.append(cur_m[done])
        pieces_t.append(cur_t[done])
        pieces_r.append(cur_r[done])
        cur_m, cur_t, cur_r = cur_m[~done], cur_t[~done], cur_r[~done]
        if len(cur_r) == 0:
            break
        cur_m, cur_t = (
            np.einsum("kij,mjl->kmil", cur_m, mats).reshape(-1, n, n),
            (np.einsum("kij,mj->kmi", cur_m, trans) + cur_t[:, None, :]).reshape(-1, n),
        )
        cur_r = (cur_r[:, None] * ratios[None, :]).ravel()
    pm = np.concatenate(pieces_m)
    pt = np.concatenate(pieces_t)
    pr = np.concatenate(pieces_r)
    # different neighbor maps often refine into the same piece
    uniq = _dedup(np.hstack([pm.reshape(len(pm), -1), pt]), ns.tol)
    pm, pt, pr = pm[uniq], pt[uniq], pr[uniq]
    per_unit = len(pts) if density is None else min(int(density), len(pts))
    counts = np.clip(np.ceil(per_unit * pr**dim), min(min_points, len(pts)), len(pts)).astype(int)
    if counts.sum() > max_points:
        counts = np.maximum(1, (counts * (max_points / counts.sum())).astype(int))
    chunks = []
    for M, t, k in zip(pm, pt, counts):
        img = pts[:k] @ M.T + t
        chunks.append(img[_box_distance(img, box) < cutoff])
    out = np.concatenate(chunks) if chunks else np.empty((0, n))
    return PointCloud(
        out,
        {"depth": depth, "cutoff": cutoff, "neighbor_maps": len(ns), "pieces": int(len(pm))},
    )
