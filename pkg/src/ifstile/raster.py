"""Sampled scalar fields over axis-aligned windows, plus PGM/CSV/JSON export.

Samples are stored with array axes in reverse coordinate order: a 2D field
has shape ``(h, w)`` and ``samples[iy, ix]`` is the pixel whose centre is
``(x0 + (ix + 0.5) dx, y0 + (iy + 0.5) dy)``; row 0 is the *bottom* row.
Image writers flip rows so files read top-down.  1D fields have shape ``(w,)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class RasterError(ValueError):
    pass


@dataclass(frozen=True)
class Window:
    """Closed box ``lo[k] <= x_k <= hi[k]``."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) != len(hi):
            raise RasterError("window corners differ in dimension")
        if any(not b > a for a, b in zip(lo, hi)):
            raise RasterError(f"degenerate window {lo} .. {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dimension(self) -> int:
        return len(self.lo)

    @property
    def size(self) -> np.ndarray:
        return np.subtract(self.hi, self.lo)

    @property
    def center(self) -> np.ndarray:
        return (np.asarray(self.lo) + np.asarray(self.hi)) / 2

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.size))

    @classmethod
    def around(cls, center, half_size) -> "Window":
        c = np.atleast_1d(np.asarray(center, dtype=float))
        h = np.broadcast_to(np.asarray(half_size, dtype=float), c.shape)
        return cls(tuple(c - h), tuple(c + h))

    @classmethod
    def parse(cls, text: str) -> "Window":
        """``"x0,x1"`` (1D) or ``"x0,x1,y0,y1"`` (2D)."""
        v = [float(p) for p in text.split(",")]
        if len(v) % 2:
            raise RasterError(f"bad window {text!r}")
        return cls(tuple(v[0::2]), tuple(v[1::2]))

    def padded(self, frac: float = 0.0, absolute: float = 0.0, square: bool = False) -> "Window":
        size = self.size
        if square:
            size = np.full_like(size, size.max())
        half = size / 2 * (1 + 2 * frac) + absolute
        return Window.around(self.center, half)

    def intersects(self, other: "Window") -> bool:
        return all(a0 <= b1 and b0 <= a1 for a0, a1, b0, b1 in zip(self.lo, self.hi, other.lo, other.hi))

    def contains(self, pts, tol: float = 0.0) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, self.dimension)
        return np.all((pts >= np.asarray(self.lo) - tol) & (pts <= np.asarray(self.hi) + tol), axis=1)

    def corners(self) -> np.ndarray:
        grids = np.meshgrid(*[(a, b) for a, b in zip(self.lo, self.hi)], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def to_json(self):
        return {"lo": list(self.lo), "hi": list(self.hi)}


def bounding_window(pts, pad: float = 0.0) -> Window:
    pts = np.asarray(pts, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = np.maximum(hi - lo, 1e-12)
    return Window(tuple(lo - pad * span), tuple(hi + pad * span))


@dataclass(frozen=True, eq=False)
class RasterField:
    window: Window
    samples: np.ndarray
    kind: str = "scalar"

    def __post_init__(self):
        s = np.asarray(self.samples)
        if s.ndim != self.window.dimension:
            raise RasterError(f"{s.ndim}-d samples for a {self.window.dimension}-d window")
        if any(n < 2 for n in s.shape):
            raise RasterError(f"resolution {s.shape} too small; need >= 2 per axis")
        s = s.copy()
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def dimension(self) -> int:
        return self.window.dimension

    @property
    def resolution(self) -> tuple:
        """Pixel counts in coordinate order (w, h)."""
        return tuple(reversed(self.samples.shape))

    @property
    def pixel_size(self) -> np.ndarray:
        return self.window.size / np.asarray(self.resolution)

    @property
    def pixel_diagonal(self) -> float:
        return float(np.linalg.norm(self.pixel_size))

    @property
    def pixel_area(self) -> float:
        return float(np.prod(self.pixel_size))

    def centers(self) -> np.ndarray:
        return pixel_centers(self.window, self.resolution)

    def with_samples(self, samples, kind: str | None = None) -> "RasterField":
        return RasterField(self.window, samples, kind or self.kind)

    def lookup(self, pts, outside=0):
        """Nearest-pixel values at arbitrary points; ``outside`` beyond the window."""
        idx, inside = self.pixel_index(pts)
        out = np.full(idx.shape[0], outside, dtype=self.samples.dtype)
        if inside.any():
            sel = idx[inside]
            out[inside] = self.samples[tuple(sel[:, k] for k in reversed(range(self.dimension)))]
        return out

    def pixel_index(self, pts):
        """Integer pixel indices (coordinate order) and an in-window flag."""
        pts = np.asarray(pts, dtype=float).reshape(-1, self.dimension)
        res = np.asarray(self.resolution)
        idx = np.floor((pts - np.asarray(self.window.lo)) / self.pixel_size).astype(np.int64)
        inside = np.all((idx >= 0) & (idx < res), axis=1)
        return idx, inside


def pixel_centers(window: Window, resolution) -> np.ndarray:
    """Pixel centres flattened in sample (C) order, coordinates in (x, y) order."""
    res = tuple(int(r) for r in resolution)
    axes = [
        lo + (np.arange(n) + 0.5) * (hi - lo) / n for lo, hi, n in zip(window.lo, window.hi, res)
    ]
    grids = np.meshgrid(*reversed(axes), indexing="ij")
    return np.stack([g.ravel() for g in reversed(grids)], axis=1)


def sample_shape(resolution) -> tuple:
    return tuple(int(r) for r in reversed(tuple(resolution)))


def parse_resolution(text: str) -> tuple:
    """``"1024"`` (square), ``"1024x512"`` or ``"2048"`` for 1D callers."""
    parts = text.lower().split("x")
    return tuple(int(p) for p in parts)


# ---------------------------------------------------------------- export


def _image_rows(samples: np.ndarray) -> np.ndarray:
    if samples.ndim == 1:
        return samples[None, :]
    return samples[::-1]


def write_pgm(path, field: RasterField, binary: bool = True, maxval: int | None = None) -> dict:
    """Write a mask (0/255) or a 16-bit quantised scalar field, plus ``<path>.json``.

    The sidecar records the window and, for scalar fields, the quantisation
    ``value = level * scale``.
    """
    path = Path(path)
    s = np.asarray(field.samples)
    header = {"window": field.window.to_json(), "resolution": list(field.resolution), "kind": field.kind}
    if s.dtype == bool:
        maxval = 255
        levels = np.where(s, 255, 0).astype(np.uint16)
    else:
        maxval = maxval or 65535
        finite = np.where(np.isfinite(s), s, 0.0)
        lo = float(min(finite.min(), 0.0))
        hi = float(finite.max())
        scale = (hi - lo) / maxval if hi > lo else 1.0
        levels = np.clip(np.round((finite - lo) / scale), 0, maxval).astype(np.uint16)
        header.update({"offset": lo, "scale": scale})
    header["maxval"] = maxval
    rows = _image_rows(levels)
    h, w = rows.shape
    if binary:
        dtype = ">u1" if maxval < 256 else ">u2"
        data = f"P5\n{w} {h}\n{maxval}\n".encode() + rows.astype(dtype).tobytes()
        path.write_bytes(data)
    else:
        lines = [f"P2\n{w} {h}\n{maxval}"] + [" ".join(map(str, r)) for r in rows.tolist()]
        path.write_text("\n".join(lines) + "\n")
    Path(str(path) + ".json").write_text(json.dumps(header, indent=2) + "\n")
    return header


def read_pgm(path) -> np.ndarray:
    """Read back a P2/P5 file as integer levels with row 0 at the top."""
    data = Path(path).read_bytes()
    magic = data[:2]
    tokens = []
    pos = 2
    while len(tokens) < 3:
        while data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            pos = data.index(b"\n", pos)
            continue
        end = pos
        while not data[end : end + 1].isspace():
            end += 1
        tokens.append(int(data[pos:end]))
        pos = end
    w, h, maxval = tokens
    if magic == b"P5":
        dtype = ">u1" if maxval < 256 else ">u2"
        return np.frombuffer(data[pos + 1 :], dtype=dtype, count=w * h).reshape(h, w).astype(np.int64)
    if magic == b"P2":
        vals = np.array(data[pos:].split(), dtype=np.int64)
        return vals[: w * h].reshape(h, w)
    raise RasterError(f"not a PGM file: {path}")


def write_ppm(path, rgb: np.ndarray) -> None:
    """Binary P6; ``rgb`` is ``(h, w, 3)`` uint8 with row 0 at the bottom."""
    rows = np.ascontiguousarray(rgb[::-1], dtype=np.uint8)
    h, w, _ = rows.shape
    Path(path).write_bytes(f"P6\n{w} {h}\n255\n".encode() + rows.tobytes())


def write_points_csv(path, pts) -> None:
    pts = np.asarray(pts, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    with open(path, "w", encoding="utf-8") as fh:
        for row in pts:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_points_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)
