"""Similitude algebra, words and addresses over {1..m}, cost functions.

Digits are 1-based throughout.  Maps are stored as a linear part ``M`` and a
translation ``t`` so that ``f(x) = M @ x + t``; for 2D this is the
``[a b e; c d g]`` layout with ``M = [[a, b], [c, d]]`` and ``t = (e, g)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

SIMILARITY_RTOL = 1e-9
# tolerance for maps rebuilt from products of already validated maps
UNCHECKED = math.inf
COMPOSE_RTOL = 1e-12

Word = tuple  # tuple[int, ...], digits in 1..m


class GeometryError(ValueError):
    pass


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Similitude:
    """Affine map ``x -> M x + t`` with ``M^T M = ratio^2 I``.

    ``tol`` is the relative tolerance of the similarity check.  A handful of
    published maps are only approximately similar; for those the caller may
    loosen ``tol`` and ``ratio`` is then ``|det M|^(1/n)``.
    """

    matrix: np.ndarray
    translation: np.ndarray
    ratio: float = field(init=False)
    tol: float = SIMILARITY_RTOL

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.ndim == 0:
            m = _frozen(m.reshape(1, 1))
        t = _frozen(np.atleast_1d(self.translation))
        n = t.shape[0]
        if m.shape != (n, n):
            raise GeometryError(f"matrix shape {m.shape} does not match translation length {n}")
        if not (np.all(np.isfinite(m)) and np.all(np.isfinite(t))):
            raise GeometryError("non-finite similitude coefficients")
        det = abs(float(np.linalg.det(m)))
        if det == 0.0:
            raise GeometryError("singular linear part")
        ratio = det ** (1.0 / n)
        gram = m.T @ m
        if np.max(np.abs(gram - ratio**2 * np.eye(n))) > self.tol * ratio**2:
            raise GeometryError("linear part is not a similarity (M^T M != ratio^2 I)")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "translation", t)
        object.__setattr__(self, "ratio", ratio)

    @property
    def dimension(self) -> int:
        return self.translation.shape[0]

    @classmethod
    def identity(cls, n: int) -> "Similitude":
        return cls(np.eye(n), np.zeros(n))

    @classmethod
    def from_rows(cls, rows, tol: float = SIMILARITY_RTOL) -> "Similitude":
        """Build from the ``n x (n+1)`` augmented layout ``[M | t]``."""
        a = np.asarray(rows, dtype=float)
        return cls(a[:, :-1], a[:, -1], tol=tol)

    @classmethod
    def scale_rotate(cls, scale: float, angle: float = 0.0, t=(0.0, 0.0), flip: bool = False):
        c, s = math.cos(angle), math.sin(angle)
        rot = np.array([[c, -s], [s, c]])
        if flip:
            rot = rot @ np.diag([1.0, -1.0])
        return cls(scale * rot, np.asarray(t, dtype=float))

    @property
    def is_isometry(self) -> bool:
        return abs(self.ratio - 1.0) <= SIMILARITY_RTOL

    @property
    def is_orientation_reversing(self) -> bool:
        return float(np.linalg.det(self.matrix)) < 0

    def __call__(self, x):
        """Apply to a point ``(n,)`` or an array of points ``(N, n)``."""
        x = np.asarray(x, dtype=float)
        return x @ self.matrix.T + self.translation

    def __matmul__(self, other: "Similitude") -> "Similitude":
        return compose(self, other)

    def augmented(self) -> np.ndarray:
        return np.hstack([self.matrix, self.translation[:, None]])

    def allclose(self, other: "Similitude", atol: float = 1e-9) -> bool:
        return (
            self.dimension == other.dimension
            and np.allclose(self.matrix, other.matrix, rtol=0, atol=atol)
            and np.allclose(self.translation, other.translation, rtol=0, atol=atol)
        )

    def __repr__(self):
        return f"Similitude(matrix={self.matrix.tolist()}, translation={self.translation.tolist()})"


def compose(f: Similitude, g: Similitude) -> Similitude:
    """``compose(f, g)(x) == f(g(x))``."""
    if f.dimension != g.dimension:
        raise GeometryError(f"dimension mismatch: {f.dimension} vs {g.dimension}")
    return Similitude(f.matrix @ g.matrix, f.matrix @ g.translation + f.translation, tol=_compound_tol(f.tol, g.tol))


def _compound_tol(a: float, b: float) -> float:
    # exact similitudes stay at the strict tolerance; for approximate ones the
    # relative deviations of M^T M multiply, so the allowance has to grow
    if a <= SIMILARITY_RTOL and b <= SIMILARITY_RTOL:
        return max(a, b)
    return a + b + a * b


def invert(f: Similitude) -> Similitude:
    minv = np.linalg.inv(f.matrix)
    return Similitude(minv, -minv @ f.translation, tol=f.tol if f.tol <= SIMILARITY_RTOL else _compound_tol(f.tol, f.tol))


@dataclass(frozen=True, eq=False)
class IfsSpec:
    """An ordered list of contractive similitudes plus per-map costs.

    When ``costs`` is omitted each map gets its scale exponent ``a_i``,
    rounded to the nearest integer when it lies within 1e-6 of one.
    """

    maps: tuple
    costs: tuple = None
    name: str = ""
    tile: dict = None

    def __post_init__(self):
        maps = tuple(self.maps)
        if len(maps) < 2:
            raise GeometryError("an IFS needs at least two maps")
        n = maps[0].dimension
        if any(f.dimension != n for f in maps):
            raise GeometryError("maps of different dimensions")
        for i, f in enumerate(maps, 1):
            if not 0.0 < f.ratio < 1.0:
                raise GeometryError(f"map {i} is not contractive (ratio {f.ratio:.6g})")
        if all(f.allclose(maps[0], atol=1e-12) for f in maps[1:]):
            raise GeometryError("an IFS needs at least two distinct maps")
        object.__setattr__(self, "maps", maps)
        if self.costs is None:
            costs = tuple(_snap(a) for a in self.exponents)
        else:
            costs = tuple(float(c) for c in self.costs)
        if len(costs) != len(maps):
            raise GeometryError(f"{len(costs)} costs for {len(maps)} maps")
        if any(not (c > 0 and math.isfinite(c)) for c in costs):
            raise GeometryError("costs must be positive and finite")
        object.__setattr__(self, "costs", costs)

    @property
    def m(self) -> int:
        return len(self.maps)

    @property
    def dimension(self) -> int:
        return self.maps[0].dimension

    @property
    def ratios(self) -> tuple:
        return tuple(f.ratio for f in self.maps)

    @property
    def base_scale(self) -> float:
        return max(self.ratios)

    @property
    def exponents(self) -> tuple:
        s = self.base_scale
        return tuple(math.log(r) / math.log(s) for r in self.ratios)

    @property
    def cost_function(self) -> "CostFunction":
        return CostFunction(self.costs)

    def integer_exponents(self, tol: float = 1e-9):
        """The exponents as ints if all are integral within ``tol``, else None."""
        out = []
        for a in self.exponents:
            r = round(a)
            if abs(a - r) > tol:
                return None
            out.append(int(r))
        return tuple(out)

    def costs_are_exponents(self, tol: float = 1e-9) -> bool:
        ints = self.integer_exponents(tol)
        return ints is not None and all(abs(c - a) <= tol for c, a in zip(self.costs, ints))

    def with_costs(self, costs) -> "IfsSpec":
        return IfsSpec(self.maps, tuple(costs), self.name, self.tile)

    def conjugate(self, s: Similitude) -> "IfsSpec":
        """The system ``{S f_i S^-1}``."""
        sinv = invert(s)
        return IfsSpec(tuple(s @ f @ sinv for f in self.maps), self.costs, self.name, self.tile)

    def check_word(self, w) -> Word:
        w = tuple(int(d) for d in w)
        for d in w:
            if not 1 <= d <= self.m:
                raise GeometryError(f"digit {d} outside 1..{self.m}")
        return w


def _snap(a: float) -> float:
    r = round(a)
    return float(r) if abs(a - r) <= 1e-6 else a


def word_map(spec: IfsSpec, w) -> Similitude:
    """``f_w = f_{w1} o f_{w2} o ... o f_{wk}``; the empty word gives the identity."""
    w = spec.check_word(w)
    out = Similitude.identity(spec.dimension)
    for d in w:
        out = out @ spec.maps[d - 1]
    return out


def word_map_inverse(spec: IfsSpec, w) -> Similitude:
    """``f_{-w} = f_{w1}^-1 o f_{w2}^-1 o ... o f_{wk}^-1``.

    Taken literally, so ``f_{wk}^-1`` acts first.  This is the inverse of
    ``f_{wk} o ... o f_{w1}`` (not of ``word_map(w)``), which is the ordering
    that makes ``Pi_T(i|k) <= Pi_T(i|k+1)`` hold: the innermost inverse cancels
    the first map of the extending cut-set words.  The two readings agree on
    constant addresses such as 1-bar.
    """
    w = spec.check_word(w)
    out = Similitude.identity(spec.dimension)
    for d in w:
        out = out @ invert(spec.maps[d - 1])
    return out


@dataclass(frozen=True)
class CostFunction:
    costs: tuple

    def __post_init__(self):
        costs = tuple(float(c) for c in self.costs)
        if any(not c > 0 for c in costs):
            raise GeometryError("costs must be positive")
        object.__setattr__(self, "costs", costs)

    @property
    def m(self) -> int:
        return len(self.costs)

    def __call__(self, w) -> float:
        return cost(self, w)


def cost(cf: CostFunction, w) -> float:
    total = 0.0
    for d in w:
        if not 1 <= d <= cf.m:
            raise GeometryError(f"digit {d} outside 1..{cf.m}")
        total += cf.costs[d - 1]
    return total


def parse_word(text: str) -> Word:
    text = text.strip()
    if text in ("", "()", "-", "∅"):
        return ()
    if "," in text:
        return tuple(int(p) for p in text.split(","))
    if not text.isdigit():
        raise GeometryError(f"bad word {text!r}")
    return tuple(int(c) for c in text)


def format_word(w) -> str:
    if any(d > 9 for d in w):
        return ",".join(map(str, w))
    return "".join(map(str, w))


def _primitive_root(period: tuple) -> tuple:
    n = len(period)
    for p in range(1, n + 1):
        if n % p == 0 and period[:p] * (n // p) == period:
            return period[:p]
    return period


@dataclass(frozen=True)
class Address:
    """An eventually periodic infinite address ``preperiod + period period ...``.

    Stored in a canonical form (primitive period, shortest preperiod), so two
    addresses are equal as sequences iff they compare equal.
    """

    preperiod: tuple = ()
    period: tuple = (1,)

    def __post_init__(self):
        pre = tuple(int(d) for d in self.preperiod)
        per = tuple(int(d) for d in self.period)
        if not per:
            raise GeometryError("address period must be non-empty")
        if any(d < 1 for d in pre + per):
            raise GeometryError("address digits must be >= 1")
        per = _primitive_root(per)
        while pre and pre[-1] == per[-1]:
            pre = pre[:-1]
            per = per[-1:] + per[:-1]
        object.__setattr__(self, "preperiod", pre)
        object.__setattr__(self, "period", per)

    def digit(self, k: int) -> int:
        """The k-th digit, 1-based."""
        if k < 1:
            raise IndexError("digits are indexed from 1")
        if k <= len(self.preperiod):
            return self.preperiod[k - 1]
        return self.period[(k - len(self.preperiod) - 1) % len(self.period)]

    def prefix(self, k: int) -> Word:
        return tuple(self.digit(j) for j in range(1, k + 1))

    def digits(self):
        return itertools.chain(self.preperiod, itertools.cycle(self.period))

    def max_digit(self) -> int:
        return max(self.preperiod + self.period)

    def __str__(self):
        return f"{format_word(self.preperiod)}({format_word(self.period)})"

    @classmethod
    def parse(cls, text: str) -> "Address":
        """``"12(21)"`` is 12 212121...; a bare ``"112"`` repeats its last digit."""
        text = text.strip()
        if "(" in text:
            if not text.endswith(")") or text.count("(") != 1:
                raise GeometryError(f"bad address {text!r}")
            pre, per = text[:-1].split("(")
            return cls(parse_word(pre), parse_word(per))
        w = parse_word(text)
        if not w:
            raise GeometryError("empty address")
        return cls(w, w[-1:])


def shift(a: Address, p: int = 1) -> Address:
    if p < 0:
        raise GeometryError("shift count must be >= 0")
    pre, per = a.preperiod, a.period
    if p <= len(pre):
        return Address(pre[p:], per)
    r = (p - len(pre)) % len(per)
    return Address((), per[r:] + per[:r])


def is_disjunctive_witness(a: Address, w, search_depth: int):
    """First ``k <= search_depth`` with digits ``k+1..k+len(w)`` equal to ``w``, else None."""
    w = tuple(w)
    window = a.prefix(search_depth + len(w))
    for k in range(1, search_depth + 1):
        if window[k : k + len(w)] == w:
            return k
    return None


def all_words(m: int, max_len: int, min_len: int = 1) -> Iterable[Word]:
    """Words over {1..m} in length-then-lexicographic order."""
    for n in range(min_len, max_len + 1):
        yield from itertools.product(range(1, m + 1), repeat=n)


def disjunctive_address(m: int, depth: int = 4) -> Address:
    """Concatenation of every word of length 1..depth, repeated forever.

    Contains every word of length <= depth; the block grows with ``depth``.
    """
    block = tuple(d for w in all_words(m, depth) for d in w)
    return Address((), block)


def check_similarity(f: Similitude, tol: float = SIMILARITY_RTOL) -> bool:
    n = f.dimension
    gram = f.matrix.T @ f.matrix
    return bool(np.max(np.abs(gram - f.ratio**2 * np.eye(n))) <= tol * f.ratio**2)


def stack_maps(maps: Sequence[Similitude]):
    """Linear parts ``(N, n, n)`` and translations ``(N, n)`` as arrays."""
    return (
        np.stack([f.matrix for f in maps]),
        np.stack([f.translation for f in maps]),
    )
