import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ifstile.geometry import Address, CostFunction, IfsSpec, Similitude, cost, disjunctive_address, invert
from ifstile.raster import Window
from ifstile.shapes import BoxShape, IntervalShape
from ifstile.tiling import (
    CutSetCapError,
    TilingError,
    canonical_relation_check,
    canonical_tiling,
    commensurability,
    coverage_fraction,
    cut_set,
    overlap_report,
    patch,
    reversible_witness,
    scale_census,
    shift_equivalence_check,
    tiling_prefix,
    tiling_sequence,
)

from oracles import exhaustive_cut_set

UNIT = IntervalShape(0.0, 1.0)


def _intervals(t, lo=0.0, hi=1.0):
    out = []
    for p in range(len(t)):
        a = t.matrices[p, 0, 0] * lo + t.translations[p, 0]
        b = t.matrices[p, 0, 0] * hi + t.translations[p, 0]
        out.append((min(a, b), max(a, b)))
    return sorted(out)


# ----------------------------------------------------------------- cut sets


def test_cut_set_small_example():
    cs = cut_set(CostFunction((1, 2)), 2)
    assert list(cs) == [(1, 1, 1), (1, 1, 2), (1, 2), (2, 1), (2, 2)]
    assert list(cut_set(CostFunction((1, 2)), 0)) == [(1,), (2,)]
    assert (1, 2) in cs and (1,) not in cs


@pytest.mark.parametrize(
    "costs,budget",
    [((1, 1), 3), ((1, 2), 5), ((1, 4), 7), ((1, 8, 8), 9), ((0.7, 1.3), 3.1), ((1, 2, 3), 4), ((1.5, 1.5), 4.5)],
)
def test_cut_set_matches_exhaustive(costs, budget):
    got = list(cut_set(CostFunction(costs), budget))
    ref = exhaustive_cut_set(costs, budget, max_len=int(budget / min(costs)) + 1)
    assert got == ref


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.5, 3.0), min_size=2, max_size=3), st.floats(0, 6), st.integers(0, 10**6))
def test_cut_set_is_prefix_free_and_complete(costs, budget, seed):
    cf = CostFunction(tuple(costs))
    cs = cut_set(cf, budget)
    words = set(cs)
    for w in words:
        assert all(w[:k] not in words for k in range(1, len(w)))
        assert cost(cf, w[:-1]) <= budget + 1e-9 < cost(cf, w)
    rng = np.random.default_rng(seed)
    depth = max(len(w) for w in words)
    for _ in range(1000 // 40):
        addr = tuple(int(d) for d in rng.integers(1, len(costs) + 1, size=depth))
        hits = [k for k in range(1, depth + 1) if addr[:k] in words]
        assert len(hits) == 1


def test_cut_set_cap():
    with pytest.raises(CutSetCapError):
        cut_set(CostFunction((1, 1)), 30, cap=1000)
    with pytest.raises(TilingError):
        cut_set(CostFunction((1, 1)), -1)


def test_cut_set_boundary_rounding():
    # 0.1 * 3 != 0.3 in floats; the budget still counts as reached exactly
    cs = cut_set(CostFunction((0.1, 0.2)), 0.3)
    assert (1, 1, 1) not in cs and (1, 1, 1, 1) in cs


@pytest.mark.parametrize("b", range(0, 13))
def test_quartic_style_counts(b):
    # cut sets for costs (1, 4) satisfy N_B = N_{B-1} + N_{B-4}
    def n(k):
        return len(cut_set(CostFunction((1, 4)), k)) if k >= 0 else 1

    if b >= 4:
        assert n(b) == n(b - 1) + n(b - 4)


# ------------------------------------------------------------------ tilings


def test_dyadic_prefix_tiling(specs):
    spec = specs["dyadic-1d"]
    for k in range(6):
        t = tiling_prefix(spec, UNIT, (1,) * k)
        iv = _intervals(t)
        assert len(iv) == 2 ** (k + 1)
        ref = [((n - 1) / 2, n / 2) for n in range(1, 2 ** (k + 1) + 1)]
        np.testing.assert_allclose(iv, ref, atol=1e-12)


@pytest.mark.parametrize("name", ["dyadic-1d", "square-4map", "sierpinski", "golden", "quartic", "fern", "crack", "newgrowth"])
def test_empty_prefix_gives_first_level(specs, name):
    spec = specs[name]
    t = tiling_prefix(spec, "T", ())
    assert len(t) == spec.m
    for f in spec.maps:
        assert any(np.allclose(f.matrix, M, atol=1e-12) and np.allclose(f.translation, v, atol=1e-12) for M, v in zip(t.matrices, t.translations))


@settings(max_examples=25, deadline=None)
@given(
    st.sampled_from(["dyadic-1d", "sierpinski", "golden", "crack"]),
    st.lists(st.floats(1.0, 2.0), min_size=3, max_size=3),
    st.lists(st.integers(1, 3), min_size=0, max_size=3),
    st.lists(st.integers(1, 3), min_size=1, max_size=3),
)
def test_nesting_property(specs, name, costs, pre, per):
    # costs >= 1 and at most three maps keep every cut set below 3^9 words
    spec = specs[name]
    m = spec.m
    addr = Address(tuple((d - 1) % m + 1 for d in pre), tuple((d - 1) % m + 1 for d in per))
    seq = tiling_sequence(spec, "T", addr, 4, cf=costs[:m])
    for a, b in zip(seq, seq[1:]):
        assert b.contains_transforms(a)


def test_tiling_sequence_validates(specs):
    with pytest.raises(TilingError):
        tiling_sequence(specs["dyadic-1d"], UNIT, Address((), (3,)), 3)
    with pytest.raises(TilingError):
        tiling_sequence(specs["dyadic-1d"], UNIT, Address((), (1,)), 0)


def test_dedup_and_ordering(specs):
    t = tiling_prefix(specs["golden"], "A", (1, 2, 1))
    keys = list(zip(t.word_i, t.word_j))
    assert keys == sorted(keys)
    v = t.vectors()
    d = np.abs(v[:, None, :] - v[None, :, :]).max(-1) + np.eye(len(t)) * 10
    assert d.min() > 1e-9


# --------------------------------------------------------------- canonical


def test_golden_counts_fibonacci(specs):
    fib = [2, 3]
    while len(fib) < 13:
        fib.append(fib[-1] + fib[-2])
    got = [len(canonical_tiling(specs["golden"], k)) for k in range(13)]
    assert got == fib


@pytest.mark.parametrize("name", ["golden", "quartic"])
@pytest.mark.parametrize("addr", ["(1)", "(12)"])
def test_canonical_relation(specs, name, addr):
    for k in range(5):
        assert canonical_relation_check(specs[name], Address.parse(addr), k)


def test_canonical_needs_integer_exponents(specs):
    with pytest.raises(TilingError):
        canonical_tiling(specs["fern"], 1)
    with pytest.raises(TilingError):
        canonical_tiling(specs["golden"], -1)


def test_scale_census_bounded_by_max_exponent(specs):
    for name in ["golden", "quartic", "sierpinski"]:
        spec = specs[name]
        amax = max(spec.integer_exponents())
        for k in range(8):
            census = scale_census(canonical_tiling(spec, k))
            assert len(census) <= amax
            assert sum(census.values()) == len(canonical_tiling(spec, k))


# ------------------------------------------------------------ equivalences


@pytest.mark.parametrize(
    "name,i,j,p,q",
    [
        ("dyadic-1d", "12(1)", "22(1)", 2, 2),
        ("dyadic-1d", "1(12)", "2(12)", 1, 1),
        # golden costs (1, 2): c(11) == c(2)
        ("golden", "11(2)", "2(2)", 2, 1),
    ],
)
def test_shift_equivalence(specs, name, i, j, p, q):
    spec = specs[name]
    i, j = Address.parse(i), Address.parse(j)
    E = shift_equivalence_check(spec, "T", i, j, p, q, 4)
    a = tiling_prefix(spec, "T", i.prefix(p + 2))
    b = tiling_prefix(spec, "T", j.prefix(q + 2)).transformed(E)
    assert a.same_transforms(b)
    assert E.ratio == pytest.approx(1.0)


def test_shift_equivalence_preconditions(specs):
    spec = specs["golden"]
    with pytest.raises(TilingError):
        shift_equivalence_check(spec, "T", Address((1,), (1,)), Address((), (2,)), 1, 0, 2)
    with pytest.raises(TilingError):
        shift_equivalence_check(spec, "T", Address((1,), (2,)), Address((2,), (2,)), 1, 1, 2)


# ----------------------------------------------------------------- analysis


def test_commensurability(specs):
    c = commensurability(canonical_tiling(specs["golden"], 6))
    assert c.commensurate
    assert c.ratio == pytest.approx((math.sqrt(5) - 1) / 2, rel=1e-9)
    fern = specs["fern"].with_costs((1, 8, 8))
    c = commensurability(tiling_prefix(fern, "T", (1,) * 9))
    assert not c.commensurate and c.ratio is None
    assert str(c) == "incommensurate"


def test_patch(specs):
    t = tiling_prefix(specs["dyadic-1d"], UNIT, (1, 1, 1))
    p = patch(t, Window((0.6,), (1.4,)))
    assert _intervals(p) == [(0.5, 1.0), (1.0, 1.5)]


def test_example_overlap(specs):
    spec = specs["dyadic-1d"]
    t = tiling_prefix(spec, IntervalShape(-1 / 3, 4 / 3), (1, 1, 1))
    iv = _intervals(t, -1 / 3, 4 / 3)
    for n, (a, b) in enumerate(iv, 1):
        assert a == pytest.approx(-1 / 6 + (n - 1) / 2, abs=1e-12)
        assert b == pytest.approx(1 / 6 + n / 2, abs=1e-12)
    rep = overlap_report(t, 4096)
    assert len(rep.overlapping) == len(t) - 1
    px = rep.window.size[0] / 4096
    for pair in rep.overlapping:
        assert pair["measure"] == pytest.approx(1 / 3, abs=2 * px)


def test_touching_intervals(specs):
    rep = overlap_report(tiling_prefix(specs["dyadic-1d"], UNIT, (1, 1, 1)), 4096)
    assert rep.counts()["overlapping"] == 0
    assert rep.counts()["touching"] == 15
    assert set(rep.to_json()) >= {"counts", "pairs", "band_pixels"}


def test_square_coverage(specs):
    spec = specs["square-4map"]
    addr = disjunctive_address(4, 2)
    box = BoxShape((0, 0), (1, 1))
    win = Window((-1.0, -1.0), (1.0, 1.0))
    fracs = [coverage_fraction(tiling_prefix(spec, box, addr.prefix(k)), win, 128) for k in range(0, 7)]
    assert fracs == sorted(fracs)
    assert fracs[-1] >= 0.999


def test_reversible_witness(specs):
    spec = specs["square-4map"]
    assert reversible_witness(spec, disjunctive_address(4, 2)) is not None
    # 1-bar keeps the corner fixed, so nothing lands in the interior
    assert reversible_witness(spec, Address((), (1,))) is None


def test_conjugation_equivariance(specs):
    spec = specs["golden"]
    S = Similitude.scale_rotate(2.0, math.pi / 2, (0.3, -0.1))
    conj = spec.conjugate(S)
    w = (1, 2, 1)
    a = tiling_prefix(spec, "T", w)
    b = tiling_prefix(conj, "T", w)
    # tiles of the conjugate system are S t S^-1
    Sinv = invert(S)
    expected = a.transformed(S)
    expected = type(a)(
        np.einsum("pij,jk->pik", expected.matrices, Sinv.matrix),
        expected.matrices @ Sinv.translation + expected.translations,
        a.word_i, a.word_j, a.costs, "T",
    )
    assert b.same_transforms(expected)


def test_exports(specs):
    t = tiling_prefix(specs["golden"], "A", (1, 2))
    doc = json.loads(t.dumps())
    assert set(doc) == {"meta", "shape_table", "tiles"}
    assert len(doc["tiles"]) == len(t)
    tile = doc["tiles"][0]
    assert set(tile) == {"m", "t", "word_i", "word_j", "cost", "scale", "shape"}
    rows = t.to_csv().splitlines()
    assert rows[0] == "a,b,e,c,d,g,word_i,word_j,cost"
    assert len(rows) == len(t) + 1
    one_d = tiling_prefix(specs["dyadic-1d"], UNIT, (1,))
    assert one_d.to_csv().splitlines()[0] == "m00,t0,word_i,word_j,cost"


def test_overlap_needs_tiles():
    from ifstile.tiling import empty_tiling

    with pytest.raises(TilingError):
        overlap_report(empty_tiling(2), 64)


def test_spec_costs_used(specs):
    spec = IfsSpec(specs["golden"].maps, (1.0, 2.0))
    assert len(tiling_prefix(spec, "T", (1, 1))) == len(canonical_tiling(specs["golden"], 2))


def test_approximately_similar_spec(specs):
    # crack's second map is only close to a similitude; deep words must still build
    spec = specs["crack"]
    seq = tiling_sequence(spec, "T", Address((), (1, 2)), 6)
    assert all(b.contains_transforms(a) for a, b in zip(seq, seq[1:]))
    assert all(t.scale > 0 for t in seq[-1].tiles)
    w = Window.parse("0,1,0,1")
    assert len(patch(seq[-1].with_shape(BoxShape((0, 0), (1, 1))), w)) > 0
