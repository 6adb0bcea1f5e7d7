"""Command line interface: ``ifstile <command> SPEC [options]``.

SPEC is a JSON file or the name of a bundled system (see ``ifstile list``).
Exit status: 0 success, 1 a check failed, 2 bad usage or unreadable input.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import attractor as att
from . import centralset as cs
from . import neighbors as nb
from . import render as rd
from . import tiling as tl
from .geometry import Address, CostFunction, GeometryError
from .raster import RasterError, Window, parse_resolution, write_pgm, write_points_csv
from .shapes import BoxShape, IntervalShape, PolygonShape, ShapeError, attractor_shape, shape_from_json
from .specfile import SpecFileError, bundled_names, parse_spec, read_spec_document

log = logging.getLogger("ifstile")


class UsageError(Exception):
    pass


class CheckFailed(Exception):
    pass


# ------------------------------------------------------------------ helpers


def _spec(args):
    doc = read_spec_document(args.spec)
    costs = None
    if getattr(args, "force_costs", None) is not None:
        if args.force_costs == "suggested":
            costs = doc.get("suggested_costs")
            if costs is None:
                raise UsageError(f"{args.spec} has no suggested costs; pass --force-costs c1,c2,...")
        else:
            costs = [float(v) for v in args.force_costs.split(",")]
    return parse_spec(doc, costs)


def _window(text):
    return Window.parse(text) if text else None


def _resolution(text, dim):
    res = parse_resolution(text)
    if dim == 1:
        return res[:1]
    return res * 2 if len(res) == 1 else res


def _write(path, text: str):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _dump(obj) -> str:
    return json.dumps(obj, indent=1) + "\n"


def _address(text, spec) -> Address:
    a = Address.parse(text)
    if a.max_digit() > spec.m:
        raise UsageError(f"address digit {a.max_digit()} outside 1..{spec.m}")
    return a


def _tile_shape(args, spec):
    kind = args.tile
    if kind is None:
        if spec.tile:
            return shape_from_json(spec.tile, spec)
        kind = "attractor"
    if kind == "attractor":
        return attractor_shape(spec, seed=args.seed)
    if kind == "central":
        est = cs.estimate_central_set(
            spec, resolution=_resolution(args.grid, spec.dimension), neighbor_depth=args.depth, cloud_size=args.points, seed=args.seed
        )
        return cs.tile_shape_from_mask(est)
    if kind.startswith("polygon:"):
        verts = json.loads(Path(kind[8:]).read_text(encoding="utf-8"))
        return PolygonShape(verts)
    if kind.startswith("box:"):
        v = [float(x) for x in kind[4:].split(",")]
        if len(v) != 4:
            raise UsageError("box:x0,x1,y0,y1")
        return BoxShape((v[0], v[2]), (v[1], v[3]))
    if kind.startswith("interval:"):
        a, b = (float(x) for x in kind[9:].split(","))
        return IntervalShape(a, b)
    raise UsageError(f"unknown tile {kind!r}")


def _svg_scene(layers, size):
    return rd.Scene.fit(layers, size=(size, size) if isinstance(size, int) else size)


# ----------------------------------------------------------------- commands


def cmd_list(args):
    for name in bundled_names():
        print(name)


def cmd_attractor(args):
    spec = _spec(args)
    cloud = att.chaos_game(spec, args.points, burn_in=args.burn_in, seed=args.seed)
    if args.raster:
        window = _window(args.window) or att.default_window(spec)
        mask = att.attractor_mask(spec, window, _resolution(args.raster, spec.dimension), args.depth)
        write_pgm(args.raster_out or "attractor.pgm", mask)
    if args.out or not args.raster:
        if args.out in (None, "-"):
            pts = cloud.points
            sys.stdout.write("".join(",".join(repr(float(v)) for v in row) + "\n" for row in pts))
        else:
            write_points_csv(args.out, cloud.points)


def cmd_dimension(args):
    spec = _spec(args)
    d = att.moran_dimension(spec.ratios)
    print(f"{d:.12f}")


def cmd_neighbors(args):
    spec = _spec(args)
    ns = nb.enumerate_neighbors(spec, args.depth, prune=args.cutoff is not None, cutoff=args.cutoff)
    kappa, _ = nb.kappa_estimate(ns, att.attractor_box(spec))
    print(f"{len(ns)} neighbor maps, kappa {kappa:.9g}", file=sys.stderr)
    _write(args.out, ns.dumps())


def cmd_centralset(args):
    spec = _spec(args)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        est = cs.estimate_central_set(
            spec,
            window=_window(args.window),
            resolution=_resolution(args.grid, spec.dimension),
            neighbor_depth=args.depth,
            cloud_size=args.points,
            seed=args.seed,
        )
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    rep = cs.feasibility_check(spec, est)
    summary = {
        "area": est.area,
        "flags": list(est.flags),
        "window": est.window.to_json(),
        "resolution": list(est.mask.resolution),
        "feasibility": rep.to_json(),
    }
    if args.out_mask:
        write_pgm(args.out_mask, est.mask)
    if args.out_margin:
        write_pgm(args.out_margin, est.margin.with_samples(np.maximum(est.margin.samples, 0.0)))
    boundary = None
    if not est.is_empty and (args.out_boundary or args.circles or args.out_svg):
        boundary = cs.extract_boundary(est)
    if args.out_boundary and boundary is not None:
        if args.out_boundary.endswith(".svg"):
            _write(args.out_boundary, rd.render_svg(_svg_scene([rd.Layer(boundary, rd.Style(stroke="#c8a200"))], args.size)))
        else:
            _write(args.out_boundary, boundary.to_csv())
    circles = None
    if args.circles and boundary is not None:
        circles = cs.inscribed_circles(est, boundary)
        _write(args.circles, "".join(",".join(repr(float(v)) for v in row) + "\n" for row in circles))
    if args.out_svg and not est.is_empty:
        layers = [rd.Layer(est.mask, rd.Style(fill="#dfe8f3", stroke=None), "central")]
        layers.append(rd.Layer(est.attractor.head(20_000), rd.Style(fill="#2f7d32", radius=0.5), "attractor"))
        layers.append(rd.Layer(boundary, rd.Style(stroke="#c8a200", stroke_width=1.5), "boundary"))
        if circles is not None and est.mask.dimension == 2:
            layers.append(rd.Layer(rd.Circles(circles), rd.Style(stroke="#888888", stroke_width=0.5), "circles"))
        scene = rd.Scene(layers, est.window, (args.size, args.size))
        _write(args.out_svg, rd.render_svg(scene))
    _write(args.report, _dump(summary))


def _prefix_tiling(args, spec, shape):
    a = _address(args.address, spec)
    t = tl.tiling_prefix(spec, shape, a.prefix(args.k), spec.cost_function)
    if args.window:
        t = tl.patch(t, Window.parse(args.window))
    return t


def cmd_tile(args):
    spec = _spec(args)
    shape = _tile_shape(args, spec)
    t = _prefix_tiling(args, spec, shape)
    if args.out_csv:
        _write(args.out_csv, t.to_csv())
    if args.out_svg:
        _write(args.out_svg, rd.render_svg(_svg_scene([rd.Layer(t, rd.Style(), "tiles")], args.size)))
    if args.out_json or not (args.out_csv or args.out_svg):
        _write(args.out_json, t.dumps())
    print(f"{len(t)} tiles", file=sys.stderr)


def cmd_canonical(args):
    spec = _spec(args)
    counts = []
    t = None
    for k in range(args.k + 1):
        t = tl.canonical_tiling(spec, k)
        counts.append(len(t))
    print(" ".join(str(c) for c in counts))
    if args.out_json:
        _write(args.out_json, t.dumps())
    if args.out_svg:
        shape = attractor_shape(spec, seed=args.seed)
        _write(args.out_svg, rd.render_svg(_svg_scene([rd.Layer(t.with_shape(shape), rd.Style(), "tiles")], args.size)))


# -------------------------------------------------------------------- check


def _suite_nesting(args, spec):
    rng = np.random.default_rng(args.seed)
    fails = 0
    for trial in range(args.samples):
        costs = tuple(float(c) for c in rng.uniform(0.5, 2.5, spec.m).round(3))
        pre = tuple(int(d) for d in rng.integers(1, spec.m + 1, rng.integers(0, 4)))
        per = tuple(int(d) for d in rng.integers(1, spec.m + 1, rng.integers(1, 4)))
        a = Address(pre, per)
        try:
            tl.tiling_sequence(spec, "T", a, args.k, CostFunction(costs))
            ok = True
        except tl.CutSetCapError:
            continue
        except tl.TilingError:
            ok = False
        fails += not ok
        print(f"nesting costs={list(costs)} address={a} k<={args.k}: {'pass' if ok else 'FAIL'}")
    return fails == 0


def _suite_overlap(args, spec):
    shape = _tile_shape(args, spec)
    t = _prefix_tiling(args, spec, shape)
    rep = tl.overlap_report(t, _resolution(args.grid, spec.dimension))
    out = rep.to_json()
    print(_dump({"counts": out["counts"], "overlapping": rep.overlapping[:20], "touching": rep.touching[:20]}), end="")
    return not rep.overlapping


def _suite_feasibility(args, spec):
    est = cs.estimate_central_set(
        spec, resolution=_resolution(args.grid, spec.dimension), neighbor_depth=args.depth, cloud_size=args.points, seed=args.seed
    )
    rep = cs.feasibility_check(spec, est)
    print(_dump({"area": est.area, "flags": list(est.flags), **rep.to_json()}), end="")
    return rep.passed


def _suite_shift(args, spec):
    if not (args.i and args.j and args.p is not None and args.q is not None):
        raise UsageError("shift-equivalence needs --i, --j, --p and --q")
    i, j = _address(args.i, spec), _address(args.j, spec)
    try:
        E = tl.shift_equivalence_check(spec, "T", i, j, args.p, args.q, args.k)
    except tl.TilingError as e:
        if "differ at" in str(e):
            print(f"FAIL: {e}")
            return False
        raise UsageError(str(e)) from e
    print(_dump({"E": {"matrix": E.matrix.tolist(), "translation": E.translation.tolist()}}), end="")
    return True


def _suite_canonical(args, spec):
    a = _address(args.address, spec)
    ok = True
    for k in range(args.k + 1):
        r = tl.canonical_relation_check(spec, a, k)
        ok &= r
        print(f"canonical relation address={a} k={k}: {'pass' if r else 'FAIL'}")
    return ok


def _suite_commensurability(args, spec):
    a = _address(args.address, spec)
    t = tl.tiling_prefix(spec, "T", a.prefix(args.k), spec.cost_function)
    c = tl.commensurability(t)
    print(str(c))
    if args.expect:
        return args.expect == ("commensurate" if c.commensurate else "incommensurate")
    return True


SUITES = {
    "nesting": _suite_nesting,
    "overlap": _suite_overlap,
    "feasibility": _suite_feasibility,
    "shift-equivalence": _suite_shift,
    "canonical-relation": _suite_canonical,
    "commensurability": _suite_commensurability,
}


def cmd_check(args):
    spec = _spec(args)
    if not SUITES[args.suite](args, spec):
        raise CheckFailed(args.suite)


# ------------------------------------------------------------------- parser


def _add_spec(p):
    p.add_argument("spec", help="spec file or bundled name")
    p.add_argument(
        "--force-costs",
        nargs="?",
        const="suggested",
        default=None,
        metavar="C1,C2,...",
        help="override costs; without a value use the file's suggested costs",
    )


def _add_central(p, grid="1024"):
    p.add_argument("--grid", default=grid, help="raster size, e.g. 1024 or 800x600")
    p.add_argument("--depth", type=int, default=4, help="neighbor word length")
    p.add_argument("--points", type=int, default=1_000_000, help="chaos-game points")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ifstile", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("list", help="names of bundled systems")
    p.set_defaults(func=cmd_list)

    p = sub.add_parser("attractor", help="chaos-game cloud (CSV) and optional raster mask")
    _add_spec(p)
    p.add_argument("--points", type=int, default=att.DEFAULT_COUNT)
    p.add_argument("--burn-in", type=int, default=att.DEFAULT_BURN_IN)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.add_argument("--raster", help="mask size, e.g. 512 or 512x256")
    p.add_argument("--raster-out", help="PGM path for the mask")
    p.add_argument("--depth", type=int, default=12, help="cylinder depth for the mask")
    p.add_argument("--window", help="x0,x1[,y0,y1]")
    p.set_defaults(func=cmd_attractor)

    p = sub.add_parser("dimension", help="similarity dimension")
    _add_spec(p)
    p.set_defaults(func=cmd_dimension)

    p = sub.add_parser("neighbors", help="neighbor maps as JSON")
    _add_spec(p)
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--cutoff", type=float, help="keep maps whose images come this close to A")
    p.add_argument("--out")
    p.set_defaults(func=cmd_neighbors)

    p = sub.add_parser("centralset", help="raster central open set, boundary and feasibility report")
    _add_spec(p)
    _add_central(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--window", help="x0,x1[,y0,y1]")
    p.add_argument("--out-mask", help="PGM mask")
    p.add_argument("--out-margin", help="PGM of max(dH - dA, 0)")
    p.add_argument("--out-boundary", help="boundary as CSV, or SVG when the name ends in .svg")
    p.add_argument("--out-svg", help="figure with mask, attractor and boundary")
    p.add_argument("--circles", help="CSV of circles touching A and H along the boundary")
    p.add_argument("--report", help="JSON summary (default stdout)")
    p.add_argument("--size", type=int, default=800)
    p.set_defaults(func=cmd_centralset)

    p = sub.add_parser("tile", help="tiling of an address prefix")
    _add_spec(p)
    p.add_argument("--address", required=True, help='e.g. "(1)", "12(21)" or "1111"')
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--tile", help="attractor | central | polygon:FILE | box:x0,x1,y0,y1 | interval:a,b")
    p.add_argument("--window", help="keep only tiles meeting this box")
    p.add_argument("--seed", type=int, default=0)
    _add_central(p)
    p.add_argument("--out-json")
    p.add_argument("--out-csv")
    p.add_argument("--out-svg")
    p.add_argument("--size", type=int, default=800)
    p.set_defaults(func=cmd_tile)

    p = sub.add_parser("canonical", help="canonical tilings T_0..T_k (prints tile counts)")
    _add_spec(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out-json")
    p.add_argument("--out-svg")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, default=800)
    p.set_defaults(func=cmd_canonical)

    p = sub.add_parser("check", help="property checks; exit 1 on failure")
    _add_spec(p)
    p.add_argument("--suite", required=True, choices=sorted(SUITES))
    p.add_argument("--address", default="(1)")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--tile")
    p.add_argument("--window")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=50, help="random configurations for nesting")
    p.add_argument("--i")
    p.add_argument("--j")
    p.add_argument("--p", type=int)
    p.add_argument("--q", type=int)
    p.add_argument("--expect", choices=["commensurate", "incommensurate"])
    _add_central(p)
    p.set_defaults(func=cmd_check)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except CheckFailed as e:
        print(f"check failed: {e}", file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (UsageError, SpecFileError, GeometryError, RasterError, ShapeError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
