import json
import subprocess
import sys

import numpy as np
import pytest

from ifstile.cli import main
from ifstile.raster import read_pgm


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_list(capsys):
    code, out, _ = run(capsys, "list")
    assert code == 0
    assert out.split() == ["crack", "dyadic-1d", "fern", "golden", "newgrowth", "quartic", "sierpinski", "square-4map"]


def test_dimension(capsys):
    code, out, _ = run(capsys, "dimension", "sierpinski")
    assert code == 0 and out.strip() == "1.584962500721"
    assert run(capsys, "dimension", "dyadic-1d")[1].strip() == "1.000000000000"


def test_attractor_csv(capsys, tmp_path):
    out = tmp_path / "a.csv"
    code, _, _ = run(capsys, "attractor", "dyadic-1d", "--points", "500", "--seed", "1", "--out", str(out))
    assert code == 0
    x = np.loadtxt(out, delimiter=",")
    assert len(x) == 500 and x.min() >= 0 and x.max() <= 1


def test_attractor_raster(capsys, tmp_path):
    pgm = tmp_path / "m.pgm"
    code, _, _ = run(capsys, "attractor", "sierpinski", "--points", "100", "--seed", "0", "--out", str(tmp_path / "a.csv"),
                     "--raster", "64", "--raster-out", str(pgm), "--depth", "5")
    assert code == 0
    img = read_pgm(pgm)
    assert img.shape == (64, 64) and img.max() > 0
    sidecars = list(tmp_path.glob("m*.json"))
    assert len(sidecars) == 1 and "window" in json.loads(sidecars[0].read_text())


def test_seed_required(capsys):
    code, _, err = run(capsys, "attractor", "sierpinski", "--points", "10")
    assert code == 2 and "--seed" in err


def test_neighbors(capsys):
    code, out, err = run(capsys, "neighbors", "dyadic-1d", "--depth", "1")
    assert code == 0
    doc = json.loads(out)
    assert sorted(d["translation"][0] for d in doc) == [-1.0, 1.0]
    assert "kappa" in err


def test_centralset(capsys, tmp_path):
    code, out, _ = run(capsys, "centralset", "sierpinski", "--grid", "96", "--points", "30000", "--seed", "0",
                       "--out-mask", str(tmp_path / "c.pgm"), "--out-boundary", str(tmp_path / "b.csv"),
                       "--out-svg", str(tmp_path / "c.svg"), "--circles", str(tmp_path / "circ.csv"))
    assert code == 0
    rep = json.loads(out)
    assert rep["feasibility"]["passed"] is True
    assert rep["area"] == pytest.approx(3 ** 0.5 / 2, rel=0.05)
    assert (tmp_path / "c.svg").read_text().startswith("<?xml")
    assert read_pgm(tmp_path / "c.pgm").shape == (96, 96)
    assert len((tmp_path / "b.csv").read_text().splitlines()) > 20


def test_tile_outputs(capsys, tmp_path):
    code, _, err = run(capsys, "tile", "sierpinski", "--address", "(1)", "--k", "2", "--tile", "box:0,1,0,0.8660254037844386",
                       "--out-json", str(tmp_path / "t.json"), "--out-csv", str(tmp_path / "t.csv"), "--out-svg", str(tmp_path / "t.svg"))
    assert code == 0 and err.startswith("27 tiles")
    doc = json.loads((tmp_path / "t.json").read_text())
    assert len(doc["tiles"]) == 27
    assert doc["shape_table"]["T"]["kind"] == "box"
    assert (tmp_path / "t.csv").read_text().startswith("a,b,e,c,d,g,")


def test_tile_patch_window(capsys):
    code, out, err = run(capsys, "tile", "dyadic-1d", "--address", "(1)", "--k", "3", "--tile", "interval:0,1",
                         "--window", "0.6,1.4", "--out-csv", "-")
    assert code == 0
    assert err.startswith("2 tiles")
    assert len(out.splitlines()) == 3


def test_tile_polygon_file(capsys, tmp_path):
    poly = tmp_path / "p.json"
    poly.write_text(json.dumps([[0, 0], [1, 0], [0.5, 0.8660254037844386]]))
    code, _, err = run(capsys, "tile", "sierpinski", "--address", "(12)", "--k", "1", "--tile", f"polygon:{poly}",
                       "--out-json", str(tmp_path / "t.json"))
    assert code == 0
    assert json.loads((tmp_path / "t.json").read_text())["shape_table"]["T"]["kind"] == "polygon"


def test_canonical_counts(capsys):
    code, out, _ = run(capsys, "canonical", "golden", "--k", "6")
    assert code == 0 and out.split() == ["2", "3", "5", "8", "13", "21", "34"]
    code, _, err = run(capsys, "canonical", "fern", "--k", "2")
    assert code == 2 and "integer" in err


def test_force_costs(capsys):
    code, out, _ = run(capsys, "check", "fern", "--force-costs", "--suite", "commensurability", "--k", "9",
                       "--expect", "incommensurate")
    assert code == 0 and out.strip() == "incommensurate"
    code, out, _ = run(capsys, "check", "fern", "--force-costs", "1,8,8", "--suite", "commensurability", "--k", "9",
                       "--expect", "commensurate")
    assert code == 1


@pytest.mark.parametrize(
    "argv",
    [
        ["dimension", "no-such-spec"],
        ["neighbors", "sierpinski", "--depth", "0"],
        ["tile", "dyadic-1d", "--address", "(3)", "--k", "2"],
        ["tile", "dyadic-1d", "--address", "(1)", "--k", "2", "--tile", "hexagon"],
        ["check", "golden", "--suite", "shift-equivalence"],
        ["bogus-command"],
    ],
)
def test_usage_errors(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_bad_spec_file(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "dimension", str(bad))[0] == 2
    bad.write_text(json.dumps({"maps": [{"matrix": [[1, 0], [0, 0.5]], "translation": [0, 0]}, {"matrix": [[0.5, 0], [0, 0.5]], "translation": [1, 0]}]}))
    assert run(capsys, "dimension", str(bad))[0] == 2


def test_check_suites(capsys):
    assert run(capsys, "check", "dyadic-1d", "--suite", "nesting", "--samples", "5", "--k", "4")[0] == 0
    code, out, _ = run(capsys, "check", "golden", "--suite", "canonical-relation", "--address", "(12)", "--k", "3")
    assert code == 0 and out.count("pass") == 4
    code, out, _ = run(capsys, "check", "golden", "--suite", "shift-equivalence", "--i", "11(2)", "--j", "2(2)", "--p", "2", "--q", "1")
    assert code == 0 and "E" in json.loads(out)
    code, out, _ = run(capsys, "check", "golden", "--suite", "commensurability", "--k", "6", "--expect", "commensurate")
    assert code == 0 and out.startswith("commensurate")


def test_overlap_suite_exit_codes(capsys):
    code, out, _ = run(capsys, "check", "dyadic-1d", "--suite", "overlap", "--tile", "interval:-0.3333333333333333,1.3333333333333333",
                       "--address", "(1)", "--k", "3", "--grid", "4096")
    assert code == 1
    rep = json.loads(out)
    assert rep["counts"]["overlapping"] == 15
    assert rep["overlapping"][0]["measure"] == pytest.approx(1 / 3, abs=2e-3)
    code, out, _ = run(capsys, "check", "dyadic-1d", "--suite", "overlap", "--tile", "interval:0,1", "--address", "(1)", "--k", "3",
                       "--grid", "4096")
    assert code == 0 and json.loads(out)["counts"]["touching"] == 15


def test_feasibility_suite(capsys):
    code, out, _ = run(capsys, "check", "sierpinski", "--suite", "feasibility", "--grid", "96", "--points", "30000")
    assert code == 0 and json.loads(out)["passed"]


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "ifstile", "dimension", "golden"], capture_output=True, text=True)
    assert r.returncode == 0
    # s + s^2 = 1 for the golden ratios s and s^2, so D = 1
    assert float(r.stdout) == pytest.approx(1.0, abs=1e-12)


def test_quartic_long_prefix_golden(capsys):
    from conftest import check_golden
    import hashlib

    code, out, err = run(capsys, "tile", "quartic", "--address", "1111111111111", "--k", "13", "--out-csv", "-")
    assert code == 0
    count = len(out.splitlines()) - 1
    assert err.startswith(f"{count} tiles")
    digest = hashlib.sha256(out.encode()).hexdigest()
    check_golden("quartic_1x13.txt", f"{count} tiles\n{digest}\n".encode())
