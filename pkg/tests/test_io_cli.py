import json

import numpy as np
import pytest

from quadlevel import io
from quadlevel.cli import main
from quadlevel.config import load_config
from quadlevel.forms import Q4, diagonal_form


@pytest.fixture
def forms(tmp_path):
    paths = {}
    for name, q in {"q4": Q4(), "i4": diagonal_form(1, 1, 1, 1), "i5": diagonal_form(1, 1, 1, 1, 1)}.items():
        p = tmp_path / f"{name}.txt"
        io.write_form(p, q)
        paths[name] = str(p)
    return paths


def run(capsys, tmp_path, *argv):
    code = main(["--cache", str(tmp_path / "cache"), *argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_read_form_roundtrip_and_comments(tmp_path):
    p = tmp_path / "f.txt"
    p.write_text("# Q_4\n4\n-1 0 0 0\n0 -1 0 0  # row 2\n0 0 -1 0\n0 0 0 1\n")
    assert io.read_form(p) == Q4()
    io.write_form(p, Q4())
    assert io.read_form(p) == Q4()


@pytest.mark.parametrize("text", ["", "4\n1 0 0 0\n", "4\n1 2 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n",
                                  "4\n1 0 0 0\n0 1 0 0\n0 0 x 0\n0 0 0 1\n"])
def test_read_form_errors(tmp_path, text):
    p = tmp_path / "bad.txt"
    p.write_text(text)
    with pytest.raises(io.FormatError):
        io.read_form(p)


def test_cache_key_contract():
    a = io.cache_key("enum", form=Q4(), level=7, height=20)
    assert a == io.cache_key("enum", form=Q4(), level=7, height=20)
    assert a != io.cache_key("enum", form=Q4(), level=8, height=20)
    assert a != io.cache_key("enum", version="2", form=Q4(), level=7, height=20)
    assert a != io.cache_key("shapes", form=Q4(), level=7, height=20)
    assert a == io.cache_key("enum", height=20, level=7, form=Q4())


def test_cache_store_and_log(tmp_path):
    cache = io.Cache(tmp_path)
    calls = []

    def compute():
        calls.append(1)
        return np.arange(6).reshape(2, 3)

    key = io.cache_key("x", n=1)
    first = cache.get_or_compute("x", key, compute)
    second = cache.get_or_compute("x", key, compute)
    assert np.array_equal(first, second) and len(calls) == 1
    assert [s for _, _, s in cache.log] == ["miss", "hit"]
    off = io.Cache(None)
    off.get_or_compute("x", key, compute)
    assert off.log[-1][2] == "off" and len(calls) == 2


def test_points_csv_roundtrip(tmp_path):
    pts = np.array([[1, -2, 3, 4], [0, 0, 0, 1]])
    p = tmp_path / "p.csv"
    io.write_points_csv(p, pts, {"level": 7, "manifest": "abc"})
    back, meta = io.read_points_csv(p)
    assert np.array_equal(back, pts) and meta == {"level": "7", "manifest": "abc"}


def test_table_csv_uses_17_digits(tmp_path):
    p = tmp_path / "t.csv"
    io.write_table_csv(p, ["n", "x"], [[3, 1 / 3]], {"manifest": "m"})
    assert "0.33333333333333331" in p.read_text()
    cols, data, meta = io.read_table_csv(p)
    assert cols == ["n", "x"] and data[0, 1] == 1 / 3


def test_manifest_digest_is_stable():
    a = io.RunManifest("enum", {"level": 2, "height": None}, "h", 1)
    b = io.RunManifest("enum", {"height": None, "level": 2}, "h", 1)
    assert a.digest() == b.digest()
    assert a.digest() != io.RunManifest("enum", {"level": 3, "height": None}, "h", 1).digest()


def test_config_overlay(tmp_path):
    cfg = load_config()
    assert cfg.int("seed") > 0
    p = tmp_path / "c.cfg"
    p.write_text("seed = 5  # override\n")
    assert load_config(p).int("seed") == 5
    assert load_config(p).ints("c12_levels") == cfg.ints("c12_levels")
    with pytest.raises(KeyError):
        cfg.raw("nonexistent")


def test_cli_validate(forms, capsys, tmp_path):
    code, out, _ = run(capsys, tmp_path, "validate", "--form", forms["q4"])
    assert code == 0
    assert "signature=(1,3)" in out and "standing_ok=true" in out


def test_cli_validate_failures(capsys, tmp_path):
    p = tmp_path / "bad.txt"
    io.write_form(p, diagonal_form(1, 1, -1, 1))
    assert run(capsys, tmp_path, "validate", "--form", str(p))[0] == 2
    p.write_text("3\n1 0 0\n0 1 0\n0 0 1\n")
    code, _, err = run(capsys, tmp_path, "validate", "--form", str(p))
    assert code == 2 and "dimension 3" in err
    assert run(capsys, tmp_path, "validate", "--form", str(tmp_path / "missing.txt"))[0] == 2


def test_cli_enum(forms, capsys, tmp_path):
    out_csv = tmp_path / "pts.csv"
    code, _, _ = run(capsys, tmp_path, "enum", "--form", forms["i4"], "--level", "2", "--out", str(out_csv))
    assert code == 0
    pts, meta = io.read_points_csv(out_csv)
    assert len(pts) == 24 and meta["count"] == "24"
    man = json.loads((tmp_path / "pts.csv.manifest.json").read_text())
    assert man["command"] == "enum" and io.RunManifest(**man).digest() == meta["manifest"]
    code, out, _ = run(capsys, tmp_path, "enum", "--form", forms["q4"], "--level", "1", "--height", "1")
    assert code == 0
    assert set(out.split()) == {"0,0,0,-1", "0,0,0,1"}


def test_cli_enum_errors(forms, capsys, tmp_path):
    assert run(capsys, tmp_path, "enum", "--form", forms["q4"], "--level", "1")[0] == 2
    assert run(capsys, tmp_path, "enum", "--form", forms["q4"], "--level", "9", "--height", "2")[0] == 2
    assert run(capsys, tmp_path, "enum", "--form", forms["i4"], "--level", "0")[0] == 2


def test_cli_warm_cache_explain(forms, capsys, tmp_path):
    args = ("--explain", "enum", "--form", forms["q4"], "--level", "5", "--height", "6")
    _, first, _ = run(capsys, tmp_path, *args)
    _, second, _ = run(capsys, tmp_path, *args)
    assert "miss" in first and "hit" not in first
    assert "hit" in second and "miss" not in second
    body = [ln for ln in first.splitlines() if not ln.startswith("explain")]
    assert body == [ln for ln in second.splitlines() if not ln.startswith("explain")]


def test_cli_shapes_grids_residues(forms, capsys, tmp_path):
    pts = tmp_path / "pts.csv"
    run(capsys, tmp_path, "enum", "--form", forms["q4"], "--level", "6", "--height", "5", "--out", str(pts))
    n = len(io.read_points_csv(pts)[0])
    for cmd in ("shapes", "grids"):
        out = tmp_path / f"{cmd}.csv"
        code, _, _ = run(capsys, tmp_path, cmd, "--in", str(pts), "--out", str(out))
        assert code == 0
        cols, data, meta = io.read_table_csv(out)
        assert len(data) == n and "manifest" in meta
        assert np.all(data[:, cols.index("covol_sq")] == np.sum(data[:, :4] ** 2, axis=1))
    res = tmp_path / "res.json"
    code, out, _ = run(capsys, tmp_path, "residues", "--in", str(pts), "--mod", "5", "--out", str(res))
    assert code == 0 and "|H_1(Z/5)| = 120" in out
    doc = json.loads(res.read_text())
    assert doc["count"] == 120 and sum(doc["histogram"].values()) == n and "manifest" in doc


def test_cli_residues_budget(forms, capsys, tmp_path):
    pts = tmp_path / "pts.csv"
    run(capsys, tmp_path, "enum", "--form", forms["q4"], "--level", "2", "--height", "3", "--out", str(pts))
    code, _, _ = run(capsys, tmp_path, "residues", "--in", str(pts), "--mod", "61", "--out", str(tmp_path / "r.json"))
    assert code == 3


def test_cli_residual(forms, capsys, tmp_path):
    out = tmp_path / "residual.csv"
    code, text, _ = run(capsys, tmp_path, "residual", "--form", forms["q4"], "--v", "1,1,1,2", "--out", str(out))
    assert code == 0
    slope = float(text.strip().splitlines()[-1].split()[0].split("=")[1])
    assert abs(slope + 2 / 3) <= 0.05
    assert len(out.read_text().splitlines()) == 3 + 13
    assert run(capsys, tmp_path, "residual", "--form", forms["q4"], "--v", "1,0,0,1")[0] == 2


def test_cli_baseline(capsys, tmp_path):
    code, out, _ = run(capsys, tmp_path, "baseline", "--dim", "4", "--radius", "2")
    assert code == 0 and out.startswith("80 ")


def test_cli_report_subset(capsys, tmp_path):
    report = tmp_path / "report.json"
    code, out, _ = run(capsys, tmp_path, "report", "--only", "1,2", "--out", str(report))
    assert code == 0
    assert out.splitlines()[0].startswith("C01 PASS")
    doc = json.loads(report.read_text())
    assert [r["pass"] for r in doc["results"]] == [True, True]
