"""``quadlevel`` command-line interface.

Exit codes: 0 success, 1 internal assertion (an identity failed), 2 invalid
input, 3 budget exceeded, 4 a calibrated statistical criterion failed while
every exact criterion passed (``report`` only).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import io
from .acceptance import run_all
from .config import load_config
from .enumerate import ALGORITHM_VERSION, enum_definite, enum_hyperbolic_sliced, enum_primitive_ball
from .forms import IntegralQuadraticForm, evaluate, validate_standing
from .localarith import BudgetExceeded, enumerate_residue_levelset
from .orthogeom import feature_names, grid_descriptor, shape_descriptor
from .scalingmaps import residual_decay

EXIT_OK, EXIT_ASSERT, EXIT_INPUT, EXIT_BUDGET, EXIT_STAT = 0, 1, 2, 3, 4


def _form_text(q: IntegralQuadraticForm) -> str:
    return ";".join(",".join(str(x) for x in row) for row in q.gram)


def _form_from_text(text: str) -> IntegralQuadraticForm:
    return IntegralQuadraticForm.from_matrix([[int(x) for x in row.split(",")] for row in text.split(";")])


def _points_digest(pts: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(pts, dtype=np.int64).tobytes()).hexdigest()


class Session:
    def __init__(self, args):
        self.args = args
        root = None if args.no_cache else Path(args.cache or os.environ.get("QUADLEVEL_CACHE", ".quadlevel-cache"))
        self.cache = io.Cache(root)

    def manifest(self, command: str, params: dict, form: IntegralQuadraticForm | None = None,
                 seed: int | None = None) -> io.RunManifest:
        man = io.RunManifest(command, params, form.digest() if form else None, seed)
        man.consumed = [k for _, k, s in self.cache.log if s == "hit"]
        man.produced = [k for _, k, s in self.cache.log if s == "miss"]
        return man

    def finish(self, man: io.RunManifest, out: str | None) -> None:
        if out:
            Path(out + ".manifest.json").write_text(json.dumps(man.to_dict(), indent=1, sort_keys=True) + "\n")
        if self.args.explain:
            if not self.cache.log:
                print("explain: no cached stages")
            for kind, key, state in self.cache.log:
                print(f"explain: {kind} {key[:16]} {state}")


def cmd_validate(s: Session) -> int:
    q = io.read_form(s.args.form)
    rep = validate_standing(q)
    print(f"dim={q.dim}")
    print(f"disc={q.disc}")
    print(f"signature=({q.signature[0]},{q.signature[1]})")
    print(f"q_ed_positive={str(rep.q_ed_positive).lower()}")
    print(f"definite_complement={str(rep.definite_complement).lower()}")
    print(f"standing_ok={str(q.standing_ok).lower()}")
    print(f"hash={q.digest()}")
    return EXIT_OK if q.standing_ok else EXIT_INPUT


def _enumerate(s: Session, q: IntegralQuadraticForm, level: int, height: int | None):
    if q.is_definite:
        key = io.cache_key("enum", form=q, level=level, height=None)
        pts = s.cache.get_or_compute("enum", key, lambda: enum_definite(q, level).points)
        return pts.reshape(-1, q.dim), True
    if height is None:
        raise ValueError("indefinite forms need --height")
    key = io.cache_key("enum", form=q, level=level, height=height)
    pts = s.cache.get_or_compute("enum", key, lambda: enum_hyperbolic_sliced(q, level, height).points)
    return pts.reshape(-1, q.dim), False


def cmd_enum(s: Session) -> int:
    a = s.args
    q = io.read_form(a.form)
    pts, complete = _enumerate(s, q, a.level, a.height)
    params = {"level": a.level, "height": a.height}
    man = s.manifest("enum", params, q)
    meta = {"form": _form_text(q), "form_hash": q.digest(), "level": a.level,
            "height": "none" if a.height is None or complete else a.height,
            "complete": str(complete).lower(), "version": ALGORITHM_VERSION, "manifest": man.digest(),
            "count": len(pts)}
    if a.out:
        io.write_points_csv(a.out, pts, meta)
        print(f"{len(pts)} points -> {a.out}")
    else:
        for row in pts.tolist():
            print(",".join(map(str, row)))
    s.finish(man, a.out)
    return EXIT_OK


def _read_points(path):
    pts, meta = io.read_points_csv(path)
    return pts, meta


def cmd_shapes(s: Session) -> int:
    pts, meta = _read_points(s.args.inp)
    d = pts.shape[1]
    n = d - 1
    names = feature_names(n)
    key = io.cache_key("shapes", points=_points_digest(pts))

    def compute():
        rows = []
        for v in pts.tolist():
            sd = shape_descriptor(v)
            rows.append([sd.covol_sq] + [x for r in sd.reduced_gram for x in r] + sd.features.tolist())
        return np.array(rows, dtype=float).reshape(len(pts), 1 + n * n + len(names))

    table = s.cache.get_or_compute("shapes", key, compute)
    man = s.manifest("shapes", {"input": str(s.args.inp), "input_manifest": meta.get("manifest")})
    cols = [f"v{i + 1}" for i in range(d)] + ["covol_sq"]
    cols += [f"g{i + 1}{j + 1}" for i in range(n) for j in range(n)] + names
    rows = []
    for v, t in zip(pts.tolist(), table.tolist()):
        ints = [int(x) for x in t[: 1 + n * n]]
        rows.append(v + ints + t[1 + n * n:])
    io.write_table_csv(s.args.out, cols, rows, {"source": s.args.inp, "manifest": man.digest(),
                                                "version": ALGORITHM_VERSION})
    print(f"{len(rows)} shapes -> {s.args.out}")
    s.finish(man, s.args.out)
    return EXIT_OK


def cmd_grids(s: Session) -> int:
    pts, meta = _read_points(s.args.inp)
    d = pts.shape[1]
    n = d - 1
    key = io.cache_key("grids", points=_points_digest(pts))

    def compute():
        rows = []
        for v in pts.tolist():
            gd = grid_descriptor(v)
            rows.append([gd.covol_sq] + list(gd.w) + list(gd.frac_coords) + [gd.distance])
        return np.array(rows, dtype=float).reshape(len(pts), 2 + d + n)

    table = s.cache.get_or_compute("grids", key, compute)
    man = s.manifest("grids", {"input": str(s.args.inp), "input_manifest": meta.get("manifest")})
    cols = [f"v{i + 1}" for i in range(d)] + ["covol_sq"] + [f"w{i + 1}" for i in range(d)]
    cols += [f"frac{i + 1}" for i in range(n)] + ["distance"]
    rows = []
    for v, t in zip(pts.tolist(), table.tolist()):
        rows.append(v + [int(x) for x in t[: 1 + d]] + t[1 + d:])
    io.write_table_csv(s.args.out, cols, rows, {"source": s.args.inp, "manifest": man.digest(),
                                                "version": ALGORITHM_VERSION})
    print(f"{len(rows)} grids -> {s.args.out}")
    s.finish(man, s.args.out)
    return EXIT_OK


def cmd_residues(s: Session) -> int:
    pts, meta = _read_points(s.args.inp)
    if "form" not in meta or "level" not in meta:
        raise io.FormatError("points file lacks form/level metadata")
    q = _form_from_text(meta["form"])
    mod = s.args.mod
    a = int(meta["level"]) % mod
    cfg = load_config(s.args.config)
    table = enumerate_residue_levelset(q, mod, a, budget=cfg.int("residue_budget"))
    table = table.with_counts(pts.tolist())
    man = s.manifest("residues", {"input": str(s.args.inp), "modulus": mod}, q)
    text = table.to_json(include_elements=False, manifest=man.digest())
    Path(s.args.out).write_text(text + "\n")
    print(f"|H_{a}(Z/{mod})| = {table.size}; {len(pts)} residues -> {s.args.out}")
    s.finish(man, s.args.out)
    return EXIT_OK


def cmd_residual(s: Session) -> int:
    a = s.args
    q = io.read_form(a.form)
    v = [int(x) for x in a.v.split(",")]
    if len(v) != q.dim:
        raise ValueError("vector length does not match the form")
    if evaluate(q, v) == 0:
        raise ValueError("Q(v) must be nonzero")
    ts = np.logspace(math.log10(a.tmin), math.log10(a.tmax), a.steps)
    norms, slope = residual_decay(q, v, ts)
    man = s.manifest("residual", {"v": v, "tmin": a.tmin, "tmax": a.tmax, "steps": a.steps}, q)
    rows = [[q.dim, q.digest(), ",".join(map(str, v)), t, nrm] for t, nrm in zip(ts, norms)]
    if a.out:
        lines = [f"# manifest={man.digest()}", f"# slope={io.format_float(slope)}", "d,form_hash,v,T,residual_norm"]
        lines += [f'{r[0]},{r[1]},"{r[2]}",{io.format_float(r[3])},{io.format_float(r[4])}' for r in rows]
        Path(a.out).write_text("\n".join(lines) + "\n")
    for r in rows:
        print(f"T={io.format_float(r[3])} residual={io.format_float(r[4])}")
    exp = -q.dim / (2 * (q.dim - 1))
    print(f"slope={slope:.6f} expected={exp:.6f}")
    s.finish(man, a.out)
    return EXIT_OK


def cmd_baseline(s: Session) -> int:
    a = s.args
    key = io.cache_key("baseline", dim=a.dim, radius=a.radius)
    pts = s.cache.get_or_compute("baseline", key, lambda: enum_primitive_ball(a.dim, a.radius)).reshape(-1, a.dim)
    man = s.manifest("baseline", {"dim": a.dim, "radius": a.radius})
    if a.out:
        io.write_points_csv(a.out, pts, {"dim": a.dim, "radius": a.radius, "count": len(pts),
                                         "manifest": man.digest(), "version": ALGORITHM_VERSION})
    print(f"{len(pts)} primitive vectors with |v| <= {a.radius} in dimension {a.dim}")
    s.finish(man, a.out)
    return EXIT_OK


def cmd_report(s: Session) -> int:
    cfg = load_config(s.args.config)
    only = [int(x) for x in s.args.only.split(",")] if s.args.only else None
    results = run_all(cfg, only)
    for r in results:
        print(r.line(), flush=True)
    man = s.manifest("report", {"config": cfg.source, "only": only}, seed=cfg.int("seed"))
    doc = {
        "manifest": man.digest(),
        "config": cfg.values,
        "seed": cfg.int("seed"),
        "note": "statistical thresholds are calibration constants, not consequences of the limit theorems",
        "results": [r.to_json() for r in results],
    }
    out = s.args.out or "report.json"
    Path(out).write_text(json.dumps(doc, indent=1) + "\n")
    s.finish(man, out)
    if any(not r.passed and not r.calibrated for r in results):
        return EXIT_ASSERT
    if any(not r.passed for r in results):
        return EXIT_STAT
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quadlevel", description="Integral points on quadratic level sets.")
    p.add_argument("--cache", help="cache directory (default .quadlevel-cache or $QUADLEVEL_CACHE)")
    p.add_argument("--no-cache", action="store_true", help="disable the result cache")
    p.add_argument("--explain", action="store_true", help="list cache hits and misses")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("validate", help="check a form file and the standing assumption")
    sp.add_argument("--form", required=True)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("enum", help="enumerate primitive points of a level set")
    sp.add_argument("--form", required=True)
    sp.add_argument("--level", type=int, required=True)
    sp.add_argument("--height", type=int)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_enum)

    for name, func in (("shapes", cmd_shapes), ("grids", cmd_grids)):
        sp = sub.add_parser(name, help=f"{name} of orthogonal lattices of enumerated points")
        sp.add_argument("--in", dest="inp", required=True)
        sp.add_argument("--out", required=True)
        sp.set_defaults(func=func)

    sp = sub.add_parser("residues", help="residue histogram of points against H_a(Z/q)")
    sp.add_argument("--in", dest="inp", required=True)
    sp.add_argument("--mod", type=int, required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--config")
    sp.set_defaults(func=cmd_residues)

    sp = sub.add_parser("residual", help="decay of the unipotent comparison residual")
    sp.add_argument("--form", required=True)
    sp.add_argument("--v", required=True)
    sp.add_argument("--tmin", type=float, default=1e2)
    sp.add_argument("--tmax", type=float, default=1e8)
    sp.add_argument("--steps", type=int, default=13)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_residual)

    sp = sub.add_parser("baseline", help="primitive vectors in a Euclidean ball")
    sp.add_argument("--dim", type=int, required=True)
    sp.add_argument("--radius", type=int, required=True)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_baseline)

    sp = sub.add_parser("report", help="run the acceptance suite")
    sp.add_argument("--config")
    sp.add_argument("--only", help="comma-separated criterion numbers")
    sp.add_argument("--out", help="report path (default report.json)")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(Session(args))
    except BudgetExceeded as exc:
        print(f"error: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except AssertionError as exc:
        print(f"error: internal check failed: {exc}", file=sys.stderr)
        return EXIT_ASSERT
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
