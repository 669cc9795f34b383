"""File formats, run manifests and the content-addressed cache."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .enumerate import ALGORITHM_VERSION
from .forms import IntegralQuadraticForm

__all__ = [
    "FormatError",
    "read_form",
    "write_form",
    "format_float",
    "cache_key",
    "RunManifest",
    "write_points_csv",
    "read_points_csv",
    "write_table_csv",
    "read_table_csv",
    "Cache",
]

TOOL_VERSION = "0.1.0"


class FormatError(ValueError):
    pass


def read_form(path: str | os.PathLike) -> IntegralQuadraticForm:
    """Parse a form file: ``d`` on the first line, then ``d`` rows of ``M``."""
    lines = [ln.split("#", 1)[0].strip() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise FormatError(f"{path}: empty form file")
    try:
        d = int(lines[0])
        rows = [[int(tok) for tok in ln.split()] for ln in lines[1:]]
    except ValueError as exc:
        raise FormatError(f"{path}: non-integer entry ({exc})") from None
    if len(rows) != d or any(len(r) != d for r in rows):
        raise FormatError(f"{path}: expected {d} rows of {d} integers")
    if any(rows[i][j] != rows[j][i] for i in range(d) for j in range(i)):
        raise FormatError(f"{path}: matrix is not symmetric")
    return IntegralQuadraticForm.from_matrix(rows)


def write_form(path: str | os.PathLike, q: IntegralQuadraticForm) -> None:
    body = [str(q.dim)] + [" ".join(str(x) for x in row) for row in q.gram]
    Path(path).write_text("\n".join(body) + "\n")


def format_float(x: float) -> str:
    return "%.17g" % x


def _canonical(obj) -> str:
    def default(o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, (np.integer,)):
            return int(o)
        if isinstance(o, (np.floating,)):
            return format_float(float(o))
        if isinstance(o, IntegralQuadraticForm):
            return [list(r) for r in o.gram]
        raise TypeError(f"no canonical serialization for {type(o).__name__}")

    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=default)


def cache_key(kind: str, version: str = ALGORITHM_VERSION, **inputs) -> str:
    """Stable hex digest of ``kind``, the algorithm version and the inputs."""
    payload = _canonical({"kind": kind, "version": version, "inputs": inputs})
    return hashlib.sha256(payload.encode()).hexdigest()


@dataclass
class RunManifest:
    command: str
    parameters: dict
    form_hash: str | None = None
    seed: int | None = None
    consumed: list[str] = field(default_factory=list)
    produced: list[str] = field(default_factory=list)
    tool_version: str = TOOL_VERSION

    def to_dict(self) -> dict:
        return json.loads(_canonical(asdict(self)))

    def digest(self) -> str:
        return hashlib.sha256(_canonical(self.to_dict()).encode()).hexdigest()[:16]


def _header(meta: dict) -> list[str]:
    return [f"# {k}={meta[k]}" for k in sorted(meta)]


def write_points_csv(path, points: np.ndarray, meta: dict) -> None:
    """Integer points, one per row, after ``# key=value`` header lines."""
    pts = np.asarray(points, dtype=np.int64)
    d = pts.shape[1] if pts.ndim == 2 else int(meta.get("dim", 0))
    lines = _header(meta) + [",".join(f"x{i + 1}" for i in range(d))]
    lines += [",".join(map(str, row)) for row in pts.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def _split_header(path) -> tuple[dict, list[str]]:
    meta, body = {}, []
    for ln in Path(path).read_text().splitlines():
        if ln.startswith("#"):
            k, _, v = ln[1:].strip().partition("=")
            meta[k] = v
        elif ln.strip():
            body.append(ln)
    if not body:
        raise FormatError(f"{path}: missing column header")
    return meta, body


def read_points_csv(path) -> tuple[np.ndarray, dict]:
    meta, body = _split_header(path)
    d = len(body[0].split(","))
    rows = [[int(t) for t in ln.split(",")] for ln in body[1:]]
    if any(len(r) != d for r in rows):
        raise FormatError(f"{path}: ragged rows")
    return np.array(rows, dtype=np.int64).reshape(-1, d), meta


def write_table_csv(path, columns: Sequence[str], rows: Iterable[Sequence], meta: dict) -> None:
    """Mixed integer/float table; floats carry 17 significant digits."""

    def cell(x):
        if isinstance(x, (int, np.integer)):
            return str(int(x))
        return format_float(float(x))

    lines = _header(meta) + [",".join(columns)]
    lines += [",".join(cell(x) for x in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n")


def read_table_csv(path) -> tuple[list[str], np.ndarray, dict]:
    meta, body = _split_header(path)
    cols = body[0].split(",")
    data = np.array([[float(t) for t in ln.split(",")] for ln in body[1:]], dtype=float)
    return cols, data.reshape(-1, len(cols)), meta


class Cache:
    """Content-addressed store: one ``.npy`` file per key.

    Every lookup is logged so a run can report which results were reused.
    """

    def __init__(self, root: str | os.PathLike | None):
        self.root = Path(root) if root is not None else None
        self.log: list[tuple[str, str, str]] = []  # (kind, key, hit|miss|off)

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.npy"

    def load(self, kind: str, key: str) -> np.ndarray | None:
        if self.root is None:
            self.log.append((kind, key, "off"))
            return None
        p = self._path(key)
        if p.exists():
            self.log.append((kind, key, "hit"))
            return np.load(p, allow_pickle=False)
        self.log.append((kind, key, "miss"))
        return None

    def store(self, key: str, array: np.ndarray) -> None:
        if self.root is None:
            return
        p = self._path(key)
        p.parent.mkdir(parents=True, exist_ok=True)
        tmp = p.with_suffix(".tmp.npy")
        np.save(tmp, np.asarray(array), allow_pickle=False)
        os.replace(tmp, p)

    def get_or_compute(self, kind: str, key: str, compute) -> np.ndarray:
        got = self.load(kind, key)
        if got is None:
            got = np.asarray(compute())
            self.store(key, got)
        return got
