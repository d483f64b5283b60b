"""Deterministic table and JSON serialization with content digests."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path

import numpy as np

__all__ = ["Table", "render_csv", "render_json", "digest", "write_artifacts"]


class Table:
    """Named columns; header names carry the unit, e.g. ``"radius [m]"``."""

    def __init__(self, columns: dict):
        lengths = {len(np.atleast_1d(v)) for v in columns.values()}
        if len(lengths) > 1:
            raise ValueError("columns differ in length")
        self.columns = {k: list(np.atleast_1d(v)) for k, v in columns.items()}

    @property
    def header(self):
        return list(self.columns)

    def rows(self):
        return zip(*self.columns.values())


def _scalar(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def _fmt(v):
    v = _scalar(v)
    return repr(v) if isinstance(v, float) else str(v)


def render_csv(table: Table) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.header)
    for row in table.rows():
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue().encode()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, Table):
        return [dict(zip(obj.header, (_scalar(v) for v in row))) for row in obj.rows()]
    return _scalar(obj)


def render_json(obj) -> bytes:
    return (json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n").encode()


def digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def write_artifacts(out_dir, files: dict, manifest_extra: dict | None = None) -> Path:
    """Write ``{name: bytes}`` plus ``manifest.json`` with sha256 digests."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for name in sorted(files):
        data = files[name]
        (out / name).write_bytes(data)
        entries.append({"file": name, "sha256": digest(data), "bytes": len(data)})
    manifest = {"files": entries}
    if manifest_extra:
        manifest.update(manifest_extra)
    path = out / "manifest.json"
    path.write_bytes(render_json(manifest))
    return path
