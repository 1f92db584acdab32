"""Point CSV ingestion, run configuration and deterministic serialization."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass, fields
from typing import Optional

import numpy as np

from .exceptions import EmptyInput, InputError

__all__ = [
    "RunConfig",
    "read_points_csv",
    "write_points_csv",
    "dumps_json",
    "write_json",
    "write_raster_csv",
    "read_raster_csv",
    "write_raster_binary",
]


def read_points_csv(path, dim=None) -> np.ndarray:
    """Read one point per row from a CSV file.

    Blank lines and lines starting with ``#`` are skipped. The first data
    line may be a header of non-numeric names. Errors carry the 1-based
    line number.

    Returns
    -------
    ndarray of shape (n_points, dim)
    """
    rows = []
    header_allowed = True
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields_ = next(csv.reader([line]))
            fields_ = [f.strip() for f in fields_]
            try:
                values = [float(f) for f in fields_]
            except ValueError:
                if header_allowed and not any(_is_number(f) for f in fields_):
                    header_allowed = False
                    if dim is None:
                        dim = len(fields_)
                    elif len(fields_) != dim:
                        raise InputError(f"header has {len(fields_)} columns, expected {dim}", lineno)
                    continue
                raise InputError(f"non-numeric value in {line!r}", lineno) from None
            header_allowed = False
            if dim is None:
                dim = len(values)
            if len(values) != dim:
                raise InputError(f"expected {dim} columns, got {len(values)}", lineno)
            if not all(math.isfinite(v) for v in values):
                raise InputError("non-finite coordinate", lineno)
            rows.append(values)
    if not rows:
        raise EmptyInput(f"no data rows in {os.fspath(path)}")
    if dim not in (1, 2):
        raise InputError(f"only 1 or 2 columns are supported, got {dim}")
    return np.asarray(rows, dtype=float).reshape(-1, dim)


def _is_number(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


def write_points_csv(path, points, header=True):
    """Write points with 17 significant digits so they read back exactly."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    dim = pts.shape[1] if pts.size else (pts.shape[1] if pts.ndim == 2 else 1)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header:
            fh.write(",".join(["x", "y"][:dim]) + "\n")
        for row in pts:
            fh.write(",".join(_fmt(float(v)) for v in row) + "\n")


def _fmt(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return "%.17g" % x


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {_encode(v, indent, level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_json(obj, indent=2) -> str:
    """Serialize to JSON with floats written as ``%.17g``.

    Key order is the insertion order of each dict, which every producer in
    the package fixes, so equal inputs give byte-identical text.
    """
    return _encode(obj, indent, 0) + "\n"


def write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_json(obj))


def write_raster_csv(path, grid):
    """Write a density raster as CSV, metadata in ``#`` header lines."""
    meta = grid.metadata()
    values = np.atleast_2d(grid.values)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# dim: {meta['dim']}\n")
        fh.write("# bounds: " + ";".join(f"{_fmt(lo)},{_fmt(hi)}" for lo, hi in meta["bounds"]) + "\n")
        fh.write("# resolution: " + ",".join(str(r) for r in meta["resolution"]) + "\n")
        fh.write(f"# order: {meta['order']}\n")
        for row in values:
            fh.write(",".join(_fmt(float(v)) for v in row) + "\n")


def read_raster_csv(path):
    """Inverse of :func:`write_raster_csv`; returns ``(values, metadata)``."""
    meta = {}
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("#"):
                key, _, val = line[1:].partition(":")
                meta[key.strip()] = val.strip()
            elif line:
                rows.append([float(v) for v in line.split(",")])
    meta["dim"] = int(meta["dim"])
    meta["bounds"] = [[float(v) for v in r.split(",")] for r in meta["bounds"].split(";")]
    meta["resolution"] = [int(v) for v in meta["resolution"].split(",")]
    values = np.asarray(rows, dtype=float)
    if meta["dim"] == 1:
        values = values.ravel()
    return values, meta


def write_raster_binary(path, grid):
    """Row-major little-endian float64 values plus a ``.json`` sidecar."""
    np.ascontiguousarray(grid.values, dtype="<f8").tofile(path)
    meta = grid.metadata()
    meta["dtype"] = "<f8"
    write_json(str(path) + ".json", meta)


@dataclass
class RunConfig:
    """Settings of one pipeline run.

    ``bounds`` is ``"auto"`` or per-dimension ``[lo, hi]`` pairs; ``quantum``
    is ``"auto-min-cell"`` or a positive number per dimension (a single
    number is broadcast).
    """

    input: Optional[str] = None
    dim: Optional[int] = None
    bounds: object = "auto"
    expand: float = 0.05
    quantum: object = "auto-min-cell"
    penalty: float = 0.0
    threshold: float = 2.0
    grid: Optional[list] = None
    seed: Optional[int] = None
    out: str = "."
    emit_history: bool = False
    emit_cells: bool = False
    adjacency: str = "vertex"
    duplicates: str = "error"
    raster_format: str = "csv"

    def validate(self) -> "RunConfig":
        if self.dim is not None and self.dim not in (1, 2):
            raise InputError(f"dim must be 1 or 2, got {self.dim}")
        if self.bounds != "auto":
            b = np.asarray(self.bounds, dtype=float)
            if b.ndim != 2 or b.shape[1] != 2 or np.any(b[:, 1] <= b[:, 0]) or not np.all(np.isfinite(b)):
                raise InputError(f"bounds must be [lo, hi] pairs with lo < hi, got {self.bounds}")
        if not (self.expand >= 0 and math.isfinite(self.expand)):
            raise InputError(f"expand must be >= 0, got {self.expand}")
        if self.quantum != "auto-min-cell":
            q = np.atleast_1d(np.asarray(self.quantum, dtype=float))
            if q.ndim != 1 or np.any(q <= 0) or not np.all(np.isfinite(q)):
                raise InputError(f"quantum must be positive, got {self.quantum}")
        if not math.isfinite(self.penalty):
            raise InputError("penalty must be finite")
        if not self.threshold > 1:
            raise InputError(f"threshold must exceed 1, got {self.threshold}")
        if self.grid is not None and (len(self.grid) not in (1, 2) or min(self.grid) < 1):
            raise InputError(f"grid needs 1 or 2 positive integers, got {self.grid}")
        if self.adjacency not in ("vertex", "edge"):
            raise InputError(f"adjacency must be vertex or edge, got {self.adjacency!r}")
        if self.duplicates not in ("error", "jitter"):
            raise InputError(f"duplicates must be error or jitter, got {self.duplicates!r}")
        if self.raster_format not in ("csv", "binary"):
            raise InputError(f"raster_format must be csv or binary, got {self.raster_format!r}")
        return self

    @property
    def bounds_array(self):
        return None if self.bounds == "auto" else np.asarray(self.bounds, dtype=float)

    @property
    def quantum_value(self):
        return None if self.quantum == "auto-min-cell" else self.quantum

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d).validate()

    def to_json(self) -> str:
        return dumps_json(self.to_dict())

    @classmethod
    def from_json(cls, text) -> "RunConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"config is not valid JSON: {exc.msg}", exc.lineno) from None
        if not isinstance(d, dict):
            raise InputError("config must be a JSON object")
        return cls.from_dict(d)

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())
