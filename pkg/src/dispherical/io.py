"""Deterministic CSV and manifest writers.

Floats are written with the shortest repr that round-trips, so the same
numbers always give the same bytes.  Nothing time- or host-dependent is
written.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = ["fmt", "write_csv", "read_csv", "manifest_path", "companion_path", "write_manifest", "file_digest"]


def fmt(v) -> str:
    """Text form of one CSV cell."""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if v == 0.0:
            # keep the sign of zero, it is meaningful for eta_a
            return "-0.0" if math.copysign(1.0, v) < 0 else "0.0"
        return repr(v)
    if v is None:
        return ""
    return str(v)


def write_csv(path, columns: Sequence[str], rows: Iterable[Sequence], header: Mapping[str, object] = None) -> int:
    """Write ``rows`` under a ``#``-prefixed header block; returns the row count."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key, val in (header or {}).items():
            fh.write(f"# {key}: {fmt(val)}\n")
        fh.write(",".join(columns) + "\n")
        for r in rows:
            if len(r) != len(columns):
                raise ValueError(f"row has {len(r)} cells, expected {len(columns)}")
            fh.write(",".join(fmt(v) for v in r) + "\n")
            n += 1
    return n


def read_csv(path):
    """Read a file written by :func:`write_csv` as ``(header, columns, rows)``; cells stay text."""
    header = {}
    cols = None
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("# "):
                k, _, v = line[2:].partition(": ")
                header[k] = v
            elif cols is None:
                cols = line.split(",")
            elif line:
                rows.append(line.split(","))
    return header, cols or [], rows


def companion_path(out, tag: str) -> Path:
    """``out/run.csv`` with tag ``turning`` becomes ``out/run.turning.csv``."""
    out = Path(out)
    return out.with_name(f"{out.stem}.{tag}.csv")


def manifest_path(out) -> Path:
    out = Path(out)
    return out.with_name(f"{out.stem}.manifest.json")


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _clean(obj):
    if isinstance(obj, Mapping):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else fmt(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_manifest(out, manifest: Mapping) -> Path:
    """Write the run manifest next to ``out`` with sorted keys."""
    path = manifest_path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_clean(manifest), indent=2, sort_keys=True, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")
    return path
