"""Deterministic artifact emission: canonical JSON, manifest hashing, and
CSV traces.  Identical payloads serialize to identical bytes, so reports
are reproducible bit-for-bit for a fixed config and seed."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

__all__ = [
    "canonical_json",
    "manifest_hash",
    "write_json_report",
    "write_csv_trace",
]


def _sanitize(obj):
    """Plain-python view of a payload: numpy scalars/arrays unwrapped,
    non-finite floats stringified (strict JSON has no Infinity/NaN)."""
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if np.isfinite(f) else repr(f)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def canonical_json(payload) -> str:
    return json.dumps(_sanitize(payload), sort_keys=True, separators=(",", ":"), allow_nan=False)


def manifest_hash(config: dict) -> str:
    """12-hex digest of the canonical config serialization."""
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()[:12]


def write_json_report(path, payload, manifest: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(canonical_json({"manifest": manifest, "report": payload}) + "\n")
    return path


def write_csv_trace(path, columns: list, rows, manifest: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# manifest={manifest}", ",".join(columns)]
    for row in rows:
        lines.append(",".join("%.17g" % float(v) if isinstance(v, (int, float, np.floating, np.integer)) else str(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path
