"""Canonical JSON, configuration hashes and report files.

Reports are byte-identical for identical configurations: keys are sorted,
floats use ``repr`` round-trip formatting, and anything time-dependent goes
to a separate ``*.meta.json`` sidecar.
"""
from __future__ import annotations

import hashlib
import json
import math
import platform
import time
from pathlib import Path

import numpy as np

__all__ = ["canonical", "canonical_json", "config_hash", "write_report", "write_meta"]


def canonical(obj):
    """Plain-JSON version of ``obj`` (numpy scalars/arrays, tuples, non-finite floats)."""
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return canonical(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def canonical_json(obj) -> str:
    return json.dumps(canonical(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def config_hash(config) -> str:
    """SHA-256 of the compact canonical JSON of ``config``."""
    text = json.dumps(canonical(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def write_report(path, report) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(canonical_json(report))
    return path


def write_meta(path, config, argv=None) -> Path:
    """Sidecar with wall-clock and platform data, kept out of the report proper."""
    from . import __version__

    path = Path(path)
    meta = {
        "config_hash": config_hash(config),
        "created_unix": time.time(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "package_version": __version__,
        "argv": list(argv) if argv is not None else None,
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
    return path
