"""Shared output helpers: number formatting, config hashing, CSV headers."""

from __future__ import annotations

import hashlib
import json

import numpy as np


def fmt(x) -> str:
    """17 significant digits, '.' decimal separator."""
    return format(float(x), ".17g")


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"))


def config_hash(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()[:16]


def csv_header(chash: str, extra: dict = None) -> list:
    lines = [f"# config_hash: {chash}"]
    for key, value in (extra or {}).items():
        lines.append(f"# {key}: {value}")
    return lines
