"""Small shared helpers: worker cap, deterministic serialization."""

from __future__ import annotations

import json
import os

PARALLEL_ENV = "PANEL_ID_THREADS"


def worker_count() -> int:
    """Parallelism cap: PANEL_ID_THREADS if set, else 1 (serial)."""
    raw = os.environ.get(PARALLEL_ENV, "")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def dump_json(obj) -> str:
    """Deterministic JSON: sorted keys, fixed separators, newline-terminated."""
    return json.dumps(obj, sort_keys=True, separators=(",", ": "), indent=2) + "\n"


def fmt(v: float) -> str:
    """Fixed 12-significant-digit float formatting for CSV artifacts."""
    return f"{v:.12g}"
