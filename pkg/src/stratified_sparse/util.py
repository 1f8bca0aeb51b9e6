"""Small shared helpers."""

from __future__ import annotations

import os

WORKERS_ENV = "STRATIFIED_SPARSE_WORKERS"


def worker_count() -> int:
    """Worker threads for embarrassingly parallel loops (speed only, never results)."""
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1
