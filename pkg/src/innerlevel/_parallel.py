"""Chunked data-parallel evaluation honouring INNERLEVEL_THREADS."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

ENV_THREADS = "INNERLEVEL_THREADS"


def thread_count() -> int:
    raw = os.environ.get(ENV_THREADS, "")
    cpus = os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        n = cpus
    return max(1, min(n, cpus))


def map_chunks(fn, points: np.ndarray, chunk: int = 8192):
    """Apply ``fn`` to consecutive chunks of ``points``; returns the list of results in order.

    Results do not depend on the thread count: chunk boundaries are fixed.
    """
    pieces = [points[i : i + chunk] for i in range(0, points.size, chunk)]
    workers = thread_count()
    if workers == 1 or len(pieces) <= 1:
        return [fn(p) for p in pieces]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, pieces))
