"""Order-preserving parallel map over trial indices."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def default_threads() -> int:
    return max(1, int(os.environ.get("QLOCK_THREADS", "1")))


def map_trials(fn, n: int, threads: int | None = None) -> list:
    """``[fn(0), ..., fn(n-1)]``; results are returned in index order."""
    threads = default_threads() if threads is None else max(1, int(threads))
    if threads == 1 or n <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(n)))
