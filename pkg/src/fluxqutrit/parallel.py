"""Ordered fan-out of independent tasks over a process pool."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

MAX_WORKERS_ENV = "FLUXQUTRIT_MAX_WORKERS"


def worker_count(requested: int | None = None) -> int:
    """Requested worker count, capped by the environment variable and CPU count."""
    n = requested if requested is not None else (os.cpu_count() or 1)
    cap = os.environ.get(MAX_WORKERS_ENV)
    if cap:
        n = min(n, int(cap))
    return max(1, n)


def ordered_map(fn, tasks, workers: int | None = None) -> list:
    """``[fn(t) for t in tasks]``, possibly in parallel; result order follows ``tasks``."""
    tasks = list(tasks)
    n = min(worker_count(workers), len(tasks))
    if n <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * n))))
