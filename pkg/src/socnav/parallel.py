"""Thread-pool helper honoring the SOCNAV_THREADS environment variable.

The planner core releases the GIL, so planner-heavy workloads (IRL planner
runs, dataset generation) parallelize across threads. SOCNAV_THREADS caps
the pool (0 or unset = one worker per CPU). Results keep input order, so
threaded runs stay deterministic.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def worker_count() -> int:
    raw = os.environ.get("SOCNAV_THREADS", "0")
    try:
        n = int(raw)
    except ValueError as e:
        raise ValueError(f"SOCNAV_THREADS must be an integer, got {raw!r}") from e
    if n < 0:
        raise ValueError(f"SOCNAV_THREADS must be >= 0, got {n}")
    if n == 0:
        n = os.cpu_count() or 1
    return n


def thread_map(fn, items):
    """Map fn over items, threaded when allowed; results in input order."""
    items = list(items)
    n = min(worker_count(), len(items))
    if n <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
