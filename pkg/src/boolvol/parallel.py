"""Replica fan-out over worker processes, merged by replica id."""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Optional, Sequence

THREADS_ENV = "VOLATILITY_THREADS"


def resolve_threads(threads: Optional[int] = None) -> int:
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        if env:
            threads = int(env)
        else:
            threads = len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1
    if threads < 1:
        raise ValueError(f"thread count must be positive, got {threads}")
    return threads


def _chunks(count: int, parts: int) -> list[tuple[int, int]]:
    parts = max(1, min(parts, count))
    size, extra = divmod(count, parts)
    out, lo = [], 0
    for j in range(parts):
        hi = lo + size + (1 if j < extra else 0)
        out.append((lo, hi))
        lo = hi
    return out


def map_replicas(chunk_fn: Callable[[int, int], Sequence], count: int, threads: Optional[int] = None) -> list:
    """Concatenate ``chunk_fn(lo, hi)`` over a partition of ``range(count)``.

    ``chunk_fn`` must return one result per replica id in ``lo .. hi-1``, in
    order, and be picklable when ``threads > 1``. The output does not depend
    on ``threads``.
    """
    threads = resolve_threads(threads)
    if count == 0:
        return []
    if threads == 1:
        return list(chunk_fn(0, count))
    # several chunks per worker for load balance; results are keyed by position
    bounds = _chunks(count, threads * 4)
    with ProcessPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(chunk_fn, lo, hi) for lo, hi in bounds]
        out: list = []
        for fut in futures:
            out.extend(fut.result())
    return out
