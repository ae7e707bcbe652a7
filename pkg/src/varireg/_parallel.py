"""Order-preserving parallel map over curves.

Per-curve computations are independent and pure, so results are
bit-identical regardless of the worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

DEFAULT_THREADS_ENV = "VARIREG_THREADS"


def resolve_threads(threads=None) -> int:
    if threads is None:
        threads = os.environ.get(DEFAULT_THREADS_ENV, "1")
    threads = int(threads)
    return max(1, threads)


def thread_map(fn, items, threads: int = 1) -> list:
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
