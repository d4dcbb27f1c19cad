"""Deterministic task fan-out.

Tasks are indexed and each derives its own random stream from (seed, index),
so results are identical for any thread count; threading changes wall time
only.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

__all__ = ["map_indexed"]


def map_indexed(fn, n: int, threads: int = 1) -> list:
    """Evaluate fn(0..n-1), in order, optionally on a thread pool."""
    if threads is None or threads <= 1 or n <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=int(threads)) as ex:
        return list(ex.map(fn, range(n)))
