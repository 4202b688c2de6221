"""Deterministic data-parallel map.

Loops marked parallel-safe (independent iterations, merged in submission
order) go through here; a thread cap of one keeps the plain sequential path.
Results are always collected in input order, so output never depends on the
thread count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Optional, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: Optional[int] = None) -> list[R]:
    work: Sequence[T] = list(items)
    if threads is None or threads <= 1 or len(work) <= 1:
        return [fn(item) for item in work]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, work))
