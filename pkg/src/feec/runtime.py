"""Worker limits and global-solve instrumentation."""
from __future__ import annotations

import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
U = TypeVar("U")

_workers: int | None = None
global_solves: Counter = Counter()


def set_workers(n: int | None) -> None:
    global _workers
    if n is not None and n < 1:
        raise ValueError("worker count must be at least 1")
    _workers = n


def workers() -> int:
    if _workers is not None:
        return _workers
    env = os.environ.get("FEEC_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"FEEC_THREADS must be an integer, got {env!r}") from None
    return 1


def parallel_map(fn: Callable[[T], U], items: Iterable[T]) -> list[U]:
    """Ordered map over independent tasks, threaded when more than one worker is allowed."""
    items = list(items)
    n = workers()
    if n <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def record_global_solve(name: str) -> None:
    global_solves[name] += 1


@contextmanager
def count_global_solves():
    """Yields a Counter of global solves performed inside the block."""
    before = Counter(global_solves)
    seen: Counter = Counter()
    try:
        yield seen
    finally:
        seen.update(global_solves - before)
