"""Ordered parallel map capped by ``RADFLUX_THREADS``.

Results always come back in input order and are reduced by the caller in
that order, so the thread count never changes a result.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

from .errors import InvalidArgumentError


def thread_count() -> int:
    raw = os.environ.get("RADFLUX_THREADS")
    if raw is None or raw == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise InvalidArgumentError(f"RADFLUX_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise InvalidArgumentError(f"RADFLUX_THREADS must be a positive integer, got {raw!r}")
    return n


def map_ordered(fn, items, min_batch: int = 64) -> list:
    items = list(items)
    n = min(thread_count(), max(1, len(items) // min_batch))
    if n == 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
