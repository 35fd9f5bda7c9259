"""Order-preserving thread map capped by ``NODAL_LAB_THREADS``."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def thread_count() -> int:
    raw = os.environ.get("NODAL_LAB_THREADS")
    if raw is None:
        return max(1, os.cpu_count() or 1)
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"NODAL_LAB_THREADS must be an integer, got {raw!r}") from None


def parallel_map(fn, items) -> list:
    """``[fn(x) for x in items]``; results come back in input order whatever the thread count."""
    items = list(items)
    n = min(thread_count(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
