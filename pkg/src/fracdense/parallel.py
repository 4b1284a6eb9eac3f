"""Thread-pool helper honouring ``FRACDENSE_THREADS``."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def max_threads() -> int:
    raw = os.environ.get("FRACDENSE_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


def parallel_map(func, items):
    """``list(map(func, items))``, threaded when more than one worker is allowed.

    Output order always matches input order.
    """
    items = list(items)
    workers = min(max_threads(), len(items))
    if workers <= 1:
        return [func(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))
