"""Ordered parallel map over independent jobs."""

import os
from concurrent.futures import ProcessPoolExecutor


def default_workers() -> int:
    env = os.environ.get("LSBTS_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def pmap(fn, items, workers=None, chunksize=None):
    """``[fn(i) for i in items]``, fanned out to processes when ``workers > 1``."""
    items = list(items)
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    if chunksize is None:
        chunksize = max(1, len(items) // (8 * workers))
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as ex:
        return list(ex.map(fn, items, chunksize=chunksize))
