"""Index-keyed fan-out used by the curve trace and the phase scan."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor


def resolve_jobs(jobs=None) -> int:
    if jobs is None:
        jobs = os.environ.get("NEHARI_LAB_JOBS", "1")
    try:
        jobs = int(jobs)
    except (TypeError, ValueError):
        raise ValueError(f"jobs must be an integer, got {jobs!r}") from None
    return max(1, jobs)


def ordered_map(fn, items, jobs=1):
    """``[fn(x) for x in items]``, optionally across processes; order is preserved."""
    items = list(items)
    jobs = resolve_jobs(jobs)
    if jobs == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))
