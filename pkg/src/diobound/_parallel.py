"""Order-preserving process-pool map used for shell-partitioned work."""

from __future__ import annotations

import multiprocessing as mp
from concurrent.futures import ProcessPoolExecutor


def pmap(fn, tasks, workers: int = 1) -> list:
    """``list(map(fn, tasks))``, optionally over a process pool.

    Results come back in task order, so merges are independent of ``workers``.
    """
    tasks = list(tasks)
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    ctx = mp.get_context("fork")
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks)), mp_context=ctx) as pool:
        return list(pool.map(fn, tasks))
