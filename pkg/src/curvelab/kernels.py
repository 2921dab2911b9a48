"""Blocked all-pairs reductions.

Every O(N^2) scan in the package (Besov sums, chord-arc suprema, probe
integrals) goes through :func:`blocked_reduce`. Rows are split into blocks,
each block is reduced independently, and the partial results are combined in
block order so the answer does not depend on the number of workers.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

WORKERS_ENV = "LAB_WORKERS"
DEFAULT_BLOCK = 256


def worker_count(workers: int | None = None) -> int:
    if workers is not None:
        return max(1, int(workers))
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def row_blocks(n: int, block: int = DEFAULT_BLOCK) -> list[tuple[int, int]]:
    return [(i, min(i + block, n)) for i in range(0, n, block)]


def blocked_reduce(
    n: int,
    fn: Callable[[int, int], object],
    combine: Callable[[Sequence[object]], object],
    block: int = DEFAULT_BLOCK,
    workers: int | None = None,
):
    """Apply ``fn(i0, i1)`` to row blocks of ``range(n)`` and combine.

    numpy releases the GIL inside large array operations, so a thread pool
    gives real parallelism here without pickling the operands.
    """
    blocks = row_blocks(n, block)
    nw = worker_count(workers)
    if nw == 1 or len(blocks) == 1:
        parts = [fn(i0, i1) for i0, i1 in blocks]
    else:
        with ThreadPoolExecutor(max_workers=nw) as pool:
            parts = list(pool.map(lambda b: fn(*b), blocks))
    return combine(parts)


def blocked_sum(n, fn, block=DEFAULT_BLOCK, workers=None) -> float:
    return blocked_reduce(n, fn, lambda parts: float(np.sum(parts)), block, workers)


def blocked_argmax(n, fn, block=DEFAULT_BLOCK, workers=None):
    """``fn`` returns ``(value, payload)`` per block; keep the first maximum."""

    def pick(parts):
        best = None
        for part in parts:
            if best is None or part[0] > best[0]:
                best = part
        return best

    return blocked_reduce(n, fn, pick, block, workers)
