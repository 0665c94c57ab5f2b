"""Deterministic summation of long float arrays.

Values are cut into fixed-size blocks; every block is reduced by numpy's
pairwise sum and the block partials are combined with ``math.fsum``
(correctly rounded).  Block boundaries never depend on the number of
worker threads, so the result is bit-identical however the work is split.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

BLOCK = 4096
THREADS_ENV = "NATMETRIC_THREADS"


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def block_sums(values, block: int = BLOCK, workers: int | None = None) -> np.ndarray:
    """Sums of consecutive full blocks of ``values`` (the ragged tail is dropped)."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    nfull = values.size // block
    if nfull == 0:
        return np.zeros(0)
    rows = values[: nfull * block].reshape(nfull, block)
    workers = default_workers() if workers is None else workers
    if workers <= 1 or nfull < 2 * workers:
        return rows.sum(axis=1)
    # chunk boundaries are multiples of whole blocks; per-row sums are unaffected
    bounds = np.linspace(0, nfull, workers + 1).astype(int)
    out = np.empty(nfull)

    def work(i):
        lo, hi = bounds[i], bounds[i + 1]
        out[lo:hi] = rows[lo:hi].sum(axis=1)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(work, range(workers)))
    return out


def exact_sum(values, block: int = BLOCK, workers: int | None = None) -> float:
    values = np.ascontiguousarray(values, dtype=np.float64)
    partial = block_sums(values, block, workers)
    tail = values[partial.size * block:]
    return math.fsum(partial.tolist() + [float(tail.sum())])


def window_sums(values, windows, block: int = BLOCK, workers: int | None = None) -> list[float]:
    """``sum(values[:N])`` for every N in ``windows`` using one block pass.

    Each entry equals ``exact_sum(values[:N])`` bit for bit.
    """
    values = np.ascontiguousarray(values, dtype=np.float64)
    partial = block_sums(values, block, workers).tolist()
    out = []
    for n in windows:
        k = n // block
        tail = values[k * block:n]
        out.append(math.fsum(partial[:k] + [float(tail.sum())]))
    return out


def window_means(values, windows, block: int = BLOCK, workers: int | None = None) -> list[float]:
    return [s / n for s, n in zip(window_sums(values, windows, block, workers), windows)]
