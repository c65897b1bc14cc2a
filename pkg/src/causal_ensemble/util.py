"""Shared plumbing: seed derivation and optional thread fan-out.

All randomness in the package flows from integer master seeds through
:func:`derived_rng`, so any unit of work (bootstrap iteration, restart,
algorithm run) can be executed in any order, or in parallel, and still
reproduce bit-identically.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")


def derived_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Generator for sub-task ``key`` of the stream rooted at ``master_seed``.

    Uses numpy's SeedSequence spawn-key mechanism, which is stable across
    platforms and releases: ``derived_rng(s, i)`` for distinct ``i`` yields
    independent, reproducible streams.
    """
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=tuple(key)))


def derived_seed(master_seed: int, *key: int) -> int:
    """Integer seed for sub-task ``key``; same derivation rule as derived_rng."""
    ss = np.random.SeedSequence(master_seed, spawn_key=tuple(key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def parallel_map(fn: Callable[[T], R], items: Sequence[T], threads: int = 1) -> list[R]:
    """Map ``fn`` over ``items``, optionally on a thread pool.

    Results are returned in input order regardless of completion order, so
    callers see identical output for any thread count. ``fn`` must be pure.
    """
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def sigmoid(z):
    """Numerically stable logistic function."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out
