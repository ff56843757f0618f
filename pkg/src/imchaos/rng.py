"""Counter-based random streams.

Every replica chunk draws from a Philox generator keyed by ``(seed, stream)``,
so results do not depend on how chunks are spread over workers.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Sequence

import numpy as np

MASK64 = (1 << 64) - 1


def stream(seed: int, index: int = 0, sub: int = 0) -> np.random.Generator:
    """Independent generator for ``(seed, index, sub)``."""
    key = np.array([seed & MASK64, ((index & 0xFFFFFFFF) << 32) | (sub & 0xFFFFFFFF)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def chunk_sizes(total: int, chunk: int) -> list[int]:
    full, rest = divmod(total, chunk)
    return [chunk] * full + ([rest] if rest else [])


def default_workers() -> int:
    env = os.environ.get("IMCHAOS_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def parallel_map(fn: Callable, tasks: Sequence, workers: int = 1) -> list:
    """Ordered map; results come back in task order whatever the worker count."""
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def pairwise_sum(values: Iterable[np.ndarray]) -> np.ndarray:
    """Deterministic pairwise reduction of a list of arrays."""
    items = [np.asarray(v) for v in values]
    if not items:
        raise ValueError("nothing to reduce")
    while len(items) > 1:
        nxt = [items[i] + items[i + 1] for i in range(0, len(items) - 1, 2)]
        if len(items) % 2:
            nxt.append(items[-1])
        items = nxt
    return items[0]
