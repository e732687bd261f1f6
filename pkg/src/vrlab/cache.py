"""Per-multiprocessor LRU post-transform cache simulation and the ideal rate.

The simulator models the concurrency penalty of caching on wide hardware:
within one shading cycle every probe sees only results produced in earlier
cycles, so duplicate ids arriving in the same cycle all miss.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class CacheConfig:
    """Parallel cache model parameters.

    entries defaults to cache_bytes / entry_bytes; pass it explicitly to
    bypass the byte sizing. entry_bytes defaults to 64 (16 32-bit
    attributes per shaded vertex) since hardware entry sizes are not
    public.
    """

    num_processors: int = 28
    wave_width: int = 1024
    cache_bytes: int = 16384
    entry_bytes: int = 64
    entries: int | None = None

    def __post_init__(self):
        if self.num_processors < 1 or self.wave_width < 1:
            raise ValueError("num_processors and wave_width must be >= 1")
        if self.capacity < 1:
            raise ValueError("cache must hold at least one entry")

    @property
    def capacity(self) -> int:
        if self.entries is not None:
            return self.entries
        return self.cache_bytes // self.entry_bytes


@dataclass(frozen=True)
class CacheReport:
    hits: int
    misses: int
    hit_rate: float

    @property
    def total(self) -> int:
        return self.hits + self.misses


def ideal_reuse(indices: Sequence[int] | np.ndarray) -> float:
    """1 - unique/total: the reuse ceiling any mechanism can attain."""
    n = len(indices)
    if n == 0:
        raise ValueError("empty index buffer")
    return 1.0 - len(np.unique(np.asarray(indices))) / n


def simulate_parallel_cache(
    indices: Sequence[int] | np.ndarray,
    cfg: CacheConfig,
    primitive_size: int = 3,
    miss_counts: np.ndarray | None = None,
) -> CacheReport:
    """LRU simulation across num_processors independent caches.

    The buffer is split into equal contiguous primitive-aligned chunks, one
    per processor. Each processor consumes its chunk in waves of wave_width
    indices per cycle: an index hits iff it is already cached (refreshing
    recency); the unique ids missed in a cycle are inserted only after the
    cycle completes, so concurrent duplicates each count as a miss but
    insert once.

    miss_counts, when given, accumulates one shader invocation per miss per
    vertex id (the heatmap input).

    hit_rate is computed as 1 - misses/total so a serial run with unbounded
    capacity reproduces ideal_reuse bit-exactly.
    """
    idx = np.asarray(indices)
    n = len(idx)
    if n % primitive_size != 0:
        raise ValueError(f"index count {n} is not primitive-aligned")
    prims = n // primitive_size
    per_proc = math.ceil(prims / cfg.num_processors) * primitive_size
    hits = 0
    misses = 0
    for start in range(0, n, per_proc):
        h, m = _simulate_one(idx[start : start + per_proc], cfg.wave_width, cfg.capacity, miss_counts)
        hits += h
        misses += m
    total = hits + misses
    rate = 1.0 - misses / total if total else 0.0
    return CacheReport(hits=hits, misses=misses, hit_rate=rate)


def _simulate_one(
    chunk: np.ndarray, wave_width: int, capacity: int, miss_counts: np.ndarray | None
) -> tuple[int, int]:
    lru: OrderedDict[int, None] = OrderedDict()
    hits = 0
    misses = 0
    for base in range(0, len(chunk), wave_width):
        wave = chunk[base : base + wave_width]
        missed_unique: list[int] = []
        missed_seen: set[int] = set()
        for raw in wave:
            vid = int(raw)
            if vid in lru:
                hits += 1
                lru.move_to_end(vid)
            else:
                misses += 1
                if miss_counts is not None:
                    miss_counts[vid] += 1
                if vid not in missed_seen:
                    missed_seen.add(vid)
                    missed_unique.append(vid)
        for vid in missed_unique:
            lru[vid] = None
            if len(lru) > capacity:
                lru.popitem(last=False)
    return hits, misses
