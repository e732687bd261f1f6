"""Static and dynamic batch formation over an index buffer.

A batch is a contiguous, primitive-aligned range of the index buffer that
one thread group processes with local deduplication. Static batches have a
fixed length; dynamic batches are grown front to back until a unique-vertex
threshold or a primitive cap would be exceeded.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .warp import check_width


class ConfigError(ValueError):
    """Inconsistent batching or dedup configuration."""


@dataclass(frozen=True)
class BatchConfig:
    """Batch formation parameters.

    batch_size: indices per static batch, a multiple of primitive_size.
    max_unique: unique-vertex threshold closing a dynamic batch.
    max_indices: dynamic batch length cap; the effective cap is
        floor(max_indices / primitive_size) whole primitives.
    warp_width: lanes per warp for the voting kernel.
    block_size: threads per block; doubles as the default hash table size.
    primitive_size: indices per primitive (3 for triangles; the random-walk
        demo feeds single-index primitives through the same machinery).
    """

    batch_size: int = 96
    max_unique: int = 256
    max_indices: int = 1023
    warp_width: int = 32
    block_size: int = 256
    primitive_size: int = 3

    def __post_init__(self):
        ps = self.primitive_size
        if ps < 1:
            raise ConfigError("primitive_size must be >= 1")
        if self.batch_size < ps or self.batch_size % ps != 0:
            raise ConfigError("batch_size must be a positive multiple of primitive_size")
        if self.max_unique < ps:
            raise ConfigError("max_unique must be at least primitive_size")
        if self.max_indices < ps:
            raise ConfigError("max_indices must be at least primitive_size")
        if self.block_size < 1:
            raise ConfigError("block_size must be positive")
        check_width(self.warp_width)

    @property
    def max_primitives(self) -> int:
        """Dynamic batch cap in whole primitives."""
        return self.max_indices // self.primitive_size


@dataclass(frozen=True, order=True)
class Batch:
    """Half-open index-buffer range [begin, end), primitive-aligned."""

    begin: int
    end: int

    @property
    def span(self) -> int:
        return self.end - self.begin


def static_batches(index_count: int, cfg: BatchConfig) -> list[Batch]:
    """Consecutive fixed-size batches covering [0, index_count); the final
    batch may be shorter."""
    if index_count % cfg.primitive_size != 0:
        raise ConfigError(f"index count {index_count} is not primitive-aligned")
    return [
        Batch(begin, min(begin + cfg.batch_size, index_count))
        for begin in range(0, index_count, cfg.batch_size)
    ]


def dynamic_batches(indices: Sequence[int] | np.ndarray, cfg: BatchConfig) -> list[Batch]:
    """Greedy front-to-back split at primitive granularity.

    A primitive joins the open batch iff the union of uniques stays within
    max_unique (ties kept) and the primitive cap is not exceeded; otherwise
    the batch closes and a new one opens with that primitive.
    """
    ps = cfg.primitive_size
    n = len(indices)
    if n % ps != 0:
        raise ConfigError(f"index count {n} is not primitive-aligned")
    batches: list[Batch] = []
    if n == 0:
        return batches

    ids = np.asarray(indices)
    begin = 0
    uniques: set[int] = set()
    prims_in_batch = 0
    for offset in range(0, n, ps):
        prim = [int(v) for v in ids[offset : offset + ps]]
        candidate = uniques.union(prim)
        if prims_in_batch > 0 and (
            len(candidate) > cfg.max_unique or prims_in_batch + 1 > cfg.max_primitives
        ):
            batches.append(Batch(begin, offset))
            begin = offset
            uniques = set(prim)
            prims_in_batch = 1
        else:
            uniques = candidate
            prims_in_batch += 1
        if len(uniques) > cfg.max_unique:
            # a single primitive alone busts the unique budget
            raise ConfigError(
                f"primitive at index {offset} has {len(uniques)} unique indices > max_unique {cfg.max_unique}"
            )
    batches.append(Batch(begin, n))
    return batches


def batches_to_offsets(batches: Sequence[Batch]) -> np.ndarray:
    """Serialize a batch list to the flat starting-offsets array (last entry
    is the end of the final batch)."""
    if not batches:
        return np.zeros(0, dtype=np.int64)
    out = np.empty(len(batches) + 1, dtype=np.int64)
    for i, b in enumerate(batches):
        out[i] = b.begin
    out[-1] = batches[-1].end
    return out


def offsets_to_batches(offsets: Sequence[int] | np.ndarray) -> list[Batch]:
    return [Batch(int(offsets[i]), int(offsets[i + 1])) for i in range(len(offsets) - 1)]
