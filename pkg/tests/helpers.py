"""Shared test utilities: corpora and independent oracles."""

from __future__ import annotations

import numpy as np

import vrlab
from vrlab.strategies import DedupResult


def corners_from(result: DedupResult) -> list[int]:
    """Reassemble the emitted corner ids from a kernel result."""
    out: list[int] = []
    for rnd in result.rounds:
        for slot in rnd.assembly_map:
            out.append(rnd.unique_ids[slot])
    return out


def mesh_corpus(count: int, seed: int) -> list[vrlab.IndexedMesh]:
    """Mixed corpus: grids, icospheres, and shuffled variants."""
    rng = np.random.default_rng(seed)
    meshes = []
    for i in range(count):
        kind = i % 4
        if kind == 0:
            m = vrlab.gen_grid(int(rng.integers(2, 11)), int(rng.integers(2, 11)))
        elif kind == 1:
            m = vrlab.gen_icosphere(int(rng.integers(0, 3)))
        elif kind == 2:
            m = vrlab.shuffle_triangles(
                vrlab.gen_grid(int(rng.integers(3, 11)), int(rng.integers(3, 11))),
                int(rng.integers(0, 2**31)),
            )
        else:
            m = vrlab.shuffle_triangles(
                vrlab.gen_icosphere(int(rng.integers(1, 3))), int(rng.integers(0, 2**31))
            )
        meshes.append(m)
    return meshes


def random_batches(count: int, seed: int, max_unique: int = 256, max_tris: int = 341):
    """Random id arrays whose unique count respects the dynamic-batch bound."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        pool = rng.choice(100_000, size=int(rng.integers(1, max_unique + 1)), replace=False)
        tris = int(rng.integers(1, max_tris + 1))
        out.append(rng.choice(pool, size=3 * tris).astype(np.uint32))
    return out


def reference_hash_dedup(ids, table_size: int, multiplier: int):
    """Scalar reference for multiplicative hashing with linear probing.

    Independent of the library kernel: returns (slot per input, table).
    """
    shift = 32 - (table_size.bit_length() - 1)
    table = [None] * table_size
    slots = []
    for raw in ids:
        vid = int(raw)
        p = ((vid * multiplier) % 2**32) >> shift
        while table[p] is not None and table[p] != vid:
            p = (p + 1) % table_size
        table[p] = vid
        slots.append(p)
    return slots, table
