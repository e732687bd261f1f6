"""Locality-optimizing triangle reordering and the serial FIFO quality metric.

The reorder pass greedily emits the triangle whose vertices score highest,
where a vertex's score decays with its position in a modeled post-transform
cache and gets a boost while few triangles still need it. Score constants
default to the published values of the linear-speed optimizer this follows.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .mesh import IndexedMesh

# vertices of the most recently emitted triangle share a flat score instead
# of the positional decay
_LAST_TRI_POSITIONS = 3


@dataclass(frozen=True)
class ReorderParams:
    cache_size: int = 32
    decay_power: float = 1.5
    last_tri_score: float = 0.75
    valence_boost_scale: float = 2.0
    valence_boost_power: float = 0.5

    def __post_init__(self):
        if self.cache_size < 3:
            raise ValueError("cache_size must be >= 3")
        for name in ("decay_power", "last_tri_score", "valence_boost_scale", "valence_boost_power"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")


def _vertex_score(cache_pos: int, active_tris: int, p: ReorderParams) -> float:
    if active_tris == 0:
        return -1.0
    score = 0.0
    if cache_pos >= 0:
        if cache_pos < _LAST_TRI_POSITIONS:
            score = p.last_tri_score
        else:
            t = (cache_pos - _LAST_TRI_POSITIONS) / (p.cache_size - _LAST_TRI_POSITIONS)
            score = (1.0 - t) ** p.decay_power
    score += p.valence_boost_scale * active_tris ** (-p.valence_boost_power)
    return score


def reorder_forsyth(mesh: IndexedMesh, params: ReorderParams | None = None) -> IndexedMesh:
    """Emit the input triangles in a cache-friendly order.

    The output index buffer is a permutation of the input triangles (corner
    order inside each triangle preserved); the vertex buffer is untouched.
    Ties in the greedy selection break toward the lowest triangle index.
    """
    p = params or ReorderParams()
    tris = mesh.triangles()
    tri_count = len(tris)
    if tri_count <= 1:
        return mesh
    vcount = mesh.vertex_count

    tri_lists: list[list[int]] = [[] for _ in range(vcount)]
    for ti, tri in enumerate(tris):
        for v in tri:
            tri_lists[int(v)].append(ti)
    active = np.array([len(l) for l in tri_lists], dtype=np.int64)

    cache_pos = np.full(vcount, -1, dtype=np.int64)
    vscore = np.array(
        [_vertex_score(-1, int(active[v]), p) for v in range(vcount)], dtype=np.float64
    )
    tscore = vscore[tris].sum(axis=1)

    emitted = np.zeros(tri_count, dtype=bool)
    cache: list[int] = []
    order: list[int] = []

    for _ in range(tri_count):
        best = int(np.argmax(tscore))
        order.append(best)
        emitted[best] = True
        tscore[best] = -np.inf
        tri = [int(v) for v in tris[best]]

        for v in tri:
            tri_lists[v].remove(best)
            active[v] -= 1

        # most-recent-first cache update: the emitted triangle's vertices
        # move to the front, everything past cache_size falls out
        old_cache = cache
        cache = list(dict.fromkeys(tri))
        for v in old_cache:
            if v not in tri:
                cache.append(v)
        for v in cache[p.cache_size :]:
            cache_pos[v] = -1
        cache = cache[: p.cache_size]

        dirty = set(cache) | set(tri)
        for pos, v in enumerate(cache):
            cache_pos[v] = pos
        for v in tri:
            if v not in cache:
                cache_pos[v] = -1
        for v in dirty:
            vscore[v] = _vertex_score(int(cache_pos[v]), int(active[v]), p)

        dirty_tris = {ti for v in dirty for ti in tri_lists[v] if not emitted[ti]}
        if dirty_tris:
            dt = np.fromiter(dirty_tris, dtype=np.int64)
            tscore[dt] = vscore[tris[dt]].sum(axis=1)

    new_indices = tris[np.array(order, dtype=np.int64)].reshape(-1)
    return IndexedMesh(positions=mesh.positions, indices=new_indices, attributes=mesh.attributes)


def acmr(indices: Sequence[int] | np.ndarray, fifo_size: int) -> float:
    """Average cache miss ratio under a serial FIFO vertex cache.

    Misses per triangle; 1.0 is perfect reuse for a closed mesh, 3.0 is a
    cold cache on every corner.
    """
    idx = np.asarray(indices)
    n = len(idx)
    if n % 3 != 0:
        raise ValueError(f"index count {n} is not triangle-aligned")
    if fifo_size < 1:
        raise ValueError("fifo_size must be >= 1")
    if n == 0:
        return 0.0
    fifo: OrderedDict[int, None] = OrderedDict()
    misses = 0
    for raw in idx:
        vid = int(raw)
        if vid not in fifo:
            misses += 1
            fifo[vid] = None
            if len(fifo) > fifo_size:
                fifo.popitem(last=False)
    return misses / (n // 3)
