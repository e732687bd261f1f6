"""The five vertex-processing strategies.

Every strategy consumes primitive-aligned batches of an index buffer and
emits the same primitive stream; they differ only in how many shader
invocations it takes. Per-batch kernels return a DedupResult (unique-id
list, assembly map, invocation count); runners fan batches across worker
threads, shade unique ids, assemble the output stream in batch order and
aggregate a ReuseReport.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import analytics
from .batching import Batch, BatchConfig, ConfigError
from .mesh import IndexedMesh
from .warp import WarpState, ballot, check_width, ffs, lane_bit, shfl

# Out-of-batch lanes load this sentinel; it never equals a valid vertex id.
SENTINEL = -1

WORKER_ENV = "VRLAB_THREADS"

# 32-bit Fibonacci multiplier, floor(2^32 / golden ratio); any odd 32-bit
# constant is accepted.
FIBONACCI_MULTIPLIER = 2654435769


@dataclass(frozen=True)
class ShaderFn:
    """Pure vertex shader stand-in: same id always yields the same record.

    cycles is the abstract per-invocation load used by the cost model.
    """

    fn: Callable[[int], object]
    cycles: int = 1
    name: str = "shader"


def identity_shader() -> ShaderFn:
    """Record is the vertex id itself; used to check stream preservation."""
    return ShaderFn(fn=lambda vid: np.uint32(vid), cycles=1, name="identity")


def position_shader(mesh: IndexedMesh, matrix: np.ndarray | None = None, cycles: int = 1) -> ShaderFn:
    """Record is the (matrix-transformed) vertex position as float32[3]."""
    positions = mesh.positions
    if matrix is None:
        def fn(vid: int):
            return positions[vid].astype(np.float32)
    else:
        m = np.asarray(matrix, dtype=np.float64)

        def fn(vid: int):
            p = np.append(positions[vid], 1.0)
            out = m @ p
            return (out[:3] / out[3]).astype(np.float32)

    return ShaderFn(fn=fn, cycles=cycles, name="position")


@dataclass(frozen=True)
class HashConfig:
    """Open-addressing table parameters for the hashing strategies."""

    table_size: int = 256
    multiplier: int = FIBONACCI_MULTIPLIER
    max_fast_probes: int = 8

    def __post_init__(self):
        if self.table_size < 1 or self.table_size & (self.table_size - 1):
            raise ConfigError("table_size must be a power of two")
        if self.multiplier % 2 == 0:
            raise ConfigError("multiplier must be odd")
        if not 0 < self.multiplier < 2**32:
            raise ConfigError("multiplier must be a 32-bit constant")
        if self.max_fast_probes < 1:
            raise ConfigError("max_fast_probes must be >= 1")

    def slot(self, vid: int) -> int:
        """Multiplicative hash into [0, table_size)."""
        shift = 32 - (self.table_size.bit_length() - 1)
        return ((vid * self.multiplier) & 0xFFFFFFFF) >> shift


@dataclass(frozen=True)
class ProbeStats:
    """Slot inspections performed by the hashing kernels."""

    fast: int = 0
    slow: int = 0
    max_chain: int = 0

    @property
    def total(self) -> int:
        return self.fast + self.slow

    def merge(self, other: "ProbeStats") -> "ProbeStats":
        return ProbeStats(
            fast=self.fast + other.fast,
            slow=self.slow + other.slow,
            max_chain=max(self.max_chain, other.max_chain),
        )


@dataclass(frozen=True)
class Round:
    """One shading round: ids shaded together plus the per-slot lookup."""

    unique_ids: tuple[int, ...]
    assembly_map: tuple[int, ...]
    primitives_emitted: int


@dataclass(frozen=True)
class DedupResult:
    """Common per-batch output contract of all strategies."""

    rounds: tuple[Round, ...]
    invocations: int
    indices_consumed: int


class TriangleStream:
    """In-memory queue of shaded-vertex records, primitive_size per primitive."""

    def __init__(self, primitive_size: int = 3, records: list | None = None):
        self.primitive_size = primitive_size
        self.records: list = records if records is not None else []

    def __len__(self) -> int:
        return len(self.records) // self.primitive_size

    def primitives(self):
        ps = self.primitive_size
        for i in range(0, len(self.records), ps):
            yield tuple(self.records[i : i + ps])

    def as_array(self) -> np.ndarray:
        return np.asarray(self.records)

    def write_binary(self, path: str | Path) -> None:
        """Flat dump, primitive_size records per primitive, native byte order."""
        self.as_array().tofile(path)


# ---------------------------------------------------------------------------
# per-batch kernels
# ---------------------------------------------------------------------------

def naive_batch(ids: np.ndarray, primitive_size: int = 3) -> DedupResult:
    """No reuse: one shader invocation per index slot."""
    ps = primitive_size
    rounds = [
        Round(
            unique_ids=tuple(int(v) for v in ids[off : off + ps]),
            assembly_map=tuple(range(ps)),
            primitives_emitted=1,
        )
        for off in range(0, len(ids), ps)
    ]
    return DedupResult(tuple(rounds), invocations=len(ids), indices_consumed=len(ids))


def warp_vote_batch(ids: np.ndarray, warp_width: int, primitive_size: int = 3) -> DedupResult:
    """Warp-voting dedup over a statically batched index range.

    Lanes fetch warp_width indices at a time; each fetched value is
    broadcast with shfl and compared against every lane's claimed id via
    ballot. A value nobody holds is claimed by the lowest free lane. Slots
    resolved before the first unassignable one are consumed; whole
    primitives among them are emitted, the claimed ids are all shaded (even
    those only referenced by a discarded trailing fragment), and the cursor
    re-fetches from the first unconsumed slot. Restarting a round can
    therefore shade the same vertex twice inside one batch.
    """
    w = check_width(warp_width)
    ps = primitive_size
    if w < ps:
        raise ConfigError("warp width below primitive size cannot make progress")
    vals = [int(v) for v in ids]
    n = len(vals)
    rounds: list[Round] = []
    invocations = 0
    cursor = 0
    while cursor < n:
        fill = 0
        done = 0
        my_id = [SENTINEL] * w
        claimed: list[int] = []
        round_map: list[int] = []
        offset = cursor
        while offset < n and fill < w:
            incoming = WarpState(tuple(vals[offset + l] if offset + l < n else SENTINEL for l in range(w)))
            outgoing = [0] * w
            for i in range(w):
                current = shfl(incoming, i).lanes[i]
                match = ballot([current == m for m in my_id])
                if match == 0:
                    if fill < w:
                        my_id[fill] = current
                        claimed.append(current)
                    match = lane_bit(fill, w)
                    fill += 1
                outgoing[i] = match
            fetched_map = [ffs(m) - 1 for m in outgoing]
            if len(round_map) < done + w:
                round_map.extend([-1] * (done + w - len(round_map)))
            # entries past the consumed prefix are garbage until the next
            # fetch overwrites them
            round_map[done : done + w] = fetched_map
            firstmask = ballot([outgoing[l] == 0 or incoming.lanes[l] == SENTINEL for l in range(w)])
            first_fail = ffs(firstmask)
            additional = w if first_fail == 0 else min(w, first_fail - 1)
            done += additional
            offset += w
        emitted = done // ps
        if emitted == 0:
            raise RuntimeError("warp voting made no progress; primitive exceeds warp capacity")
        consumed = emitted * ps
        rounds.append(Round(tuple(claimed), tuple(round_map[:consumed]), emitted))
        invocations += len(claimed)
        cursor += consumed
    return DedupResult(tuple(rounds), invocations=invocations, indices_consumed=n)


def sort_batch(ids: np.ndarray, primitive_size: int = 3) -> DedupResult:
    """Sorting dedup: stable key sort, boundary marks, prefix-sum ranks.

    unique_ids come out in ascending id order; the assembly map sends each
    original slot to its id's rank.
    """
    n = len(ids)
    if n == 0:
        return DedupResult((), 0, 0)
    arr = np.asarray(ids, dtype=np.int64)
    order = np.argsort(arr, kind="stable")
    sorted_ids = arr[order]
    run_ends = np.empty(n, dtype=np.int64)
    run_ends[:-1] = sorted_ids[:-1] != sorted_ids[1:]
    run_ends[-1] = 1
    ranks = np.zeros(n, dtype=np.int64)
    ranks[1:] = np.cumsum(run_ends[:-1])
    unique_ids = sorted_ids[run_ends.astype(bool)]
    amap = np.empty(n, dtype=np.int64)
    amap[order] = ranks
    round_ = Round(
        unique_ids=tuple(int(v) for v in unique_ids),
        assembly_map=tuple(int(v) for v in amap),
        primitives_emitted=n // primitive_size,
    )
    return DedupResult((round_,), invocations=len(unique_ids), indices_consumed=n)


def hash_batch(
    ids: np.ndarray, hash_cfg: HashConfig, primitive_size: int = 3
) -> tuple[DedupResult, ProbeStats]:
    """Hashing dedup: multiplicative hash with linear probing.

    Insertion is simulated in batch-slot order (lane 0 first), which makes
    the table layout and probe statistics reproducible. Probing stops on an
    empty slot or on a slot already holding the same id.
    """
    tsize = hash_cfg.table_size
    table = [SENTINEL] * tsize
    slot_map: list[int] = []
    probes = 0
    max_chain = 0
    for raw in ids:
        vid = int(raw)
        p = hash_cfg.slot(vid)
        chain = 0
        while True:
            chain += 1
            if chain > tsize:
                raise RuntimeError("hash table full before all unique ids were inserted")
            prev = table[p]
            if prev == SENTINEL:
                table[p] = vid
                break
            if prev == vid:
                break
            p = (p + 1) % tsize
        probes += chain
        max_chain = max(max_chain, chain)
        slot_map.append(p)
    return (
        _table_to_result(table, slot_map, len(ids), primitive_size),
        ProbeStats(fast=probes, slow=0, max_chain=max_chain),
    )


def parallel_hash_batch(
    ids: np.ndarray, hash_cfg: HashConfig, warp_width: int, primitive_size: int = 3
) -> tuple[DedupResult, ProbeStats]:
    """Two-tier hashing: bounded per-lane probing, then warp-cooperative search.

    Each insertion first runs up to max_fast_probes linear probes on its
    own. Insertions still unresolved afterwards are handled one at a time
    (lowest lane first): the whole warp inspects warp_width consecutive
    slots per step until an empty or matching slot appears. The resulting
    primitive stream and invocation count are identical to hash_batch; only
    the recorded probe traffic differs.
    """
    w = check_width(warp_width)
    tsize = hash_cfg.table_size
    mfp = hash_cfg.max_fast_probes
    table = [SENTINEL] * tsize
    slot_map = [0] * len(ids)
    fast = 0
    slow = 0
    max_chain = 0
    for base in range(0, len(ids), w):
        deferred: list[tuple[int, int, int, int]] = []
        for i in range(base, min(base + w, len(ids))):
            vid = int(ids[i])
            p = hash_cfg.slot(vid)
            chain = 0
            resolved = -1
            while chain < mfp:
                chain += 1
                prev = table[p]
                if prev == SENTINEL:
                    table[p] = vid
                    resolved = p
                    break
                if prev == vid:
                    resolved = p
                    break
                p = (p + 1) % tsize
            fast += chain
            if resolved >= 0:
                slot_map[i] = resolved
                max_chain = max(max_chain, chain)
            else:
                deferred.append((i, vid, p, chain))
        for i, vid, p, chain in deferred:
            scanned = 0
            while True:
                if scanned > tsize + w:
                    raise RuntimeError("hash table full before all unique ids were inserted")
                window = [(p + l) % tsize for l in range(w)]
                slow += w
                hits = ballot([table[s] == SENTINEL or table[s] == vid for s in window])
                pos = ffs(hits)
                if pos:
                    s = window[pos - 1]
                    if table[s] == SENTINEL:
                        table[s] = vid
                    slot_map[i] = s
                    max_chain = max(max_chain, chain + pos)
                    break
                p = (p + w) % tsize
                chain += w
                scanned += w
    return (
        _table_to_result(table, slot_map, len(ids), primitive_size),
        ProbeStats(fast=fast, slow=slow, max_chain=max_chain),
    )


def _table_to_result(
    table: list[int], slot_map: list[int], index_count: int, primitive_size: int
) -> DedupResult:
    occupied = [s for s in range(len(table)) if table[s] != SENTINEL]
    rank_of = {s: r for r, s in enumerate(occupied)}
    round_ = Round(
        unique_ids=tuple(table[s] for s in occupied),
        assembly_map=tuple(rank_of[s] for s in slot_map),
        primitives_emitted=index_count // primitive_size,
    )
    return DedupResult((round_,), invocations=len(occupied), indices_consumed=index_count)


# ---------------------------------------------------------------------------
# runners
# ---------------------------------------------------------------------------

STRATEGY_NAMES = ("naive", "warp", "sort", "hash", "phash")

_DYNAMIC = {"sort", "hash", "phash"}


def effective_workers(requested: int) -> int:
    """Requested worker count, capped by the VRLAB_THREADS environment variable."""
    cap = os.environ.get(WORKER_ENV)
    workers = max(1, int(requested))
    if cap is not None:
        try:
            workers = min(workers, max(1, int(cap)))
        except ValueError:
            raise ConfigError(f"{WORKER_ENV} must be an integer, got {cap!r}") from None
    return workers


def run_on_indices(
    strategy: str,
    indices: np.ndarray,
    batches: Sequence[Batch],
    cfg: BatchConfig,
    shader: ShaderFn,
    hash_cfg: HashConfig | None = None,
    *,
    vertex_count: int | None = None,
    scene: str = "",
    workers: int = 1,
):
    """Run one strategy over raw indices.

    Returns (stream, report) and additionally ProbeStats for the hashing
    strategies. Batches may be processed on several worker threads; results
    are merged in batch order, so output is independent of the thread count.
    """
    if strategy not in STRATEGY_NAMES:
        raise ConfigError(f"unknown strategy {strategy!r}; expected one of {STRATEGY_NAMES}")
    idx = np.asarray(indices)
    ps = cfg.primitive_size
    for b in batches:
        if not (0 <= b.begin < b.end <= len(idx)) or b.span % ps != 0:
            raise ConfigError(f"batch {b} is not a primitive-aligned range of the buffer")

    if strategy in ("hash", "phash"):
        hash_cfg = hash_cfg or HashConfig(table_size=cfg.block_size)
        if hash_cfg.table_size < cfg.max_unique:
            raise ConfigError(
                f"hash table_size {hash_cfg.table_size} below max_unique {cfg.max_unique}"
            )

    def kernel(ids: np.ndarray):
        if strategy == "naive":
            return naive_batch(ids, ps), None
        if strategy == "warp":
            return warp_vote_batch(ids, cfg.warp_width, ps), None
        if strategy == "sort":
            return sort_batch(ids, ps), None
        if strategy == "hash":
            return hash_batch(ids, hash_cfg, ps)
        return parallel_hash_batch(ids, hash_cfg, cfg.warp_width, ps)

    def process(batch: Batch):
        ids = idx[batch.begin : batch.end]
        dedup, probe = kernel(ids)
        if strategy in _DYNAMIC and dedup.invocations > cfg.max_unique:
            raise ConfigError(
                f"batch {batch} holds {dedup.invocations} unique ids > max_unique "
                f"{cfg.max_unique}; dynamic strategies require splitter-honored batches"
            )
        records: list = []
        shaded_ids: list[int] = []
        for rnd in dedup.rounds:
            shaded = [shader.fn(uid) for uid in rnd.unique_ids]
            shaded_ids.extend(rnd.unique_ids)
            for slot in rnd.assembly_map:
                records.append(shaded[slot])
        return records, dedup, probe, shaded_ids

    n_workers = effective_workers(workers)
    if n_workers > 1 and len(batches) > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(process, batches))
    else:
        results = [process(b) for b in batches]

    stream = TriangleStream(primitive_size=ps)
    invocations = 0
    consumed = 0
    all_shaded: list[int] = []
    probe_total = ProbeStats() if strategy in ("hash", "phash") else None
    for records, dedup, probe, shaded_ids in results:
        stream.records.extend(records)
        invocations += dedup.invocations
        consumed += dedup.indices_consumed
        all_shaded.extend(shaded_ids)
        if probe_total is not None:
            probe_total = probe_total.merge(probe)

    shade_counts = None
    if vertex_count is not None:
        shade_counts = np.bincount(
            np.asarray(all_shaded, dtype=np.int64), minlength=vertex_count
        ) if all_shaded else np.zeros(vertex_count, dtype=np.int64)

    report = analytics.build_report(
        scene=scene,
        strategy=strategy,
        indices=consumed,
        invocations=invocations,
        batches=len(batches),
        shade_counts=shade_counts,
        probe_stats=probe_total,
    )
    if probe_total is not None:
        return stream, report, probe_total
    return stream, report


def run_naive(mesh: IndexedMesh, batches: Sequence[Batch], shader: ShaderFn,
              *, cfg: BatchConfig | None = None, scene: str = "", workers: int = 1):
    cfg = cfg or BatchConfig()
    return run_on_indices("naive", mesh.indices, batches, cfg, shader,
                          vertex_count=mesh.vertex_count, scene=scene, workers=workers)


def run_warp_voting(mesh: IndexedMesh, batches: Sequence[Batch], cfg: BatchConfig,
                    shader: ShaderFn, *, scene: str = "", workers: int = 1):
    return run_on_indices("warp", mesh.indices, batches, cfg, shader,
                          vertex_count=mesh.vertex_count, scene=scene, workers=workers)


def run_sorting(mesh: IndexedMesh, batches: Sequence[Batch], cfg: BatchConfig,
                shader: ShaderFn, *, scene: str = "", workers: int = 1):
    return run_on_indices("sort", mesh.indices, batches, cfg, shader,
                          vertex_count=mesh.vertex_count, scene=scene, workers=workers)


def run_hashing(mesh: IndexedMesh, batches: Sequence[Batch], cfg: BatchConfig,
                hash_cfg: HashConfig, shader: ShaderFn, *, scene: str = "", workers: int = 1):
    return run_on_indices("hash", mesh.indices, batches, cfg, shader, hash_cfg,
                          vertex_count=mesh.vertex_count, scene=scene, workers=workers)


def run_parallel_hashing(mesh: IndexedMesh, batches: Sequence[Batch], cfg: BatchConfig,
                         hash_cfg: HashConfig, shader: ShaderFn, *, scene: str = "", workers: int = 1):
    return run_on_indices("phash", mesh.indices, batches, cfg, shader, hash_cfg,
                          vertex_count=mesh.vertex_count, scene=scene, workers=workers)
