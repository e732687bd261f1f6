"""Acceptance criteria, one test per criterion.

Each test prints a single PASS/FAIL line (run with -s or -rA to see them
all) and asserts the criterion at its stated tolerance.
"""

from __future__ import annotations

import json
import time

import numpy as np
import pytest

import vrlab
from helpers import mesh_corpus, random_batches
from vrlab.batching import BatchConfig, dynamic_batches, static_batches
from vrlab.cache import CacheConfig, ideal_reuse, simulate_parallel_cache
from vrlab.strategies import (
    HashConfig,
    hash_batch,
    identity_shader,
    parallel_hash_batch,
    sort_batch,
    warp_vote_batch,
)
from vrlab.walk import WalkConfig, naive_walk, run_walk


def check(num: int, description: str, ok: bool) -> None:
    print(f"ACCEPTANCE {num} {'PASS' if ok else 'FAIL'}: {description}")
    assert ok, f"criterion {num}: {description}"


def _run_all(mesh, cfg, shader, workers=1):
    stat = static_batches(len(mesh.indices), cfg)
    dyn = dynamic_batches(mesh.indices, cfg)
    hcfg = HashConfig(table_size=cfg.block_size)
    return {
        "naive": vrlab.run_naive(mesh, stat, shader, workers=workers),
        "warp": vrlab.run_warp_voting(mesh, stat, cfg, shader, workers=workers),
        "sort": vrlab.run_sorting(mesh, dyn, cfg, shader, workers=workers),
        "hash": vrlab.run_hashing(mesh, dyn, cfg, hcfg, shader, workers=workers)[:2],
        "phash": vrlab.run_parallel_hashing(mesh, dyn, cfg, hcfg, shader, workers=workers)[:2],
    }


@pytest.fixture(scope="module")
def reordered_sphere5():
    return vrlab.reorder_forsyth(vrlab.gen_icosphere(5))


def test_criterion_1_triangle_preservation():
    start = time.monotonic()
    shader = identity_shader()
    widths = (4, 8, 16, 32)
    ok = True
    for i, mesh in enumerate(mesh_corpus(100, seed=1000)):
        cfg = BatchConfig(warp_width=widths[i % 4])
        for name, (stream, _) in _run_all(mesh, cfg, shader).items():
            if not np.array_equal(stream.as_array().astype(np.uint32), mesh.indices):
                ok = False
    elapsed = time.monotonic() - start
    check(1, f"100 randomized meshes, 5 strategies, stream == input ({elapsed:.1f}s < 30s)",
          ok and elapsed < 30.0)


def test_criterion_2_oracle_equivalence():
    hcfg = HashConfig(table_size=256, max_fast_probes=4)
    ok = True
    for ids in random_batches(1000, seed=2000):
        expected = len(set(int(v) for v in ids))
        rs = sort_batch(ids)
        rh, _ = hash_batch(ids, hcfg)
        rp, _ = parallel_hash_batch(ids, hcfg, 32)
        if not (rs.invocations == rh.invocations == rp.invocations == expected):
            ok = False
            break
        # phash stream must be bit-identical to hash
        hmap = [rh.rounds[0].unique_ids[s] for s in rh.rounds[0].assembly_map]
        pmap = [rp.rounds[0].unique_ids[s] for s in rp.rounds[0].assembly_map]
        if hmap != pmap:
            ok = False
            break
    check(2, "sort/hash/phash == set oracle on 1000 random batches; phash stream == hash", ok)


def test_criterion_3_ideal_reuse_analytic():
    m = vrlab.gen_icosphere(4)
    rate = ideal_reuse(m.indices)
    exact = 1 - 2562 / 15360
    ok = rate == exact and abs(rate - 0.8332) <= 0.0005 and round(rate, 3) == 0.833
    check(3, f"icosphere s=4 ideal reuse {rate:.6f} == 1-2562/15360, within 0.8332±0.0005", ok)


def test_criterion_4_table_shape(reordered_sphere5):
    mesh = reordered_sphere5
    cfg = BatchConfig()  # N_u=256, 1023-index cap, W=32, N_p=96
    shader = identity_shader()
    _, dyn = vrlab.run_sorting(mesh, dynamic_batches(mesh.indices, cfg), cfg, shader)
    _, warp = vrlab.run_warp_voting(mesh, static_batches(len(mesh.indices), cfg), cfg, shader)
    ideal = ideal_reuse(mesh.indices)
    ok = (
        0.765 <= dyn.reuse_rate <= 0.825
        and 0.68 <= warp.reuse_rate <= 0.74
        and ideal > dyn.reuse_rate > warp.reuse_rate
    )
    check(4, f"reordered s=5: dyn {dyn.reuse_rate:.4f} in [0.765,0.825], "
             f"warp {warp.reuse_rate:.4f} in [0.68,0.74], ideal > dyn > warp", ok)


def test_criterion_5_cache_collapse(reordered_sphere5):
    mesh = reordered_sphere5
    ideal = ideal_reuse(mesh.indices)
    rates = {}
    ok = True
    for kb in (16, 32, 64):
        cfg = CacheConfig(num_processors=28, wave_width=1024, cache_bytes=kb * 1024)
        rates[kb] = simulate_parallel_cache(mesh.indices, cfg).hit_rate
        if not rates[kb] < 0.2 * ideal:
            ok = False
    serial = simulate_parallel_cache(
        mesh.indices, CacheConfig(num_processors=1, wave_width=1, entries=10**9)
    )
    ok = ok and serial.hit_rate == ideal
    check(5, f"28x1024 LRU hit rates {[f'{rates[k]:.4f}' for k in (16, 32, 64)]} all < "
             f"0.2*ideal ({0.2 * ideal:.4f}); serial control == ideal exactly", ok)


def test_criterion_6_warp_hand_traces():
    r1 = warp_vote_batch(np.array([0, 1, 2, 0, 2, 3], dtype=np.uint32), 4)
    r2 = warp_vote_batch(np.array([0, 1, 2, 3, 4, 5], dtype=np.uint32), 4)
    ok = (
        r1.invocations == 4
        and r1.rounds[0].assembly_map == (0, 1, 2, 0, 2, 3)
        and r2.invocations == 7
        and [rd.unique_ids for rd in r2.rounds] == [(0, 1, 2, 3), (3, 4, 5)]
    )
    check(6, "warp-voting traces: invocations 4 and 7 with exact rounds", ok)


def test_criterion_7_reorder_effectiveness():
    cfg = BatchConfig()
    shader = identity_shader()
    fixtures = (
        [("grid", 24 + k, k) for k in range(10)]
        + [("ico", 3, 10 + k) for k in range(5)]
        + [("ico", 4, 15 + k) for k in range(5)]
    )
    ok = True
    for kind, size, seed in fixtures:
        base = vrlab.gen_grid(size, size) if kind == "grid" else vrlab.gen_icosphere(size)
        shuffled = vrlab.shuffle_triangles(base, seed)
        reordered = vrlab.reorder_forsyth(shuffled)
        if vrlab.acmr(reordered.indices, 32) > vrlab.acmr(shuffled.indices, 32):
            ok = False
        _, before = vrlab.run_sorting(shuffled, dynamic_batches(shuffled.indices, cfg), cfg, shader)
        _, after = vrlab.run_sorting(reordered, dynamic_batches(reordered.indices, cfg), cfg, shader)
        if not after.reuse_rate > before.reuse_rate:
            ok = False
    check(7, "20 shuffled meshes: ACMR(32) non-increasing and dynamic reuse strictly up", ok)


def test_criterion_8_walk_transparency():
    cfg = WalkConfig(grid=(64, 64), agents=1000, steps=10, rng_seed=7)
    oracle = naive_walk(cfg)
    ok = True
    shared_checked = False
    for strategy in ("naive", "warp", "sort", "hash", "phash"):
        run = run_walk(cfg, strategy)
        if not np.array_equal(run.trajectory, oracle):
            ok = False
    run = run_walk(cfg, "sort")
    for t, rep in enumerate(run.reports):
        cells = run.trajectory[t][:, 1] * 64 + run.trajectory[t][:, 0]
        if len(np.unique(cells)) < cfg.agents:
            shared_checked = True
            if not rep.invocations < cfg.agents:
                ok = False
    total = sum(r.invocations for r in run.reports)
    ok = ok and shared_checked and total < cfg.agents * cfg.steps
    check(8, f"1000 agents, 10 steps: all strategies bit-identical to per-agent oracle; "
             f"invocations {total} < agent-steps {cfg.agents * cfg.steps}", ok)


def test_criterion_9_determinism_across_workers():
    def artifacts(workers: int) -> bytes:
        blob = b""
        shader = identity_shader()
        for mesh in (
            vrlab.shuffle_triangles(vrlab.gen_icosphere(3), 11),
            vrlab.shuffle_triangles(vrlab.gen_grid(16, 16), 12),
        ):
            cfg = BatchConfig()
            for name, (stream, rep) in sorted(_run_all(mesh, cfg, shader, workers=workers).items()):
                blob += json.dumps(rep.to_dict(), sort_keys=True).encode()
                blob += rep.per_vertex.counts.tobytes()
                blob += stream.as_array().tobytes()
        wcfg = WalkConfig(grid=(64, 64), agents=200, steps=3, rng_seed=5)
        wrun = run_walk(wcfg, "sort", workers=workers)
        blob += wrun.trajectory.tobytes()
        blob += json.dumps([r.to_dict() for r in wrun.reports], sort_keys=True).encode()
        reordered = vrlab.reorder_forsyth(vrlab.shuffle_triangles(vrlab.gen_grid(10, 10), 3))
        blob += reordered.indices.tobytes()
        blob += repr(vrlab.acmr(reordered.indices, 32)).encode()
        cache = simulate_parallel_cache(reordered.indices, CacheConfig(num_processors=4, wave_width=8))
        blob += repr((cache.hits, cache.misses, cache.hit_rate)).encode()
        return blob

    blobs = {w: artifacts(w) for w in (1, 4, 8)}
    ok = blobs[1] == blobs[4] == blobs[8]
    check(9, "criteria pipelines byte-identical at worker counts 1, 4, 8", ok)
