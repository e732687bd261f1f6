from __future__ import annotations

import numpy as np
import pytest

import vrlab
from vrlab.batching import BatchConfig, dynamic_batches
from vrlab.reorder import ReorderParams, acmr, reorder_forsyth
from vrlab.strategies import identity_shader


class TestAcmr:
    def test_cold_cache_single_triangle(self):
        assert acmr([0, 1, 2], 4) == 3.0

    def test_strip_hand_trace(self):
        # [0,1,2] all miss; then 1 and 2 hit, 3 misses: 4 misses / 2 triangles
        assert acmr([0, 1, 2, 1, 3, 2], 4) == 2.0

    def test_fifo_eviction_order(self):
        # fifo 2 thrashes on a 3-cycle: every access misses
        assert acmr([0, 1, 2, 0, 1, 2], 2) == 3.0
        # fifo 3 holds the whole cycle: second triangle all hits
        assert acmr([0, 1, 2, 0, 1, 2], 3) == 1.5

    def test_bounds_on_meshes(self):
        # cold cache: every referenced vertex misses at least once, no corner
        # misses more than once per occurrence
        for mesh in (vrlab.gen_grid(6, 6), vrlab.gen_icosphere(2)):
            v = acmr(mesh.indices, 16)
            floor = len(np.unique(mesh.indices)) / mesh.triangle_count
            assert floor <= v <= 3.0

    def test_tiny_fifo_upper_bound(self):
        m = vrlab.shuffle_triangles(vrlab.gen_grid(5, 5), 1)
        assert acmr(m.indices, 1) <= 3.0

    def test_validation(self):
        with pytest.raises(ValueError):
            acmr([0, 1], 4)
        with pytest.raises(ValueError):
            acmr([0, 1, 2], 0)


class TestReorder:
    def test_single_triangle_identity(self):
        m = vrlab.gen_grid(2, 2)
        one = vrlab.IndexedMesh(positions=m.positions, indices=m.indices[:3])
        out = reorder_forsyth(one)
        assert np.array_equal(out.indices, one.indices)

    def test_triangle_multiset_preserved(self):
        for seed in (0, 1, 2):
            m = vrlab.shuffle_triangles(vrlab.gen_grid(9, 9), seed)
            out = reorder_forsyth(m)
            assert sorted(map(tuple, m.triangles())) == sorted(map(tuple, out.triangles()))
            assert np.array_equal(out.positions, m.positions)

    def test_corner_order_within_triangle_kept(self):
        m = vrlab.shuffle_triangles(vrlab.gen_icosphere(1), 4)
        out = reorder_forsyth(m)
        assert set(map(tuple, m.triangles())) == set(map(tuple, out.triangles()))

    def test_shuffled_grid_acmr_improves(self):
        m = vrlab.shuffle_triangles(vrlab.gen_grid(3, 3), 123)
        out = reorder_forsyth(m)
        assert acmr(out.indices, 8) <= acmr(m.indices, 8)

    def test_reuse_improves_after_reorder(self):
        m = vrlab.shuffle_triangles(vrlab.gen_icosphere(3), 77)
        out = reorder_forsyth(m)
        cfg = BatchConfig()
        sh = identity_shader()
        _, before = vrlab.run_sorting(m, dynamic_batches(m.indices, cfg), cfg, sh)
        _, after = vrlab.run_sorting(out, dynamic_batches(out.indices, cfg), cfg, sh)
        assert after.reuse_rate > before.reuse_rate

    def test_determinism(self):
        m = vrlab.shuffle_triangles(vrlab.gen_grid(12, 12), 9)
        assert np.array_equal(reorder_forsyth(m).indices, reorder_forsyth(m).indices)

    def test_params_validated(self):
        with pytest.raises(ValueError):
            ReorderParams(cache_size=2)
        with pytest.raises(ValueError):
            ReorderParams(decay_power=0)

    def test_custom_fifo_params_still_permutation(self):
        m = vrlab.shuffle_triangles(vrlab.gen_grid(6, 6), 2)
        out = reorder_forsyth(m, ReorderParams(cache_size=16, decay_power=1.2))
        assert sorted(map(tuple, m.triangles())) == sorted(map(tuple, out.triangles()))
