from __future__ import annotations

import numpy as np
import pytest

from vrlab.batching import (
    Batch,
    BatchConfig,
    ConfigError,
    batches_to_offsets,
    dynamic_batches,
    offsets_to_batches,
    static_batches,
)


class TestBatchConfig:
    def test_defaults(self):
        cfg = BatchConfig()
        assert cfg.batch_size == 96
        assert cfg.max_unique == 256
        assert cfg.max_indices == 1023
        assert cfg.max_primitives == 341

    def test_batch_size_alignment(self):
        with pytest.raises(ConfigError):
            BatchConfig(batch_size=97)
        with pytest.raises(ConfigError):
            BatchConfig(batch_size=0)

    def test_max_unique_floor(self):
        with pytest.raises(ConfigError):
            BatchConfig(max_unique=2)
        BatchConfig(max_unique=3)  # smallest legal triangle budget

    def test_primitive_size_one(self):
        cfg = BatchConfig(primitive_size=1, max_unique=1)
        assert cfg.max_primitives == 1023

    def test_warp_width_checked(self):
        with pytest.raises(ValueError):
            BatchConfig(warp_width=12)


class TestStaticBatches:
    def test_exact_fit(self):
        cfg = BatchConfig()
        assert static_batches(192, cfg) == [Batch(0, 96), Batch(96, 192)]

    def test_ragged_tail(self):
        cfg = BatchConfig()
        assert static_batches(99, cfg) == [Batch(0, 96), Batch(96, 99)]

    def test_empty(self):
        assert static_batches(0, BatchConfig()) == []

    def test_alignment_required(self):
        with pytest.raises(ConfigError):
            static_batches(100, BatchConfig())

    def test_partition(self):
        cfg = BatchConfig(batch_size=12)
        batches = static_batches(606, cfg)
        assert batches[0].begin == 0 and batches[-1].end == 606
        for a, b in zip(batches, batches[1:]):
            assert a.end == b.begin
        assert all(b.span % 3 == 0 for b in batches)


class TestDynamicBatches:
    def test_unique_threshold_split(self):
        # third triangle would push uniques from 4 to 7
        ids = np.array([0, 1, 2, 0, 2, 3, 4, 5, 6], dtype=np.uint32)
        cfg = BatchConfig(max_unique=4)
        assert dynamic_batches(ids, cfg) == [Batch(0, 6), Batch(6, 9)]

    def test_single_batch(self):
        ids = np.array([0, 1, 2, 3, 4, 5], dtype=np.uint32)
        assert dynamic_batches(ids, BatchConfig(max_unique=6)) == [Batch(0, 6)]

    def test_tie_keeps_triangle(self):
        # second triangle lands exactly on the unique budget and stays
        ids = np.array([0, 1, 2, 1, 2, 3], dtype=np.uint32)
        assert dynamic_batches(ids, BatchConfig(max_unique=4)) == [Batch(0, 6)]

    def test_primitive_cap(self):
        ids = np.arange(30, dtype=np.uint32)
        cfg = BatchConfig(max_unique=256, max_indices=9)
        batches = dynamic_batches(ids, cfg)
        assert all(b.span <= 9 for b in batches)
        assert batches[0] == Batch(0, 9)

    def test_empty(self):
        assert dynamic_batches(np.array([], dtype=np.uint32), BatchConfig()) == []

    def test_alignment_required(self):
        with pytest.raises(ConfigError):
            dynamic_batches(np.array([0, 1], dtype=np.uint32), BatchConfig())

    def test_random_buffer_brute_force(self):
        # oracle: exact set-based re-count over every emitted batch
        rng = np.random.default_rng(1234)
        ids = rng.integers(0, 4000, size=3 * 10_000).astype(np.uint32)
        cfg = BatchConfig()
        batches = dynamic_batches(ids, cfg)
        assert batches[0].begin == 0 and batches[-1].end == len(ids)
        for a, b in zip(batches, batches[1:]):
            assert a.end == b.begin
        for b in batches:
            chunk = ids[b.begin : b.end]
            assert len(set(int(v) for v in chunk)) <= cfg.max_unique
            assert b.span % 3 == 0
            assert b.span // 3 <= cfg.max_primitives

    def test_determinism(self):
        rng = np.random.default_rng(7)
        ids = rng.integers(0, 500, size=3 * 2000).astype(np.uint32)
        cfg = BatchConfig(max_unique=64)
        assert dynamic_batches(ids, cfg) == dynamic_batches(ids, cfg)


class TestOffsets:
    def test_roundtrip(self):
        batches = [Batch(0, 96), Batch(96, 120), Batch(120, 300)]
        offs = batches_to_offsets(batches)
        assert list(offs) == [0, 96, 120, 300]
        assert offsets_to_batches(offs) == batches

    def test_empty(self):
        assert len(batches_to_offsets([])) == 0
        assert offsets_to_batches(np.array([], dtype=np.int64)) == []
