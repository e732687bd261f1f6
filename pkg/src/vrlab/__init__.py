"""vrlab: on-the-fly vertex-reuse strategies for parallel geometry processing.

Static warp-voting, dynamic sorting/hashing/parallel-hashing batch dedup, a
naive baseline, a per-multiprocessor LRU cache simulator, mesh locality
preprocessing and reuse analytics, with faithful invocation accounting in
place of wall-clock timing.
"""

from .analytics import (
    ComparisonTable,
    CostEstimate,
    ReuseReport,
    build_report,
    compare_table,
    estimate_cost,
    ideal_report,
    write_reports_csv,
    write_reports_json,
)
from .batching import (
    Batch,
    BatchConfig,
    ConfigError,
    batches_to_offsets,
    dynamic_batches,
    offsets_to_batches,
    static_batches,
)
from .cache import CacheConfig, CacheReport, ideal_reuse, simulate_parallel_cache
from .mesh import (
    IndexedMesh,
    MeshError,
    ObjParseError,
    VertexShadingCounts,
    export_heatmap_ply,
    gen_grid,
    gen_icosphere,
    load_obj,
    save_obj,
    shuffle_triangles,
)
from .reorder import ReorderParams, acmr, reorder_forsyth
from .strategies import (
    DedupResult,
    HashConfig,
    ProbeStats,
    Round,
    ShaderFn,
    TriangleStream,
    hash_batch,
    identity_shader,
    naive_batch,
    parallel_hash_batch,
    position_shader,
    run_hashing,
    run_naive,
    run_on_indices,
    run_parallel_hashing,
    run_sorting,
    run_warp_voting,
    sort_batch,
    warp_vote_batch,
)
from .walk import WalkConfig, cell_likelihoods, naive_walk, pack_cell, run_walk, unpack_cell
from .warp import WarpState, ballot, ffs, shfl

__version__ = "0.1.0"
