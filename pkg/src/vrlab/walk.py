"""Parallel random walk whose per-cell move evaluation runs through the
dedup engine.

Agent positions are packed into 32-bit virtual indices (high half y, low
half x) and fed to the vertex-reuse strategies with primitive size 1, so
agents sharing a grid cell share one likelihood evaluation. The final
random draw is keyed per (seed, step, agent) by a counter-based generator,
which makes trajectories independent of batch layout and strategy.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .analytics import ReuseReport
from .batching import BatchConfig, ConfigError, dynamic_batches, static_batches
from .strategies import HashConfig, ShaderFn, run_on_indices

PackedCell = int  # 32-bit word: y in the high 16 bits, x in the low 16

_GRID_LIMIT = 65536  # packing bound: half of the 32-bit word per dimension

# splitmix64 constants
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX_A = np.uint64(0xBF58476D1CE4E5B9)
_MIX_B = np.uint64(0x94D049BB133111EB)


@dataclass(frozen=True)
class Gaussian:
    center: tuple[float, float]
    sigma: float
    amplitude: float = 1.0


def default_gaussians(grid: tuple[int, int]) -> tuple[Gaussian, ...]:
    """Three activity peaks spread over the grid."""
    w, h = grid
    s = max(w, h) / 6.0
    return (
        Gaussian(center=(0.25 * w, 0.25 * h), sigma=s),
        Gaussian(center=(0.70 * w, 0.60 * h), sigma=s),
        Gaussian(center=(0.40 * w, 0.80 * h), sigma=s * 0.5, amplitude=0.5),
    )


@dataclass(frozen=True)
class WalkConfig:
    grid: tuple[int, int] = (256, 256)
    agents: int = 300_000
    max_move_distance: int = 16
    kept_moves: int = 8
    gaussians: tuple[Gaussian, ...] | None = None
    steps: int = 10
    rng_seed: int = 0

    def __post_init__(self):
        w, h = self.grid
        if not (2 <= w <= _GRID_LIMIT and 2 <= h <= _GRID_LIMIT):
            raise ConfigError(f"grid sides must be in [2, {_GRID_LIMIT}]")
        if self.agents < 1:
            raise ConfigError("need at least one agent")
        if self.max_move_distance < 1:
            raise ConfigError("max_move_distance must be >= 1")
        if self.kept_moves < 1 or self.kept_moves > len(_candidate_offsets(self.max_move_distance)):
            raise ConfigError("kept_moves must be within the candidate move count")
        if self.steps < 0:
            raise ConfigError("steps must be >= 0")
        if self.gaussians is None:
            object.__setattr__(self, "gaussians", default_gaussians(self.grid))


def pack_cell(x: int, y: int) -> PackedCell:
    """Combine grid coordinates into one 32-bit virtual index."""
    return (y << 16) | x


def unpack_cell(packed: PackedCell) -> tuple[int, int]:
    return packed & 0xFFFF, packed >> 16


@lru_cache(maxsize=8)
def _candidate_offsets(max_distance: int) -> np.ndarray:
    """All (dx, dy) moves within Euclidean max_distance, row-major scan order."""
    d = max_distance
    out = [
        (dx, dy)
        for dy in range(-d, d + 1)
        for dx in range(-d, d + 1)
        if dx * dx + dy * dy <= d * d
    ]
    offsets = np.array(out, dtype=np.int64)
    offsets.flags.writeable = False
    return offsets


def _activity(xs: np.ndarray, ys: np.ndarray, cfg: WalkConfig) -> np.ndarray:
    if not cfg.gaussians:
        return np.ones(len(xs), dtype=np.float64)
    total = np.full(len(xs), 1e-12, dtype=np.float64)
    for g in cfg.gaussians:
        d2 = (xs - g.center[0]) ** 2 + (ys - g.center[1]) ** 2
        total += g.amplitude * np.exp(-d2 / (2.0 * g.sigma * g.sigma))
    return total


def cell_likelihoods(cell: PackedCell, cfg: WalkConfig) -> np.ndarray:
    """Top kept_moves (dx, dy, likelihood) rows for one grid cell.

    Candidates are every move within max_move_distance whose destination
    stays on the grid; likelihood is the activity at the destination
    normalized over those candidates. Ties resolve in row-major scan order.
    """
    x, y = unpack_cell(int(cell))
    w, h = cfg.grid
    offsets = _candidate_offsets(cfg.max_move_distance)
    dest_x = offsets[:, 0] + x
    dest_y = offsets[:, 1] + y
    in_grid = (dest_x >= 0) & (dest_x < w) & (dest_y >= 0) & (dest_y < h)
    if int(in_grid.sum()) < cfg.kept_moves:
        raise ConfigError(
            f"cell ({x},{y}) has {int(in_grid.sum())} legal moves < kept_moves {cfg.kept_moves}"
        )
    legal = offsets[in_grid]
    act = _activity(dest_x[in_grid].astype(np.float64), dest_y[in_grid].astype(np.float64), cfg)
    norm = act / act.sum()
    # primary key: descending likelihood; secondary: scan position
    order = np.lexsort((np.arange(len(norm)), -norm))[: cfg.kept_moves]
    out = np.empty((cfg.kept_moves, 3), dtype=np.float64)
    out[:, 0] = legal[order, 0]
    out[:, 1] = legal[order, 1]
    out[:, 2] = norm[order]
    out.flags.writeable = False
    return out


def _mix64(z: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer; uint64 wraparound is intentional
    with np.errstate(over="ignore"):
        z = z + _GOLDEN
        z = z ^ (z >> np.uint64(30))
        z = z * _MIX_A
        z = z ^ (z >> np.uint64(27))
        z = z * _MIX_B
        z = z ^ (z >> np.uint64(31))
    return z


def agent_uniforms(seed: int, step: int, agent_ids: np.ndarray) -> np.ndarray:
    """Counter-based uniforms in [0, 1), keyed by (seed, step, agent id)."""
    key = (seed + 0x9E3779B97F4A7C15 * (step + 1)) & 0xFFFFFFFFFFFFFFFF
    base = _mix64(np.uint64(key))
    with np.errstate(over="ignore"):
        z = _mix64(agent_ids.astype(np.uint64) + base)
    return (z >> np.uint64(11)).astype(np.float64) * 2.0**-53


def choose_move(moves: np.ndarray, u: float) -> int:
    """Pick a move index with probability proportional to its likelihood."""
    cum = np.cumsum(moves[:, 2])
    r = u * cum[-1]
    return min(int(np.searchsorted(cum, r, side="right")), len(cum) - 1)


def pack_positions(positions: np.ndarray) -> np.ndarray:
    xs = positions[:, 0].astype(np.uint32)
    ys = positions[:, 1].astype(np.uint32)
    return (ys << np.uint32(16)) | xs


def likelihood_shader(cfg: WalkConfig) -> ShaderFn:
    return ShaderFn(fn=lambda cell: cell_likelihoods(int(cell), cfg), cycles=1, name="likelihood")


def step_with_reuse(
    positions: np.ndarray,
    cfg: WalkConfig,
    step_index: int,
    strategy: str = "sort",
    batch_cfg: BatchConfig | None = None,
    hash_cfg: HashConfig | None = None,
    *,
    scene: str = "walk",
    workers: int = 1,
) -> tuple[np.ndarray, ReuseReport]:
    """Advance every agent one step, deduplicating likelihood evaluations.

    Returns the new (N, 2) positions and the step's ReuseReport; invocation
    counts equal the per-batch unique occupied cells.
    """
    bcfg = batch_cfg or BatchConfig(primitive_size=1)
    if bcfg.primitive_size != 1:
        raise ConfigError("walk batching uses primitive_size 1")
    packed = pack_positions(positions)
    if strategy in ("sort", "hash", "phash"):
        batches = dynamic_batches(packed, bcfg)
    else:
        batches = static_batches(len(packed), bcfg)
    out = run_on_indices(
        strategy, packed, batches, bcfg, likelihood_shader(cfg), hash_cfg,
        scene=f"{scene}/step{step_index}", workers=workers,
    )
    stream, report = out[0], out[1]
    uniforms = agent_uniforms(cfg.rng_seed, step_index, np.arange(len(positions)))
    new_positions = np.empty_like(positions)
    for a in range(len(positions)):
        moves = stream.records[a]
        j = choose_move(moves, float(uniforms[a]))
        new_positions[a, 0] = positions[a, 0] + int(moves[j, 0])
        new_positions[a, 1] = positions[a, 1] + int(moves[j, 1])
    return new_positions, report


def naive_step(positions: np.ndarray, cfg: WalkConfig, step_index: int) -> np.ndarray:
    """Per-agent reference evaluation: no batching, no dedup."""
    uniforms = agent_uniforms(cfg.rng_seed, step_index, np.arange(len(positions)))
    new_positions = np.empty_like(positions)
    for a in range(len(positions)):
        moves = cell_likelihoods(pack_cell(int(positions[a, 0]), int(positions[a, 1])), cfg)
        j = choose_move(moves, float(uniforms[a]))
        new_positions[a, 0] = positions[a, 0] + int(moves[j, 0])
        new_positions[a, 1] = positions[a, 1] + int(moves[j, 1])
    return new_positions


def initial_positions(cfg: WalkConfig) -> np.ndarray:
    """Seeded uniform scatter over the grid, (N, 2) int64."""
    rng = np.random.default_rng(cfg.rng_seed)
    w, h = cfg.grid
    out = np.empty((cfg.agents, 2), dtype=np.int64)
    out[:, 0] = rng.integers(0, w, cfg.agents)
    out[:, 1] = rng.integers(0, h, cfg.agents)
    return out


@dataclass(frozen=True)
class WalkRun:
    trajectory: np.ndarray  # (steps + 1, N, 2)
    reports: list[ReuseReport]


def run_walk(
    cfg: WalkConfig,
    strategy: str = "sort",
    batch_cfg: BatchConfig | None = None,
    hash_cfg: HashConfig | None = None,
    *,
    initial: np.ndarray | None = None,
    scene: str = "walk",
    workers: int = 1,
) -> WalkRun:
    positions = initial.copy() if initial is not None else initial_positions(cfg)
    trajectory = np.empty((cfg.steps + 1, len(positions), 2), dtype=np.int64)
    trajectory[0] = positions
    reports = []
    for t in range(cfg.steps):
        positions, report = step_with_reuse(
            positions, cfg, t, strategy, batch_cfg, hash_cfg, scene=scene, workers=workers
        )
        trajectory[t + 1] = positions
        reports.append(report)
    return WalkRun(trajectory=trajectory, reports=reports)


def naive_walk(cfg: WalkConfig, *, initial: np.ndarray | None = None) -> np.ndarray:
    """Trajectory by the per-agent reference path (the dedup-transparency oracle)."""
    positions = initial.copy() if initial is not None else initial_positions(cfg)
    trajectory = np.empty((cfg.steps + 1, len(positions), 2), dtype=np.int64)
    trajectory[0] = positions
    for t in range(cfg.steps):
        positions = naive_step(positions, cfg, t)
        trajectory[t + 1] = positions
    return trajectory
