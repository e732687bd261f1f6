"""Aggregation of strategy runs into reuse reports and comparison tables."""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .mesh import IndexedMesh, VertexShadingCounts

if TYPE_CHECKING:
    from .strategies import ProbeStats, ShaderFn


@dataclass(frozen=True)
class ReuseReport:
    """Invocation accounting for one strategy on one scene.

    reuse_rate is 1 - invocations/indices, the same normalization used for
    the ideal rate, so batching reuse and cache hit rates share one scale.
    """

    scene: str
    strategy: str
    indices: int
    invocations: int
    reuse_rate: float
    batches: int
    per_vertex: VertexShadingCounts | None = None
    probe_stats: "ProbeStats | None" = None

    def to_dict(self) -> dict:
        out = {
            "scene": self.scene,
            "strategy": self.strategy,
            "indices": self.indices,
            "invocations": self.invocations,
            "reuse_rate": self.reuse_rate,
            "batches": self.batches,
        }
        if self.probe_stats is not None:
            out["probes_fast"] = self.probe_stats.fast
            out["probes_slow"] = self.probe_stats.slow
            out["probe_max_chain"] = self.probe_stats.max_chain
        return out


@dataclass(frozen=True)
class CostEstimate:
    """Abstract shading cost: invocation count times a per-call cycle load.

    Integer arithmetic throughout; this is deliberately not a wall-clock
    model.
    """

    invocations: int
    cycles_per_invocation: int
    total_cycles: int


def estimate_cost(report: ReuseReport, shader: "ShaderFn") -> CostEstimate:
    return CostEstimate(
        invocations=report.invocations,
        cycles_per_invocation=shader.cycles,
        total_cycles=report.invocations * shader.cycles,
    )


def build_report(
    *,
    scene: str,
    strategy: str,
    indices: int,
    invocations: int,
    batches: int,
    shade_counts: np.ndarray | None = None,
    probe_stats: "ProbeStats | None" = None,
) -> ReuseReport:
    """Assemble a ReuseReport, asserting the per-vertex tallies add up."""
    per_vertex = None
    if shade_counts is not None:
        per_vertex = VertexShadingCounts(shade_counts)
        if per_vertex.total != invocations:
            raise AssertionError(
                f"per-vertex tallies sum to {per_vertex.total}, expected {invocations} invocations"
            )
    reuse = 1.0 - invocations / indices if indices > 0 else 0.0
    return ReuseReport(
        scene=scene,
        strategy=strategy,
        indices=indices,
        invocations=invocations,
        reuse_rate=reuse,
        batches=batches,
        per_vertex=per_vertex,
        probe_stats=probe_stats,
    )


def ideal_report(mesh: IndexedMesh, scene: str = "") -> ReuseReport:
    """Reuse ceiling: one invocation per referenced vertex."""
    if len(mesh.indices) == 0:
        raise ValueError("empty index buffer")
    referenced = np.unique(mesh.indices)
    counts = np.zeros(mesh.vertex_count, dtype=np.int64)
    counts[referenced] = 1
    return build_report(
        scene=scene,
        strategy="ideal",
        indices=len(mesh.indices),
        invocations=len(referenced),
        batches=1,
        shade_counts=counts,
    )


_BASE_ORDER = {"ideal": 0, "cache": 1, "warp": 2, "sort": 3, "hash": 4, "phash": 5, "naive": 6}


def strategy_sort_key(strategy: str) -> tuple:
    m = re.fullmatch(r"([a-z]+)(\d*)", strategy)
    base, num = (m.group(1), m.group(2)) if m else (strategy, "")
    rank = _BASE_ORDER.get(base, 50)
    return (rank, int(num) if num else 0, strategy)


@dataclass(frozen=True)
class ComparisonTable:
    """One row per scene, one reuse-rate column per strategy."""

    columns: list[str]
    rows: list[dict]

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=self.columns)
            writer.writeheader()
            for row in self.rows:
                writer.writerow({k: _cell(row.get(k)) for k in self.columns})

    def write_json(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"columns": self.columns, "rows": self.rows}, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _cell(value):
    if isinstance(value, float):
        return repr(value)
    return value


def compare_table(reports: Sequence[ReuseReport]) -> ComparisonTable:
    """Pivot reports into a scene-by-strategy rate table.

    Strategy columns follow the canonical order: ideal, cache configurations
    by size, warp, then the dynamic strategies.
    """
    if not reports:
        raise ValueError("need at least one report")
    strategies = sorted({r.strategy for r in reports}, key=strategy_sort_key)
    scenes: dict[str, dict] = {}
    for r in reports:
        row = scenes.setdefault(r.scene, {"scene": r.scene, "indices": r.indices})
        row[r.strategy] = r.reuse_rate
    columns = ["scene", "indices"] + strategies
    return ComparisonTable(columns=columns, rows=list(scenes.values()))


def write_reports_csv(reports: Sequence[ReuseReport], path: str | Path) -> None:
    """Flat per-report rows (RFC 4180)."""
    fields = ["scene", "strategy", "indices", "invocations", "reuse_rate", "batches",
              "probes_fast", "probes_slow", "probe_max_chain"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for r in reports:
            writer.writerow({k: _cell(v) for k, v in r.to_dict().items()})


def write_reports_json(reports: Sequence[ReuseReport], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([r.to_dict() for r in reports], fh, indent=2, sort_keys=True)
        fh.write("\n")
