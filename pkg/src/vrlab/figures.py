"""Matplotlib report figures rendered next to the delimited output files."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analytics import ReuseReport, strategy_sort_key


def save_reuse_bars(reports: Sequence[ReuseReport], path: str | Path, title: str = "") -> Path:
    """Bar chart of reuse rate per strategy, one group per scene."""
    scenes = list(dict.fromkeys(r.scene for r in reports))
    strategies = sorted({r.strategy for r in reports}, key=strategy_sort_key)
    rates = {(r.scene, r.strategy): r.reuse_rate for r in reports}

    fig, ax = plt.subplots(figsize=(max(4.0, 1.2 * len(strategies) * max(1, len(scenes))), 3.2))
    width = 0.8 / len(strategies)
    xs = np.arange(len(scenes))
    for k, strat in enumerate(strategies):
        vals = [rates.get((s, strat), np.nan) for s in scenes]
        bars = ax.bar(xs + k * width, vals, width=width, label=strat)
        for b, v in zip(bars, vals):
            if np.isfinite(v):
                ax.annotate(f"{v:.3f}", (b.get_x() + b.get_width() / 2, v),
                            ha="center", va="bottom", fontsize=7)
    ax.set_xticks(xs + 0.4 - width / 2)
    ax.set_xticklabels(scenes or [""])
    ax.set_ylabel("reuse rate")
    ax.set_ylim(0, 1.0)
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_shading_histogram(report: ReuseReport, path: str | Path) -> Path:
    """Distribution of shader calls per vertex for one strategy run."""
    if report.per_vertex is None:
        raise ValueError("report carries no per-vertex counts")
    counts = report.per_vertex.counts
    top = int(counts.max()) if len(counts) else 0
    values = np.bincount(counts, minlength=top + 1)
    fig, ax = plt.subplots(figsize=(4.8, 3.2))
    ax.bar(np.arange(top + 1), values, color="#2a7")
    ax.set_xlabel("shader calls per vertex")
    ax.set_ylabel("vertices")
    ax.set_title(f"{report.scene or 'scene'} / {report.strategy}")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_walk_reuse(reports: Sequence[ReuseReport], path: str | Path) -> Path:
    """Reuse rate per walk step."""
    fig, ax = plt.subplots(figsize=(4.8, 3.2))
    ax.plot(np.arange(len(reports)), [r.reuse_rate for r in reports], marker="o")
    ax.set_xlabel("step")
    ax.set_ylabel("reuse rate")
    ax.set_ylim(bottom=0)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
