"""Command-line front end: analyze, reorder, cache, walk."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import analytics, figures
from .batching import BatchConfig, ConfigError, dynamic_batches, static_batches
from .cache import CacheConfig, simulate_parallel_cache
from .mesh import (
    IndexedMesh,
    MeshError,
    export_heatmap_ply,
    gen_grid,
    gen_icosphere,
    load_obj,
    save_obj,
    shuffle_triangles,
)
from .reorder import ReorderParams, acmr, reorder_forsyth
from .strategies import (
    FIBONACCI_MULTIPLIER,
    HashConfig,
    position_shader,
    run_on_indices,
)
from .walk import Gaussian, WalkConfig, run_walk

ALL_STRATEGIES = ("naive", "warp", "sort", "hash", "phash", "cache", "ideal")

# options only meaningful for a subset of strategies; anything else is a
# usage error
_OPTION_OWNERS = {
    "batch_size": {"naive", "warp"},
    "warp_width": {"warp", "phash"},
    "max_unique": {"sort", "hash", "phash"},
    "max_indices": {"sort", "hash", "phash"},
    "block_size": {"sort", "hash", "phash"},
    "table_size": {"hash", "phash"},
    "multiplier": {"hash", "phash"},
    "fast_probes": {"phash"},
    "cache_kb": {"cache"},
    "processors": {"cache"},
    "wave": {"cache"},
    "entry_bytes": {"cache"},
    "entries": {"cache"},
}

_DEFAULTS = {
    "batch_size": 96,
    "warp_width": 32,
    "max_unique": 256,
    "max_indices": 1023,
    "block_size": 256,
    "table_size": None,  # falls back to block_size
    "multiplier": FIBONACCI_MULTIPLIER,
    "fast_probes": 8,
    "cache_kb": "16,32,64",
    "processors": 28,
    "wave": 1024,
    "entry_bytes": 64,
    "entries": None,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, MeshError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vrlab",
        description="Vertex-reuse strategy analysis for indexed triangle meshes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="run reuse strategies on a mesh and report rates")
    _add_mesh_args(pa)
    pa.add_argument("--strategy", action="append", metavar="NAME",
                    help=f"one of {'|'.join(ALL_STRATEGIES)} or 'all'; repeatable or comma-separated")
    for opt, flag in (("batch_size", "--batch-size"), ("warp_width", "--warp-width"),
                      ("max_unique", "--max-unique"), ("max_indices", "--max-indices"),
                      ("block_size", "--block-size"), ("table_size", "--table-size"),
                      ("multiplier", "--multiplier"), ("fast_probes", "--fast-probes"),
                      ("processors", "--processors"), ("wave", "--wave"),
                      ("entry_bytes", "--entry-bytes"), ("entries", "--entries")):
        pa.add_argument(flag, dest=opt, type=int, default=None)
    pa.add_argument("--cache-kb", dest="cache_kb", default=None,
                    help="comma-separated cache sizes in KB (default 16,32,64)")
    pa.add_argument("--shader-cycles", type=int, default=1, help="abstract cost per invocation")
    pa.add_argument("--out", type=Path, help="write per-report CSV here (figures land alongside)")
    pa.add_argument("--compare", type=Path, help="write the scene-by-strategy rate table here")
    pa.add_argument("--heatmap", type=Path, help="write per-vertex shading-count PLY here")
    pa.add_argument("--dump-stream", type=Path, help="write the binary shaded-primitive stream here")
    _add_common_args(pa)
    pa.set_defaults(func=cmd_analyze)

    pr = sub.add_parser("reorder", help="reorder triangles for locality and write an OBJ")
    _add_mesh_args(pr)
    pr.add_argument("--out", type=Path, required=True, help="output OBJ path")
    pr.add_argument("--fifo", type=int, default=32, help="FIFO size for the ACMR metric")
    pr.add_argument("--cache-size", type=int, default=32, help="modeled cache length for scoring")
    pr.add_argument("--decay-power", type=float, default=1.5)
    pr.add_argument("--last-tri-score", type=float, default=0.75)
    pr.add_argument("--boost-scale", type=float, default=2.0)
    pr.add_argument("--boost-power", type=float, default=0.5)
    _add_common_args(pr)
    pr.set_defaults(func=cmd_reorder)

    pc = sub.add_parser("cache", help="simulate per-multiprocessor LRU caches")
    _add_mesh_args(pc)
    pc.add_argument("--processors", type=int, default=28)
    pc.add_argument("--wave", type=int, default=1024, help="concurrent invocations per processor")
    pc.add_argument("--cache-kb", dest="cache_kb", default="16,32,64")
    pc.add_argument("--entry-bytes", type=int, default=64)
    pc.add_argument("--entries", type=int, default=None, help="override entry count directly")
    pc.add_argument("--out", type=Path, help="write CSV here (figure lands alongside)")
    _add_common_args(pc)
    pc.set_defaults(func=cmd_cache)

    pw = sub.add_parser("walk", help="random-walk demo deduplicated through the reuse engine")
    pw.add_argument("--grid", default="256x256", help="grid size WxH")
    pw.add_argument("--agents", type=int, default=300_000)
    pw.add_argument("--steps", type=int, default=10)
    pw.add_argument("--seed", type=int, default=0)
    pw.add_argument("--max-dist", type=int, default=16)
    pw.add_argument("--keep", type=int, default=8, help="moves kept per cell")
    pw.add_argument("--gaussian", action="append", metavar="CX,CY,SIGMA[,AMP]",
                    help="activity peak; repeatable (default: three derived peaks)")
    pw.add_argument("--strategy", default="sort",
                    choices=("naive", "warp", "sort", "hash", "phash"))
    pw.add_argument("--max-unique", type=int, default=256)
    pw.add_argument("--max-indices", type=int, default=1023)
    pw.add_argument("--batch-size", type=int, default=96)
    pw.add_argument("--out", type=Path, help="write per-step CSV here (figure lands alongside)")
    pw.add_argument("--dump-positions", type=Path, help="write agent positions CSV here")
    _add_common_args(pw)
    pw.set_defaults(func=cmd_walk)

    return parser


def _add_mesh_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("mesh", nargs="?", help="input OBJ path")
    p.add_argument("--gen", metavar="SPEC", help="generate a mesh: icosphere:S or grid:RxC")
    p.add_argument("--shuffle", type=int, metavar="SEED", help="shuffle triangle order first")
    p.add_argument("--scene", help="scene label in reports (default: file stem or generator spec)")


def _add_common_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--json", action="store_true", help="machine-readable stdout")
    p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    p.add_argument("--threads", type=int, default=1,
                   help="batch worker threads (capped by VRLAB_THREADS)")


def _resolve_mesh(args, parser) -> tuple[IndexedMesh, str]:
    if args.mesh and args.gen:
        parser.error("give a mesh path or --gen, not both")
    if args.mesh:
        mesh = load_obj(args.mesh)
        scene = Path(args.mesh).stem
    elif args.gen:
        mesh = _generate(args.gen, parser)
        scene = args.gen
    else:
        parser.error("need a mesh path or --gen SPEC")
    if args.shuffle is not None:
        mesh = shuffle_triangles(mesh, args.shuffle)
        scene += f"+shuf{args.shuffle}"
    return mesh, (args.scene or scene)


def _generate(spec: str, parser) -> IndexedMesh:
    kind, _, rest = spec.partition(":")
    try:
        if kind == "icosphere":
            return gen_icosphere(int(rest))
        if kind == "grid":
            r, _, c = rest.partition("x")
            return gen_grid(int(r), int(c))
    except (TypeError, ValueError) as exc:
        parser.error(f"bad --gen spec {spec!r}: {exc}")
    parser.error(f"unknown generator {kind!r} (use icosphere:S or grid:RxC)")


def _parse_strategies(args, parser) -> list[str]:
    raw = args.strategy or ["all"]
    names: list[str] = []
    for entry in raw:
        names.extend(s.strip() for s in entry.split(",") if s.strip())
    if "all" in names:
        names = list(ALL_STRATEGIES)
    bad = [n for n in names if n not in ALL_STRATEGIES]
    if bad:
        parser.error(f"unknown strategy {bad[0]!r}; choose from {', '.join(ALL_STRATEGIES)}")
    # de-dup, keep order
    return list(dict.fromkeys(names))


def _check_option_owners(args, strategies: list[str], parser) -> None:
    chosen = set(strategies)
    for opt, owners in _OPTION_OWNERS.items():
        if getattr(args, opt, None) is not None and not (chosen & owners):
            flag = "--" + opt.replace("_", "-")
            parser.error(f"{flag} only applies to: {', '.join(sorted(owners))}")


def _effective(args, opt: str):
    val = getattr(args, opt, None)
    return _DEFAULTS[opt] if val is None else val


def _parse_cache_kbs(raw: str, parser) -> list[int]:
    try:
        kbs = [int(s) for s in str(raw).split(",") if s.strip()]
    except ValueError:
        parser.error(f"bad --cache-kb list {raw!r}")
    if not kbs:
        parser.error("empty --cache-kb list")
    return kbs


def _print_config(cfg: dict, as_json: bool) -> None:
    if not as_json:
        print(f"# config {json.dumps(cfg, sort_keys=True)}")


def _print_reports(reports) -> None:
    print(f"{'scene':<24} {'strategy':<9} {'indices':>10} {'invocations':>12} "
          f"{'reuse':>8} {'batches':>8}")
    for r in reports:
        print(f"{r.scene:<24} {r.strategy:<9} {r.indices:>10} {r.invocations:>12} "
              f"{r.reuse_rate:>8.4f} {r.batches:>8}")


def cmd_analyze(args, parser) -> int:
    strategies = _parse_strategies(args, parser)
    _check_option_owners(args, strategies, parser)
    mesh, scene = _resolve_mesh(args, parser)

    bcfg = BatchConfig(
        batch_size=_effective(args, "batch_size"),
        max_unique=_effective(args, "max_unique"),
        max_indices=_effective(args, "max_indices"),
        warp_width=_effective(args, "warp_width"),
        block_size=_effective(args, "block_size"),
    )
    hcfg = HashConfig(
        table_size=_effective(args, "table_size") or bcfg.block_size,
        multiplier=_effective(args, "multiplier"),
        max_fast_probes=_effective(args, "fast_probes"),
    )
    kbs = _parse_cache_kbs(_effective(args, "cache_kb"), parser)

    cfg = {
        "command": "analyze", "scene": scene, "strategies": strategies,
        "vertices": mesh.vertex_count, "triangles": mesh.triangle_count,
        "gen": args.gen, "mesh": args.mesh, "shuffle": args.shuffle,
        "batch_size": bcfg.batch_size, "max_unique": bcfg.max_unique,
        "max_indices": bcfg.max_indices, "warp_width": bcfg.warp_width,
        "block_size": bcfg.block_size, "table_size": hcfg.table_size,
        "multiplier": hcfg.multiplier, "fast_probes": hcfg.max_fast_probes,
        "cache_kb": kbs, "processors": _effective(args, "processors"),
        "wave": _effective(args, "wave"), "entry_bytes": _effective(args, "entry_bytes"),
        "entries": _effective(args, "entries"), "shader_cycles": args.shader_cycles,
        "threads": args.threads,
    }
    _print_config(cfg, args.json)

    shader = position_shader(mesh, cycles=args.shader_cycles)
    reports = []
    streams = {}
    for strat in strategies:
        if strat == "ideal":
            reports.append(analytics.ideal_report(mesh, scene))
            continue
        if strat == "cache":
            for kb in kbs:
                ccfg = CacheConfig(
                    num_processors=cfg["processors"], wave_width=cfg["wave"],
                    cache_bytes=kb * 1024, entry_bytes=cfg["entry_bytes"],
                    entries=cfg["entries"],
                )
                counts = np.zeros(mesh.vertex_count, dtype=np.int64)
                rep = simulate_parallel_cache(mesh.indices, ccfg, miss_counts=counts)
                reports.append(analytics.build_report(
                    scene=scene, strategy=f"cache{kb}", indices=len(mesh.indices),
                    invocations=rep.misses, batches=ccfg.num_processors,
                    shade_counts=counts,
                ))
            continue
        if strat in ("naive", "warp"):
            batches = static_batches(len(mesh.indices), bcfg)
        else:
            batches = dynamic_batches(mesh.indices, bcfg)
        out = run_on_indices(strat, mesh.indices, batches, bcfg, shader, hcfg,
                             vertex_count=mesh.vertex_count, scene=scene,
                             workers=args.threads)
        streams[strat] = out[0]
        reports.append(out[1])

    table = analytics.compare_table(reports)
    wrote = []
    if args.out:
        analytics.write_reports_csv(reports, args.out)
        wrote.append(args.out)
        if not args.no_figures:
            wrote.append(figures.save_reuse_bars(
                reports, args.out.with_suffix(".reuse.png"), title=scene))
            for r in reports:
                if r.per_vertex is not None and r.strategy in streams:
                    wrote.append(figures.save_shading_histogram(
                        r, args.out.with_suffix(f".calls.{r.strategy}.png")))
    if args.compare:
        table.write_csv(args.compare)
        wrote.append(args.compare)
    if args.heatmap:
        with_counts = [r for r in reports if r.per_vertex is not None]
        for r in with_counts:
            path = args.heatmap if len(with_counts) == 1 else \
                args.heatmap.with_suffix(f".{r.strategy}.ply")
            export_heatmap_ply(mesh, r.per_vertex, path)
            wrote.append(path)
    if args.dump_stream:
        for strat, stream in streams.items():
            path = args.dump_stream if len(streams) == 1 else \
                args.dump_stream.with_suffix(f".{strat}.bin")
            stream.write_binary(path)
            wrote.append(path)

    if args.json:
        print(json.dumps({"config": cfg, "reports": [r.to_dict() for r in reports]},
                         indent=2, sort_keys=True))
    else:
        _print_reports(reports)
        for p in wrote:
            print(f"wrote {p}")
    return 0


def cmd_reorder(args, parser) -> int:
    mesh, scene = _resolve_mesh(args, parser)
    params = ReorderParams(
        cache_size=args.cache_size, decay_power=args.decay_power,
        last_tri_score=args.last_tri_score, valence_boost_scale=args.boost_scale,
        valence_boost_power=args.boost_power,
    )
    cfg = {
        "command": "reorder", "scene": scene, "mesh": args.mesh, "gen": args.gen,
        "shuffle": args.shuffle, "out": str(args.out), "fifo": args.fifo,
        "cache_size": params.cache_size, "decay_power": params.decay_power,
        "last_tri_score": params.last_tri_score,
        "boost_scale": params.valence_boost_scale, "boost_power": params.valence_boost_power,
    }
    _print_config(cfg, args.json)

    before = acmr(mesh.indices, args.fifo)
    reordered = reorder_forsyth(mesh, params)
    after = acmr(reordered.indices, args.fifo)
    save_obj(reordered, args.out)
    if args.json:
        print(json.dumps({"config": cfg, "acmr_before": before, "acmr_after": after},
                         indent=2, sort_keys=True))
    else:
        print(f"ACMR before {before:.4f} after {after:.4f} (fifo {args.fifo})")
        print(f"wrote {args.out}")
    return 0


def cmd_cache(args, parser) -> int:
    mesh, scene = _resolve_mesh(args, parser)
    kbs = _parse_cache_kbs(args.cache_kb, parser)
    cfg = {
        "command": "cache", "scene": scene, "mesh": args.mesh, "gen": args.gen,
        "shuffle": args.shuffle, "processors": args.processors, "wave": args.wave,
        "cache_kb": kbs, "entry_bytes": args.entry_bytes, "entries": args.entries,
        "threads": args.threads,
    }
    _print_config(cfg, args.json)

    reports = [analytics.ideal_report(mesh, scene)]
    for kb in kbs:
        ccfg = CacheConfig(num_processors=args.processors, wave_width=args.wave,
                           cache_bytes=kb * 1024, entry_bytes=args.entry_bytes,
                           entries=args.entries)
        counts = np.zeros(mesh.vertex_count, dtype=np.int64)
        rep = simulate_parallel_cache(mesh.indices, ccfg, miss_counts=counts)
        reports.append(analytics.build_report(
            scene=scene, strategy=f"cache{kb}", indices=len(mesh.indices),
            invocations=rep.misses, batches=ccfg.num_processors, shade_counts=counts,
        ))

    wrote = []
    if args.out:
        analytics.write_reports_csv(reports, args.out)
        wrote.append(args.out)
        if not args.no_figures:
            wrote.append(figures.save_reuse_bars(reports, args.out.with_suffix(".reuse.png"),
                                                 title=scene))
    if args.json:
        print(json.dumps({"config": cfg, "reports": [r.to_dict() for r in reports]},
                         indent=2, sort_keys=True))
    else:
        _print_reports(reports)
        for p in wrote:
            print(f"wrote {p}")
    return 0


def _parse_gaussians(raw: list[str] | None, parser) -> tuple[Gaussian, ...] | None:
    if not raw:
        return None
    out = []
    for spec in raw:
        parts = spec.split(",")
        if len(parts) not in (3, 4):
            parser.error(f"bad --gaussian {spec!r}; expected CX,CY,SIGMA[,AMP]")
        try:
            cx, cy, sigma = (float(p) for p in parts[:3])
            amp = float(parts[3]) if len(parts) == 4 else 1.0
        except ValueError:
            parser.error(f"bad --gaussian {spec!r}; expected numbers")
        out.append(Gaussian(center=(cx, cy), sigma=sigma, amplitude=amp))
    return tuple(out)


def cmd_walk(args, parser) -> int:
    try:
        w, _, h = args.grid.partition("x")
        grid = (int(w), int(h))
    except ValueError:
        parser.error(f"bad --grid {args.grid!r}; expected WxH")
    wcfg = WalkConfig(
        grid=grid, agents=args.agents, max_move_distance=args.max_dist,
        kept_moves=args.keep, gaussians=_parse_gaussians(args.gaussian, parser),
        steps=args.steps, rng_seed=args.seed,
    )
    bcfg = BatchConfig(primitive_size=1, batch_size=args.batch_size,
                       max_unique=args.max_unique, max_indices=args.max_indices)
    cfg = {
        "command": "walk", "grid": list(grid), "agents": wcfg.agents,
        "steps": wcfg.steps, "seed": wcfg.rng_seed, "max_dist": wcfg.max_move_distance,
        "keep": wcfg.kept_moves, "strategy": args.strategy,
        "gaussians": [[g.center[0], g.center[1], g.sigma, g.amplitude] for g in wcfg.gaussians],
        "batch_size": bcfg.batch_size, "max_unique": bcfg.max_unique,
        "max_indices": bcfg.max_indices, "threads": args.threads,
    }
    _print_config(cfg, args.json)

    run = run_walk(wcfg, args.strategy, bcfg, workers=args.threads, scene="walk")
    wrote = []
    if args.out:
        analytics.write_reports_csv(run.reports, args.out)
        wrote.append(args.out)
        if not args.no_figures:
            wrote.append(figures.save_walk_reuse(run.reports, args.out.with_suffix(".reuse.png")))
    if args.dump_positions:
        with open(args.dump_positions, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "agent", "x", "y"])
            for t in range(run.trajectory.shape[0]):
                for a in range(run.trajectory.shape[1]):
                    writer.writerow([t, a, int(run.trajectory[t, a, 0]),
                                     int(run.trajectory[t, a, 1])])
        wrote.append(args.dump_positions)

    if args.json:
        print(json.dumps({"config": cfg, "reports": [r.to_dict() for r in run.reports]},
                         indent=2, sort_keys=True))
    else:
        _print_reports(run.reports)
        for p in wrote:
            print(f"wrote {p}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
