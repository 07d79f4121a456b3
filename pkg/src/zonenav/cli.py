"""Command-line entry point: scene generation, single episodes, benchmark
suites, and trace snapshot rendering.

Exit codes: 0 success (for `run`: successful episode), 1 failed episode,
2 usage or input error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import bench as bench_mod
from . import render as render_mod
from .agent import EpisodeTrace
from .bench import BenchConfig, METHODS, default_suite_scenes, run_baseline, run_suite
from .world import CATEGORIES, GenSpec, Scene, SceneError, generate_scene, load_scene, save_scene

EXIT_OK = 0
EXIT_EPISODE_FAILED = 1
EXIT_USAGE = 2


def _add_shared(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    parser.add_argument("--seed", type=int, default=0, help="random seed")
    parser.add_argument(
        "--backend",
        choices=("table", "remote", "uniform"),
        default="table",
        help="inference backend for the proposed method",
    )
    parser.add_argument("--endpoint", help="inference service URL (backend=remote)")
    parser.add_argument("--timeout-ms", type=int, default=2000, help="remote inference timeout")
    parser.add_argument("--priors", type=Path, help="priors table JSON (default: bundled)")
    parser.add_argument("--embeddings", type=Path, help="embedding table JSON (default: bundled)")
    parser.add_argument("--workers", type=int, default=1, help="parallel episode workers")
    parser.add_argument("--max-steps", type=int, default=500, help="per-episode step budget")


def _bench_config(args) -> BenchConfig:
    if args.backend == "remote" and not args.endpoint:
        raise SystemExit("--endpoint is required with --backend remote")
    return BenchConfig(
        embeddings_path=args.embeddings,
        priors_path=args.priors,
        backend=args.backend,
        endpoint=args.endpoint,
        timeout=args.timeout_ms / 1000.0,
        max_steps=args.max_steps,
        workers=args.workers,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zonenav", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    scene = sub.add_parser("scene", help="scene file utilities")
    scene_sub = scene.add_subparsers(dest="scene_command", required=True)
    gen = scene_sub.add_parser("gen", help="generate a scene file")
    gen.add_argument("--zones", type=int, default=4, help="number of zones")
    gen.add_argument("--objects-per-zone", type=int, default=5, help="objects sampled per zone")
    gen.add_argument("--grid", default="32x32", help="grid size WxH in cells")
    gen.add_argument(
        "--category", choices=CATEGORIES, help="zone category supplying the search target"
    )
    gen.add_argument("--target", help="explicit target label")
    _add_shared(gen)

    run = sub.add_parser("run", help="run one episode and write its trace")
    run.add_argument("--scene", type=Path, required=True, help="scene JSON file")
    run.add_argument("--method", choices=METHODS, default="proposed", help="agent to run")
    _add_shared(run)

    bench = sub.add_parser("bench", help="run the benchmark suite")
    bench.add_argument("--scene", type=Path, action="append", dest="scenes",
                       help="scene file (repeatable; default: generated suite)")
    bench.add_argument("--methods", nargs="+", choices=METHODS, default=list(METHODS),
                       help="methods to compare")
    bench.add_argument("--episode-seeds", type=int, default=5,
                       help="episode seeds per scene (0..n-1)")
    bench.add_argument("--scenes-per-category", type=int, default=5,
                       help="generated scenes per category when no --scene given")
    _add_shared(bench)

    render = sub.add_parser("render", help="render a trace snapshot")
    render.add_argument("--scene", type=Path, required=True, help="scene JSON file")
    render.add_argument("--trace", type=Path, required=True, help="trace JSONL file")
    render.add_argument("--step", type=int, default=0, help="step index to render")
    _add_shared(render)

    return parser


def _cmd_scene_gen(args) -> int:
    try:
        w, h = (int(v) for v in args.grid.lower().split("x"))
    except ValueError:
        print(f"bad --grid {args.grid!r}, expected WxH", file=sys.stderr)
        return EXIT_USAGE
    spec = GenSpec(
        n_zones=args.zones,
        objects_per_zone=args.objects_per_zone,
        grid_size=(w, h),
        target_category=args.category,
        target_label=args.target,
    )
    try:
        scene = generate_scene(args.seed, spec)
    except SceneError as exc:
        print(f"scene generation failed: {exc}", file=sys.stderr)
        return EXIT_USAGE
    args.out.mkdir(parents=True, exist_ok=True)
    name = f"scene_{args.category.lower() + '_' if args.category else ''}{args.seed}.scene"
    path = args.out / name
    save_scene(scene, path)
    print(f"wrote {path} ({scene.width}x{scene.height}, {len(scene.objects)} objects, "
          f"target={scene.target_label})")
    return EXIT_OK


def _load_scene_or_exit(path: Path) -> Scene | None:
    try:
        return load_scene(path)
    except FileNotFoundError:
        print(f"scene file not found: {path}", file=sys.stderr)
        return None
    except SceneError as exc:
        print(f"invalid scene: {exc}", file=sys.stderr)
        return None


def _cmd_run(args) -> int:
    scene = _load_scene_or_exit(args.scene)
    if scene is None:
        return EXIT_USAGE
    try:
        cfg = _bench_config(args)
    except SystemExit as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    result, trace = run_baseline(args.method, scene, args.seed, cfg)
    args.out.mkdir(parents=True, exist_ok=True)
    trace_path = args.out / f"trace_{args.method}_{args.seed}.jsonl"
    trace.save(trace_path)
    spl = bench_mod.compute_spl([result])
    print(
        f"method={args.method} success={result.success} P={result.path_length:.2f}m "
        f"L={result.shortest_length:.2f}m steps={result.steps} spl={spl:.3f}"
    )
    print(f"trace: {trace_path}")
    return EXIT_OK if result.success else EXIT_EPISODE_FAILED


def _cmd_bench(args) -> int:
    try:
        cfg = _bench_config(args)
    except SystemExit as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    if args.scenes:
        scenes = []
        for path in args.scenes:
            scene = _load_scene_or_exit(path)
            if scene is None:
                return EXIT_USAGE
            scenes.append((path.stem, scene))
    else:
        scenes = default_suite_scenes(args.scenes_per_category)
    seeds = list(range(args.episode_seeds))
    report, _ = run_suite(scenes, args.methods, seeds, cfg, out_dir=args.out)
    fallbacks = sum(agg["fallbacks"] for agg in report.per_method.values())
    print(f"{'method':<20}{'SR':>8}{'SPL':>8}{'TD (m)':>10}{'N':>6}")
    for method in args.methods:
        agg = report.per_method[method]
        print(f"{method:<20}{agg['sr']:>8.3f}{agg['spl']:>8.3f}{agg['td']:>10.2f}{agg['n_episodes']:>6}")
    print(f"report: {args.out / 'report.csv'} and report.json (fallbacks={fallbacks})")
    return EXIT_OK


def _cmd_render(args) -> int:
    scene = _load_scene_or_exit(args.scene)
    if scene is None:
        return EXIT_USAGE
    if not args.trace.exists():
        print(f"trace file not found: {args.trace}", file=sys.stderr)
        return EXIT_USAGE
    trace = EpisodeTrace.load(args.trace)
    try:
        txt, ppm = render_mod.render_snapshot(scene, trace, args.step, args.out)
    except IndexError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    print(f"wrote {txt} and {ppm}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "scene":
        return _cmd_scene_gen(args)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "bench":
        return _cmd_bench(args)
    if args.command == "render":
        return _cmd_render(args)
    parser.error(f"unknown command {args.command!r}")
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
