"""Benchmark harness: SR/SPL/TD metrics, baseline agents, and the suite runner."""

from __future__ import annotations

import csv
import json
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import data
from .agent import EpisodeConfig, EpisodeResult, EpisodeTrace, _turn_action, run_episode
from .inference import PriorsTable, RemoteBackend, TableBackend, UniformBackend
from .perception import EmbeddingTable, similarity
from .planning import WeightParams
from .world import (
    CATEGORIES,
    MOVE_AHEAD,
    ROTATE_LEFT,
    ROTATE_RIGHT,
    STOP,
    GenSpec,
    Scene,
    Simulator,
    generate_scene,
    oracle_shortest_path,
    world_to_cell,
)

METHODS = ("random_walk", "standard_frontier", "reactive", "proposed_uniform", "proposed")

REACTIVE_SIM_FLOOR = 0.3  # ignore steering cues weaker than this
REACTIVE_REACH_M = 0.5  # non-target cues within reach stop pulling


# ---------------------------------------------------------------------------
# metrics


def compute_sr(results: list[EpisodeResult]) -> float:
    """Success rate: mean of the per-episode success flags."""
    if not results:
        raise ValueError("no results")
    return sum(1.0 for r in results if r.success) / len(results)


def compute_td(results: list[EpisodeResult]) -> float:
    """Mean total distance traveled per episode, meters."""
    if not results:
        raise ValueError("no results")
    return sum(r.path_length for r in results) / len(results)


def compute_spl(results: list[EpisodeResult]) -> float:
    """Success weighted by path length: (1/N) sum S_i * L_i / max(P_i, L_i)."""
    if not results:
        raise ValueError("no results")
    total = 0.0
    for r in results:
        if not r.success:
            continue
        if math.isinf(r.shortest_length):
            raise ValueError("successful episode with infinite shortest path")
        denom = max(r.path_length, r.shortest_length)
        total += r.shortest_length / denom if denom > 0 else 1.0
    return total / len(results)


# ---------------------------------------------------------------------------
# memoryless baselines


def _opportunistic_trace_end(outcome, success, traveled, shortest, steps):
    return {
        "outcome": outcome,
        "success": success,
        "path_length": traveled,
        "shortest_length": shortest,
        "steps": steps,
        "zone_graph": {"nodes": [], "edges": []},
        "invariant_violations": [],
    }


def run_random_walk(
    scene: Scene, seed: int, max_steps: int = 500, sim: Simulator | None = None
) -> tuple[EpisodeResult, EpisodeTrace]:
    """Uniform random motion with an opportunistic Stop at the success condition."""
    sim = sim if sim is not None else Simulator(scene)
    rng = random.Random(f"random_walk|{seed}")
    pose = scene.agent_start
    traveled = 0.0
    steps = []
    outcome = "budget_exhausted"
    for step in range(max_steps):
        if sim.check_success(pose):
            action = STOP
        else:
            action = rng.choice((MOVE_AHEAD, ROTATE_LEFT, ROTATE_RIGHT))
        new_pose, collided = sim.step(pose, action)
        if new_pose.cell != pose.cell:
            traveled += scene.cell_size
        steps.append(
            {
                "step": step,
                "mode": "RandomWalk",
                "pose": [pose.cell[0], pose.cell[1], pose.heading],
                "action": action,
                "collided": collided,
                "zone": None,
                "context_reset": False,
                "frontier": None,
                "inference": None,
                "fallbacks": [],
                "unknown": None,
            }
        )
        pose = new_pose
        if action == STOP:
            outcome = "success"
            break
    shortest = oracle_shortest_path(scene, scene.agent_start.cell)
    success = outcome == "success"
    result = EpisodeResult(success, traveled, shortest, len(steps))
    trace = EpisodeTrace(
        meta={"method": "random_walk", "seed": seed, "target": scene.target_label},
        steps=steps,
        end=_opportunistic_trace_end(outcome, success, traveled, shortest, len(steps)),
    )
    return result, trace


def run_reactive(
    scene: Scene,
    seed: int,
    embeddings: EmbeddingTable,
    max_steps: int = 500,
    sim: Simulator | None = None,
) -> tuple[EpisodeResult, EpisodeTrace]:
    """Mapless agent steering toward the most target-like visible object.

    Keeps no state beyond the last action: each step it turns toward the
    highest-similarity detection (when one clears REACTIVE_SIM_FLOOR and is
    not already within reach), otherwise wanders by a seeded heuristic.
    """
    sim = sim if sim is not None else Simulator(scene)
    rng = random.Random(f"reactive|{seed}")
    pose = scene.agent_start
    traveled = 0.0
    steps = []
    outcome = "budget_exhausted"
    last_collided = False
    for step in range(max_steps):
        if sim.check_success(pose):
            action = STOP
        else:
            action = None
            detections = sim.panoramic_scan(pose)
            scored = []
            for d in detections:
                if d.label not in embeddings:
                    continue
                s = similarity(d.label, scene.target_label, embeddings)
                scored.append((-s, d.distance, d.label, d))
            scored.sort(key=lambda t: t[:3])
            if scored:
                neg_s, dist, _, best = scored[0]
                s = -neg_s
                worth_chasing = s >= REACTIVE_SIM_FLOOR and (
                    dist > REACTIVE_REACH_M or s >= 0.85
                )
                if worth_chasing:
                    target_cell = world_to_cell(best.world_position, scene.cell_size)
                    if target_cell != pose.cell:
                        desired = _bearing_heading(pose.cell, target_cell)
                        if desired != pose.heading:
                            action = _turn_action(pose.heading, desired)
                        else:
                            action = MOVE_AHEAD
            if action is None:
                if last_collided:
                    action = rng.choice((ROTATE_LEFT, ROTATE_RIGHT))
                elif rng.random() < 0.8:
                    action = MOVE_AHEAD
                else:
                    action = rng.choice((ROTATE_LEFT, ROTATE_RIGHT))
        new_pose, collided = sim.step(pose, action)
        if new_pose.cell != pose.cell:
            traveled += scene.cell_size
        steps.append(
            {
                "step": step,
                "mode": "Reactive",
                "pose": [pose.cell[0], pose.cell[1], pose.heading],
                "action": action,
                "collided": collided,
                "zone": None,
                "context_reset": False,
                "frontier": None,
                "inference": None,
                "fallbacks": [],
                "unknown": None,
            }
        )
        pose = new_pose
        last_collided = collided
        if action == STOP:
            outcome = "success"
            break
    shortest = oracle_shortest_path(scene, scene.agent_start.cell)
    success = outcome == "success"
    result = EpisodeResult(success, traveled, shortest, len(steps))
    trace = EpisodeTrace(
        meta={"method": "reactive", "seed": seed, "target": scene.target_label},
        steps=steps,
        end=_opportunistic_trace_end(outcome, success, traveled, shortest, len(steps)),
    )
    return result, trace


def _bearing_heading(src: tuple[int, int], dst: tuple[int, int]) -> int:
    """Cardinal heading closest to the bearing from src to dst (cells)."""
    dx = dst[1] - src[1]
    dy = src[0] - dst[0]  # +y points up in heading space
    angle = math.degrees(math.atan2(dy, dx)) % 360
    return int(((angle + 45) % 360) // 90) * 90


# ---------------------------------------------------------------------------
# suite configuration and runner


@dataclass
class BenchConfig:
    embeddings_path: Path | None = None
    priors_path: Path | None = None
    backend: str = "table"  # table | remote | uniform
    endpoint: str | None = None
    timeout: float = 2.0
    max_steps: int = 500
    check_invariants: bool = False
    workers: int = 1

    def load_embeddings(self) -> EmbeddingTable:
        path = self.embeddings_path or data.path("embeddings.json")
        return EmbeddingTable.load(path)

    def load_priors(self) -> PriorsTable:
        path = self.priors_path or data.path("priors.json")
        return PriorsTable.load(path)


def _make_backend(cfg: BenchConfig, priors: PriorsTable):
    if cfg.backend == "table":
        return TableBackend(priors)
    if cfg.backend == "uniform":
        return UniformBackend()
    if cfg.backend == "remote":
        if not cfg.endpoint:
            raise ValueError("remote backend requires an endpoint")
        return RemoteBackend(cfg.endpoint, priors, cfg.timeout)
    raise ValueError(f"unknown backend {cfg.backend!r}")


def run_baseline(
    method: str,
    scene: Scene,
    seed: int,
    cfg: BenchConfig,
    embeddings: EmbeddingTable | None = None,
    priors: PriorsTable | None = None,
    sim: Simulator | None = None,
) -> tuple[EpisodeResult, EpisodeTrace]:
    """Run one named method on one scene with one seed."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; valid: {', '.join(METHODS)}")
    embeddings = embeddings if embeddings is not None else cfg.load_embeddings()
    if method == "random_walk":
        return run_random_walk(scene, seed, cfg.max_steps, sim)
    if method == "reactive":
        return run_reactive(scene, seed, embeddings, cfg.max_steps, sim)

    if method == "standard_frontier":
        episode_cfg = EpisodeConfig(
            embeddings=embeddings,
            backend=UniformBackend(),
            weights=WeightParams(beta=0.0),
            max_steps=cfg.max_steps,
            seed=seed,
            policy="standard_frontier",
            use_inference=False,
            check_invariants=cfg.check_invariants,
        )
    elif method == "proposed_uniform":
        episode_cfg = EpisodeConfig(
            embeddings=embeddings,
            backend=UniformBackend(),
            max_steps=cfg.max_steps,
            seed=seed,
            check_invariants=cfg.check_invariants,
        )
    else:  # proposed
        priors = priors if priors is not None else cfg.load_priors()
        episode_cfg = EpisodeConfig(
            embeddings=embeddings,
            backend=_make_backend(cfg, priors),
            max_steps=cfg.max_steps,
            seed=seed,
            check_invariants=cfg.check_invariants,
        )
    return run_episode(scene, episode_cfg, sim)


DEFAULT_SUITE_SPEC = GenSpec(n_zones=4, objects_per_zone=14, grid_size=(48, 48))


def default_suite_scenes(
    n_per_category: int = 5,
    spec: GenSpec | None = None,
) -> list[tuple[str, Scene]]:
    """The bundled benchmark: n scenes per zone category, seeds 0..n-1."""
    base = spec or DEFAULT_SUITE_SPEC
    out = []
    for cat in CATEGORIES:
        for seed in range(n_per_category):
            scene_spec = GenSpec(
                n_zones=base.n_zones,
                objects_per_zone=base.objects_per_zone,
                grid_size=base.grid_size,
                target_category=cat,
            )
            out.append((f"{cat.lower()}_{seed}", generate_scene(seed, scene_spec)))
    return out


@dataclass
class BenchReport:
    per_method: dict[str, dict]
    rows: list[dict]
    config: dict
    seeds: list[int] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "aggregates": self.per_method,
            "rows": self.rows,
            "config": self.config,
            "seeds": self.seeds,
        }

    def write_csv(self, path: str | Path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["method", "scene", "seed", "success", "P", "L", "steps"])
            for row in self.rows:
                w.writerow(
                    [
                        row["method"],
                        row["scene"],
                        row["seed"],
                        int(row["success"]),
                        f"{row['P']:.4f}",
                        "inf" if math.isinf(row["L"]) else f"{row['L']:.4f}",
                        row["steps"],
                    ]
                )

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=1, sort_keys=True))


def run_suite(
    scenes: list[tuple[str, Scene]],
    methods: list[str],
    seeds: list[int],
    cfg: BenchConfig,
    out_dir: str | Path | None = None,
    keep_traces: bool = False,
) -> tuple[BenchReport, dict]:
    """Full cross product of scenes x methods x seeds; deterministic per seed.

    Returns the report plus {(scene, method, seed): trace} when keep_traces.
    Per-episode failures are recorded as failed rows, never abort the suite.
    """
    if not scenes or not methods:
        raise ValueError("need at least one scene and one method")
    embeddings = cfg.load_embeddings()
    priors = cfg.load_priors()
    sims = {name: Simulator(scene) for name, scene in scenes}
    jobs = [
        (name, scene, method, seed)
        for name, scene in scenes
        for method in methods
        for seed in seeds
    ]

    def run_one(job):
        name, scene, method, seed = job
        try:
            result, trace = run_baseline(
                method, scene, seed, cfg, embeddings, priors, sims[name]
            )
        except Exception as exc:  # noqa: BLE001 - suite must survive episode bugs
            result = EpisodeResult(False, 0.0, math.inf, 0)
            trace = EpisodeTrace(
                meta={"method": method, "seed": seed, "error": repr(exc)},
                end={"outcome": "error", "error": repr(exc), "invariant_violations": []},
            )
        return job, result, trace

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(run_one, jobs))
    else:
        outcomes = [run_one(j) for j in jobs]

    rows = []
    traces = {}
    by_method: dict[str, list[EpisodeResult]] = {m: [] for m in methods}
    fallback_counts: dict[str, int] = {m: 0 for m in methods}
    for (name, _scene, method, seed), result, trace in sorted(
        outcomes, key=lambda item: (item[0][2], item[0][0], item[0][3])
    ):
        n_fallbacks = sum(len(rec.get("fallbacks", ())) for rec in trace.steps)
        rows.append(
            {
                "method": method,
                "scene": name,
                "seed": seed,
                "success": result.success,
                "P": result.path_length,
                "L": result.shortest_length,
                "steps": result.steps,
                "fallbacks": n_fallbacks,
            }
        )
        by_method[method].append(result)
        fallback_counts[method] += n_fallbacks
        if keep_traces:
            traces[(name, method, seed)] = trace

    per_method = {
        m: {
            "sr": compute_sr(rs),
            "spl": compute_spl(rs),
            "td": compute_td(rs),
            "n_episodes": len(rs),
            "fallbacks": fallback_counts[m],
        }
        for m, rs in by_method.items()
    }
    report = BenchReport(
        per_method=per_method,
        rows=rows,
        config={
            "backend": cfg.backend,
            "max_steps": cfg.max_steps,
            "methods": list(methods),
            "n_scenes": len(scenes),
        },
        seeds=list(seeds),
    )
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        report.write_csv(out / "report.csv")
        report.write_json(out / "report.json")
    return report, traces
