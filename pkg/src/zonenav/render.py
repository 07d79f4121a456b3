"""Map snapshot rendering: reconstructs an episode's map at a step from its
trace and writes an ASCII view plus a portable-pixmap image."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import mapping
from .agent import EpisodeTrace
from .mapping import OccupancyGrid, detect_frontiers, integrate_scan
from .world import AgentPose, HEADINGS, Scene, Simulator, cell_center, world_to_cell

PX_PER_CELL = 6

_COLORS = {
    "unknown": (70, 70, 70),
    "free": (232, 232, 232),
    "occupied": (15, 15, 15),
    "frontier": (255, 160, 20),
    "path": (90, 140, 255),
    "agent": (220, 40, 40),
    "target": (40, 190, 70),
    "zone": (190, 60, 200),
}


def _poses_up_to(trace: EpisodeTrace, step: int) -> list[AgentPose]:
    if step >= len(trace.steps):
        raise IndexError(f"step {step} out of range (trace has {len(trace.steps)} steps)")
    poses = []
    for rec in trace.steps[: step + 1]:
        r, c, heading = rec["pose"]
        if heading not in HEADINGS:
            raise ValueError(f"bad heading {heading} in trace")
        poses.append(AgentPose(cell_center((r, c)), heading))
    return poses


def reconstruct_map(scene: Scene, trace: EpisodeTrace, step: int) -> tuple[OccupancyGrid, list]:
    """Replay the trace's poses through the sensor model up to `step`."""
    sim = Simulator(scene)
    grid = OccupancyGrid.for_scene(scene)
    poses = _poses_up_to(trace, step)
    for pose in poses:
        integrate_scan(grid, pose, sim)
    return grid, poses


def _zone_states(trace: EpisodeTrace, step: int) -> dict[int, dict]:
    zones: dict[int, dict] = {}
    for rec in trace.steps[: step + 1]:
        inf = rec.get("inference")
        if inf:
            zones[inf["zone"]] = inf
    return zones


def render_snapshot(
    scene: Scene,
    trace: EpisodeTrace,
    step: int,
    out_dir: str | Path,
    stem: str | None = None,
) -> tuple[Path, Path]:
    """Write `<stem>.txt` and `<stem>.ppm` for the map state after `step`."""
    grid, poses = reconstruct_map(scene, trace, step)
    frontiers = detect_frontiers(grid)
    zones = _zone_states(trace, step)
    agent_cell = poses[-1].cell
    path_cells = [p.cell for p in poses]
    target_cells = {o.cell for o in scene.target_instances()}

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = stem if stem is not None else f"step_{step}"
    txt_path = out / f"{stem}.txt"
    ppm_path = out / f"{stem}.ppm"

    txt_path.write_text(_ascii_view(grid, frontiers, agent_cell, path_cells, target_cells, zones, step))
    ppm_path.write_bytes(_ppm_view(grid, frontiers, agent_cell, path_cells, target_cells, zones))
    return txt_path, ppm_path


def _ascii_view(grid, frontiers, agent, path_cells, target_cells, zones, step) -> str:
    chars = np.full((grid.height, grid.width), "?", dtype="<U1")
    chars[grid.cells == mapping.FREE] = "."
    chars[grid.cells == mapping.OCCUPIED] = "#"
    for cell in path_cells:
        if chars[cell] == ".":
            chars[cell] = "*"
    for f in frontiers:
        for cell in f.cells:
            chars[cell] = "F"
    for cell in target_cells:
        if grid.cells[cell] != mapping.UNKNOWN:
            chars[cell] = "T"
    zone_cells = {}
    for zid, inf in zones.items():
        cell = world_to_cell(tuple(inf["centroid"]), grid.cell_size)
        if grid.in_bounds(cell):
            zone_cells[cell] = zid
            chars[cell] = str(zid % 10)
    chars[agent] = "A"
    lines = [f"step {step}"]
    lines.append("\n".join("".join(row) for row in chars))
    for zid in sorted(zones):
        inf = zones[zid]
        lines.append(f"zone {zid}: {inf['category']} p_target={inf['p_target']:.3f}")
    return "\n".join(lines) + "\n"


def _ppm_view(grid, frontiers, agent, path_cells, target_cells, zones) -> bytes:
    img = np.zeros((grid.height, grid.width, 3), dtype=np.uint8)
    img[:, :] = _COLORS["unknown"]
    img[grid.cells == mapping.FREE] = _COLORS["free"]
    img[grid.cells == mapping.OCCUPIED] = _COLORS["occupied"]
    for cell in path_cells:
        img[cell] = _COLORS["path"]
    for f in frontiers:
        for cell in f.cells:
            img[cell] = _COLORS["frontier"]
    for cell in target_cells:
        if grid.cells[cell] != mapping.UNKNOWN:
            img[cell] = _COLORS["target"]
    for inf in zones.values():
        cell = world_to_cell(tuple(inf["centroid"]), grid.cell_size)
        if grid.in_bounds(cell):
            img[cell] = _COLORS["zone"]
    img[agent] = _COLORS["agent"]
    big = np.repeat(np.repeat(img, PX_PER_CELL, axis=0), PX_PER_CELL, axis=1)
    header = f"P6\n{big.shape[1]} {big.shape[0]}\n255\n".encode()
    return header + big.tobytes()
