"""Grid world: scene files, procedural scene generation, and the deterministic simulator.

Conventions used throughout the package:

* cells are addressed ``(r, c)`` with ``r`` in ``[0, height)`` and ``c`` in
  ``[0, width)``;
* world coordinates are meters, cell ``(r, c)`` has its center at
  ``x = (c + 0.5) * cell_size``, ``y = (r + 0.5) * cell_size``;
* headings are degrees in ``{0, 90, 180, 270}``: 0 points along +x
  (increasing column), 90 along -y (decreasing row), counterclockwise.
"""

from __future__ import annotations

import json
import math
import random
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CELL_SIZE_DEFAULT = 0.25
SENSE_RANGE_M = 5.0
SUCCESS_RADIUS_M = 1.0
PIXEL_GAIN = 900.0  # apparent_pixels = round(PIXEL_GAIN * size / dist^2)

WALL = "#"
FLOOR = "."

HEADINGS = (0, 90, 180, 270)
# heading -> (dr, dc) for one MoveAhead
_HEADING_STEP = {0: (0, 1), 90: (-1, 0), 180: (0, -1), 270: (1, 0)}

MOVE_AHEAD = "MoveAhead"
ROTATE_LEFT = "RotateLeft"
ROTATE_RIGHT = "RotateRight"
STOP = "Stop"
ACTIONS = (MOVE_AHEAD, ROTATE_LEFT, ROTATE_RIGHT, STOP)


class SceneError(Exception):
    """Scene file failed to parse or validate."""


class SceneSizingError(SceneError):
    """Requested zone layout does not fit the grid."""


@dataclass(frozen=True)
class ObjectInstance:
    label: str
    position: tuple[float, float]  # (x, y) meters, cell center
    size: float  # physical cross-section, m^2

    @property
    def cell(self) -> tuple[int, int]:
        return world_to_cell(self.position)


@dataclass(frozen=True)
class ZoneGT:
    """Ground-truth zone annotation, used by evaluation only."""

    zone_id: int
    category: str
    cells: frozenset[tuple[int, int]]


@dataclass(frozen=True)
class AgentPose:
    position: tuple[float, float]  # meters, snapped to a cell center
    heading: int  # degrees, one of HEADINGS

    @property
    def cell(self) -> tuple[int, int]:
        return world_to_cell(self.position)


@dataclass(frozen=True)
class Detection:
    """One object seen by a panoramic scan."""

    label: str
    distance: float  # meters
    apparent_pixels: int
    world_position: tuple[float, float]


@dataclass
class Scene:
    width: int
    height: int
    cell_size: float
    cells: list[str]  # row-major strings of WALL / FLOOR
    objects: list[ObjectInstance]
    zones_gt: list[ZoneGT]
    agent_start: AgentPose
    target_label: str

    def is_floor(self, cell: tuple[int, int]) -> bool:
        r, c = cell
        return 0 <= r < self.height and 0 <= c < self.width and self.cells[r][c] == FLOOR

    def is_wall(self, cell: tuple[int, int]) -> bool:
        r, c = cell
        return 0 <= r < self.height and 0 <= c < self.width and self.cells[r][c] == WALL

    def wall_mask(self) -> np.ndarray:
        return np.array([[ch == WALL for ch in row] for row in self.cells], dtype=bool)

    def floor_cells(self) -> list[tuple[int, int]]:
        return [
            (r, c)
            for r in range(self.height)
            for c in range(self.width)
            if self.cells[r][c] == FLOOR
        ]

    def target_instances(self) -> list[ObjectInstance]:
        return [o for o in self.objects if o.label == self.target_label]

    def to_json_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "cell_size": self.cell_size,
            "cells": list(self.cells),
            "objects": [
                {"label": o.label, "x": o.position[0], "y": o.position[1], "size": o.size}
                for o in self.objects
            ],
            "zones_gt": [
                {"id": z.zone_id, "category": z.category, "cells": sorted([list(c) for c in z.cells])}
                for z in self.zones_gt
            ],
            "agent_start": {
                "r": self.agent_start.cell[0],
                "c": self.agent_start.cell[1],
                "heading": self.agent_start.heading,
            },
            "target": self.target_label,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict(), indent=1, sort_keys=True)


def world_to_cell(pos: tuple[float, float], cell_size: float = CELL_SIZE_DEFAULT) -> tuple[int, int]:
    x, y = pos
    return (int(math.floor(y / cell_size)), int(math.floor(x / cell_size)))


def cell_center(cell: tuple[int, int], cell_size: float = CELL_SIZE_DEFAULT) -> tuple[float, float]:
    r, c = cell
    return ((c + 0.5) * cell_size, (r + 0.5) * cell_size)


def euclid(a: tuple[float, float], b: tuple[float, float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def bresenham_cells(start: tuple[int, int], end: tuple[int, int]) -> list[tuple[int, int]]:
    """Integer Bresenham line from start to end, endpoints included."""
    r0, c0 = start
    r1, c1 = end
    cells = []
    dr = abs(r1 - r0)
    dc = abs(c1 - c0)
    sr = 1 if r1 >= r0 else -1
    sc = 1 if c1 >= c0 else -1
    err = dc - dr
    r, c = r0, c0
    while True:
        cells.append((r, c))
        if (r, c) == (r1, c1):
            break
        e2 = 2 * err
        if e2 > -dr:
            err -= dr
            c += sc
        if e2 < dc:
            err += dc
            r += sr
    return cells


def line_of_sight(scene: Scene, a: tuple[int, int], b: tuple[int, int]) -> bool:
    """True when the cell ray between a and b crosses no Wall (endpoints excluded)."""
    for cell in bresenham_cells(a, b)[1:-1]:
        if scene.is_wall(cell):
            return False
    return True


# ---------------------------------------------------------------------------
# scene file I/O


def _validate_scene(scene: Scene) -> None:
    if scene.width <= 0 or scene.height <= 0:
        raise SceneError("grid dimensions must be positive")
    if len(scene.cells) != scene.height:
        raise SceneError(f"cells has {len(scene.cells)} rows, expected {scene.height}")
    for i, row in enumerate(scene.cells):
        if len(row) != scene.width:
            raise SceneError(f"row {i} has {len(row)} cells, expected {scene.width}")
        bad = set(row) - {WALL, FLOOR}
        if bad:
            raise SceneError(f"row {i} contains invalid cell characters {sorted(bad)}")
    if scene.agent_start.heading not in HEADINGS:
        raise SceneError(f"agent heading {scene.agent_start.heading} not in {HEADINGS}")
    if not scene.is_floor(scene.agent_start.cell):
        raise SceneError("agent_start not on Floor")
    object_cells = set()
    for o in scene.objects:
        if o.size <= 0:
            raise SceneError(f"object {o.label!r} has non-positive size")
        if not scene.is_floor(o.cell):
            raise SceneError(f"object {o.label!r} at {o.cell} not on Floor")
        object_cells.add(o.cell)
    if scene.agent_start.cell in object_cells:
        raise SceneError("agent_start occupied by an object footprint")
    seen_zone_cells: set[tuple[int, int]] = set()
    for z in scene.zones_gt:
        overlap = seen_zone_cells & z.cells
        if overlap:
            raise SceneError(f"zone {z.zone_id} overlaps another zone at {sorted(overlap)[0]}")
        seen_zone_cells |= z.cells
    targets = scene.target_instances()
    if not targets:
        raise SceneError(f"no instance of target {scene.target_label!r} in scene")
    reach = reachable_floor(scene, scene.agent_start.cell)
    for o in scene.objects:
        if o.cell not in reach:
            raise SceneError(f"object {o.label!r} at {o.cell} unreachable from agent_start")


def reachable_floor(scene: Scene, start: tuple[int, int]) -> set[tuple[int, int]]:
    """All Floor cells 4-connected to start."""
    return set(_bfs_distances(scene, start))


def _bfs_distances(scene: Scene, start: tuple[int, int]) -> dict[tuple[int, int], int]:
    dist = {start: 0}
    dq = deque([start])
    while dq:
        r, c = dq.popleft()
        for nr, nc in ((r + 1, c), (r - 1, c), (r, c + 1), (r, c - 1)):
            if (nr, nc) not in dist and scene.is_floor((nr, nc)):
                dist[(nr, nc)] = dist[(r, c)] + 1
                dq.append((nr, nc))
    return dist


def scene_from_dict(doc: dict) -> Scene:
    try:
        cell_size = float(doc.get("cell_size", CELL_SIZE_DEFAULT))
        objects = [
            ObjectInstance(
                label=str(o["label"]),
                position=(float(o["x"]), float(o["y"])),
                size=float(o["size"]),
            )
            for o in doc.get("objects", [])
        ]
        zones = [
            ZoneGT(
                zone_id=int(z["id"]),
                category=str(z["category"]),
                cells=frozenset((int(r), int(c)) for r, c in z["cells"]),
            )
            for z in doc.get("zones_gt", [])
        ]
        start = doc["agent_start"]
        pose = AgentPose(
            position=cell_center((int(start["r"]), int(start["c"])), cell_size),
            heading=int(start["heading"]),
        )
        scene = Scene(
            width=int(doc["width"]),
            height=int(doc["height"]),
            cell_size=cell_size,
            cells=[str(row) for row in doc["cells"]],
            objects=objects,
            zones_gt=zones,
            agent_start=pose,
            target_label=str(doc["target"]),
        )
    except KeyError as exc:
        raise SceneError(f"missing scene field {exc.args[0]!r}") from exc
    _validate_scene(scene)
    return scene


def load_scene(path: str | Path) -> Scene:
    """Load and validate a scene JSON file."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneError(f"{path}: parse error at line {exc.lineno}: {exc.msg}") from exc
    return scene_from_dict(doc)


def save_scene(scene: Scene, path: str | Path) -> None:
    Path(path).write_text(scene.dumps())


# ---------------------------------------------------------------------------
# vocabulary


@dataclass(frozen=True)
class VocabEntry:
    label: str
    category: str
    size: float


def load_vocabulary(path: str | Path) -> list[VocabEntry]:
    """Parse the object vocabulary: one `label category size` triple per line."""
    entries = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise SceneError(f"{path}:{lineno}: expected 'label category size', got {raw!r}")
        entries.append(VocabEntry(parts[0], parts[1], float(parts[2])))
    return entries


# ---------------------------------------------------------------------------
# procedural generation

# typical search target per zone category
TYPICAL_TARGETS = {
    "Kitchen": "kettle",
    "LivingRoom": "remote",
    "Bedroom": "pillow",
    "Bathroom": "towel",
}
CATEGORIES = tuple(sorted(TYPICAL_TARGETS))

# weight given to labels from the zone's own category vs. stray labels
_PRIMARY_WEIGHT = 0.9
_STRAY_WEIGHT_TOTAL = 0.1


@dataclass(frozen=True)
class GenSpec:
    n_zones: int
    objects_per_zone: int
    grid_size: tuple[int, int]  # (width, height)
    target_category: str | None = None
    target_label: str | None = None


def default_vocabulary() -> list[VocabEntry]:
    from . import data

    return load_vocabulary(data.path("vocabulary.txt"))


def generate_scene(seed: int, spec: GenSpec, vocab: list[VocabEntry] | None = None) -> Scene:
    """Generate a deterministic multi-room scene for (seed, spec).

    Rooms are tiled on a grid and joined by 1-cell doorways; each room is a
    ground-truth zone populated with labels drawn from its category's part of
    the vocabulary. A target instance is guaranteed to exist.
    """
    if spec.n_zones < 1:
        raise SceneSizingError("n_zones must be >= 1")
    vocab = vocab if vocab is not None else default_vocabulary()
    by_category: dict[str, list[VocabEntry]] = {}
    for e in vocab:
        by_category.setdefault(e.category, []).append(e)
    sizes = {e.label: e.size for e in vocab}

    width, height = spec.grid_size
    rng = random.Random(f"{seed}|{spec.target_category or ''}|scene")

    cols = max(1, math.isqrt(spec.n_zones))
    if cols * cols < spec.n_zones:
        cols += 1
    rows = (spec.n_zones + cols - 1) // cols
    # interior block size once outer walls and separators are removed
    bw = (width - 1 - cols) // cols
    bh = (height - 1 - rows) // rows
    if bw < 3 or bh < 3:
        raise SceneSizingError(
            f"{spec.n_zones} zones do not fit a {width}x{height} grid "
            f"(room interior would be {bw}x{bh}, need at least 3x3)"
        )

    grid = [[WALL] * width for _ in range(height)]
    room_cells: list[list[tuple[int, int]]] = []
    room_span: list[tuple[int, int, int, int]] = []  # r0, c0, r1, c1 inclusive interior
    for i in range(rows * cols):
        br, bc = divmod(i, cols)
        r0 = 1 + br * (bh + 1)
        c0 = 1 + bc * (bw + 1)
        r1, c1 = r0 + bh - 1, c0 + bw - 1
        for r in range(r0, r1 + 1):
            for c in range(c0, c1 + 1):
                grid[r][c] = FLOOR
        room_span.append((r0, c0, r1, c1))
        room_cells.append([(r, c) for r in range(r0, r1 + 1) for c in range(c0, c1 + 1)])

    # doorways between every pair of adjacent blocks
    door_cells: set[tuple[int, int]] = set()
    for i in range(rows * cols):
        br, bc = divmod(i, cols)
        r0, c0, r1, c1 = room_span[i]
        if bc + 1 < cols:  # door in the wall to the right
            rr = rng.randint(r0, r1)
            door_cells.add((rr, c1 + 1))
        if br + 1 < rows:  # door in the wall below
            cc = rng.randint(c0, c1)
            door_cells.add((r1 + 1, cc))
    for r, c in door_cells:
        grid[r][c] = FLOOR

    # interior clutter: short wall stubs that occlude sight lines, so rooms
    # need several vantage points instead of one scan from the doorway
    def _floor_connected() -> bool:
        start = next(
            (r, c)
            for r in range(height)
            for c in range(width)
            if grid[r][c] == FLOOR
        )
        seen = {start}
        dq = deque([start])
        while dq:
            r, c = dq.popleft()
            for nr, nc in ((r + 1, c), (r - 1, c), (r, c + 1), (r, c - 1)):
                if (
                    0 <= nr < height
                    and 0 <= nc < width
                    and grid[nr][nc] == FLOOR
                    and (nr, nc) not in seen
                ):
                    seen.add((nr, nc))
                    dq.append((nr, nc))
        total = sum(row.count(FLOOR) for row in grid)
        return len(seen) == total

    keep_open = set(door_cells)
    for r, c in door_cells:
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                keep_open.add((r + dr, c + dc))
    n_clutter = max(2, (bw * bh) // 45)
    for i in range(spec.n_zones):
        r0, c0, r1, c1 = room_span[i]
        placed_segments = 0
        for _attempt in range(20):
            if placed_segments >= n_clutter:
                break
            horizontal = rng.random() < 0.5
            length = rng.randint(2, max(2, min(5, (bw if horizontal else bh) - 2)))
            rr = rng.randint(r0 + 1, r1 - 1)
            cc = rng.randint(c0 + 1, c1 - 1)
            cells = [
                (rr, cc + k) if horizontal else (rr + k, cc) for k in range(length)
            ]
            if any(
                not (r0 < r < r1 and c0 < c < c1) or (r, c) in keep_open for r, c in cells
            ):
                continue
            for r, c in cells:
                grid[r][c] = WALL
            if _floor_connected():
                placed_segments += 1
            else:
                for r, c in cells:
                    grid[r][c] = FLOOR
    room_cells = [
        [cell for cell in cells if grid[cell[0]][cell[1]] == FLOOR] for cells in room_cells
    ]

    categories = [e for e in CATEGORIES]
    rng.shuffle(categories)
    if spec.target_category is not None:
        if spec.target_category not in by_category:
            raise SceneError(f"unknown target category {spec.target_category!r}")
        if spec.target_category in categories[: spec.n_zones]:
            pass
        else:
            categories[rng.randrange(min(spec.n_zones, len(categories)))] = spec.target_category
    zone_categories = [categories[i % len(categories)] for i in range(spec.n_zones)]

    if spec.target_label is not None:
        target = spec.target_label
    elif spec.target_category is not None:
        target = TYPICAL_TARGETS[spec.target_category]
    else:
        target = TYPICAL_TARGETS[zone_categories[rng.randrange(spec.n_zones)]]
    target_home = next(
        (e.category for e in vocab if e.label == target), spec.target_category
    )

    all_labels = sorted(sizes)
    objects: list[ObjectInstance] = []
    zones_gt: list[ZoneGT] = []
    cell_size = CELL_SIZE_DEFAULT
    occupied: set[tuple[int, int]] = set()
    for zid in range(spec.n_zones):
        cat = zone_categories[zid]
        primaries = {e.label for e in by_category[cat]}
        weights = [
            _PRIMARY_WEIGHT / len(primaries)
            if lab in primaries
            else _STRAY_WEIGHT_TOTAL / (len(all_labels) - len(primaries))
            for lab in all_labels
        ]
        labels = rng.choices(all_labels, weights=weights, k=spec.objects_per_zone)
        # exactly one target instance per scene, force-placed below
        labels = [lab if lab != target else rng.choice(sorted(primaries - {target})) for lab in labels]
        cells_set = set(room_cells[zid])
        # anchor a couple of category-typical objects just inside the doors so
        # a room announces its function from the threshold
        r0, c0, r1, c1 = room_span[zid]
        entry_spots = []
        for dr_, dc_ in sorted(door_cells):
            near = [
                (rr, cc)
                for rr in range(dr_ - 2, dr_ + 3)
                for cc in range(dc_ - 2, dc_ + 3)
                if (rr, cc) in cells_set and (rr, cc) not in occupied
            ]
            if near:
                entry_spots.append(min(near, key=lambda cl: (abs(cl[0] - dr_) + abs(cl[1] - dc_), cl)))
        spots = []
        for cell in entry_spots[:2]:
            if cell not in spots:
                spots.append(cell)
        rest = [cl for cl in room_cells[zid] if cl not in occupied and cl not in spots]
        spots.extend(rng.sample(rest, k=min(spec.objects_per_zone - len(spots), len(rest))))
        anchor_labels = sorted(primaries - {target}) or sorted(primaries)
        for i, cell in enumerate(spots):
            lab = anchor_labels[i % len(anchor_labels)] if i < len(entry_spots[:2]) else labels[i]
            objects.append(ObjectInstance(lab, cell_center(cell, cell_size), sizes[lab]))
            occupied.add(cell)
        zones_gt.append(ZoneGT(zid, cat, frozenset(room_cells[zid])))

    # force the single target instance into a room of its category (or any
    # room), placed deep: far from the room's doorways
    candidates = [z for z in range(spec.n_zones) if zone_categories[z] == target_home]
    zid = candidates[0] if candidates else rng.randrange(spec.n_zones)
    free = [cl for cl in room_cells[zid] if cl not in occupied]
    pool = free if free else room_cells[zid]
    doors = sorted(door_cells)

    def door_dist(cell):
        return min(abs(cell[0] - d[0]) + abs(cell[1] - d[1]) for d in doors) if doors else 0

    ranked = sorted(pool, key=lambda cl: (-door_dist(cl), cl))
    deep = ranked[: max(1, len(ranked) // 4)]
    target_cell = rng.choice(deep)
    objects.append(ObjectInstance(target, cell_center(target_cell, cell_size), sizes[target]))
    occupied.add(target_cell)

    scene_probe = Scene(
        width=width,
        height=height,
        cell_size=cell_size,
        cells=["".join(row) for row in grid],
        objects=objects,
        zones_gt=zones_gt,
        agent_start=AgentPose(cell_center(room_cells[0][0], cell_size), 0),
        target_label=target,
    )
    taken = occupied | success_cells(scene_probe)  # episodes never start already succeeded
    # start well away from the target so every episode is a real search
    from_target = _bfs_distances(scene_probe, target_cell)
    far_bar = 0.6 * max(from_target.values())
    start_candidates = [
        cl
        for cells in room_cells
        for cl in cells
        if cl not in taken and from_target.get(cl, 0) >= far_bar
    ]
    if not start_candidates:
        start_candidates = [cl for cells in room_cells for cl in cells if cl not in taken]
    if not start_candidates:
        raise SceneSizingError("no free start cell outside the target's success region")
    start_cell = rng.choice(start_candidates)
    pose = AgentPose(cell_center(start_cell, cell_size), rng.choice(HEADINGS))

    scene = Scene(
        width=width,
        height=height,
        cell_size=cell_size,
        cells=["".join(row) for row in grid],
        objects=objects,
        zones_gt=zones_gt,
        agent_start=pose,
        target_label=target,
    )
    _validate_scene(scene)
    return scene


# ---------------------------------------------------------------------------
# simulator


def step_agent(scene: Scene, pose: AgentPose, action: str) -> tuple[AgentPose, bool]:
    """Apply one primitive action. Returns (new pose, collided)."""
    if action == STOP:
        return pose, False
    if action == ROTATE_LEFT:
        return AgentPose(pose.position, (pose.heading + 90) % 360), False
    if action == ROTATE_RIGHT:
        return AgentPose(pose.position, (pose.heading - 90) % 360), False
    if action == MOVE_AHEAD:
        dr, dc = _HEADING_STEP[pose.heading]
        r, c = pose.cell
        dest = (r + dr, c + dc)
        if scene.is_floor(dest):
            return AgentPose(cell_center(dest, scene.cell_size), pose.heading), False
        return pose, True
    raise ValueError(f"unknown action {action!r}")


_RAY_TEMPLATE_CACHE: dict[tuple[float, float], tuple[np.ndarray, np.ndarray, np.ndarray]] = {}


def _ray_templates(cell_size: float, sense_range: float):
    """Padded (dr, dc) offset arrays for 360 one-degree rays from a cell center.

    Returns (off_r, off_c, valid) shaped (360, L); offsets are relative cells in
    visiting order, valid marks real entries vs. padding.
    """
    key = (cell_size, sense_range)
    cached = _RAY_TEMPLATE_CACHE.get(key)
    if cached is not None:
        return cached
    max_cells = sense_range / cell_size
    rays: list[list[tuple[int, int]]] = []
    for deg in range(360):
        theta = math.radians(deg)
        dx, dy = math.cos(theta), -math.sin(theta)
        # Amanatides-Woo traversal from the cell center in unit-cell coords
        x = y = 0.5
        r = c = 0
        step_c = 1 if dx > 0 else -1
        step_r = 1 if dy > 0 else -1
        t_max_x = ((1.0 if dx > 0 else 0.0) - x) / dx if dx != 0 else math.inf
        t_max_y = ((1.0 if dy > 0 else 0.0) - y) / dy if dy != 0 else math.inf
        t_delta_x = abs(1.0 / dx) if dx != 0 else math.inf
        t_delta_y = abs(1.0 / dy) if dy != 0 else math.inf
        visited: list[tuple[int, int]] = []
        t = 0.0
        while True:
            if t_max_x < t_max_y:
                t = t_max_x
                t_max_x += t_delta_x
                c += step_c
            else:
                t = t_max_y
                t_max_y += t_delta_y
                r += step_r
            if t > max_cells:
                break
            visited.append((r, c))
        rays.append(visited)
    length = max(len(v) for v in rays)
    off_r = np.zeros((360, length), dtype=np.int16)
    off_c = np.zeros((360, length), dtype=np.int16)
    valid = np.zeros((360, length), dtype=bool)
    for i, v in enumerate(rays):
        for j, (r, c) in enumerate(v):
            off_r[i, j] = r
            off_c[i, j] = c
            valid[i, j] = True
    _RAY_TEMPLATE_CACHE[key] = (off_r, off_c, valid)
    return off_r, off_c, valid


class Simulator:
    """Deterministic sensing on a fixed scene, with per-cell result caches.

    A Simulator instance may be shared by sequential episodes; it never
    mutates its scene. Use one instance per thread when running in parallel.
    """

    def __init__(self, scene: Scene, sense_range: float = SENSE_RANGE_M):
        self.scene = scene
        self.sense_range = sense_range
        self._wall = scene.wall_mask()
        self._scan_cache: dict[tuple[int, int], tuple[Detection, ...]] = {}
        self._vis_cache: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}
        self._success_cache: dict[tuple[int, int], bool] = {}

    def step(self, pose: AgentPose, action: str) -> tuple[AgentPose, bool]:
        return step_agent(self.scene, pose, action)

    def panoramic_scan(self, pose: AgentPose) -> tuple[Detection, ...]:
        """All objects with line of sight within sense range, sorted by (distance, label)."""
        cell = pose.cell
        hit = self._scan_cache.get(cell)
        if hit is None:
            hit = self._compute_scan(cell)
            self._scan_cache[cell] = hit
        return hit

    def _compute_scan(self, cell: tuple[int, int]) -> tuple[Detection, ...]:
        scene = self.scene
        agent_pos = cell_center(cell, scene.cell_size)
        out = []
        for obj in scene.objects:
            d = euclid(agent_pos, obj.position)
            if d > self.sense_range:
                continue
            if not line_of_sight(scene, cell, obj.cell):
                continue
            # co-located objects fill the view; report them at half-cell range
            d_eff = max(d, scene.cell_size / 2.0)
            pixels = int(round(PIXEL_GAIN * obj.size / (d_eff * d_eff)))
            out.append(Detection(obj.label, d_eff, pixels, obj.position))
        out.sort(key=lambda det: (det.distance, det.label, det.world_position))
        return tuple(out)

    def visible_cells(self, cell: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
        """(free_flat_idx, occupied_flat_idx) seen by a 360-degree raycast from cell."""
        hit = self._vis_cache.get(cell)
        if hit is None:
            hit = self._compute_visibility(cell)
            self._vis_cache[cell] = hit
        return hit

    def _compute_visibility(self, cell: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
        scene = self.scene
        off_r, off_c, valid = _ray_templates(scene.cell_size, self.sense_range)
        r0, c0 = cell
        rr = off_r.astype(np.int32) + r0
        cc = off_c.astype(np.int32) + c0
        inb = (rr >= 0) & (rr < scene.height) & (cc >= 0) & (cc < scene.width) & valid
        wall = np.zeros_like(inb)
        safe_r = np.clip(rr, 0, scene.height - 1)
        safe_c = np.clip(cc, 0, scene.width - 1)
        wall[inb] = self._wall[safe_r[inb], safe_c[inb]]
        blocked = wall | ~inb
        # index of the first blocking entry per ray; rays with none run full length
        first_block = np.where(blocked.any(axis=1), blocked.argmax(axis=1), blocked.shape[1])
        col = np.arange(blocked.shape[1])[None, :]
        free_mask = (col < first_block[:, None]) & inb
        occ_mask = (col == first_block[:, None]) & wall
        flat = safe_r * scene.width + safe_c
        free = np.unique(flat[free_mask])
        occ = np.unique(flat[occ_mask])
        me = np.array([r0 * scene.width + c0], dtype=flat.dtype)
        free = np.unique(np.concatenate([free, me]))
        return free, occ

    def check_success(self, pose: AgentPose) -> bool:
        """Within SUCCESS_RADIUS_M of a target instance, with line of sight to it."""
        cell = pose.cell
        hit = self._success_cache.get(cell)
        if hit is None:
            hit = self._compute_success(cell)
            self._success_cache[cell] = hit
        return hit

    def _compute_success(self, cell: tuple[int, int]) -> bool:
        pos = cell_center(cell, self.scene.cell_size)
        for obj in self.scene.target_instances():
            if euclid(pos, obj.position) <= SUCCESS_RADIUS_M and line_of_sight(
                self.scene, cell, obj.cell
            ):
                return True
        return False


def panoramic_scan(pose: AgentPose, scene: Scene, sense_range: float = SENSE_RANGE_M):
    """Convenience wrapper for one-off scans (no caching)."""
    return Simulator(scene, sense_range).panoramic_scan(pose)


def check_success(pose: AgentPose, scene: Scene) -> bool:
    return Simulator(scene).check_success(pose)


def success_cells(scene: Scene) -> set[tuple[int, int]]:
    """All Floor cells from which the episode would count as a success."""
    out = set()
    for obj in scene.target_instances():
        ox, oy = obj.position
        radius_cells = int(math.ceil(SUCCESS_RADIUS_M / scene.cell_size))
        orr, occ_ = obj.cell
        for r in range(orr - radius_cells, orr + radius_cells + 1):
            for c in range(occ_ - radius_cells, occ_ + radius_cells + 1):
                if not scene.is_floor((r, c)):
                    continue
                if euclid(cell_center((r, c), scene.cell_size), obj.position) > SUCCESS_RADIUS_M:
                    continue
                if line_of_sight(scene, (r, c), obj.cell):
                    out.add((r, c))
    return out


def oracle_shortest_path(scene: Scene, start: tuple[int, int], target_label: str | None = None) -> float:
    """Geodesic meters from start to the nearest success cell, by BFS over Floor.

    Independent of the planner's A*. Returns math.inf when unreachable.
    """
    label = target_label if target_label is not None else scene.target_label
    if label != scene.target_label:
        scene = Scene(
            scene.width, scene.height, scene.cell_size, scene.cells, scene.objects,
            scene.zones_gt, scene.agent_start, label,
        )
    if not scene.target_instances():
        return math.inf
    goals = success_cells(scene)
    if not goals:
        return math.inf
    if start in goals:
        return 0.0
    seen = {start}
    dq = deque([(start, 0)])
    while dq:
        cell, dist = dq.popleft()
        r, c = cell
        for nxt in ((r + 1, c), (r - 1, c), (r, c + 1), (r, c - 1)):
            if nxt in seen or not scene.is_floor(nxt):
                continue
            if nxt in goals:
                return (dist + 1) * scene.cell_size
            seen.add(nxt)
            dq.append((nxt, dist + 1))
    return math.inf
