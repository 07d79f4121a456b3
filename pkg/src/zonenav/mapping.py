"""Hybrid map: metric occupancy grid with frontiers, plus the semantic zone graph."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .world import AgentPose, Scene, Simulator, cell_center, euclid, world_to_cell

UNKNOWN = 0
FREE = 1
OCCUPIED = 2

MIN_FRONTIER_SIZE = 3
JACCARD_MERGE = 0.2  # theta_zone
ZONE_RADIUS_M = 2.0  # r_zone: observation-merge radius and prior reach
# Commitment reach of a positively identified zone: object registrations
# happen within the detection-distance limit while frontiers sit at the
# sensing horizon, so zone-level commitment must carry to sense range to
# cover the zone's own frontiers.
COMMIT_RADIUS_M = 5.0
DEFAULT_PRIOR = 0.5


class OccupancyGrid:
    """Per-cell Unknown/Free/Occupied belief in the scene's frame."""

    def __init__(self, width: int, height: int, cell_size: float = 0.25):
        self.width = width
        self.height = height
        self.cell_size = cell_size
        self.cells = np.full((height, width), UNKNOWN, dtype=np.uint8)

    @classmethod
    def for_scene(cls, scene: Scene) -> "OccupancyGrid":
        return cls(scene.width, scene.height, scene.cell_size)

    def in_bounds(self, cell: tuple[int, int]) -> bool:
        r, c = cell
        return 0 <= r < self.height and 0 <= c < self.width

    def state(self, cell: tuple[int, int]) -> int:
        return int(self.cells[cell])

    def is_free(self, cell: tuple[int, int]) -> bool:
        return self.in_bounds(cell) and self.cells[cell] == FREE

    def mark_free(self, cell: tuple[int, int]) -> None:
        if self.cells[cell] == UNKNOWN:
            self.cells[cell] = FREE

    def mark_occupied(self, cell: tuple[int, int]) -> None:
        self.cells[cell] = OCCUPIED

    def unknown_count(self) -> int:
        return int((self.cells == UNKNOWN).sum())

    def copy(self) -> "OccupancyGrid":
        g = OccupancyGrid(self.width, self.height, self.cell_size)
        g.cells = self.cells.copy()
        return g

    def to_ascii(
        self,
        frontiers: list["Frontier"] | None = None,
        agent: tuple[int, int] | None = None,
    ) -> str:
        chars = np.full((self.height, self.width), "?", dtype="<U1")
        chars[self.cells == FREE] = "."
        chars[self.cells == OCCUPIED] = "#"
        for f in frontiers or []:
            for r, c in f.cells:
                chars[r, c] = "F"
        if agent is not None:
            chars[agent] = "A"
        return "\n".join("".join(row) for row in chars)


def integrate_scan(grid: OccupancyGrid, pose: AgentPose, sim: Simulator) -> OccupancyGrid:
    """Fold one 360-degree raycast into the grid. Never un-knows a cell."""
    free_idx, occ_idx = sim.visible_cells(pose.cell)
    flat = grid.cells.reshape(-1)
    unknown = flat[free_idx] == UNKNOWN
    flat[free_idx[unknown]] = FREE
    flat[occ_idx] = OCCUPIED
    grid.mark_free(pose.cell)
    return grid


@dataclass(frozen=True)
class Frontier:
    """8-connected cluster of Free cells bordering Unknown space."""

    cells: tuple[tuple[int, int], ...]
    centroid: tuple[int, int]
    id: tuple[int, int]  # lexicographically smallest member cell


def frontier_mask(grid: OccupancyGrid) -> np.ndarray:
    """Boolean mask of Free cells with at least one Unknown 4-neighbor."""
    free = grid.cells == FREE
    unknown = grid.cells == UNKNOWN
    near_unknown = np.zeros_like(unknown)
    near_unknown[1:, :] |= unknown[:-1, :]
    near_unknown[:-1, :] |= unknown[1:, :]
    near_unknown[:, 1:] |= unknown[:, :-1]
    near_unknown[:, :-1] |= unknown[:, 1:]
    return free & near_unknown


def detect_frontiers(grid: OccupancyGrid, min_size: int = MIN_FRONTIER_SIZE) -> list[Frontier]:
    """All maximal 8-connected frontier clusters of at least min_size cells, sorted by id."""
    mask = frontier_mask(grid)
    labeled, n = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    out = []
    for i in range(1, n + 1):
        member = np.argwhere(labeled == i)
        if len(member) < min_size:
            continue
        cells = tuple(sorted((int(r), int(c)) for r, c in member))
        mean_r = sum(r for r, _ in cells) / len(cells)
        mean_c = sum(c for _, c in cells) / len(cells)
        centroid = min(cells, key=lambda rc: ((rc[0] - mean_r) ** 2 + (rc[1] - mean_c) ** 2, rc))
        out.append(Frontier(cells=cells, centroid=centroid, id=cells[0]))
    out.sort(key=lambda f: f.id)
    return out


@dataclass
class ZoneNode:
    id: int
    centroid: tuple[float, float]  # running mean of observation positions, meters
    object_labels: set[str] = field(default_factory=set)
    zone_category: str | None = None
    p_target: float = DEFAULT_PRIOR
    fully_explored: bool = False
    n_observations: int = 0


@dataclass(frozen=True)
class ZoneAssignment:
    zone_id: int
    is_new: bool
    context_reset: bool


class ZoneGraph:
    """Topological layer: object-defined zone nodes plus traversal edges."""

    def __init__(self):
        self.nodes: dict[int, ZoneNode] = {}
        self.edges: set[tuple[int, int]] = set()
        self.current_id: int | None = None
        self._next_id = 0

    def node(self, zone_id: int) -> ZoneNode:
        return self.nodes[zone_id]

    def current(self) -> ZoneNode | None:
        return None if self.current_id is None else self.nodes[self.current_id]

    def add_edge(self, a: int, b: int) -> None:
        if a != b:
            self.edges.add((min(a, b), max(a, b)))

    def connected_component(self, start: int) -> set[int]:
        seen = {start}
        stack = [start]
        while stack:
            nid = stack.pop()
            for a, b in self.edges:
                for other in ((b, a) if nid == a else (a, b) if nid == b else ()):
                    if other not in seen:
                        seen.add(other)
                        stack.append(other)
        return seen

    def to_json_dict(self) -> dict:
        return {
            "nodes": [
                {
                    "id": n.id,
                    "centroid": [n.centroid[0], n.centroid[1]],
                    "labels": sorted(n.object_labels),
                    "category": n.zone_category,
                    "p_target": n.p_target,
                }
                for n in sorted(self.nodes.values(), key=lambda n: n.id)
            ],
            "edges": sorted([a, b] for a, b in self.edges),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)


def _jaccard(a: set[str], b: set[str]) -> float:
    if not a and not b:
        return 1.0
    union = a | b
    return len(a & b) / len(union)


def assign_zone(graph: ZoneGraph, position: tuple[float, float], labels: set[str]) -> ZoneAssignment:
    """Merge an observation into the best-matching zone node, or spawn a new one.

    The observation joins the highest-Jaccard node when similarity reaches
    JACCARD_MERGE or that node's centroid lies within ZONE_RADIUS_M; otherwise
    a new node is created and linked to the previously current node.
    context_reset reports a zone change or new label evidence.
    """
    labels = set(labels)
    prev_id = graph.current_id
    best: ZoneNode | None = None
    if graph.nodes:
        best = min(
            graph.nodes.values(),
            key=lambda n: (-_jaccard(labels, n.object_labels), euclid(position, n.centroid), n.id),
        )
    if best is not None and (
        _jaccard(labels, best.object_labels) >= JACCARD_MERGE
        or euclid(position, best.centroid) <= ZONE_RADIUS_M
    ):
        new_labels = labels - best.object_labels
        best.object_labels |= labels
        n = best.n_observations
        best.centroid = (
            (best.centroid[0] * n + position[0]) / (n + 1),
            (best.centroid[1] * n + position[1]) / (n + 1),
        )
        best.n_observations = n + 1
        graph.current_id = best.id
        if prev_id is not None and prev_id != best.id:
            graph.add_edge(prev_id, best.id)
        reset = (prev_id != best.id) or bool(new_labels)
        return ZoneAssignment(best.id, is_new=False, context_reset=reset)

    node = ZoneNode(graph._next_id, position, set(labels), n_observations=1)
    graph._next_id += 1
    graph.nodes[node.id] = node
    if prev_id is not None:
        graph.add_edge(prev_id, node.id)
    graph.current_id = node.id
    return ZoneAssignment(node.id, is_new=True, context_reset=True)


def update_node_semantics(graph: ZoneGraph, zone_id: int, category: str, p_target: float) -> None:
    """Latest-wins overwrite of a node's inferred category and target probability."""
    if zone_id not in graph.nodes:
        raise KeyError(f"unknown zone id {zone_id}")
    if not 0.0 <= p_target <= 1.0:
        raise ValueError(f"p_target {p_target} outside [0, 1]")
    node = graph.nodes[zone_id]
    node.zone_category = category
    node.p_target = p_target


def geodesic_field(grid: OccupancyGrid, start: tuple[int, int]) -> dict[tuple[int, int], float]:
    """BFS meters from start to every reachable Free cell (uniform step cost)."""
    if not grid.is_free(start):
        return {}
    from collections import deque

    dist = {start: 0.0}
    dq = deque([start])
    step = grid.cell_size
    while dq:
        r, c = dq.popleft()
        base = dist[(r, c)]
        for nxt in ((r + 1, c), (r - 1, c), (r, c + 1), (r, c - 1)):
            if nxt not in dist and grid.is_free(nxt):
                dist[nxt] = base + step
                dq.append(nxt)
    return dist


def snap_to_free(grid: OccupancyGrid, cell: tuple[int, int], max_radius: int = 8) -> tuple[int, int] | None:
    """Nearest Free cell to `cell` within a Chebyshev radius, ties by cell order."""
    if grid.is_free(cell):
        return cell
    r0, c0 = cell
    for radius in range(1, max_radius + 1):
        ring = []
        for r in range(r0 - radius, r0 + radius + 1):
            for c in range(c0 - radius, c0 + radius + 1):
                if max(abs(r - r0), abs(c - c0)) == radius and grid.is_free((r, c)):
                    ring.append((r, c))
        if ring:
            return min(ring, key=lambda rc: ((rc[0] - r0) ** 2 + (rc[1] - c0) ** 2, rc))
    return None


def node_distance_fields(
    graph: ZoneGraph, grid: OccupancyGrid
) -> dict[int, dict[tuple[int, int], float]]:
    """Geodesic field from each node centroid (snapped to Free space)."""
    fields = {}
    for nid, node in graph.nodes.items():
        cell = snap_to_free(grid, world_to_cell(node.centroid, grid.cell_size))
        fields[nid] = geodesic_field(grid, cell) if cell is not None else {}
    return fields


def frontier_zone(
    graph: ZoneGraph,
    f: Frontier,
    grid: OccupancyGrid,
    fields: dict[int, dict[tuple[int, int], float]] | None = None,
) -> tuple[int | None, float]:
    """Owning node of a frontier and the prior to use for it.

    Ownership goes to the node whose centroid is geodesically nearest to the
    frontier centroid (ties by lowest id). Frontiers farther than
    ZONE_RADIUS_M from every centroid keep the neutral DEFAULT_PRIOR;
    unreachable or empty graphs yield (None, DEFAULT_PRIOR).
    """
    if not graph.nodes:
        return None, DEFAULT_PRIOR
    if fields is None:
        fields = node_distance_fields(graph, grid)
    best_id, best_d = None, float("inf")
    for nid in sorted(graph.nodes):
        d = fields[nid].get(f.centroid, float("inf"))
        if d < best_d:
            best_id, best_d = nid, d
    if best_id is None:
        return None, DEFAULT_PRIOR
    if best_d > ZONE_RADIUS_M:
        return best_id, DEFAULT_PRIOR
    return best_id, graph.nodes[best_id].p_target


def export_snapshot(
    grid: OccupancyGrid,
    graph: ZoneGraph,
    frontiers: list[Frontier],
    agent: tuple[int, int],
) -> tuple[str, str]:
    """(ascii map, zone-graph JSON) pair for the bench renderer."""
    return grid.to_ascii(frontiers, agent), graph.dumps()
