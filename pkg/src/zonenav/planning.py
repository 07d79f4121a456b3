"""Metric and combinatorial planning: grid A*, semantically weighted frontier
selection, scan-point generation, and shortest-visit-order scan routing."""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field

from .mapping import (
    DEFAULT_PRIOR,
    Frontier,
    OccupancyGrid,
    ZoneGraph,
    frontier_zone,
    geodesic_field,
    node_distance_fields,
)

HELD_KARP_MAX = 10
SCAN_RADIUS_M = 1.0  # r_scan
SCAN_POINT_MAX = 6  # k_max
SCAN_SPACING_M = 0.5


@dataclass(frozen=True)
class Path:
    cells: tuple[tuple[int, int], ...]
    length: float  # meters

    @property
    def goal(self) -> tuple[int, int]:
        return self.cells[-1]


@dataclass(frozen=True)
class WeightParams:
    alpha: float = 1.0
    beta: float = 0.5
    d_min: float = 0.25  # clamp for the 1/D singularity

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be nonnegative")
        if self.d_min <= 0:
            raise ValueError("d_min must be positive")


def astar(grid: OccupancyGrid, start: tuple[int, int], goal: tuple[int, int]) -> Path | None:
    """Minimal 4-connected path over Free cells, Manhattan heuristic.

    Tie-breaking is deterministic by (f, h, cell order). Returns None when no
    path exists.
    """
    if not grid.is_free(start) or not grid.is_free(goal):
        return None
    if start == goal:
        return Path((start,), 0.0)

    def h(cell: tuple[int, int]) -> int:
        return abs(cell[0] - goal[0]) + abs(cell[1] - goal[1])

    open_heap = [(h(start), h(start), start)]
    g_score = {start: 0}
    came: dict[tuple[int, int], tuple[int, int]] = {}
    closed: set[tuple[int, int]] = set()
    while open_heap:
        f, _, cell = heapq.heappop(open_heap)
        if cell == goal:
            cells = [cell]
            while cell in came:
                cell = came[cell]
                cells.append(cell)
            cells.reverse()
            return Path(tuple(cells), (len(cells) - 1) * grid.cell_size)
        if cell in closed:
            continue
        closed.add(cell)
        r, c = cell
        base = g_score[cell]
        for nxt in ((r + 1, c), (r - 1, c), (r, c + 1), (r, c - 1)):
            if not grid.is_free(nxt) or nxt in closed:
                continue
            tentative = base + 1
            if tentative < g_score.get(nxt, math.inf):
                g_score[nxt] = tentative
                came[nxt] = cell
                hn = h(nxt)
                heapq.heappush(open_heap, (tentative + hn, hn, nxt))
    return None


def weight_frontier(
    f: Frontier,
    agent: tuple[int, int],
    graph: ZoneGraph,
    grid: OccupancyGrid,
    params: WeightParams,
    geodesic_m: float | None = None,
    prior: float | None = None,
) -> float:
    """Semantic frontier weight: alpha / max(D, d_min) + beta * p_target.

    D is the geodesic distance in meters from the agent to the frontier
    centroid; unreachable frontiers score -inf. geodesic_m and prior can be
    passed by callers that already computed them.
    """
    if geodesic_m is None:
        path = astar(grid, agent, f.centroid)
        geodesic_m = path.length if path is not None else math.inf
    if math.isinf(geodesic_m):
        return -math.inf
    if prior is None:
        _, prior = frontier_zone(graph, f, grid)
    return params.alpha / max(geodesic_m, params.d_min) + params.beta * prior


def select_frontier(
    frontiers: list[Frontier],
    agent: tuple[int, int],
    graph: ZoneGraph,
    grid: OccupancyGrid,
    params: WeightParams,
    priors: dict[tuple[int, int], float] | None = None,
) -> Frontier | None:
    """Argmax of weight_frontier; ties prefer smaller D, then lower frontier id.

    Returns None when every frontier is unreachable (exploration exhausted).
    A single BFS flood from the agent supplies all geodesic distances, which
    matches the per-frontier A* lengths on a uniform-cost grid.
    """
    if not frontiers:
        return None
    dist = geodesic_field(grid, agent)
    if priors is None:
        fields = node_distance_fields(graph, grid) if graph.nodes else {}
        priors = {
            f.id: frontier_zone(graph, f, grid, fields)[1] if graph.nodes else DEFAULT_PRIOR
            for f in frontiers
        }
    best, best_key = None, None
    for f in frontiers:
        d = dist.get(f.centroid, math.inf)
        if math.isinf(d):
            continue
        w = weight_frontier(f, agent, graph, grid, params, geodesic_m=d, prior=priors[f.id])
        key = (-w, d, f.id)
        if best_key is None or key < best_key:
            best, best_key = f, key
    return best


def generate_scan_points(f: Frontier, grid: OccupancyGrid) -> list[tuple[int, int]]:
    """Scan points around a frontier: Free cells within SCAN_RADIUS_M geodesic
    of the centroid, greedily thinned to SCAN_POINT_MAX with SCAN_SPACING_M
    pairwise separation. The Free cell nearest the centroid always leads."""
    assert f.cells, "frontier must be nonempty"
    dist = geodesic_field(grid, f.centroid)
    if not dist:
        return [f.centroid] if grid.is_free(f.centroid) else []
    candidates = sorted(
        (d, cell) for cell, d in dist.items() if d <= SCAN_RADIUS_M
    )
    chosen: list[tuple[int, int]] = []
    step = grid.cell_size
    for _, cell in candidates:
        if len(chosen) >= SCAN_POINT_MAX:
            break
        if all(
            math.hypot(cell[0] - p[0], cell[1] - p[1]) * step >= SCAN_SPACING_M for p in chosen
        ):
            chosen.append(cell)
    return chosen


@dataclass(frozen=True)
class ScanRoute:
    points: tuple[tuple[int, int], ...]
    total_length: float
    optimal: bool
    dropped: tuple[tuple[int, int], ...] = ()


def _pairwise_distances(
    grid: OccupancyGrid, sources: list[tuple[int, int]]
) -> dict[tuple[int, int], dict[tuple[int, int], float]]:
    return {src: geodesic_field(grid, src) for src in sources}


def tsp_order(
    points: list[tuple[int, int]], start: tuple[int, int], grid: OccupancyGrid
) -> ScanRoute:
    """Open-path visiting order from start through all points, minimizing the
    summed leg lengths under grid geodesics.

    Exact Held-Karp for up to HELD_KARP_MAX points; nearest-neighbor seeded
    2-opt beyond. Unreachable points are dropped and reported.
    """
    assert points, "need at least one point"
    fields = _pairwise_distances(grid, [start] + list(points))
    reachable = [p for p in points if not math.isinf(fields[start].get(p, math.inf))]
    dropped = tuple(p for p in points if p not in reachable)
    if not reachable:
        return ScanRoute((), 0.0, True, dropped)

    def d(a: tuple[int, int], b: tuple[int, int]) -> float:
        return fields[a].get(b, math.inf)

    if len(reachable) == 1:
        only = reachable[0]
        return ScanRoute((only,), d(start, only), True, dropped)

    if len(reachable) <= HELD_KARP_MAX:
        order, total = _held_karp(reachable, start, d)
        return ScanRoute(tuple(order), total, True, dropped)
    order, total = _two_opt(reachable, start, d)
    return ScanRoute(tuple(order), total, False, dropped)


def _held_karp(points, start, d):
    n = len(points)
    full = (1 << n) - 1
    # dp[(mask, j)] = (cost, prev_j) for the best start->...->points[j] path over mask
    dp: dict[tuple[int, int], tuple[float, int]] = {}
    for j in range(n):
        dp[(1 << j, j)] = (d(start, points[j]), -1)
    for mask in range(1, full + 1):
        for j in range(n):
            if not mask & (1 << j):
                continue
            entry = dp.get((mask, j))
            if entry is None:
                continue
            cost_j = entry[0]
            for k in range(n):
                if mask & (1 << k):
                    continue
                nmask = mask | (1 << k)
                cand = cost_j + d(points[j], points[k])
                if cand < dp.get((nmask, k), (math.inf, -1))[0]:
                    dp[(nmask, k)] = (cand, j)
    end, (total, _) = min(
        ((j, dp[(full, j)]) for j in range(n)), key=lambda item: (item[1][0], item[0])
    )
    order_idx = [end]
    mask = full
    while True:
        _, prev = dp[(mask, order_idx[-1])]
        if prev == -1:
            break
        mask ^= 1 << order_idx[-1]
        order_idx.append(prev)
    order_idx.reverse()
    return [points[i] for i in order_idx], total


def nearest_neighbor_order(points, start, d):
    remaining = list(points)
    order = []
    cur = start
    total = 0.0
    while remaining:
        nxt = min(remaining, key=lambda p: (d(cur, p), p))
        total += d(cur, nxt)
        order.append(nxt)
        remaining.remove(nxt)
        cur = nxt
    return order, total


def _route_cost(order, start, d):
    total = d(start, order[0])
    for a, b in zip(order, order[1:]):
        total += d(a, b)
    return total


def _two_opt(points, start, d):
    order, _ = nearest_neighbor_order(points, start, d)
    improved = True
    while improved:
        improved = False
        best_cost = _route_cost(order, start, d)
        for i in range(len(order) - 1):
            for j in range(i + 1, len(order)):
                cand = order[:i] + order[i : j + 1][::-1] + order[j + 1 :]
                cost = _route_cost(cand, start, d)
                if cost < best_cost - 1e-12:
                    order, best_cost = cand, cost
                    improved = True
    return order, _route_cost(order, start, d)


def brute_force_order(points, start, d):
    """Exhaustive-permutation optimum; test oracle for small instances."""
    best_order, best_cost = None, math.inf
    for perm in itertools.permutations(points):
        cost = _route_cost(list(perm), start, d)
        if cost < best_cost:
            best_order, best_cost = list(perm), cost
    return best_order, best_cost
