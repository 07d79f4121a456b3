import json
import random

import numpy as np
import pytest

from zonenav.mapping import (
    FREE,
    MIN_FRONTIER_SIZE,
    OCCUPIED,
    UNKNOWN,
    Frontier,
    OccupancyGrid,
    ZoneGraph,
    assign_zone,
    detect_frontiers,
    export_snapshot,
    frontier_mask,
    frontier_zone,
    geodesic_field,
    integrate_scan,
    update_node_semantics,
)
from zonenav.world import AgentPose, Simulator, cell_center

from conftest import make_scene


def ring_room():
    """7x7 grid: wall ring around a 5x5 floor interior."""
    rows = ["#######"] + ["#.....#"] * 5 + ["#######"]
    return make_scene(rows, [("kettle", (3, 3), 0.5)], start=(3, 3))


def brute_force_frontiers(grid, min_size=MIN_FRONTIER_SIZE):
    cells = set()
    for r in range(grid.height):
        for c in range(grid.width):
            if grid.cells[r, c] != FREE:
                continue
            for nr, nc in ((r + 1, c), (r - 1, c), (r, c + 1), (r, c - 1)):
                if grid.in_bounds((nr, nc)) and grid.cells[nr, nc] == UNKNOWN:
                    cells.add((r, c))
                    break
    clusters = []
    remaining = set(cells)
    while remaining:
        seed = remaining.pop()
        comp = {seed}
        stack = [seed]
        while stack:
            r, c = stack.pop()
            for nr in (r - 1, r, r + 1):
                for nc in (c - 1, c, c + 1):
                    if (nr, nc) in remaining:
                        remaining.discard((nr, nc))
                        comp.add((nr, nc))
                        stack.append((nr, nc))
        if len(comp) >= min_size:
            clusters.append(tuple(sorted(comp)))
    return sorted(clusters)


def random_grid(rng, w=20, h=20):
    grid = OccupancyGrid(w, h)
    states = rng.choices([UNKNOWN, FREE, OCCUPIED], weights=[4, 4, 2], k=w * h)
    grid.cells = np.array(states, dtype=np.uint8).reshape(h, w)
    return grid


class TestIntegrateScan:
    def test_ring_room_known_after_one_scan(self):
        scene = ring_room()
        sim = Simulator(scene)
        grid = OccupancyGrid.for_scene(scene)
        integrate_scan(grid, scene.agent_start, sim)
        # all 25 interior cells Free, the wall ring Occupied except the four
        # corners, which hide behind zero-width diagonal gaps
        assert int((grid.cells == FREE).sum()) == 25
        assert int((grid.cells == OCCUPIED).sum()) == 20
        assert {tuple(c) for c in np.argwhere(grid.cells == UNKNOWN)} == {
            (0, 0), (0, 6), (6, 0), (6, 6),
        }

    def test_wall_blocks_beyond(self):
        rows = ["#####", "#.#.#", "#####"]
        scene = make_scene(rows, [("kettle", (1, 1), 0.5)], start=(1, 1))
        grid = OccupancyGrid.for_scene(scene)
        integrate_scan(grid, scene.agent_start, Simulator(scene))
        assert grid.cells[1, 2] == OCCUPIED
        assert grid.cells[1, 3] == UNKNOWN  # behind the wall

    def test_idempotent(self):
        scene = ring_room()
        sim = Simulator(scene)
        grid = OccupancyGrid.for_scene(scene)
        integrate_scan(grid, scene.agent_start, sim)
        before = grid.cells.copy()
        integrate_scan(grid, scene.agent_start, sim)
        assert (grid.cells == before).all()

    def test_monotonic_unknown_decrease(self, kitchen_small):
        sim = Simulator(kitchen_small)
        grid = OccupancyGrid.for_scene(kitchen_small)
        prev = grid.unknown_count()
        for cell in sorted(kitchen_small.floor_cells())[::9]:
            integrate_scan(grid, AgentPose(cell_center(cell), 0), sim)
            now = grid.unknown_count()
            assert now <= prev
            prev = now


class TestDetectFrontiers:
    def test_fully_known_grid(self):
        grid = OccupancyGrid(5, 5)
        grid.cells[:] = FREE
        assert detect_frontiers(grid) == []

    def test_single_cell_below_min_size(self):
        grid = OccupancyGrid(5, 5)
        grid.cells[2, 2] = FREE
        assert frontier_mask(grid)[2, 2]
        assert detect_frontiers(grid) == []

    def test_corridor_two_open_ends(self):
        grid = OccupancyGrid(11, 7)
        grid.cells[2:5, 4:7] = FREE  # known block in the middle
        grid.cells[1, 4:7] = OCCUPIED
        grid.cells[5, 4:7] = OCCUPIED
        fronts = detect_frontiers(grid)
        assert len(fronts) == 2
        assert {f.id for f in fronts} == {(2, 4), (2, 6)}

    def test_matches_brute_force_on_random_grids(self):
        rng = random.Random(42)
        for _ in range(100):
            grid = random_grid(rng)
            got = sorted(f.cells for f in detect_frontiers(grid))
            assert got == brute_force_frontiers(grid)

    def test_frontier_cells_never_occupied(self):
        rng = random.Random(7)
        for _ in range(20):
            grid = random_grid(rng)
            for f in detect_frontiers(grid):
                for cell in f.cells:
                    assert grid.cells[cell] == FREE

    def test_centroid_is_member_cell(self):
        rng = random.Random(3)
        for _ in range(20):
            grid = random_grid(rng)
            for f in detect_frontiers(grid):
                assert f.centroid in f.cells
                assert f.id == min(f.cells)


class TestAssignZone:
    def test_first_observation_creates_node_zero(self):
        graph = ZoneGraph()
        a = assign_zone(graph, (1.0, 1.0), {"stove"})
        assert a.zone_id == 0 and a.is_new and a.context_reset

    def test_repeat_observation_is_quiet(self):
        graph = ZoneGraph()
        assign_zone(graph, (1.0, 1.0), {"stove"})
        a = assign_zone(graph, (1.0, 1.0), {"stove"})
        assert a.zone_id == 0 and not a.is_new and not a.context_reset

    def test_disjoint_and_distant_spawns_node_with_edge(self):
        graph = ZoneGraph()
        assign_zone(graph, (1.0, 1.0), {"stove", "kettle"})
        a = assign_zone(graph, (6.0, 1.0), {"bed", "pillow"})
        assert a.zone_id == 1 and a.is_new and a.context_reset
        assert (0, 1) in graph.edges

    def test_jaccard_merge_beats_distance(self):
        graph = ZoneGraph()
        assign_zone(graph, (1.0, 1.0), {"stove", "kettle", "pan"})
        # far away but sharing most labels: merges by similarity
        a = assign_zone(graph, (6.0, 6.0), {"stove", "kettle"})
        assert a.zone_id == 0 and not a.is_new
        assert a.context_reset is False  # no new labels

    def test_new_label_on_merge_resets_context(self):
        graph = ZoneGraph()
        assign_zone(graph, (1.0, 1.0), {"stove"})
        a = assign_zone(graph, (1.2, 1.0), {"stove", "sink"})
        assert not a.is_new and a.context_reset

    def test_centroid_running_mean(self):
        graph = ZoneGraph()
        assign_zone(graph, (1.0, 1.0), {"stove"})
        assign_zone(graph, (2.0, 1.0), {"stove"})
        assert graph.nodes[0].centroid == (1.5, 1.0)


class TestFrontierZone:
    def grid_and_graph(self):
        grid = OccupancyGrid(40, 3)
        grid.cells[:] = FREE
        graph = ZoneGraph()
        assign_zone(graph, cell_center((1, 2)), {"stove"})
        assign_zone(graph, cell_center((1, 30)), {"bed"})
        return grid, graph

    def test_single_node_owns_all(self):
        grid = OccupancyGrid(10, 3)
        grid.cells[:] = FREE
        graph = ZoneGraph()
        assign_zone(graph, cell_center((1, 1)), {"stove"})
        f = Frontier(cells=((1, 4),), centroid=(1, 4), id=(1, 4))
        nid, prior = frontier_zone(graph, f, grid)
        assert nid == 0

    def test_nearest_node_wins(self):
        grid, graph = self.grid_and_graph()
        f = Frontier(cells=((1, 5),), centroid=(1, 5), id=(1, 5))
        nid, prior = frontier_zone(graph, f, grid)
        assert nid == 0
        f2 = Frontier(cells=((1, 28),), centroid=(1, 28), id=(1, 28))
        assert frontier_zone(graph, f2, grid)[0] == 1

    def test_far_frontier_keeps_default_prior(self):
        grid, graph = self.grid_and_graph()
        update_node_semantics(graph, 0, "Kitchen", 0.9)
        near = Frontier(cells=((1, 4),), centroid=(1, 4), id=(1, 4))
        far = Frontier(cells=((1, 16),), centroid=(1, 16), id=(1, 16))
        assert frontier_zone(graph, near, grid) == (0, 0.9)
        # (1,16) is 3.5 m from node 0 and 3.5 m from node 1: beyond r_zone
        assert frontier_zone(graph, far, grid)[1] == 0.5


class TestUpdateNodeSemantics:
    def test_sets_both_fields(self):
        graph = ZoneGraph()
        assign_zone(graph, (1.0, 1.0), {"stove"})
        update_node_semantics(graph, 0, "Kitchen Area", 0.9)
        assert graph.nodes[0].zone_category == "Kitchen Area"
        assert graph.nodes[0].p_target == 0.9

    def test_latest_wins(self):
        graph = ZoneGraph()
        assign_zone(graph, (1.0, 1.0), {"stove"})
        update_node_semantics(graph, 0, "Kitchen", 0.9)
        update_node_semantics(graph, 0, "Pantry", 0.4)
        assert (graph.nodes[0].zone_category, graph.nodes[0].p_target) == ("Pantry", 0.4)

    def test_out_of_range_rejected(self):
        graph = ZoneGraph()
        assign_zone(graph, (1.0, 1.0), {"stove"})
        update_node_semantics(graph, 0, "Kitchen", 0.9)
        with pytest.raises(ValueError):
            update_node_semantics(graph, 0, "Kitchen", 1.2)
        assert graph.nodes[0].p_target == 0.9  # unchanged

    def test_unknown_zone_id(self):
        graph = ZoneGraph()
        with pytest.raises(KeyError):
            update_node_semantics(graph, 5, "Kitchen", 0.5)


class TestExports:
    def test_snapshot_characters(self):
        grid = OccupancyGrid(4, 3)
        grid.cells[1, 1] = FREE
        grid.cells[1, 2] = OCCUPIED
        graph = ZoneGraph()
        ascii_map, graph_json = export_snapshot(grid, graph, detect_frontiers(grid), (1, 1))
        assert set(ascii_map) <= set("?.#FA\n")
        assert json.loads(graph_json) == {"nodes": [], "edges": []}

    def test_graph_dump_shape(self):
        graph = ZoneGraph()
        assign_zone(graph, (1.0, 1.0), {"stove"})
        assign_zone(graph, (9.0, 1.0), {"bed"})
        update_node_semantics(graph, 0, "Kitchen", 0.8)
        doc = graph.to_json_dict()
        assert [n["id"] for n in doc["nodes"]] == [0, 1]
        assert doc["edges"] == [[0, 1]]
        assert doc["nodes"][0]["category"] == "Kitchen"
