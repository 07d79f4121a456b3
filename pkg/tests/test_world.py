import json
import math
import random

import pytest

from zonenav import data
from zonenav.world import (
    MOVE_AHEAD,
    ROTATE_LEFT,
    ROTATE_RIGHT,
    STOP,
    AgentPose,
    GenSpec,
    Scene,
    SceneError,
    SceneSizingError,
    Simulator,
    bresenham_cells,
    cell_center,
    generate_scene,
    line_of_sight,
    load_scene,
    oracle_shortest_path,
    reachable_floor,
    scene_from_dict,
    step_agent,
)

from conftest import make_scene


def minimal_scene_doc():
    return {
        "width": 3,
        "height": 3,
        "cell_size": 0.25,
        "cells": ["...", "...", "..."],
        "objects": [{"label": "kettle", "x": 0.625, "y": 0.625, "size": 0.5}],
        "zones_gt": [],
        "agent_start": {"r": 0, "c": 0, "heading": 0},
        "target": "kettle",
    }


class TestLoadScene:
    def test_minimal_scene(self):
        scene = scene_from_dict(minimal_scene_doc())
        assert len(scene.objects) == 1
        assert len(scene.floor_cells()) == 9

    def test_agent_start_on_wall_rejected(self):
        doc = minimal_scene_doc()
        doc["cells"][0] = "#.."
        with pytest.raises(SceneError, match="agent_start not on Floor"):
            scene_from_dict(doc)

    def test_bundled_kitchen_small(self, kitchen_small):
        assert len(kitchen_small.zones_gt) == 2
        assert len(kitchen_small.objects) == 8
        assert kitchen_small.target_label == "kettle"

    def test_parse_error_carries_line(self, tmp_path):
        path = tmp_path / "bad.scene"
        path.write_text('{"width": 3,\n  broken')
        with pytest.raises(SceneError, match="line"):
            load_scene(path)

    def test_missing_target_rejected(self):
        doc = minimal_scene_doc()
        doc["target"] = "sofa"
        with pytest.raises(SceneError, match="no instance of target"):
            scene_from_dict(doc)

    def test_unreachable_object_rejected(self):
        doc = minimal_scene_doc()
        doc["cells"] = ["..#", "##.", "..."]
        doc["objects"] = [{"label": "kettle", "x": 0.625, "y": 0.625, "size": 0.5}]
        with pytest.raises(SceneError, match="unreachable"):
            scene_from_dict(doc)


class TestGenerateScene:
    SPEC = GenSpec(n_zones=4, objects_per_zone=5, grid_size=(40, 40))

    def test_deterministic(self):
        a = generate_scene(7, self.SPEC)
        b = generate_scene(7, self.SPEC)
        assert a.dumps() == b.dumps()

    def test_zone_and_object_counts(self):
        scene = generate_scene(3, self.SPEC)
        assert len(scene.zones_gt) == 4
        cell_sets = [z.cells for z in scene.zones_gt]
        for i in range(4):
            for j in range(i + 1, 4):
                assert not (cell_sets[i] & cell_sets[j])
        # one forced target instance beyond the per-zone sampling
        assert len(scene.objects) == 4 * 5 + 1

    def test_infeasible_spec(self):
        with pytest.raises(SceneSizingError):
            generate_scene(0, GenSpec(n_zones=100, objects_per_zone=1, grid_size=(10, 10)))

    def test_reachability_over_seeds(self):
        spec = GenSpec(n_zones=3, objects_per_zone=3, grid_size=(30, 30))
        for seed in range(100):
            scene = generate_scene(seed, spec)
            reach = reachable_floor(scene, scene.agent_start.cell)
            for obj in scene.objects:
                assert obj.cell in reach

    def test_start_never_in_success_region(self):
        spec = GenSpec(n_zones=4, objects_per_zone=8, grid_size=(40, 40))
        for seed in range(20):
            scene = generate_scene(seed, spec)
            assert not Simulator(scene).check_success(scene.agent_start)


class TestStepAgent:
    def test_move_ahead_into_free_cell(self):
        scene = make_scene(["...", "...", "..."], [("kettle", (2, 2), 0.5)], start=(1, 1))
        pose = scene.agent_start
        new, collided = step_agent(scene, pose, MOVE_AHEAD)
        assert not collided
        assert new.cell == (1, 2)
        assert math.isclose(new.position[0] - pose.position[0], 0.25)

    def test_collision_against_wall(self):
        scene = make_scene(["..#", "...", "..."], [("kettle", (2, 2), 0.5)], start=(0, 1))
        new, collided = step_agent(scene, scene.agent_start, MOVE_AHEAD)
        assert collided
        assert new == scene.agent_start

    def test_rotate_left(self):
        scene = make_scene(["..."], [("kettle", (0, 2), 0.5)], start=(0, 0))
        new, _ = step_agent(scene, scene.agent_start, ROTATE_LEFT)
        assert new.heading == 90
        new2, _ = step_agent(scene, new, ROTATE_RIGHT)
        assert new2.heading == 0

    def test_stop_is_identity(self):
        scene = make_scene(["..."], [("kettle", (0, 2), 0.5)], start=(0, 0))
        new, collided = step_agent(scene, scene.agent_start, STOP)
        assert new == scene.agent_start and not collided


class TestPanoramicScan:
    def test_occlusion(self):
        rows = ["....", ".#..", "...."]
        scene = make_scene(rows, [("kettle", (2, 2), 0.5)], start=(0, 0))
        # wall at (1,1) blocks the diagonal ray from (0,0) to (2,2)
        assert bresenham_cells((0, 0), (2, 2)) == [(0, 0), (1, 1), (2, 2)]
        dets = Simulator(scene).panoramic_scan(scene.agent_start)
        assert dets == ()

    def test_pixel_model_at_filter_boundary(self):
        # unit-size object at exactly 1.5 m: round(900 * 1.0 / 2.25) = 400
        rows = ["." * 8]
        scene = make_scene(rows, [("sofa", (0, 7), 1.0)], start=(0, 1))
        dets = Simulator(scene).panoramic_scan(scene.agent_start)
        assert len(dets) == 1
        assert math.isclose(dets[0].distance, 1.5)
        assert dets[0].apparent_pixels == 400

    def test_empty_scene(self):
        scene = make_scene(["...", "...", "..."], [], start=(0, 0), target="kettle")
        assert Simulator(scene).panoramic_scan(scene.agent_start) == ()

    def test_sorted_and_range_limited(self):
        rows = ["." * 30]
        objects = [("sofa", (0, 4), 1.0), ("bed", (0, 8), 1.0), ("lamp", (0, 29), 0.5)]
        scene = make_scene(rows, objects, start=(0, 0))
        dets = Simulator(scene).panoramic_scan(scene.agent_start)
        # lamp at 7.25 m is beyond the 5 m sensing range
        assert [d.label for d in dets] == ["sofa", "bed"]

    def test_detection_matches_bruteforce_ray_check(self):
        rng = random.Random(5)
        spec = GenSpec(n_zones=2, objects_per_zone=4, grid_size=(20, 20))
        for seed in range(10):
            scene = generate_scene(seed, spec)
            sim = Simulator(scene)
            cell = rng.choice(sorted(reachable_floor(scene, scene.agent_start.cell)))
            pose = AgentPose(cell_center(cell), 0)
            seen = {(d.label, d.world_position) for d in sim.panoramic_scan(pose)}
            for obj in scene.objects:
                visible = (
                    math.dist(pose.position, obj.position) <= 5.0
                    and line_of_sight(scene, cell, obj.cell)
                )
                assert ((obj.label, obj.position) in seen) == visible


class TestOracle:
    def test_zero_when_already_in_radius(self):
        scene = make_scene(["...."], [("kettle", (0, 2), 0.5)], start=(0, 1))
        assert oracle_shortest_path(scene, (0, 1)) == 0.0

    def test_corridor_length(self):
        # 10 cells of separation, 1.0 m success radius: (10 - 4) * 0.25 = 1.5
        rows = ["." * 11]
        scene = make_scene(rows, [("kettle", (0, 10), 0.5)], start=(0, 0))
        assert math.isclose(oracle_shortest_path(scene, (0, 0)), 1.5)

    def test_walled_off_target(self):
        rows = ["...#.", "...#.", "...#."]
        scene = make_scene(rows, [("kettle", (1, 4), 0.5)], start=(1, 1))
        assert math.isinf(oracle_shortest_path(scene, (1, 1)))

    def test_matches_exhaustive_dijkstra(self, kitchen_small):
        import heapq

        scene = kitchen_small
        from zonenav.world import success_cells

        goals = success_cells(scene)
        dist = {scene.agent_start.cell: 0.0}
        heap = [(0.0, scene.agent_start.cell)]
        best = math.inf
        while heap:
            d, cell = heapq.heappop(heap)
            if d > dist.get(cell, math.inf):
                continue
            if cell in goals:
                best = min(best, d)
            r, c = cell
            for nxt in ((r + 1, c), (r - 1, c), (r, c + 1), (r, c - 1)):
                if scene.is_floor(nxt) and d + 0.25 < dist.get(nxt, math.inf):
                    dist[nxt] = d + 0.25
                    heapq.heappush(heap, (d + 0.25, nxt))
        assert math.isclose(oracle_shortest_path(scene, scene.agent_start.cell), best)


class TestCheckSuccess:
    def test_close_with_line_of_sight(self):
        scene = make_scene(["....."], [("kettle", (0, 3), 0.5)], start=(0, 0))
        sim = Simulator(scene)
        assert sim.check_success(AgentPose(cell_center((0, 2)), 0))  # 0.25 m

    def test_close_behind_wall(self):
        rows = [".....", "..#..", "....."]
        # agent at (0,2), kettle at (2,2): 0.5 m apart but wall between
        scene = make_scene(rows, [("kettle", (2, 2), 0.5)], start=(0, 0))
        assert not Simulator(scene).check_success(AgentPose(cell_center((0, 2)), 0))

    def test_beyond_radius(self):
        scene = make_scene(["." * 8], [("kettle", (0, 6), 0.5)], start=(0, 0))
        sim = Simulator(scene)
        # (0,1) -> (0,6) is 1.25 m: outside the 1.0 m success radius
        assert not sim.check_success(AgentPose(cell_center((0, 1)), 0))
        assert sim.check_success(AgentPose(cell_center((0, 2)), 0))


class TestDeterminism:
    def test_identical_runs_identical_outputs(self, kitchen_small):
        scene = kitchen_small
        actions = [MOVE_AHEAD, ROTATE_LEFT, MOVE_AHEAD, MOVE_AHEAD, ROTATE_RIGHT, MOVE_AHEAD]

        def rollout():
            sim = Simulator(scene)
            pose = scene.agent_start
            out = []
            for act in actions:
                pose, collided = sim.step(pose, act)
                out.append((pose, collided, sim.panoramic_scan(pose)))
            return out

        assert rollout() == rollout()

    def test_scene_file_roundtrip(self, tmp_path):
        spec = GenSpec(n_zones=2, objects_per_zone=3, grid_size=(22, 22))
        scene = generate_scene(11, spec)
        path = tmp_path / "x.scene"
        from zonenav.world import save_scene

        save_scene(scene, path)
        again = load_scene(path)
        assert again.dumps() == scene.dumps()
