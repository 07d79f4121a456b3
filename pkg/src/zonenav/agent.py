"""Episode loop and finite state machine wiring perception, mapping, inference,
and planning into the map-based navigator."""

from __future__ import annotations

import enum
import json
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

from . import mapping
from .inference import UniformBackend, verbalize
from .mapping import (
    COMMIT_RADIUS_M,
    DEFAULT_PRIOR,
    ZONE_RADIUS_M,
    OccupancyGrid,
    ZoneGraph,
    assign_zone,
    detect_frontiers,
    geodesic_field,
    integrate_scan,
    node_distance_fields,
    update_node_semantics,
)
from .perception import (
    EmbeddingTable,
    ObjectRegistry,
    PerceptionConfig,
    filter_detection,
    is_verification_trigger,
    similarity,
)
from .planning import WeightParams, astar, generate_scan_points, select_frontier, tsp_order
from .world import (
    _HEADING_STEP,
    MOVE_AHEAD,
    ROTATE_LEFT,
    ROTATE_RIGHT,
    STOP,
    SUCCESS_RADIUS_M,
    AgentPose,
    Scene,
    Simulator,
    bresenham_cells,
    cell_center,
    euclid,
    oracle_shortest_path,
    world_to_cell,
)


class Mode(enum.Enum):
    LOCAL_EXPLORATION = "LocalExploration"
    INTER_ZONE_NAVIGATION = "InterZoneNavigation"
    OBJECT_VERIFICATION = "ObjectVerification"


POLICY_PROPOSED = "proposed"
POLICY_STANDARD_FRONTIER = "standard_frontier"


@dataclass
class EpisodeConfig:
    embeddings: EmbeddingTable
    backend: object | None = None  # anything with infer()/drain_events(); None -> uniform
    weights: WeightParams = field(default_factory=WeightParams)
    perception: PerceptionConfig = field(default_factory=PerceptionConfig)
    max_steps: int = 500
    delta_p: float = 0.2  # hysteresis margin on P_target for zone switching
    seed: int = 0
    policy: str = POLICY_PROPOSED
    use_inference: bool = True
    check_invariants: bool = False
    # fine-grained switches for ablation studies
    enable_beeline: bool = True
    enable_stickiness: bool = True
    enable_frontier_priors: bool = True

    def __post_init__(self):
        if self.max_steps <= 0:
            raise ValueError("max_steps must be positive")
        if not 0.0 <= self.delta_p <= 1.0:
            raise ValueError("delta_p must be in [0, 1]")
        if self.backend is None:
            self.backend = UniformBackend()


@dataclass
class EpisodeTrace:
    meta: dict
    steps: list[dict] = field(default_factory=list)
    end: dict = field(default_factory=dict)

    def save(self, path: str | Path) -> None:
        with Path(path).open("w") as fh:
            fh.write(json.dumps({"type": "meta", **self.meta}, sort_keys=True) + "\n")
            for rec in self.steps:
                fh.write(json.dumps({"type": "step", **rec}, sort_keys=True) + "\n")
            fh.write(json.dumps({"type": "end", **self.end}, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "EpisodeTrace":
        meta, steps, end = {}, [], {}
        for line in Path(path).read_text().splitlines():
            rec = json.loads(line)
            kind = rec.pop("type")
            if kind == "meta":
                meta = rec
            elif kind == "step":
                steps.append(rec)
            elif kind == "end":
                end = rec
        return cls(meta, steps, end)


@dataclass(frozen=True)
class EpisodeResult:
    """Outcome of one episode: S_i, P_i, L_i, and the action count."""

    success: bool
    path_length: float
    shortest_length: float
    steps: int


def _turn_action(heading: int, desired: int) -> str:
    diff = (desired - heading) % 360
    return ROTATE_RIGHT if diff == 270 else ROTATE_LEFT


def _heading_toward(src: tuple[int, int], dst: tuple[int, int]) -> int:
    dr, dc = dst[0] - src[0], dst[1] - src[1]
    if dc > 0:
        return 0
    if dc < 0:
        return 180
    if dr < 0:
        return 90
    return 270


class _PathFollower:
    """Steps a pose along a planned 4-connected cell path."""

    def __init__(self, cells: tuple[tuple[int, int], ...]):
        self.cells = cells
        self.idx = 0

    def done(self, pose: AgentPose) -> bool:
        return pose.cell == self.cells[-1]

    def next_action(self, pose: AgentPose) -> str | None:
        here = pose.cell
        if here == self.cells[-1]:
            return None
        while self.idx < len(self.cells) and self.cells[self.idx] == here:
            self.idx += 1
        if self.idx >= len(self.cells):
            return None
        nxt = self.cells[self.idx]
        desired = _heading_toward(here, nxt)
        if desired != pose.heading:
            return _turn_action(pose.heading, desired)
        return MOVE_AHEAD


def _brute_force_frontiers(grid: OccupancyGrid, min_size: int) -> list:
    """Definition-level frontier check used by the inline invariant audit."""
    cells = set()
    for r in range(grid.height):
        for c in range(grid.width):
            if grid.cells[r, c] != mapping.FREE:
                continue
            for nr, nc in ((r + 1, c), (r - 1, c), (r, c + 1), (r, c - 1)):
                if grid.in_bounds((nr, nc)) and grid.cells[nr, nc] == mapping.UNKNOWN:
                    cells.add((r, c))
                    break
    clusters = []
    remaining = set(cells)
    while remaining:
        seed = min(remaining)
        comp = {seed}
        stack = [seed]
        remaining.discard(seed)
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


class _EpisodeRunner:
    def __init__(self, scene: Scene, cfg: EpisodeConfig, sim: Simulator | None = None):
        self.scene = scene
        self.cfg = cfg
        self.sim = sim if sim is not None else Simulator(scene)
        self.grid = OccupancyGrid.for_scene(scene)
        self.graph = ZoneGraph()
        self.registry = ObjectRegistry(cfg.perception.merge_radius)
        self.pose = scene.agent_start
        self.target = scene.target_label
        self.mode = Mode.LOCAL_EXPLORATION
        self.blacklist: dict = {}  # detection key -> step when retry is allowed
        self.step_no = 0
        self.verify_goal: tuple[int, int] | None = None
        self.verify_key = None
        self.verify_pos: tuple[float, float] | None = None
        self.verify_tried: set = set()
        self.verify_tries = 0
        self.route: deque = deque()
        self.follower: _PathFollower | None = None
        self.target_frontier = None
        self.objective: tuple[int, int] | None = None
        self.need_replan = True
        self.traveled = 0.0
        self.violations: list[str] = []
        self.terminal: str | None = None
        self.trace_steps: list[dict] = []
        self._prev_unknown = None

    # -- sensing and map maintenance -------------------------------------

    def sense(self, step: int, lite: bool = False) -> dict:
        if lite:
            # standard-frontier cadence: no sensing while walking a leg
            return {
                "detections": (),
                "context_reset": False,
                "p_changed": False,
                "inference": None,
                "fallbacks": [],
            }
        detections = self.sim.panoramic_scan(self.pose)
        accepted = [d for d in detections if filter_detection(d, self.cfg.perception).accepted]
        integrate_scan(self.grid, self.pose, self.sim)
        new_records = []
        for d in accepted:
            is_new, rec = self.registry.register(d, step)
            if is_new:
                new_records.append(rec)
        labels = {d.label for d in accepted}
        context_reset = False
        p_changed = False
        inference_rec = None
        fallbacks: list[str] = []
        if labels:
            assignment = assign_zone(self.graph, self.pose.position, labels)
            for rec in new_records:
                rec.zone_id = assignment.zone_id
            context_reset = assignment.context_reset
            if context_reset and self.cfg.use_inference:
                node = self.graph.nodes[assignment.zone_id]
                if node.object_labels:
                    prompt = verbalize(node.object_labels, self.target)
                    zi = self.cfg.backend.infer(node.object_labels, self.target)
                    # commit-worthy news: a zone now clears the beeline bar
                    p_changed = (
                        zi.p_target != node.p_target
                        and zi.p_target > DEFAULT_PRIOR + self.cfg.delta_p
                    )
                    update_node_semantics(self.graph, node.id, zi.category, zi.p_target)
                    fallbacks = list(self.cfg.backend.drain_events())
                    inference_rec = {
                        "zone": node.id,
                        "category": zi.category,
                        "p_target": zi.p_target,
                        "centroid": [node.centroid[0], node.centroid[1]],
                        "prompt": prompt,
                    }
        if self.cfg.check_invariants:
            unknown = self.grid.unknown_count()
            if self._prev_unknown is not None and unknown > self._prev_unknown:
                self.violations.append(f"unknown count rose {self._prev_unknown}->{unknown}")
            self._prev_unknown = unknown
            if not self.grid.is_free(self.pose.cell):
                self.violations.append(f"agent cell {self.pose.cell} not Free after scan")
        return {
            "detections": detections,
            "context_reset": context_reset,
            "p_changed": p_changed,
            "inference": inference_rec,
            "fallbacks": fallbacks,
        }

    # -- verification -----------------------------------------------------

    def _detection_key(self, d):
        return (d.label, round(d.world_position[0], 4), round(d.world_position[1], 4))

    BLACKLIST_COOLDOWN = 40  # steps before a failed record may trigger again

    def _suppress(self, key) -> None:
        if key is not None:
            self.blacklist[key] = self.step_no + self.BLACKLIST_COOLDOWN

    def active_triggers(self, detections):
        out = []
        for d in detections:
            key = self._detection_key(d)
            if self.blacklist.get(key, -1) > self.step_no:
                continue
            if is_verification_trigger(d, self.target, self.cfg.embeddings, self.cfg.perception):
                out.append((d, key))
        return out

    def start_verification(self, detection, key) -> bool:
        """Plan an approach to a high-similarity detection. False when nowhere to go."""
        self.verify_key = key
        self.verify_pos = detection.world_position
        self.verify_tried = set()
        self.verify_tries = 0
        self.mode = Mode.OBJECT_VERIFICATION
        if not self._plan_approach():
            return False
        return True

    def _plan_approach(self) -> bool:
        """Route to the next untried approach cell; blacklists and reverts when
        out of options or attempts."""
        if self.verify_tries >= 3:
            self._suppress(self.verify_key)
            self._end_verification()
            return False
        goal = self._approach_cell(self.verify_pos, self.verify_tried)
        if goal is None:
            self._suppress(self.verify_key)
            self._end_verification()
            return False
        path = astar(self.grid, self.pose.cell, goal)
        if path is None:
            self._suppress(self.verify_key)
            self._end_verification()
            return False
        self.verify_goal = goal
        self.verify_tried.add(goal)
        self.verify_tries += 1
        self.follower = _PathFollower(path.cells)
        return True

    def _approach_cell(self, obj_pos, exclude: set) -> tuple[int, int] | None:
        obj_cell = world_to_cell(obj_pos, self.grid.cell_size)
        dist = geodesic_field(self.grid, self.pose.cell)
        radius = int(math.ceil(SUCCESS_RADIUS_M / self.grid.cell_size))
        candidates = []
        for r in range(obj_cell[0] - radius, obj_cell[0] + radius + 1):
            for c in range(obj_cell[1] - radius, obj_cell[1] + radius + 1):
                cell = (r, c)
                if cell in exclude or cell not in dist:
                    continue
                d_obj = euclid(cell_center(cell, self.grid.cell_size), obj_pos)
                if d_obj > SUCCESS_RADIUS_M:
                    continue
                # a sight line over known-Free cells cannot hide a wall, so
                # those candidates are guaranteed to verify
                known, optimistic = self._grid_los(cell, obj_cell)
                candidates.append((not known, not optimistic, d_obj, cell))
        if candidates:
            return min(candidates)[3]
        # nothing reachable inside the success radius: approach as close as we can
        reachable = [
            (euclid(cell_center(cell, self.grid.cell_size), obj_pos), cell)
            for cell in dist
            if cell not in exclude
        ]
        if not reachable:
            return None
        best = min(reachable)
        return best[1] if best[0] < euclid(self.pose.position, obj_pos) else None

    def _grid_los(self, a, b) -> tuple[bool, bool]:
        """(known line of sight, optimistic line of sight) between two cells."""
        known = True
        optimistic = True
        for cell in bresenham_cells(a, b)[1:-1]:
            state = self.grid.cells[cell] if self.grid.in_bounds(cell) else mapping.UNKNOWN
            if state == mapping.OCCUPIED:
                return False, False
            if state == mapping.UNKNOWN:
                known = False
        return known, optimistic

    def _end_verification(self):
        self.mode = Mode.LOCAL_EXPLORATION
        self.verify_goal = None
        self.verify_key = None
        self.verify_pos = None
        self.follower = None
        self.need_replan = True

    # -- exploration planning ----------------------------------------------

    def _commit_or_adopt(self, choice, mode: Mode, route_cells: list) -> None:
        """Keep the live route when a re-decision lands on the same objective;
        otherwise adopt the new one."""
        same = (
            self.objective is not None
            and self.mode == mode
            and (self.route or self.follower is not None)
            and euclid(
                cell_center(choice.centroid, self.grid.cell_size),
                cell_center(self.objective, self.grid.cell_size),
            )
            <= 1.0
        )
        self.need_replan = False
        self.target_frontier = choice.id
        if same:
            self.objective = choice.centroid
            return
        self.mode = mode
        self.objective = choice.centroid
        self.route = deque(route_cells)
        self.follower = None

    def plan_exploration(self) -> bool:
        """Pick the next frontier objective per the FSM rules. False when exhausted."""
        frontiers = detect_frontiers(self.grid)
        if self.cfg.check_invariants:
            self._audit_frontiers(frontiers)
        if not frontiers:
            # pinch points: 1-cell doorways leave frontier clusters below the
            # minimum size; pursue them rather than declaring exhaustion
            frontiers = detect_frontiers(self.grid, min_size=1)
        if not frontiers:
            self.terminal = "exploration_exhausted"
            return False
        if self.graph.nodes:
            fields = node_distance_fields(self.graph, self.grid)
            owners = {}
            for f in frontiers:
                best_id, best_d = None, math.inf
                for nid in sorted(self.graph.nodes):
                    d = fields[nid].get(f.centroid, math.inf)
                    if d < best_d:
                        best_id, best_d = nid, d
                owners[f.id] = (best_id, best_d)
        else:
            owners = {f.id: (None, math.inf) for f in frontiers}
        # a node's prior reaches nearby frontiers; beyond that the neutral
        # default applies, so negative evidence never repels escape routes
        priors = {
            fid: self.graph.nodes[nid].p_target
            if self.cfg.enable_frontier_priors and nid is not None and d <= ZONE_RADIUS_M
            else DEFAULT_PRIOR
            for fid, (nid, d) in owners.items()
        }

        if self.cfg.policy == POLICY_STANDARD_FRONTIER:
            choice = select_frontier(
                frontiers, self.pose.cell, self.graph, self.grid,
                WeightParams(alpha=self.cfg.weights.alpha, beta=0.0, d_min=self.cfg.weights.d_min),
                priors=priors,
            )
            if choice is None:
                self.terminal = "exploration_exhausted"
                return False
            self._commit_or_adopt(choice, Mode.LOCAL_EXPLORATION, [choice.centroid])
            return True

        # zone-level commitment works at sensing scale: a frontier "belongs"
        # to a node for FSM purposes when within COMMIT_RADIUS_M of it
        committed = {
            fid: (nid if nid is not None and d <= COMMIT_RADIUS_M else None)
            for fid, (nid, d) in owners.items()
        }
        current = self.graph.current_id
        own = [f for f in frontiers if current is not None and committed[f.id] == current]
        if current is not None and not own:
            self.graph.nodes[current].fully_explored = True

        if current is not None and self.cfg.enable_beeline:
            # beeline to an identified zone whose P_target clears the
            # hysteresis margin over the current zone and still owns frontiers
            cur_p = self.graph.nodes[current].p_target
            candidates: dict[int, tuple[float, tuple[int, int], object]] = {}
            dist = None
            for f in frontiers:
                b = committed[f.id]
                if b is None or b == current:
                    continue
                if self.graph.nodes[b].p_target <= max(cur_p, DEFAULT_PRIOR) + self.cfg.delta_p:
                    continue
                if dist is None:
                    dist = geodesic_field(self.grid, self.pose.cell)
                if f.centroid not in dist:
                    continue
                key = (dist[f.centroid], f.id, f)
                if b not in candidates or key[:2] < candidates[b][:2]:
                    candidates[b] = key
            if candidates:
                target_node = min(
                    candidates,
                    key=lambda nid: (
                        -self.graph.nodes[nid].p_target,
                        candidates[nid][0],
                        nid,
                    ),
                )
                choice = candidates[target_node][2]
                self._commit_or_adopt(choice, Mode.INTER_ZONE_NAVIGATION, [choice.centroid])
                return True

        # sweep the current zone while nothing speaks against it; a zone whose
        # inferred P_target fell below the neutral prior opens the pool to
        # every frontier so the agent can leave without exhausting it
        pool = list(frontiers)
        if (
            self.cfg.enable_stickiness
            and current is not None
            and own
            and self.graph.nodes[current].p_target >= DEFAULT_PRIOR
        ):
            pool = own
        choice = select_frontier(
            pool, self.pose.cell, self.graph, self.grid, self.cfg.weights, priors=priors
        )
        if choice is None and pool is not frontiers:
            choice = select_frontier(
                frontiers, self.pose.cell, self.graph, self.grid, self.cfg.weights,
                priors=priors,
            )
        if choice is None:
            self.terminal = "exploration_exhausted"
            return False
        # scan-route effort follows the zone's promise: thorough multi-point
        # scanning where the target may be, a plain transit visit where the
        # inferred probability says it is not
        if priors[choice.id] >= DEFAULT_PRIOR:
            points = generate_scan_points(choice, self.grid)
        else:
            points = []
        if points:
            scan_route = tsp_order(points, self.pose.cell, self.grid)
            route_cells = list(scan_route.points) if scan_route.points else [choice.centroid]
        else:
            route_cells = [choice.centroid]
        self._commit_or_adopt(choice, Mode.LOCAL_EXPLORATION, route_cells)
        return True

    def _audit_frontiers(self, frontiers):
        expect = _brute_force_frontiers(self.grid, mapping.MIN_FRONTIER_SIZE)
        got = sorted(f.cells for f in frontiers)
        if got != expect:
            self.violations.append("frontier clusters diverge from definition check")
        for f in frontiers:
            for cell in f.cells:
                if self.grid.cells[cell] == mapping.OCCUPIED:
                    self.violations.append(f"frontier cell {cell} is Occupied")

    def _objective_alive(self) -> bool:
        """True while some frontier still sits near the route's objective."""
        if self.objective is None:
            return False
        frontiers = detect_frontiers(self.grid)
        if not frontiers:
            frontiers = detect_frontiers(self.grid, min_size=1)
        obj_pos = cell_center(self.objective, self.grid.cell_size)
        return any(
            euclid(cell_center(f.centroid, self.grid.cell_size), obj_pos) <= 1.0
            for f in frontiers
        )

    def next_leg(self) -> bool:
        """Ensure a follower exists for the next route waypoint. False when the
        route is finished or a waypoint became unreachable."""
        while self.route:
            goal = self.route[0]
            if goal == self.pose.cell:
                self.route.popleft()
                continue
            path = astar(self.grid, self.pose.cell, goal)
            if path is None:
                self.route.popleft()
                continue
            self.follower = _PathFollower(path.cells)
            return True
        return False

    # -- main loop ---------------------------------------------------------

    def decide_action(self, detections) -> str | None:
        """FSM step: returns the primitive action for this tick, or None when
        the episode hit a terminal condition (recorded in self.terminal)."""
        triggers = self.active_triggers(detections)
        if self.mode != Mode.OBJECT_VERIFICATION and triggers:
            best = min(
                triggers,
                key=lambda t: (
                    -similarity(t[0].label, self.target, self.cfg.embeddings),
                    t[0].distance,
                    t[0].label,
                ),
            )
            self.start_verification(*best)

        if self.mode == Mode.OBJECT_VERIFICATION:
            if self.sim.check_success(self.pose):
                self.terminal = "success"
                return STOP
            if self.verify_goal is None or self.pose.cell == self.verify_goal:
                # arrived without success: try another vantage before giving up
                self._plan_approach()
            elif self.follower is None:
                path = astar(self.grid, self.pose.cell, self.verify_goal)
                if path is None:
                    self._plan_approach()
                else:
                    self.follower = _PathFollower(path.cells)

        for _ in range(6):  # bounded replan attempts within one tick
            if self.mode == Mode.OBJECT_VERIFICATION:
                if self.follower is None:
                    self._suppress(self.verify_key)
                    self._end_verification()
                    continue
                action = self.follower.next_action(self.pose)
                if action is not None:
                    return action
                # reached this vantage without success
                self._plan_approach()
                continue
            if self.need_replan and not self.plan_exploration():
                return None
            if self.follower is not None:
                action = self.follower.next_action(self.pose)
                if action is not None:
                    return action
                self.follower = None
                if self.route and self.route[0] == self.pose.cell:
                    self.route.popleft()
                if self.mode == Mode.INTER_ZONE_NAVIGATION:
                    self.mode = Mode.LOCAL_EXPLORATION
                    self.need_replan = True
                    continue
                if self.route and not self._objective_alive():
                    # the frontier this scan route serves is gone; move on
                    self.route.clear()
                    self.need_replan = True
                    continue
            if self.next_leg():
                continue
            self.need_replan = True
            if not self.plan_exploration():
                return None
            if not self.next_leg() and self.follower is None:
                # nothing actionable from the fresh plan either
                self.need_replan = True
        self.terminal = "planning_stalled"
        return None

    def apply(self, action: str) -> bool:
        new_pose, collided = self.sim.step(self.pose, action)
        moved = new_pose.cell != self.pose.cell
        if moved:
            self.traveled += self.grid.cell_size
        if collided:
            r, c = self.pose.cell
            dr, dc = _HEADING_STEP[self.pose.heading]
            blocked = (r + dr, c + dc)
            if self.grid.in_bounds(blocked):
                if self.cfg.check_invariants and self.grid.cells[blocked] == mapping.FREE:
                    self.violations.append(f"collision on grid-Free cell {blocked}")
                self.grid.mark_occupied(blocked)
            self.follower = None
            self.need_replan = True
        elif action == MOVE_AHEAD and self.cfg.check_invariants:
            if not self.grid.is_free(new_pose.cell):
                self.violations.append(f"moved onto non-Free cell {new_pose.cell}")
        self.pose = new_pose
        return collided

    def run(self) -> tuple[EpisodeResult, EpisodeTrace]:
        scene = self.scene
        shortest = oracle_shortest_path(scene, scene.agent_start.cell)
        meta = {
            "method": self.cfg.policy,
            "seed": self.cfg.seed,
            "target": self.target,
            "backend": getattr(self.cfg.backend, "name", "uniform"),
            "max_steps": self.cfg.max_steps,
            "scene": {"width": scene.width, "height": scene.height},
        }
        outcome = "budget_exhausted"
        for step in range(self.cfg.max_steps):
            self.step_no = step
            # the standard-frontier baseline senses at departure and arrival
            # only; the proposed loop integrates a panoramic scan every step
            lite = (
                self.cfg.policy == POLICY_STANDARD_FRONTIER
                and self.follower is not None
                and not self.follower.done(self.pose)
                and not self.need_replan
            )
            sensed = self.sense(step, lite=lite)
            if (
                sensed["p_changed"]
                and self.cfg.use_inference
                and self.mode != Mode.OBJECT_VERIFICATION
            ):
                # a zone's target probability moved: current objective may be stale
                self.need_replan = True
            action = self.decide_action(sensed["detections"])
            rec = {
                "step": step,
                "mode": self.mode.value,
                "pose": [self.pose.cell[0], self.pose.cell[1], self.pose.heading],
                "zone": self.graph.current_id,
                "context_reset": sensed["context_reset"],
                "frontier": list(self.target_frontier) if self.target_frontier else None,
                "inference": sensed["inference"],
                "fallbacks": sensed["fallbacks"],
                "unknown": self.grid.unknown_count(),
            }
            if action is None:
                outcome = self.terminal or "planning_stalled"
                rec["action"] = None
                rec["collided"] = False
                self.trace_steps.append(rec)
                break
            collided = self.apply(action)
            rec["action"] = action
            rec["collided"] = collided
            self.trace_steps.append(rec)
            if action == STOP:
                outcome = self.terminal or "stopped"
                break
        success = outcome == "success" and self.sim.check_success(self.pose)
        if self.cfg.check_invariants and self.graph.nodes:
            component = self.graph.connected_component(min(self.graph.nodes))
            if component != set(self.graph.nodes):
                self.violations.append("zone graph is not connected")
            for rec_obj in self.registry.records:
                if rec_obj.zone_id is not None:
                    node = self.graph.nodes.get(rec_obj.zone_id)
                    if node is None or rec_obj.label not in node.object_labels:
                        self.violations.append(
                            f"object record {rec_obj.label!r} detached from its zone"
                        )
        result = EpisodeResult(
            success=success,
            path_length=self.traveled,
            shortest_length=shortest,
            steps=len(self.trace_steps),
        )
        trace = EpisodeTrace(
            meta=meta,
            steps=self.trace_steps,
            end={
                "outcome": outcome,
                "success": success,
                "path_length": self.traveled,
                "shortest_length": shortest,
                "steps": len(self.trace_steps),
                "zone_graph": self.graph.to_json_dict(),
                "invariant_violations": self.violations,
            },
        )
        return result, trace


def run_episode(
    scene: Scene, cfg: EpisodeConfig, sim: Simulator | None = None
) -> tuple[EpisodeResult, EpisodeTrace]:
    """Run the map-based navigator on a scene until Stop, exhaustion, or budget."""
    return _EpisodeRunner(scene, cfg, sim).run()
