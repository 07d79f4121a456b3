"""zonenav: zone-aware object-goal navigation on occupancy grids.

A deterministic grid-world engine for object-goal search: semantic scoring of
detections, hybrid occupancy-grid/zone-graph mapping, pluggable zone-category
inference, semantically weighted frontier exploration with scan-route
optimization, and a benchmark harness with SR/SPL/TD metrics.
"""

from .agent import EpisodeConfig, EpisodeResult, EpisodeTrace, Mode, run_episode
from .bench import (
    BenchConfig,
    BenchReport,
    METHODS,
    compute_spl,
    compute_sr,
    compute_td,
    default_suite_scenes,
    run_baseline,
    run_suite,
)
from .inference import (
    PriorsTable,
    RemoteBackend,
    TableBackend,
    UniformBackend,
    ZoneInference,
    table_infer,
    verbalize,
)
from .mapping import (
    Frontier,
    OccupancyGrid,
    ZoneGraph,
    ZoneNode,
    assign_zone,
    detect_frontiers,
    frontier_zone,
    integrate_scan,
    update_node_semantics,
)
from .perception import (
    EmbeddingTable,
    ObjectRecord,
    ObjectRegistry,
    PerceptionConfig,
    filter_detection,
    is_verification_trigger,
    register_object,
    similarity,
)
from .planning import (
    Path,
    ScanRoute,
    WeightParams,
    astar,
    generate_scan_points,
    select_frontier,
    tsp_order,
    weight_frontier,
)
from .render import render_snapshot
from .world import (
    AgentPose,
    Detection,
    GenSpec,
    ObjectInstance,
    Scene,
    SceneError,
    Simulator,
    check_success,
    generate_scene,
    load_scene,
    oracle_shortest_path,
    panoramic_scan,
    save_scene,
    step_agent,
)

__version__ = "0.1.0"
