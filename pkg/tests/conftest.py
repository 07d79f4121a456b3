import pytest

from zonenav import data
from zonenav.inference import PriorsTable
from zonenav.perception import EmbeddingTable
from zonenav.world import Scene, load_scene


@pytest.fixture(scope="session")
def embeddings() -> EmbeddingTable:
    return EmbeddingTable.load(data.path("embeddings.json"))


@pytest.fixture(scope="session")
def priors() -> PriorsTable:
    return PriorsTable.load(data.path("priors.json"))


@pytest.fixture(scope="session")
def kitchen_small() -> Scene:
    return load_scene(data.path("kitchen_small.scene"))


def make_scene(rows, objects=(), start=(1, 1), heading=0, target=None, cell_size=0.25):
    """Scene from ASCII rows; objects as (label, (r, c), size)."""
    from zonenav.world import AgentPose, ObjectInstance, cell_center

    objs = [
        ObjectInstance(label, cell_center(cell, cell_size), size)
        for label, cell, size in objects
    ]
    target = target if target is not None else (objs[0].label if objs else "kettle")
    return Scene(
        width=len(rows[0]),
        height=len(rows),
        cell_size=cell_size,
        cells=list(rows),
        objects=objs,
        zones_gt=[],
        agent_start=AgentPose(cell_center(start, cell_size), heading),
        target_label=target,
    )
