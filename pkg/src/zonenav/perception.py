"""Detection filtering, label similarity scoring, and the object registry."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .world import Detection, euclid


class MissingEmbeddingError(KeyError):
    def __init__(self, label: str):
        super().__init__(label)
        self.label = label

    def __str__(self) -> str:
        return f"no embedding for label {self.label!r}"


class EmbeddingTable:
    """Immutable map from label to a unit-norm vector of fixed dimension."""

    def __init__(self, vectors: dict[str, np.ndarray]):
        if not vectors:
            raise ValueError("embedding table is empty")
        dims = {v.shape for v in vectors.values()}
        if len(dims) != 1:
            raise ValueError(f"inconsistent embedding dimensions: {sorted(dims)}")
        self.dim = next(iter(dims))[0]
        self._vectors = {}
        for label, vec in vectors.items():
            norm = float(np.linalg.norm(vec))
            if norm == 0:
                raise ValueError(f"zero vector for label {label!r}")
            self._vectors[label] = vec / norm

    def __contains__(self, label: str) -> bool:
        return label in self._vectors

    def labels(self) -> list[str]:
        return sorted(self._vectors)

    def vector(self, label: str) -> np.ndarray:
        try:
            return self._vectors[label]
        except KeyError:
            raise MissingEmbeddingError(label) from None

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingTable":
        doc = json.loads(Path(path).read_text())
        dim = int(doc["dim"])
        vectors = {}
        for label, values in doc["vectors"].items():
            vec = np.asarray(values, dtype=float)
            if vec.shape != (dim,):
                raise ValueError(f"label {label!r}: expected {dim} values, got {vec.shape}")
            vectors[label] = vec
        return cls(vectors)


def similarity(a: str, b: str, table: EmbeddingTable) -> float:
    """Cosine similarity between two label embeddings, in [-1, 1]."""
    va, vb = table.vector(a), table.vector(b)
    denom = float(np.linalg.norm(va) * np.linalg.norm(vb))
    return float(np.dot(va, vb) / denom)


@dataclass(frozen=True)
class PerceptionConfig:
    tau_pixel: int = 400
    tau_dist: float = 1.5
    tau_target: float = 0.85
    merge_radius: float = 0.25

    def __post_init__(self):
        if self.tau_pixel <= 0 or self.tau_dist <= 0:
            raise ValueError("tau_pixel and tau_dist must be positive")
        if not 0.0 < self.tau_target <= 1.0:
            raise ValueError("tau_target must be in (0, 1]")


REJECT_PIXEL = "pixel"
REJECT_DISTANCE = "distance"


@dataclass(frozen=True)
class FilterVerdict:
    accepted: bool
    reason: str | None = None  # REJECT_PIXEL or REJECT_DISTANCE when rejected


def filter_detection(d: Detection, cfg: PerceptionConfig) -> FilterVerdict:
    """Accept iff apparent area >= tau_pixel and distance <= tau_dist (both inclusive)."""
    if d.apparent_pixels < cfg.tau_pixel:
        return FilterVerdict(False, REJECT_PIXEL)
    if d.distance > cfg.tau_dist:
        return FilterVerdict(False, REJECT_DISTANCE)
    return FilterVerdict(True)


@dataclass
class ObjectRecord:
    """Registered object: position, label, owning zone node, discovery step."""

    position: tuple[float, float]
    label: str
    zone_id: int | None
    first_seen_step: int


@dataclass
class ObjectRegistry:
    """Deduplicating store of accepted detections."""

    merge_radius: float = 0.25
    records: list[ObjectRecord] = field(default_factory=list)

    def register(self, d: Detection, step: int) -> tuple[bool, ObjectRecord]:
        """Insert or merge one accepted detection; returns (new, record)."""
        for rec in self.records:
            if rec.label == d.label and euclid(rec.position, d.world_position) <= self.merge_radius:
                return False, rec
        rec = ObjectRecord(d.world_position, d.label, None, step)
        self.records.append(rec)
        return True, rec


def register_object(d: Detection, registry: ObjectRegistry, step: int) -> tuple[bool, ObjectRecord]:
    return registry.register(d, step)


def is_verification_trigger(
    d: Detection, target: str, table: EmbeddingTable, cfg: PerceptionConfig
) -> bool:
    """True when the detection's label scores at least tau_target against the target.

    Works on raw detections, before distance filtering, so a far-off target
    sighting can still start an approach.
    """
    return similarity(d.label, target, table) >= cfg.tau_target
