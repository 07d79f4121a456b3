#!/usr/bin/env python3
"""Regenerate the bundled data files under src/zonenav/data/.

The embedding table is synthetic: one orthonormal anchor per zone category,
label vectors mixed toward their category anchor so same-category labels score
moderately similar, cross-category labels near zero, and the engineered
synonym pair (tv, television) lands near 0.9 cosine. Run once and commit the
outputs; tests treat the files as frozen fixtures.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "src" / "zonenav" / "data"
sys.path.insert(0, str(ROOT / "src"))

EMB_DIM = 32
ANCHOR_MIX = 0.72  # weight on the category anchor; pair sims ~ ANCHOR_MIX^2
SYNONYM_MIX = 0.9

VOCAB = [
    # label, category, size (m^2)
    ("stove", "Kitchen", 1.2),
    ("fridge", "Kitchen", 1.5),
    ("sink", "Kitchen", 0.8),
    ("kettle", "Kitchen", 0.5),
    ("microwave", "Kitchen", 0.7),
    ("toaster", "Kitchen", 0.45),
    ("coffee_maker", "Kitchen", 0.5),
    ("pan", "Kitchen", 0.4),
    ("sofa", "LivingRoom", 1.5),
    ("television", "LivingRoom", 1.2),
    ("bookshelf", "LivingRoom", 1.2),
    ("coffee_table", "LivingRoom", 1.1),
    ("remote", "LivingRoom", 0.3),
    ("lamp", "LivingRoom", 0.5),
    ("cushion", "LivingRoom", 0.4),
    ("speaker", "LivingRoom", 0.45),
    ("bed", "Bedroom", 1.5),
    ("wardrobe", "Bedroom", 1.4),
    ("dresser", "Bedroom", 1.1),
    ("nightstand", "Bedroom", 0.7),
    ("pillow", "Bedroom", 0.5),
    ("mirror", "Bedroom", 0.8),
    ("alarm_clock", "Bedroom", 0.3),
    ("laundry_basket", "Bedroom", 0.6),
    ("bathtub", "Bathroom", 1.5),
    ("shower", "Bathroom", 1.2),
    ("toilet", "Bathroom", 0.9),
    ("washing_machine", "Bathroom", 1.1),
    ("towel", "Bathroom", 0.5),
    ("bath_mat", "Bathroom", 0.6),
    ("toothbrush", "Bathroom", 0.3),
    ("soap", "Bathroom", 0.3),
]

PRIMARY_OCCURRENCE = 0.9  # P(label present | its own category's zone)
STRAY_OCCURRENCE = 0.05
TARGET_HOME = 0.8  # P(target present | its home category)
TARGET_AWAY = 0.1


def write_vocabulary() -> None:
    lines = ["# label category size_m2"]
    for label, cat, size in VOCAB:
        lines.append(f"{label} {cat} {size}")
    (DATA / "vocabulary.txt").write_text("\n".join(lines) + "\n")


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def write_embeddings() -> None:
    rng = np.random.default_rng(20240817)
    categories = sorted({cat for _, cat, _ in VOCAB})
    anchors_raw = rng.normal(size=(len(categories), EMB_DIM))
    anchors, _ = np.linalg.qr(anchors_raw.T)
    anchor_of = {cat: anchors[:, i] for i, cat in enumerate(categories)}

    vectors: dict[str, np.ndarray] = {}
    for label, cat, _ in VOCAB:
        noise = _unit(rng.normal(size=EMB_DIM))
        mix = ANCHOR_MIX * anchor_of[cat] + np.sqrt(1 - ANCHOR_MIX**2) * noise
        vectors[label] = _unit(mix)
    # engineered near-synonym for the verification-trigger fixture
    noise = _unit(rng.normal(size=EMB_DIM))
    vectors["tv"] = _unit(SYNONYM_MIX * vectors["television"] + np.sqrt(1 - SYNONYM_MIX**2) * noise)

    labels = sorted(vectors)
    worst = 0.0
    for i, a in enumerate(labels):
        for b in labels[i + 1 :]:
            if {a, b} == {"tv", "television"}:
                continue
            worst = max(worst, float(np.dot(vectors[a], vectors[b])))
    syn = float(np.dot(vectors["tv"], vectors["television"]))
    assert worst < 0.80, f"non-synonym pair too similar: {worst:.3f}"
    assert 0.85 <= syn <= 0.95, f"synonym similarity off target: {syn:.3f}"
    print(f"max non-synonym similarity {worst:.3f}; tv/television {syn:.3f}")

    doc = {
        "dim": EMB_DIM,
        "vectors": {lab: [round(float(x), 8) for x in vectors[lab]] for lab in labels},
    }
    (DATA / "embeddings.json").write_text(json.dumps(doc, indent=1, sort_keys=True))


def write_priors() -> None:
    categories = sorted({cat for _, cat, _ in VOCAB})
    p_label = {
        label: {
            cat: (PRIMARY_OCCURRENCE if cat == home else STRAY_OCCURRENCE)
            for cat in categories
        }
        for label, home, _ in VOCAB
    }
    p_target = {
        label: {cat: (TARGET_HOME if cat == home else TARGET_AWAY) for cat in categories}
        for label, home, _ in VOCAB
    }
    doc = {"categories": categories, "p_label": p_label, "p_target": p_target}
    (DATA / "priors.json").write_text(json.dumps(doc, indent=1, sort_keys=True))


def write_kitchen_small() -> None:
    from zonenav.world import Scene, ObjectInstance, ZoneGT, AgentPose, cell_center, save_scene

    width, height = 17, 9
    rows = []
    for r in range(height):
        if r in (0, height - 1):
            rows.append("#" * width)
        elif r == 4:
            rows.append("#" + "." * (width - 2) + "#")
        else:
            rows.append("#" + "." * 7 + "#" + "." * 7 + "#")
    sizes = {label: size for label, _, size in VOCAB}
    placed = [
        ("stove", (2, 2)),
        ("kettle", (2, 3)),
        ("sink", (2, 5)),
        ("fridge", (6, 2)),
        ("lamp", (2, 10)),
        ("sofa", (2, 12)),
        ("remote", (6, 11)),
        ("television", (6, 12)),
    ]
    objects = [ObjectInstance(lab, cell_center(cell), sizes[lab]) for lab, cell in placed]
    zones = [
        ZoneGT(0, "Kitchen", frozenset((r, c) for r in range(1, 8) for c in range(1, 8))),
        ZoneGT(1, "LivingRoom", frozenset((r, c) for r in range(1, 8) for c in range(9, 16))),
    ]
    scene = Scene(
        width=width,
        height=height,
        cell_size=0.25,
        cells=rows,
        objects=objects,
        zones_gt=zones,
        agent_start=AgentPose(cell_center((6, 13)), 180),
        target_label="kettle",
    )
    save_scene(scene, DATA / "kitchen_small.scene")
    print(f"kitchen_small.scene: {len(scene.objects)} objects, {len(scene.zones_gt)} zones")


if __name__ == "__main__":
    DATA.mkdir(parents=True, exist_ok=True)
    write_vocabulary()
    write_embeddings()
    write_priors()
    write_kitchen_small()
    print(f"fixtures written to {DATA}")
