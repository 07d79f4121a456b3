import itertools
import json
import math

import numpy as np
import pytest

from zonenav import data
from zonenav.perception import (
    EmbeddingTable,
    MissingEmbeddingError,
    ObjectRegistry,
    PerceptionConfig,
    REJECT_DISTANCE,
    REJECT_PIXEL,
    filter_detection,
    is_verification_trigger,
    register_object,
    similarity,
)
from zonenav.world import Detection


def det(label="kettle", distance=1.0, pixels=500, pos=(1.0, 1.0)):
    return Detection(label, distance, pixels, pos)


@pytest.fixture
def axis_table():
    return EmbeddingTable(
        {
            "a": np.array([1.0, 0.0, 0.0]),
            "b": np.array([0.0, 1.0, 0.0]),
            "c": np.array([0.0, 0.0, 2.0]),  # normalized on load
        }
    )


class TestSimilarity:
    def test_identity(self, embeddings):
        for label in ("kettle", "stove", "sofa"):
            assert math.isclose(similarity(label, label, embeddings), 1.0, abs_tol=1e-6)

    def test_orthogonal_vectors(self, axis_table):
        assert similarity("a", "b", axis_table) == pytest.approx(0.0, abs=1e-12)

    def test_matches_independent_dot_product(self, embeddings):
        # recompute from the raw table file, no package code involved
        doc = json.loads(data.path("embeddings.json").read_text())
        va = doc["vectors"]["kettle"]
        vb = doc["vectors"]["stove"]
        dot = sum(x * y for x, y in zip(va, vb))
        na = math.sqrt(sum(x * x for x in va))
        nb = math.sqrt(sum(x * x for x in vb))
        expected = dot / (na * nb)
        assert similarity("kettle", "stove", embeddings) == pytest.approx(expected, abs=1e-9)

    def test_unknown_label(self, embeddings):
        with pytest.raises(MissingEmbeddingError, match="xyzzy"):
            similarity("xyzzy", "kettle", embeddings)

    def test_symmetric_and_bounded(self, embeddings):
        labels = embeddings.labels()
        for a, b in itertools.combinations(labels[:12], 2):
            s_ab = similarity(a, b, embeddings)
            s_ba = similarity(b, a, embeddings)
            assert s_ab == pytest.approx(s_ba, abs=1e-12)
            assert -1.0 - 1e-9 <= s_ab <= 1.0 + 1e-9

    def test_loader_normalizes(self, axis_table):
        v = axis_table.vector("c")
        assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-6)

    def test_dimension_mismatch_rejected(self, tmp_path):
        path = tmp_path / "emb.json"
        path.write_text(json.dumps({"dim": 3, "vectors": {"a": [1, 0]}}))
        with pytest.raises(ValueError):
            EmbeddingTable.load(path)


class TestFilterDetection:
    CFG = PerceptionConfig()

    def test_both_boundaries_inclusive(self):
        verdict = filter_detection(det(pixels=400, distance=1.5), self.CFG)
        assert verdict.accepted

    def test_pixel_rejection(self):
        verdict = filter_detection(det(pixels=399, distance=0.5), self.CFG)
        assert not verdict.accepted and verdict.reason == REJECT_PIXEL

    def test_distance_rejection(self):
        verdict = filter_detection(det(pixels=5000, distance=1.6), self.CFG)
        assert not verdict.accepted and verdict.reason == REJECT_DISTANCE

    def test_pure_function(self):
        d = det(pixels=123, distance=2.0)
        assert filter_detection(d, self.CFG) == filter_detection(d, self.CFG)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            PerceptionConfig(tau_pixel=0)
        with pytest.raises(ValueError):
            PerceptionConfig(tau_target=1.5)


class TestRegistry:
    def test_two_vantage_points_merge(self):
        reg = ObjectRegistry(merge_radius=0.25)
        new1, rec1 = register_object(det(pos=(1.0, 1.0)), reg, step=0)
        new2, rec2 = register_object(det(pos=(1.1, 1.0)), reg, step=3)
        assert new1 and not new2
        assert rec2 is rec1
        assert rec1.position == (1.0, 1.0)  # original position kept

    def test_same_label_far_apart(self):
        reg = ObjectRegistry()
        register_object(det(pos=(1.0, 1.0)), reg, 0)
        new, _ = register_object(det(pos=(3.0, 1.0)), reg, 0)
        assert new
        assert len(reg.records) == 2

    def test_first_sighting(self):
        reg = ObjectRegistry()
        new, rec = register_object(det(), reg, 7)
        assert new
        assert rec.first_seen_step == 7
        assert rec.zone_id is None

    def test_idempotent(self):
        reg = ObjectRegistry()
        d = det()
        register_object(d, reg, 0)
        register_object(d, reg, 1)
        register_object(d, reg, 2)
        assert len(reg.records) == 1


class TestVerificationTrigger:
    CFG = PerceptionConfig()

    def test_exact_label(self, embeddings):
        assert is_verification_trigger(det("kettle"), "kettle", embeddings, self.CFG)

    def test_unrelated_label(self, embeddings):
        s = similarity("toilet", "kettle", embeddings)
        assert s < self.CFG.tau_target
        assert not is_verification_trigger(det("toilet"), "kettle", embeddings, self.CFG)

    def test_engineered_synonym(self, embeddings):
        s = similarity("tv", "television", embeddings)
        assert s == pytest.approx(0.9, abs=0.03)
        assert is_verification_trigger(det("tv"), "television", embeddings, self.CFG)

    def test_distance_is_irrelevant(self, embeddings):
        far = det("kettle", distance=4.8, pixels=20)
        assert is_verification_trigger(far, "kettle", embeddings, self.CFG)

    def test_no_cross_label_false_positives(self, embeddings):
        # tau_target separates synonyms from co-occurring labels on the table
        labels = [lab for lab in embeddings.labels() if lab != "tv"]
        for a, b in itertools.combinations(labels, 2):
            assert similarity(a, b, embeddings) < self.CFG.tau_target
