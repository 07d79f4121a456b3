import json
import math
import random
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from zonenav.inference import (
    PriorsTable,
    RemoteBackend,
    TableBackend,
    UniformBackend,
    UnknownLabelError,
    ZoneInference,
    remote_infer,
    table_infer,
    verbalize,
)


@pytest.fixture
def tiny_priors():
    cats = ["Bathroom", "Kitchen"]
    p_label = {
        "stove": {"Kitchen": 0.9, "Bathroom": 0.05},
        "toilet": {"Kitchen": 0.05, "Bathroom": 0.9},
        "plain": {"Kitchen": 0.3, "Bathroom": 0.3},
    }
    p_target = {
        "kettle": {"Kitchen": 0.8, "Bathroom": 0.1},
        "towel": {"Kitchen": 0.1, "Bathroom": 0.8},
    }
    p_label.update({"kettle": {"Kitchen": 0.7, "Bathroom": 0.05},
                    "towel": {"Kitchen": 0.05, "Bathroom": 0.7}})
    return PriorsTable(cats, p_label, p_target)


class StubHandler(BaseHTTPRequestHandler):
    response: dict = {"zone_category": "Kitchen", "p_target": 0.7}
    status = 200
    seen: list = []

    def do_POST(self):
        length = int(self.headers["Content-Length"])
        StubHandler.seen.append(json.loads(self.rfile.read(length)))
        body = json.dumps(self.response).encode()
        self.send_response(self.status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture
def stub_server():
    server = HTTPServer(("127.0.0.1", 0), StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    StubHandler.response = {"zone_category": "Kitchen", "p_target": 0.7}
    StubHandler.status = 200
    StubHandler.seen = []
    yield f"http://127.0.0.1:{server.server_port}"
    server.shutdown()


class TestVerbalize:
    def test_template(self):
        prompt = verbalize({"stove"}, "kettle")
        assert prompt == (
            "Observed objects: stove. Target: kettle. "
            "What zone is this, and what is the probability the target is here?"
        )

    def test_canonical_ordering(self):
        assert verbalize({"kettle", "stove"}, "pan") == verbalize({"stove", "kettle"}, "pan")

    def test_many_labels_sorted(self):
        labels = {f"item_{i}" for i in range(10)}
        prompt = verbalize(labels, "kettle")
        listed = prompt.split("Observed objects: ")[1].split(". Target")[0].split(", ")
        assert listed == sorted(labels)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            verbalize(set(), "kettle")


class TestTableInfer:
    def test_bundled_fixture_example(self, priors):
        zi = table_infer({"stove"}, "kettle", priors)
        assert zi == ZoneInference("Kitchen", 0.8)

    def test_bundled_values_cross_checked(self, priors):
        # the bundled priors encode 0.9-at-home occurrence, 0.8 target-at-home
        assert priors.label_prob("stove", "Kitchen") == 0.9
        assert priors.label_prob("stove", "Bedroom") <= 0.1
        assert priors.target_prob("kettle", "Kitchen") == 0.8

    def test_alphabetical_tie_break(self, tiny_priors):
        zi = table_infer({"plain"}, "kettle", tiny_priors)
        assert zi.category == "Bathroom"  # equal scores, first alphabetically

    def test_unknown_label(self, tiny_priors):
        with pytest.raises(UnknownLabelError, match="xyzzy"):
            table_infer({"xyzzy"}, "kettle", tiny_priors)

    def test_argmax_by_hand(self, tiny_priors):
        labels = {"stove", "toilet"}
        eps = 1e-3
        scores = {
            cat: sum(math.log(tiny_priors.label_prob(l, cat) + eps) for l in labels)
            for cat in tiny_priors.categories
        }
        best = min(sorted(scores), key=lambda c: -scores[c])
        assert table_infer(labels, "towel", tiny_priors).category == best

    def test_permutation_invariant(self, priors):
        labels = ["stove", "sink", "pan", "kettle"]
        zis = set()
        for _ in range(5):
            random.shuffle(labels)
            zis.add(table_infer(set(labels), "kettle", priors))
        assert len(zis) == 1

    def test_uniform_label_never_changes_argmax(self, tiny_priors):
        rng = random.Random(0)
        for _ in range(20):
            labels = set(rng.sample(["stove", "toilet", "kettle", "towel"], k=2))
            base = table_infer(labels, "kettle", tiny_priors).category
            with_uniform = table_infer(labels | {"plain"}, "kettle", tiny_priors).category
            assert base == with_uniform


class TestBackends:
    def test_uniform_backend_constant(self):
        backend = UniformBackend()
        zi = backend.infer({"anything"}, "kettle")
        assert zi.p_target == 0.5 and zi.category

    def test_zone_inference_validation(self):
        with pytest.raises(ValueError):
            ZoneInference("", 0.5)
        with pytest.raises(ValueError):
            ZoneInference("Kitchen", 1.5)

    def test_table_backend_delegates(self, priors):
        backend = TableBackend(priors)
        assert backend.infer({"stove"}, "kettle") == ZoneInference("Kitchen", 0.8)
        assert backend.drain_events() == []


class TestRemoteBackend:
    def test_round_trip(self, stub_server, priors):
        backend = RemoteBackend(stub_server, priors, timeout=2.0)
        zi = backend.infer({"stove", "sink"}, "kettle")
        assert zi == ZoneInference("Kitchen", 0.7)
        assert backend.drain_events() == []
        request = StubHandler.seen[-1]
        assert request["objects"] == ["sink", "stove"]
        assert request["target"] == "kettle"
        assert request["prompt"] == verbalize({"stove", "sink"}, "kettle")

    def test_out_of_range_falls_back(self, stub_server, priors):
        StubHandler.response = {"zone_category": "Kitchen", "p_target": 1.5}
        backend = RemoteBackend(stub_server, priors, timeout=2.0)
        zi = backend.infer({"stove"}, "kettle")
        assert zi == table_infer({"stove"}, "kettle", priors)
        events = backend.drain_events()
        assert len(events) == 1 and "malformed" in events[0]

    def test_error_status_falls_back(self, stub_server, priors):
        StubHandler.status = 500
        backend = RemoteBackend(stub_server, priors, timeout=2.0)
        zi = backend.infer({"stove"}, "kettle")
        assert zi == table_infer({"stove"}, "kettle", priors)
        assert "status 500" in backend.drain_events()[0]

    def test_unreachable_endpoint_falls_back(self, priors):
        zi = remote_infer({"stove"}, "kettle", "http://127.0.0.1:1", priors, timeout=0.2)
        assert zi == table_infer({"stove"}, "kettle", priors)

    def test_never_raises_and_always_valid(self, stub_server, priors):
        rng = random.Random(1)
        vocab = priors.vocabulary()
        backend = RemoteBackend(stub_server, priors, timeout=2.0)
        for i in range(10):
            StubHandler.status = rng.choice([200, 200, 400, 503])
            StubHandler.response = rng.choice(
                [
                    {"zone_category": "Kitchen", "p_target": 0.3},
                    {"zone_category": "", "p_target": 0.3},
                    {"p_target": 0.3},
                    {"zone_category": "Kitchen", "p_target": "high"},
                ]
            )
            labels = set(rng.sample(vocab, k=3))
            zi = backend.infer(labels, "kettle")
            assert 0.0 <= zi.p_target <= 1.0 and zi.category
