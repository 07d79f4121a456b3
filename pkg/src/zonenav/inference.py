"""Zone-semantics backends: prompt verbalization, the co-occurrence table oracle,
and an HTTP client for an external inference service (with table fallback)."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import requests

LAPLACE_EPS = 1e-3

PROMPT_TEMPLATE = (
    "Observed objects: {objects}. Target: {target}. "
    "What zone is this, and what is the probability the target is here?"
)


class UnknownLabelError(KeyError):
    def __init__(self, label: str):
        super().__init__(label)
        self.label = label

    def __str__(self) -> str:
        return f"label {self.label!r} not in priors vocabulary"


@dataclass(frozen=True)
class ZoneInference:
    category: str
    p_target: float

    def __post_init__(self):
        if not self.category:
            raise ValueError("zone category must be nonempty")
        if not 0.0 <= self.p_target <= 1.0:
            raise ValueError(f"p_target {self.p_target} outside [0, 1]")


class PriorsTable:
    """Object-zone co-occurrence statistics: P(label seen | category) and
    P(target present | category)."""

    def __init__(
        self,
        categories: list[str],
        p_label: dict[str, dict[str, float]],
        p_target: dict[str, dict[str, float]],
    ):
        if not categories:
            raise ValueError("priors table needs at least one category")
        self.categories = sorted(categories)
        self.p_label = p_label
        self.p_target = p_target
        for name, table in (("p_label", p_label), ("p_target", p_target)):
            for label, row in table.items():
                for cat, p in row.items():
                    if not 0.0 <= p <= 1.0:
                        raise ValueError(f"{name}[{label!r}][{cat!r}] = {p} outside [0, 1]")

    def vocabulary(self) -> list[str]:
        return sorted(self.p_label)

    def label_prob(self, label: str, category: str) -> float:
        if label not in self.p_label:
            raise UnknownLabelError(label)
        return self.p_label[label].get(category, 0.0)

    def target_prob(self, target: str, category: str) -> float:
        if target not in self.p_target and target not in self.p_label:
            raise UnknownLabelError(target)
        return self.p_target.get(target, {}).get(category, 0.0)

    @classmethod
    def load(cls, path: str | Path) -> "PriorsTable":
        doc = json.loads(Path(path).read_text())
        return cls(list(doc["categories"]), dict(doc["p_label"]), dict(doc["p_target"]))


def verbalize(labels: set[str], target: str) -> str:
    """Canonical natural-language prompt for an object set; byte-stable per set."""
    if not labels:
        raise ValueError("cannot verbalize an empty label set")
    return PROMPT_TEMPLATE.format(objects=", ".join(sorted(labels)), target=target)


def table_infer(labels: set[str], target: str, priors: PriorsTable) -> ZoneInference:
    """Deterministic category argmax over summed log co-occurrence scores.

    Ties break alphabetically; LAPLACE_EPS keeps unseen labels from collapsing
    the argmax.
    """
    if not labels:
        raise ValueError("cannot infer from an empty label set")
    best_cat, best_score = None, -math.inf
    # categories are alphabetically sorted, so strict > yields alphabetical tie-break
    for cat in priors.categories:
        score = sum(math.log(priors.label_prob(lab, cat) + LAPLACE_EPS) for lab in sorted(labels))
        if score > best_score:
            best_cat, best_score = cat, score
    return ZoneInference(best_cat, priors.target_prob(target, best_cat))


class TableBackend:
    """Default backend: the closed-form co-occurrence oracle."""

    name = "table"

    def __init__(self, priors: PriorsTable):
        self.priors = priors

    def infer(self, labels: set[str], target: str) -> ZoneInference:
        return table_infer(labels, target, self.priors)

    def drain_events(self) -> list[str]:
        return []


class UniformBackend:
    """Constant-prior backend used for the no-semantic-information ablation."""

    name = "uniform"

    def __init__(self, p_target: float = 0.5, category: str = "Unknown"):
        self._result = ZoneInference(category, p_target)

    def infer(self, labels: set[str], target: str) -> ZoneInference:
        return self._result

    def drain_events(self) -> list[str]:
        return []


class RemoteBackend:
    """HTTP client for the inference wire protocol, falling back to the table
    oracle on any transport, status, or validation failure.

    infer() never raises; fallback reasons accumulate until drained.
    """

    name = "remote"

    def __init__(self, endpoint: str, priors: PriorsTable, timeout: float = 2.0):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self._fallback = TableBackend(priors)
        self._events: list[str] = []

    def infer(self, labels: set[str], target: str) -> ZoneInference:
        payload = {
            "objects": sorted(labels),
            "target": target,
            "prompt": verbalize(labels, target),
        }
        try:
            resp = requests.post(f"{self.endpoint}/infer", json=payload, timeout=self.timeout)
        except requests.RequestException as exc:
            return self._fall_back(f"transport: {type(exc).__name__}", labels, target)
        if resp.status_code != 200:
            return self._fall_back(f"status {resp.status_code}", labels, target)
        try:
            doc = resp.json()
            result = ZoneInference(str(doc["zone_category"]), float(doc["p_target"]))
        except (ValueError, KeyError, TypeError) as exc:
            return self._fall_back(f"malformed response: {exc}", labels, target)
        return result

    def _fall_back(self, reason: str, labels: set[str], target: str) -> ZoneInference:
        self._events.append(reason)
        return self._fallback.infer(labels, target)

    def drain_events(self) -> list[str]:
        events, self._events = self._events, []
        return events


def remote_infer(
    labels: set[str], target: str, endpoint: str, priors: PriorsTable, timeout: float = 2.0
) -> ZoneInference:
    """One-shot remote inference with table fallback."""
    return RemoteBackend(endpoint, priors, timeout).infer(labels, target)
