"""Symptom-disease knowledge graph: build from case tuples, query, update, persist.

Weights are per-disease conditional frequencies in [0, 1]. Graphs are
immutable once built; apply_update returns a new graph with a bumped version
counter so live sessions keep reading a stable snapshot.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import DataError, SchemaError, UnknownNodeError

GRAPH_FORMAT_VERSION = 1


@dataclass(frozen=True)
class CaseRecord:
    """Ground-truth tuple: one disease plus the full set of its symptoms."""

    disease: str
    symptoms: frozenset[str]

    @classmethod
    def make(cls, disease: str, symptoms) -> "CaseRecord":
        return cls(disease=disease, symptoms=frozenset(symptoms))


@dataclass(frozen=True)
class WeightDelta:
    """One signed adjustment to an edge weight.

    kind: "sd" for a symptom-disease edge (a=symptom, b=disease),
          "ss" for a symptom-symptom edge (unordered; stored sorted).
    """

    kind: str
    a: str
    b: str
    delta: float


@dataclass(frozen=True)
class UpdateProposal:
    deltas: tuple[WeightDelta, ...]
    provenance: str

    def to_dict(self) -> dict:
        return {
            "provenance": self.provenance,
            "deltas": [
                {"kind": d.kind, "a": d.a, "b": d.b, "delta": d.delta}
                for d in self.deltas
            ],
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "UpdateProposal":
        deltas = tuple(
            WeightDelta(kind=d["kind"], a=d["a"], b=d["b"], delta=float(d["delta"]))
            for d in raw["deltas"]
        )
        return cls(deltas=deltas, provenance=raw["provenance"])


class KnowledgeGraph:
    """Weighted bipartite symptom-disease graph with optional symptom-symptom edges.

    Symptom order is the vector dimension used by all scoring; it is fixed at
    construction and preserved by save/load.
    """

    def __init__(
        self,
        symptoms,
        diseases,
        sd_weights: dict[tuple[str, str], float],
        ss_weights: dict[tuple[str, str], float] | None = None,
        version: int = 0,
    ):
        self.symptoms: tuple[str, ...] = tuple(symptoms)
        self.diseases: tuple[str, ...] = tuple(diseases)
        self.sd_weights: dict[tuple[str, str], float] = dict(sd_weights)
        self.ss_weights: dict[tuple[str, str], float] = dict(ss_weights or {})
        self.version = int(version)
        self._symptom_index = {s: k for k, s in enumerate(self.symptoms)}
        self._disease_index = {d: i for i, d in enumerate(self.diseases)}
        self._matrix: np.ndarray | None = None
        self._validate()

    def _validate(self) -> None:
        if len(self._symptom_index) != len(self.symptoms):
            raise DataError("duplicate symptom ids")
        if len(self._disease_index) != len(self.diseases):
            raise DataError("duplicate disease ids")
        if any(not s for s in self.symptoms) or any(not d for d in self.diseases):
            raise DataError("empty node id")
        for (s, d), w in self.sd_weights.items():
            if s not in self._symptom_index:
                raise UnknownNodeError(f"unknown symptom {s!r} in edge ({s!r}, {d!r})")
            if d not in self._disease_index:
                raise UnknownNodeError(f"unknown disease {d!r} in edge ({s!r}, {d!r})")
            if not (0.0 <= w <= 1.0):
                raise DataError(f"weight out of range for edge ({s!r}, {d!r}): {w}")
        for (a, b), w in self.ss_weights.items():
            if a not in self._symptom_index or b not in self._symptom_index:
                raise UnknownNodeError(f"unknown symptom in edge ({a!r}, {b!r})")
            if not (0.0 <= w <= 1.0):
                raise DataError(f"weight out of range for edge ({a!r}, {b!r}): {w}")

    # -- queries -----------------------------------------------------------

    def has_symptom(self, symptom: str) -> bool:
        return symptom in self._symptom_index

    def has_disease(self, disease: str) -> bool:
        return disease in self._disease_index

    def symptom_index(self, symptom: str) -> int:
        try:
            return self._symptom_index[symptom]
        except KeyError:
            raise UnknownNodeError(f"unknown symptom {symptom!r}") from None

    def disease_index(self, disease: str) -> int:
        try:
            return self._disease_index[disease]
        except KeyError:
            raise UnknownNodeError(f"unknown disease {disease!r}") from None

    def weight(self, symptom: str, disease: str) -> float:
        return self.sd_weights.get((symptom, disease), 0.0)

    def weight_matrix(self) -> np.ndarray:
        """Dense (n_symptoms, n_diseases) weight matrix; cached, do not mutate."""
        if self._matrix is None:
            m = np.zeros((len(self.symptoms), len(self.diseases)))
            for (s, d), w in self.sd_weights.items():
                m[self._symptom_index[s], self._disease_index[d]] = w
            self._matrix = m
        return self._matrix

    def __eq__(self, other) -> bool:
        if not isinstance(other, KnowledgeGraph):
            return NotImplemented
        return (
            self.symptoms == other.symptoms
            and self.diseases == other.diseases
            and self.sd_weights == other.sd_weights
            and self.ss_weights == other.ss_weights
            and self.version == other.version
        )

    def __repr__(self) -> str:
        return (
            f"KnowledgeGraph({len(self.symptoms)} symptoms, "
            f"{len(self.diseases)} diseases, {len(self.sd_weights)} edges, "
            f"v{self.version})"
        )


def build_graph(cases, smoothing: float = 0.0) -> KnowledgeGraph:
    """Build a graph from case tuples.

    Each edge weight is (cases of the disease exhibiting the symptom +
    smoothing) / (cases of the disease + smoothing). Edges exist only for
    observed co-occurrences. Node order is lexicographic, so two builds from
    the same case multiset are identical regardless of input order.
    """
    cases = list(cases)
    if not cases:
        raise DataError("empty dataset")
    if smoothing < 0:
        raise DataError(f"smoothing must be non-negative, got {smoothing}")

    for idx, case in enumerate(cases):
        if not case.disease:
            raise DataError(f"case {idx}: missing disease")
        if not case.symptoms:
            raise DataError(f"case {idx}: empty symptom list")

    disease_counts: dict[str, int] = {}
    pair_counts: dict[tuple[str, str], int] = {}
    symptom_set: set[str] = set()
    for case in cases:
        disease_counts[case.disease] = disease_counts.get(case.disease, 0) + 1
        for s in case.symptoms:
            symptom_set.add(s)
            key = (s, case.disease)
            pair_counts[key] = pair_counts.get(key, 0) + 1

    sd_weights = {
        (s, d): (count + smoothing) / (disease_counts[d] + smoothing)
        for (s, d), count in pair_counts.items()
    }
    return KnowledgeGraph(
        symptoms=sorted(symptom_set),
        diseases=sorted(disease_counts),
        sd_weights=sd_weights,
        version=0,
    )


def disease_vector(g: KnowledgeGraph, disease: str) -> np.ndarray:
    """Weight column for one disease over the graph's symptom dimensions."""
    return g.weight_matrix()[:, g.disease_index(disease)].copy()


def apply_update(
    g: KnowledgeGraph,
    proposal: UpdateProposal,
    step: float = 0.05,
    allow_create: bool = False,
) -> KnowledgeGraph:
    """Apply a proposal's deltas atomically, clamping every weight to [0, 1].

    Raises (leaving the input graph untouched) if any delta references an
    unknown node, or a missing edge while allow_create is off. The version
    counter advances even for an empty delta list.
    """
    if step <= 0:
        raise DataError(f"step must be positive, got {step}")

    sd = dict(g.sd_weights)
    ss = dict(g.ss_weights)
    staged: list[tuple[str, tuple[str, str], float]] = []
    for d in proposal.deltas:
        if d.kind == "sd":
            if not g.has_symptom(d.a):
                raise UnknownNodeError(f"unknown symptom {d.a!r}")
            if not g.has_disease(d.b):
                raise UnknownNodeError(f"unknown disease {d.b!r}")
            key = (d.a, d.b)
            if key not in sd and not allow_create:
                raise UnknownNodeError(f"no edge ({d.a!r}, {d.b!r}) and edge creation is off")
            staged.append(("sd", key, d.delta))
        elif d.kind == "ss":
            if not g.has_symptom(d.a) or not g.has_symptom(d.b):
                raise UnknownNodeError(f"unknown symptom in edge ({d.a!r}, {d.b!r})")
            key = (min(d.a, d.b), max(d.a, d.b))
            if key not in ss and not allow_create:
                raise UnknownNodeError(f"no edge ({d.a!r}, {d.b!r}) and edge creation is off")
            staged.append(("ss", key, d.delta))
        else:
            raise DataError(f"unknown delta kind {d.kind!r}")

    for kind, key, delta in staged:
        table = sd if kind == "sd" else ss
        w = table.get(key, 0.0)
        table[key] = min(1.0, max(0.0, w + step * delta))

    return KnowledgeGraph(
        symptoms=g.symptoms,
        diseases=g.diseases,
        sd_weights=sd,
        ss_weights=ss,
        version=g.version + 1,
    )


# -- persistence -------------------------------------------------------------


def graph_to_dict(g: KnowledgeGraph) -> dict:
    return {
        "format_version": GRAPH_FORMAT_VERSION,
        "symptoms": list(g.symptoms),
        "diseases": list(g.diseases),
        "sd_edges": [
            {"s": s, "d": d, "w": w}
            for (s, d), w in sorted(g.sd_weights.items())
        ],
        "ss_edges": [
            {"a": a, "b": b, "w": w}
            for (a, b), w in sorted(g.ss_weights.items())
        ],
        "version": g.version,
    }


def save_graph(g: KnowledgeGraph, destination) -> None:
    with open(destination, "w", encoding="utf-8") as fh:
        json.dump(graph_to_dict(g), fh, indent=2, sort_keys=True)
        fh.write("\n")


def graph_from_dict(raw: dict) -> KnowledgeGraph:
    if not isinstance(raw, dict):
        raise SchemaError("graph document must be a JSON object")
    fmt = raw.get("format_version")
    if fmt != GRAPH_FORMAT_VERSION:
        raise SchemaError(f"unsupported format_version {fmt!r}", field="format_version")
    for key in ("symptoms", "diseases", "sd_edges", "ss_edges", "version"):
        if key not in raw:
            raise SchemaError("missing field", field=key)
    try:
        sd = {(e["s"], e["d"]): float(e["w"]) for e in raw["sd_edges"]}
        ss = {(e["a"], e["b"]): float(e["w"]) for e in raw["ss_edges"]}
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"malformed edge entry: {exc}") from exc
    return KnowledgeGraph(
        symptoms=raw["symptoms"],
        diseases=raw["diseases"],
        sd_weights=sd,
        ss_weights=ss,
        version=raw["version"],
    )


def load_graph(source) -> KnowledgeGraph:
    with open(source, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"not valid JSON: {exc.msg}", line=exc.lineno) from exc
    return graph_from_dict(raw)


def load_cases(source) -> list[CaseRecord]:
    """Read case tuples from a JSON array of {disease, symptoms} objects."""
    with open(source, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"not valid JSON: {exc.msg}", line=exc.lineno) from exc
    if not isinstance(raw, list):
        raise SchemaError("case file must be a JSON array")
    cases = []
    for idx, entry in enumerate(raw):
        if not isinstance(entry, dict) or "disease" not in entry or "symptoms" not in entry:
            raise SchemaError(f"case {idx}: expected object with disease and symptoms")
        if not entry["symptoms"]:
            raise DataError(f"case {idx}: empty symptom list")
        cases.append(CaseRecord.make(entry["disease"], entry["symptoms"]))
    return cases


def save_cases(cases, destination) -> None:
    payload = [
        {"disease": c.disease, "symptoms": sorted(c.symptoms)} for c in cases
    ]
    with open(destination, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
