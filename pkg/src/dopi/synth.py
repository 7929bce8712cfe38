"""Synthetic benchmark construction.

Builds separable disease/symptom universes for regression benchmarks: every
disease gets a fixed-size signature with a bounded pairwise overlap. A small
shared pool of "common" symptoms sorts lexicographically first, so top-weight
initial disclosures are ambiguous across diseases; a policy that never asks
follow-ups cannot tell those diseases apart, while an interrogating one can.
"""

import numpy as np

from .errors import DataError
from .kg import CaseRecord, KnowledgeGraph, build_graph


def generate_separable_cases(
    n_diseases: int = 50,
    n_symptoms: int = 200,
    per_disease: int = 8,
    max_overlap: int = 3,
    common_pool: int = 6,
    common_per_disease: int = 2,
    seed: int = 0,
    max_attempts: int = 10_000,
) -> list[CaseRecord]:
    """One case per disease, signatures rejection-sampled to bound overlap.

    Symptom ids are zero-padded so the common pool sorts first; disease ids
    are zero-padded too. Deterministic per seed.
    """
    if common_per_disease > common_pool:
        raise DataError("common_per_disease cannot exceed common_pool")
    if per_disease > n_symptoms:
        raise DataError("per_disease cannot exceed n_symptoms")
    if max_overlap < common_per_disease:
        raise DataError("max_overlap below common_per_disease is unsatisfiable")

    width_s = len(str(n_symptoms - 1))
    width_d = len(str(n_diseases - 1))
    symptoms = [f"s{i:0{width_s}d}" for i in range(n_symptoms)]
    common = symptoms[:common_pool]
    rare = symptoms[common_pool:]
    n_rare = per_disease - common_per_disease

    rng = np.random.default_rng(seed)
    signatures: list[frozenset[str]] = []
    for _ in range(n_diseases):
        for attempt in range(max_attempts):
            picked_common = rng.choice(len(common), size=common_per_disease, replace=False)
            picked_rare = rng.choice(len(rare), size=n_rare, replace=False)
            sig = frozenset(
                [common[i] for i in picked_common] + [rare[i] for i in picked_rare]
            )
            if all(len(sig & prev) <= max_overlap for prev in signatures):
                signatures.append(sig)
                break
        else:
            raise DataError(
                f"could not satisfy overlap <= {max_overlap} after {max_attempts} attempts"
            )

    return [
        CaseRecord(disease=f"d{i:0{width_d}d}", symptoms=sig)
        for i, sig in enumerate(signatures)
    ]


def build_benchmark_graph(cases, n_symptoms: int) -> KnowledgeGraph:
    """Frequency graph over the full symptom universe.

    build_graph only materializes symptoms that occur in cases; benchmarks
    want the whole id space as nodes, including never-observed symptoms.
    """
    g = build_graph(cases)
    width = len(str(n_symptoms - 1))
    universe = [f"s{i:0{width}d}" for i in range(n_symptoms)]
    missing = set(g.symptoms) - set(universe)
    if missing:
        raise DataError(f"cases reference symptoms outside the universe: {sorted(missing)[:3]}")
    return KnowledgeGraph(
        symptoms=universe,
        diseases=g.diseases,
        sd_weights=g.sd_weights,
        version=g.version,
    )
