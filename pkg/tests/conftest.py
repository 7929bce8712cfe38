"""Shared fixtures and independent oracles.

The oracles here deliberately avoid the library's numpy/numba code paths:
plain Python loops, math.fsum, and dict counting. Tests compare the fast
paths against these.
"""

import math

import numpy as np
import pytest

from dopi.kg import CaseRecord, KnowledgeGraph, build_graph


# -- independent oracles -----------------------------------------------------


def counting_weight_oracle(cases) -> dict[tuple[str, str], float]:
    """Edge weights by direct counting over the case list."""
    disease_totals: dict[str, int] = {}
    pair_totals: dict[tuple[str, str], int] = {}
    for case in cases:
        disease_totals[case.disease] = disease_totals.get(case.disease, 0) + 1
        for s in case.symptoms:
            pair_totals[(s, case.disease)] = pair_totals.get((s, case.disease), 0) + 1
    return {
        pair: count / disease_totals[pair[1]] for pair, count in pair_totals.items()
    }


def cosine_oracle(xs, ys) -> float:
    """Compensated-summation cosine, independent of numpy."""
    dot = math.fsum(x * y for x, y in zip(xs, ys))
    nx = math.sqrt(math.fsum(x * x for x in xs))
    ny = math.sqrt(math.fsum(y * y for y in ys))
    if nx == 0.0 or ny == 0.0:
        return 0.0
    return dot / (nx * ny)


def similarity_oracle(g: KnowledgeGraph, present: set[str]) -> dict[str, float]:
    """Per-disease cosine similarity via sequential pure-Python accumulation.

    Iterates symptoms and diseases in graph order so the arithmetic matches
    a left-to-right summation exactly.
    """
    p = [1.0 if s in present else 0.0 for s in g.symptoms]
    p_sq = 0.0
    for v in p:
        p_sq += v * v
    sims = {}
    for d in g.diseases:
        dot = 0.0
        w_sq = 0.0
        for k, s in enumerate(g.symptoms):
            w = g.weight(s, d)
            dot += w * p[k]
            w_sq += w * w
        if p_sq == 0.0 or w_sq == 0.0:
            sims[d] = 0.0
        else:
            sims[d] = dot / math.sqrt(w_sq * p_sq)
    return sims


def brute_force_best_question(g: KnowledgeGraph, present: set[str], known: set[str]) -> str | None:
    """Exhaustive argmax of the similarity-weighted symptom score, clamped
    sims, ties by id; None when no unknown symptom exists."""
    sims = similarity_oracle(g, present)
    sims = {d: min(1.0, max(0.0, v)) for d, v in sims.items()}
    best = None
    best_score = None
    for s in g.symptoms:
        if s in known:
            continue
        score = 0.0
        for d in g.diseases:
            score += g.weight(s, d) * sims[d]
        if best is None or score > best_score or (score == best_score and s < best):
            best, best_score = s, score
    return best


def make_random_graph(
    rng: np.random.Generator,
    max_symptoms: int = 20,
    max_diseases: int = 10,
    density: float | None = None,
) -> KnowledgeGraph:
    n_s = int(rng.integers(2, max_symptoms + 1))
    n_d = int(rng.integers(2, max_diseases + 1))
    symptoms = [f"s{i:03d}" for i in range(n_s)]
    diseases = [f"d{i:03d}" for i in range(n_d)]
    density = density if density is not None else float(rng.uniform(0.2, 0.9))
    weights = {}
    for s in symptoms:
        for d in diseases:
            if rng.random() < density:
                weights[(s, d)] = float(rng.uniform(0.01, 1.0))
    # every disease needs at least one edge so rankings are non-degenerate
    for d in diseases:
        if not any(k[1] == d for k in weights):
            weights[(symptoms[int(rng.integers(0, n_s))], d)] = float(rng.uniform(0.01, 1.0))
    return KnowledgeGraph(symptoms=symptoms, diseases=diseases, sd_weights=weights)


# -- fixtures ----------------------------------------------------------------


@pytest.fixture
def toy_cases():
    return [
        CaseRecord.make("flu", ["fever", "cough", "aches"]),
        CaseRecord.make("flu", ["fever", "cough"]),
        CaseRecord.make("cold", ["cough", "sneeze"]),
        CaseRecord.make("cold", ["sneeze", "runny_nose", "cough"]),
        CaseRecord.make("gastro", ["nausea", "vomit", "cramps"]),
    ]


@pytest.fixture
def toy_graph(toy_cases):
    return build_graph(toy_cases)


@pytest.fixture
def uniform_graph():
    """Three diseases with disjoint, uniform-weight signatures."""
    cases = [
        CaseRecord.make("alpha", ["a1", "a2", "a3"]),
        CaseRecord.make("beta", ["b1", "b2", "b3"]),
        CaseRecord.make("gamma", ["c1", "c2", "c3"]),
    ]
    return build_graph(cases)
