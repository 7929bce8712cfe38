"""Patient vectors, disease ranking, and question-candidate scoring.

All functions are pure given their inputs plus an explicit rng, so rankings
and question batches replay bit-identically under a fixed seed. Ties are
broken lexicographically by id everywhere.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DataError
from .kg import KnowledgeGraph

Ranking = list[tuple[str, float]]


@dataclass(frozen=True)
class NoiseSchedule:
    """Round-decaying std-dev for the score perturbation.

    sigma(round) = sigma0 / round: non-increasing and always >= 0. Subclass
    and override sigma() for a different decay law.
    """

    sigma0: float = 0.05

    def __post_init__(self):
        if self.sigma0 < 0:
            raise DataError(f"sigma0 must be non-negative, got {self.sigma0}")

    def sigma(self, round_no: int) -> float:
        if round_no < 1:
            raise DataError(f"round must be >= 1, got {round_no}")
        return self.sigma0 / round_no


def patient_vector(present, g: KnowledgeGraph) -> np.ndarray:
    """Binary vector over the graph's symptom order: 1 iff confirmed present.

    Confirmed-absent symptoms stay 0, same as unknown ones.
    """
    p = np.zeros(len(g.symptoms))
    for s in present:
        p[g.symptom_index(s)] = 1.0
    return p


def cosine_similarity(p: np.ndarray, d: np.ndarray) -> float:
    """Cosine of two non-negative vectors, 0 if either has zero norm."""
    p = np.asarray(p, dtype=float)
    d = np.asarray(d, dtype=float)
    if p.shape != d.shape:
        raise DataError(f"dimension mismatch: {p.shape} vs {d.shape}")
    p_sq = float(p @ p)
    d_sq = float(d @ d)
    if p_sq == 0.0 or d_sq == 0.0:
        return 0.0
    # sqrt of the product keeps self-similarity at exactly 1.0
    return min(1.0, max(0.0, float(p @ d) / float(np.sqrt(p_sq * d_sq))))


def rank_diseases(g: KnowledgeGraph, p: np.ndarray) -> Ranking:
    """Every disease scored against the patient vector, best first.

    Ties break by disease id ascending so replays are deterministic.
    """
    if len(p) != len(g.symptoms):
        raise DataError(
            f"patient vector length {len(p)} != symptom count {len(g.symptoms)}"
        )
    sims = kernels.cosine_sims(g.weight_matrix(), np.asarray(p, dtype=float))
    sims = np.clip(sims, 0.0, 1.0)
    return sorted(zip(g.diseases, sims.tolist()), key=lambda t: (-t[1], t[0]))


def score_symptoms(
    g: KnowledgeGraph,
    ranking: Ranking,
    known,
    top_n_diseases: int | None = None,
) -> dict[str, float]:
    """Similarity-weighted score for every symptom not yet known.

    Score(j) = sum over diseases of w(j, i) * similarity(i), taken over the
    top_n_diseases best-ranked diseases (all of them when None). Symptoms in
    `known` (confirmed present/absent or already asked) are excluded.
    """
    considered = ranking if top_n_diseases is None else ranking[:top_n_diseases]
    sims = np.zeros(len(g.diseases))
    for disease, s in considered:
        sims[g.disease_index(disease)] = s
    raw = kernels.weighted_scores(g.weight_matrix(), sims)
    known = set(known)
    return {
        s: float(raw[k])
        for k, s in enumerate(g.symptoms)
        if s not in known
    }


def perturb_scores(
    scores: dict[str, float],
    round_no: int,
    schedule: NoiseSchedule,
    rng: np.random.Generator,
) -> dict[str, float]:
    """Add independent Gaussian noise to each score.

    Noise std is schedule.sigma(round_no); a zero sigma returns the scores
    unchanged without consuming the rng. Draws happen in sorted-id order so a
    fixed seed replays identically.
    """
    sigma = schedule.sigma(round_no)
    if sigma == 0.0 or not scores:
        return dict(scores)
    ids = sorted(scores)
    noise = rng.normal(0.0, sigma, size=len(ids))
    return {s: scores[s] + float(noise[n]) for n, s in enumerate(ids)}


def select_candidates(final_scores: dict[str, float], batch_size: int = 3) -> list[str]:
    """The highest-scoring symptoms, ties by id ascending, truncated to batch_size."""
    if batch_size < 1:
        raise DataError(f"batch_size must be >= 1, got {batch_size}")
    ordered = sorted(final_scores.items(), key=lambda t: (-t[1], t[0]))
    return [s for s, _ in ordered[:batch_size]]
