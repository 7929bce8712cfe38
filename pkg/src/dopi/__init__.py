"""Knowledge-graph-driven proactive interrogation engine.

A weighted symptom-disease graph drives multi-turn questioning: diseases are
ranked by cosine similarity against the confirmed symptoms, candidate
questions are scored by similarity-weighted edge mass with decaying Gaussian
exploration noise, and questioning stops early once the best candidate
clears a confidence threshold. Includes a simulated patient, dialogue corpus
synthesis, a policy benchmark suite, an HTTP consultation service, and a CLI.
"""

from .engine import (
    Answer,
    Diagnosis,
    EngineConfig,
    QuestionBatch,
    Session,
    SessionState,
    SymptomRecorder,
    finalize,
    next_questions,
    record_answers,
    start_session,
)
from .kg import (
    CaseRecord,
    KnowledgeGraph,
    UpdateProposal,
    WeightDelta,
    apply_update,
    build_graph,
    disease_vector,
    load_graph,
    save_graph,
)
from .scoring import (
    NoiseSchedule,
    cosine_similarity,
    patient_vector,
    perturb_scores,
    rank_diseases,
    score_symptoms,
    select_candidates,
)

__version__ = "0.1.0"

__all__ = [
    "Answer",
    "CaseRecord",
    "Diagnosis",
    "EngineConfig",
    "KnowledgeGraph",
    "NoiseSchedule",
    "QuestionBatch",
    "Session",
    "SessionState",
    "SymptomRecorder",
    "UpdateProposal",
    "WeightDelta",
    "apply_update",
    "build_graph",
    "cosine_similarity",
    "disease_vector",
    "finalize",
    "load_graph",
    "next_questions",
    "patient_vector",
    "perturb_scores",
    "rank_diseases",
    "record_answers",
    "save_graph",
    "score_symptoms",
    "select_candidates",
    "start_session",
]
