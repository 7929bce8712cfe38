"""Interrogation session state machine.

One session = one consultation: an initial complaint, scored question
batches, recorded answers, threshold-based early stopping, and a final
diagnosis with a graph-update proposal. Sessions are deterministic functions
of (graph, initial symptoms, config incl. seed, answer sequence).
"""

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DataError, StateError, ValidationError
from .kg import KnowledgeGraph, UpdateProposal, WeightDelta
from .scoring import (
    NoiseSchedule,
    Ranking,
    patient_vector,
    perturb_scores,
    rank_diseases,
    score_symptoms,
    select_candidates,
)


class SessionState(str, Enum):
    READY_TO_ASK = "ready_to_ask"
    AWAITING_ANSWERS = "awaiting_answers"
    FINALIZED = "finalized"


class Answer(str, Enum):
    PRESENT = "present"
    ABSENT = "absent"
    UNSURE = "unsure"


AnswerSet = dict[str, Answer]


@dataclass(frozen=True)
class EngineConfig:
    epsilon_stop: float = 0.9
    max_rounds: int = 10
    batch_size: int = 3
    noise: NoiseSchedule = field(default_factory=NoiseSchedule)
    top_n_diseases: int | None = None
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.epsilon_stop <= 1.0):
            raise DataError(f"epsilon_stop must be in (0, 1], got {self.epsilon_stop}")
        if self.max_rounds < 1:
            raise DataError(f"max_rounds must be >= 1, got {self.max_rounds}")
        if self.batch_size < 1:
            raise DataError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.top_n_diseases is not None and self.top_n_diseases < 1:
            raise DataError("top_n_diseases must be >= 1 or None")

    def to_dict(self) -> dict:
        return {
            "epsilon_stop": self.epsilon_stop,
            "max_rounds": self.max_rounds,
            "batch_size": self.batch_size,
            "sigma0": self.noise.sigma0,
            "top_n_diseases": self.top_n_diseases,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "EngineConfig":
        return cls(
            epsilon_stop=raw.get("epsilon_stop", 0.9),
            max_rounds=raw.get("max_rounds", 10),
            batch_size=raw.get("batch_size", 3),
            noise=NoiseSchedule(sigma0=raw.get("sigma0", 0.05)),
            top_n_diseases=raw.get("top_n_diseases"),
            seed=raw.get("seed", 0),
        )


@dataclass
class SymptomRecorder:
    """Per-session ledger of confirmed and already-asked symptoms."""

    present: set[str] = field(default_factory=set)
    absent: set[str] = field(default_factory=set)
    asked: set[str] = field(default_factory=set)

    def known(self) -> set[str]:
        return self.present | self.absent | self.asked


@dataclass(frozen=True)
class QuestionBatch:
    symptoms: tuple[str, ...]
    round_no: int


@dataclass(frozen=True)
class Diagnosis:
    disease: str
    confidence: float
    advice_text: str
    update_proposal: UpdateProposal
    provenance: str  # "rule_based", "remote", or "fallback"

    def to_dict(self) -> dict:
        return {
            "disease": self.disease,
            "confidence": self.confidence,
            "advice_text": self.advice_text,
            "update_proposal": self.update_proposal.to_dict(),
            "provenance": self.provenance,
        }


@dataclass
class Session:
    id: str
    graph: KnowledgeGraph
    config: EngineConfig
    recorder: SymptomRecorder
    initial_symptoms: tuple[str, ...]
    round_no: int = 0
    state: SessionState = SessionState.READY_TO_ASK
    ranking: Ranking = field(default_factory=list)
    history: list[tuple[QuestionBatch, AnswerSet]] = field(default_factory=list)
    outstanding: QuestionBatch | None = None
    diagnosis: Diagnosis | None = None
    events: list[dict] = field(default_factory=list)
    _rng: np.random.Generator = field(default=None, repr=False)

    def top_similarity(self) -> float:
        return self.ranking[0][1] if self.ranking else 0.0

    def snapshot(self) -> dict:
        """JSON-able view of the full session state, used for equality checks."""
        return {
            "id": self.id,
            "graph_version": self.graph.version,
            "config": self.config.to_dict(),
            "initial_symptoms": list(self.initial_symptoms),
            "recorder": {
                "present": sorted(self.recorder.present),
                "absent": sorted(self.recorder.absent),
                "asked": sorted(self.recorder.asked),
            },
            "round": self.round_no,
            "state": self.state.value,
            "ranking": [[d, s] for d, s in self.ranking],
            "history": [
                {
                    "round": batch.round_no,
                    "symptoms": list(batch.symptoms),
                    "answers": {k: v.value for k, v in sorted(answers.items())},
                }
                for batch, answers in self.history
            ],
            "outstanding": list(self.outstanding.symptoms) if self.outstanding else None,
            "diagnosis": self.diagnosis.to_dict() if self.diagnosis else None,
        }

    def _emit(self, kind: str, payload: dict) -> None:
        self.events.append(
            {"session_id": self.id, "seq": len(self.events), "kind": kind, "payload": payload}
        )


def _default_session_id(g: KnowledgeGraph, initial, config: EngineConfig) -> str:
    key = json.dumps(
        {"graph": g.version, "initial": sorted(initial), "config": config.to_dict()},
        sort_keys=True,
    )
    return "s" + hashlib.sha256(key.encode()).hexdigest()[:16]


def start_session(
    g: KnowledgeGraph,
    initial_symptoms,
    config: EngineConfig | None = None,
    session_id: str | None = None,
) -> Session:
    """Open a consultation with the given complaint (may be empty for cold start).

    Finalizes immediately when the complaint alone already clears the stop
    threshold, so no questions are asked at all.
    """
    config = config or EngineConfig()
    initial = tuple(sorted(set(initial_symptoms)))
    for s in initial:
        g.symptom_index(s)  # raises UnknownNodeError
    session = Session(
        id=session_id or _default_session_id(g, initial, config),
        graph=g,
        config=config,
        recorder=SymptomRecorder(present=set(initial)),
        initial_symptoms=initial,
        _rng=np.random.default_rng(config.seed),
    )
    _rerank(session)
    if session.top_similarity() >= config.epsilon_stop:
        session.state = SessionState.FINALIZED
    return session


def _rerank(session: Session) -> None:
    p = patient_vector(session.recorder.present, session.graph)
    session.ranking = rank_diseases(session.graph, p)


def _candidate_scores(session: Session) -> dict[str, float]:
    scores = score_symptoms(
        session.graph,
        session.ranking,
        session.recorder.known(),
        session.config.top_n_diseases,
    )
    if scores and session.top_similarity() == 0.0:
        # Cold start: every similarity is 0, so fall back to raw weight mass
        # instead of letting pure tie-breaking pick the batch.
        m = session.graph.weight_matrix()
        totals = m.sum(axis=1)
        scores = {
            s: float(totals[session.graph.symptom_index(s)]) for s in scores
        }
    return scores


def next_questions(session: Session) -> QuestionBatch | None:
    """Pick the next question batch, or finalize and return None when nothing
    is left to ask."""
    if session.state is not SessionState.READY_TO_ASK:
        raise StateError(f"cannot ask in state {session.state.value}")
    if session.round_no >= session.config.max_rounds:
        raise StateError("round limit reached")
    scores = _candidate_scores(session)
    if not scores:
        force_finalize(session)
        return None
    final = perturb_scores(scores, session.round_no + 1, session.config.noise, session._rng)
    chosen = select_candidates(final, session.config.batch_size)
    return pose_questions(session, chosen)


def pose_questions(session: Session, symptoms) -> QuestionBatch:
    """Record an explicit question batch (used by next_questions and by
    baseline policies that pick symptoms some other way)."""
    if session.state is not SessionState.READY_TO_ASK:
        raise StateError(f"cannot ask in state {session.state.value}")
    if session.round_no >= session.config.max_rounds:
        raise StateError("round limit reached")
    symptoms = tuple(symptoms)
    if not symptoms:
        raise ValidationError("question batch must not be empty")
    known = session.recorder.known()
    for s in symptoms:
        session.graph.symptom_index(s)
        if s in known:
            raise ValidationError(f"symptom {s!r} was already asked or recorded")
    if len(set(symptoms)) != len(symptoms):
        raise ValidationError("duplicate symptom in batch")
    session.round_no += 1
    batch = QuestionBatch(symptoms=symptoms, round_no=session.round_no)
    session.recorder.asked.update(symptoms)
    session.outstanding = batch
    session.state = SessionState.AWAITING_ANSWERS
    session._emit("question", {"round": batch.round_no, "symptoms": list(symptoms)})
    return batch


def record_answers(session: Session, answers: AnswerSet) -> Session:
    """Fold a batch's answers into the recorder, rerank, and maybe stop.

    Rejects the whole answer set (session unchanged) if any key is outside
    the outstanding batch. Unsure answers only mark the symptom asked.
    """
    if session.state is not SessionState.AWAITING_ANSWERS:
        raise StateError(f"cannot record answers in state {session.state.value}")
    batch = session.outstanding
    assert batch is not None
    allowed = set(batch.symptoms)
    for s in answers:
        if s not in allowed:
            raise ValidationError(f"answer for {s!r} is outside the outstanding batch")

    for s, a in answers.items():
        if a is Answer.PRESENT:
            session.recorder.present.add(s)
        elif a is Answer.ABSENT:
            session.recorder.absent.add(s)
        # Unsure: stays asked-only.

    session.history.append((batch, dict(answers)))
    session.outstanding = None
    session._emit(
        "answer",
        {
            "round": batch.round_no,
            "answers": {s: a.value for s, a in sorted(answers.items())},
        },
    )
    _rerank(session)
    if (
        session.top_similarity() >= session.config.epsilon_stop
        or session.round_no >= session.config.max_rounds
    ):
        session.state = SessionState.FINALIZED
    else:
        session.state = SessionState.READY_TO_ASK
    return session


def force_finalize(session: Session) -> None:
    """Stop questioning and diagnose with the best current ranking.

    Used when candidate symptoms run out and by the no-question baseline.
    """
    if session.state is SessionState.FINALIZED:
        return
    if session.state is SessionState.AWAITING_ANSWERS:
        raise StateError("cannot finalize with an unanswered batch outstanding")
    session.state = SessionState.FINALIZED


def _default_proposal(session: Session, disease: str) -> UpdateProposal:
    deltas = [
        WeightDelta(kind="sd", a=s, b=disease, delta=1.0)
        for s in sorted(session.recorder.present)
    ]
    deltas += [
        WeightDelta(kind="sd", a=s, b=disease, delta=-1.0)
        for s in sorted(session.recorder.absent)
    ]
    return UpdateProposal(deltas=tuple(deltas), provenance=session.id)


def finalize(session: Session, expert=None) -> Diagnosis:
    """Produce the diagnosis plus an update proposal (emitted, never applied here).

    The expert adapter may fail or name a disease outside the ranking; either
    degrades to the rule-based default with provenance "fallback".
    """
    if session.state is not SessionState.FINALIZED:
        raise StateError(f"cannot finalize in state {session.state.value}")
    if session.diagnosis is not None:
        return session.diagnosis
    if not session.ranking:
        raise DataError("cannot diagnose against an empty ranking")

    from .adapters import RuleBasedExpert  # local import avoids a cycle

    fallback = RuleBasedExpert()
    provenance = "rule_based"
    if expert is None:
        expert = fallback
    try:
        reply = expert.diagnose(session.recorder, session.ranking)
        provenance = getattr(expert, "provenance", "rule_based")
        if not any(d == reply.disease for d, _ in session.ranking):
            raise ValidationError(f"expert named unranked disease {reply.disease!r}")
    except Exception:
        reply = fallback.diagnose(session.recorder, session.ranking)
        provenance = "fallback"

    proposal = _default_proposal(session, reply.disease)
    if reply.update_hints is not None:
        in_recorder = session.recorder.present | session.recorder.absent
        hinted = [
            WeightDelta(kind="sd", a=s, b=reply.disease, delta=float(direction))
            for s, direction in reply.update_hints
            if s in in_recorder
        ]
        if hinted:
            proposal = UpdateProposal(deltas=tuple(hinted), provenance=session.id)

    diagnosis = Diagnosis(
        disease=reply.disease,
        confidence=session.top_similarity(),
        advice_text=reply.advice_text,
        update_proposal=proposal,
        provenance=provenance,
    )
    session.diagnosis = diagnosis
    session._emit("diagnosis", diagnosis.to_dict())
    return diagnosis


def transcript_lines(session: Session) -> list[str]:
    """Session events as JSON Lines; bit-stable across equal-seed replays."""
    return [
        json.dumps(ev, sort_keys=True, separators=(",", ":"))
        for ev in session.events
    ]
