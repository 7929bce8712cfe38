"""Synthesize annotated doctor-patient dialogues and read/write corpora.

A transcript is the closed loop of simulator complaint -> engine question
batches -> simulator answers -> diagnosis, with every turn carrying both
rendered text and structured annotations. Annotations are primary: metrics
and replay consume them, never the text.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path

from . import engine as eng
from .adapters import RuleBasedGuidance
from .errors import SchemaError, UnknownNodeError
from .kg import CaseRecord, KnowledgeGraph
from .simulator import SimulatedPatient

logger = logging.getLogger(__name__)

CORPUS_FORMAT_VERSION = 1


@dataclass
class DialogueTurn:
    role: str  # "doctor" | "patient"
    text: str
    annotations: dict

    def to_dict(self) -> dict:
        return {"role": self.role, "text": self.text, "annotations": self.annotations}


@dataclass
class DialogueTranscript:
    case: CaseRecord
    turns: list[DialogueTurn]
    final: dict
    question_rounds: int  # doctor question turns
    answer_rounds: int  # doctor answer/diagnosis turns, >= 1
    engine_seed: int = 0
    patient_seed: int = 0

    def initial_disclosure(self) -> list[str]:
        return list(self.turns[0].annotations.get("symptoms", []))

    def to_dict(self) -> dict:
        return {
            "case": {"disease": self.case.disease, "symptoms": sorted(self.case.symptoms)},
            "turns": [t.to_dict() for t in self.turns],
            "final": self.final,
            "question_rounds": self.question_rounds,
            "answer_rounds": self.answer_rounds,
            "engine_seed": self.engine_seed,
            "patient_seed": self.patient_seed,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "DialogueTranscript":
        return cls(
            case=CaseRecord.make(raw["case"]["disease"], raw["case"]["symptoms"]),
            turns=[DialogueTurn(**t) for t in raw["turns"]],
            final=raw["final"],
            question_rounds=raw["question_rounds"],
            answer_rounds=raw["answer_rounds"],
            engine_seed=raw.get("engine_seed", 0),
            patient_seed=raw.get("patient_seed", 0),
        )


@dataclass
class CorpusManifest:
    corpus_id: str
    graph_version: int
    engine_config: dict
    patient_config: dict
    renderer_id: str = "rule_based"
    split: str = "full"
    count: int = 0

    def to_dict(self) -> dict:
        return {
            "format_version": CORPUS_FORMAT_VERSION,
            "corpus_id": self.corpus_id,
            "graph_version": self.graph_version,
            "engine_config": self.engine_config,
            "patient_config": self.patient_config,
            "renderer_id": self.renderer_id,
            "split": self.split,
            "count": self.count,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "CorpusManifest":
        if raw.get("format_version") != CORPUS_FORMAT_VERSION:
            raise SchemaError(
                f"unsupported corpus format_version {raw.get('format_version')!r}",
                field="format_version",
            )
        return cls(
            corpus_id=raw["corpus_id"],
            graph_version=raw["graph_version"],
            engine_config=raw["engine_config"],
            patient_config=raw["patient_config"],
            renderer_id=raw.get("renderer_id", "rule_based"),
            split=raw.get("split", "full"),
            count=raw.get("count", 0),
        )


def _complaint_text(symptoms, guidance: RuleBasedGuidance) -> str:
    if not symptoms:
        return "I am not feeling well but cannot describe it precisely."
    phrases = [guidance.table.phrase_for(s) for s in sorted(symptoms)]
    return "Lately I have been troubled by " + ", ".join(phrases) + "."

def _answer_text(answers: dict, guidance: RuleBasedGuidance) -> str:
    yes = sorted(s for s, a in answers.items() if a is eng.Answer.PRESENT)
    no = sorted(s for s, a in answers.items() if a is eng.Answer.ABSENT)
    parts = []
    if yes:
        parts.append("Yes, I do have " + ", ".join(guidance.table.phrase_for(s) for s in yes) + ".")
    if no:
        parts.append("No " + ", ".join(guidance.table.phrase_for(s) for s in no) + ".")
    if not parts:
        parts.append("I am not sure about those.")
    return " ".join(parts)


def generate_dialogue(
    case: CaseRecord,
    g: KnowledgeGraph,
    engine_config: eng.EngineConfig,
    patient: SimulatedPatient,
    guidance: RuleBasedGuidance,
    expert=None,
) -> DialogueTranscript:
    """Run one full simulated consultation and annotate every turn."""
    if not g.has_disease(case.disease):
        raise UnknownNodeError(f"case disease {case.disease!r} not in graph")
    complaint = patient.initial_complaint(g)
    turns = [
        DialogueTurn(
            role="patient",
            text=_complaint_text(complaint, guidance),
            annotations={"kind": "complaint", "symptoms": sorted(complaint)},
        )
    ]
    session = eng.start_session(g, complaint, engine_config)
    while session.state is eng.SessionState.READY_TO_ASK:
        batch = eng.next_questions(session)
        if batch is None:
            break
        turns.append(
            DialogueTurn(
                role="doctor",
                text=guidance.render_question(batch),
                annotations={
                    "kind": "question",
                    "round": batch.round_no,
                    "symptoms": list(batch.symptoms),
                },
            )
        )
        answers = {
            s: (eng.Answer.PRESENT if patient.answer(s) else eng.Answer.ABSENT)
            for s in batch.symptoms
        }
        turns.append(
            DialogueTurn(
                role="patient",
                text=_answer_text(answers, guidance),
                annotations={
                    "kind": "answer",
                    "round": batch.round_no,
                    "answers": {s: a.value for s, a in sorted(answers.items())},
                },
            )
        )
        eng.record_answers(session, answers)

    diagnosis = eng.finalize(session, expert)
    turns.append(
        DialogueTurn(
            role="doctor",
            text=diagnosis.advice_text,
            annotations={
                "kind": "diagnosis",
                "disease": diagnosis.disease,
                "confidence": diagnosis.confidence,
            },
        )
    )
    return DialogueTranscript(
        case=case,
        turns=turns,
        final=diagnosis.to_dict(),
        question_rounds=session.round_no,
        answer_rounds=1,
        engine_seed=engine_config.seed,
        patient_seed=patient.seed,
    )


def _manifest_path(corpus_path) -> Path:
    return Path(corpus_path).with_suffix(".manifest.json")


def write_corpus(transcripts, manifest: CorpusManifest, destination) -> Path:
    """One transcript per JSON line plus a manifest sidecar; byte-stable."""
    destination = Path(destination)
    manifest.count = len(transcripts)
    with open(destination, "w", encoding="utf-8") as fh:
        for t in transcripts:
            fh.write(json.dumps(t.to_dict(), sort_keys=True, separators=(",", ":")))
            fh.write("\n")
    with open(_manifest_path(destination), "w", encoding="utf-8") as fh:
        json.dump(manifest.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return destination


_REQUIRED_TRANSCRIPT_FIELDS = ("case", "turns", "final", "question_rounds", "answer_rounds")


def read_corpus(source) -> tuple[CorpusManifest, list[DialogueTranscript]]:
    source = Path(source)
    with open(_manifest_path(source), "r", encoding="utf-8") as fh:
        manifest = CorpusManifest.from_dict(json.load(fh))
    transcripts = []
    with open(source, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"not valid JSON: {exc.msg}", line=lineno) from exc
            for key in _REQUIRED_TRANSCRIPT_FIELDS:
                if key not in raw:
                    raise SchemaError("missing field", line=lineno, field=key)
            transcripts.append(DialogueTranscript.from_dict(raw))
    return manifest, transcripts


def make_low_information_split(
    manifest: CorpusManifest, transcripts
) -> tuple[CorpusManifest, list[DialogueTranscript]]:
    """Keep only consultations that started with at most one disclosed symptom."""
    subset = [t for t in transcripts if len(t.initial_disclosure()) <= 1]
    if not subset:
        logger.warning("low-information split is empty: no transcript disclosed <= 1 symptom")
    sub_manifest = CorpusManifest(
        corpus_id=manifest.corpus_id + "-lowinfo",
        graph_version=manifest.graph_version,
        engine_config=dict(manifest.engine_config),
        patient_config=dict(manifest.patient_config),
        renderer_id=manifest.renderer_id,
        split="low_information",
        count=len(subset),
    )
    return sub_manifest, subset
