"""Policy benchmarks over dialogue corpora.

Replays every corpus case against each policy with a fresh session seeded
deterministically from (base seed, policy index, case index), then aggregates
the metric suite. Reference question/answer round counts come from the
corpus transcripts.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import engine as eng
from .dialogue import CorpusManifest, DialogueTranscript
from .errors import DataError
from .kg import KnowledgeGraph
from .metrics import diagnostic_accuracy, interrogation_distance, qa_ratio
from .simulator import SimulatedPatient

POLICY_IDS = ("dopi", "greedy_no_noise", "random_question", "no_question")


@dataclass(frozen=True)
class PolicySpec:
    id: str
    engine_overrides: dict = field(default_factory=dict)
    simulator_overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.id not in POLICY_IDS:
            raise DataError(f"unknown policy {self.id!r}; expected one of {POLICY_IDS}")


@dataclass
class PolicyResult:
    policy_id: str
    accuracy: float
    qa_ratio: float
    interrogation_distance: float
    n: int
    rounds_hist: dict[int, int]
    pairs: list = field(default_factory=list, repr=False)  # (predicted, truth)

    def to_dict(self) -> dict:
        return {
            "id": self.policy_id,
            "accuracy": self.accuracy,
            "qa_ratio": self.qa_ratio,
            "interrogation_distance": self.interrogation_distance,
            "n": self.n,
            "rounds_hist": {str(k): v for k, v in sorted(self.rounds_hist.items())},
        }


@dataclass
class EvalReport:
    policies: list[PolicyResult]
    corpus_id: str
    graph_version: int
    seeds: dict

    def to_dict(self) -> dict:
        return {
            "policies": [p.to_dict() for p in self.policies],
            "corpus_id": self.corpus_id,
            "graph_version": self.graph_version,
            "seeds": self.seeds,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_table(self) -> str:
        headers = ("policy", "accuracy", "qa_ratio", "interrogation_distance", "n")
        rows = [
            (
                p.policy_id,
                f"{p.accuracy:.4f}",
                f"{p.qa_ratio:.4f}",
                f"{p.interrogation_distance:.4f}",
                str(p.n),
            )
            for p in self.policies
        ]
        widths = [
            max(len(headers[c]), *(len(r[c]) for r in rows)) if rows else len(headers[c])
            for c in range(len(headers))
        ]
        def fmt(row):
            return "  ".join(cell.ljust(widths[c]) for c, cell in enumerate(row))
        lines = [fmt(headers), fmt(tuple("-" * w for w in widths))]
        lines += [fmt(r) for r in rows]
        return "\n".join(lines)


def write_report(report: EvalReport, destination) -> Path:
    destination = Path(destination)
    destination.write_text(report.to_json(), encoding="utf-8")
    return destination


def _case_seeds(base_seed: int, policy_idx: int, case_idx: int) -> tuple[int, int, int]:
    state = np.random.SeedSequence([base_seed, policy_idx, case_idx]).generate_state(3)
    return int(state[0]), int(state[1]), int(state[2])


def _policy_engine_config(manifest: CorpusManifest, spec: PolicySpec, engine_seed: int) -> eng.EngineConfig:
    raw = dict(manifest.engine_config)
    raw.update(spec.engine_overrides)
    if spec.id == "greedy_no_noise":
        raw["sigma0"] = 0.0
    raw["seed"] = engine_seed
    return eng.EngineConfig.from_dict(raw)


def _answer_batch(patient: SimulatedPatient, batch: eng.QuestionBatch) -> eng.AnswerSet:
    return {
        s: (eng.Answer.PRESENT if patient.answer(s) else eng.Answer.ABSENT)
        for s in batch.symptoms
    }


def _run_case(
    spec: PolicySpec,
    graph: KnowledgeGraph,
    transcript: DialogueTranscript,
    config: eng.EngineConfig,
    patient: SimulatedPatient,
    question_rng: np.random.Generator,
) -> tuple[str, int]:
    """Returns (predicted disease, question rounds Q^m)."""
    session = eng.start_session(graph, transcript.initial_disclosure(), config)
    if spec.id == "no_question":
        eng.force_finalize(session)
    else:
        while session.state is eng.SessionState.READY_TO_ASK:
            if spec.id == "random_question":
                unknown = sorted(set(graph.symptoms) - session.recorder.known())
                if not unknown:
                    eng.force_finalize(session)
                    break
                size = min(config.batch_size, len(unknown))
                picked = question_rng.choice(len(unknown), size=size, replace=False)
                batch = eng.pose_questions(session, [unknown[i] for i in sorted(picked)])
            else:
                batch = eng.next_questions(session)
                if batch is None:
                    break
            eng.record_answers(session, _answer_batch(patient, batch))
    diagnosis = eng.finalize(session)
    return diagnosis.disease, session.round_no


def run_benchmark(
    manifest: CorpusManifest,
    transcripts,
    policies,
    graph: KnowledgeGraph,
    seed: int = 0,
) -> EvalReport:
    """Evaluate each policy over the corpus; deterministic given seeds."""
    if graph.version != manifest.graph_version:
        raise DataError(
            f"graph version {graph.version} does not match corpus graph version "
            f"{manifest.graph_version}"
        )
    transcripts = sorted(transcripts, key=lambda t: t.case.disease)
    if not transcripts:
        raise DataError("empty corpus")

    results = []
    for policy_idx, spec in enumerate(policies):
        pairs = []
        qa_counts = []
        distance_pairs = []
        hist: dict[int, int] = {}
        for case_idx, transcript in enumerate(transcripts):
            engine_seed, patient_seed, rng_seed = _case_seeds(seed, policy_idx, case_idx)
            if spec.id == "dopi":
                # The flagship policy replays the corpus generation protocol,
                # so its noise stream must match the reference transcript's.
                engine_seed = transcript.engine_seed
            config = _policy_engine_config(manifest, spec, engine_seed)
            sim_kwargs = dict(manifest.patient_config)
            sim_kwargs.update(spec.simulator_overrides)
            sim_kwargs.pop("seed", None)
            sim_kwargs.pop("initial_disclosure", None)  # disclosure comes from the transcript
            patient = SimulatedPatient(
                truth=transcript.case, seed=patient_seed, **sim_kwargs
            )
            predicted, q_m = _run_case(
                spec, graph, transcript, config, patient,
                np.random.default_rng(rng_seed),
            )
            a_m = 1  # the model answers exactly once: the diagnosis
            pairs.append((predicted, transcript.case.disease))
            qa_counts.append((q_m, a_m))
            distance_pairs.append(
                ((q_m, a_m), (transcript.question_rounds, transcript.answer_rounds))
            )
            hist[q_m] = hist.get(q_m, 0) + 1
        results.append(
            PolicyResult(
                policy_id=spec.id,
                accuracy=diagnostic_accuracy(pairs),
                qa_ratio=qa_ratio(qa_counts),
                interrogation_distance=interrogation_distance(distance_pairs),
                n=len(pairs),
                rounds_hist=hist,
                pairs=pairs,
            )
        )
    return EvalReport(
        policies=results,
        corpus_id=manifest.corpus_id,
        graph_version=graph.version,
        seeds={"base": seed},
    )
