"""Session persistence and post-session graph updates.

Sessions live in memory; when a log directory is configured every state
change is appended to a per-session JSON Lines event log. Replaying a log
against the same graph reconstructs the session exactly (the engine is
deterministic per seed), so recovery after a crash is a pure re-run. A
trailing half-written line is ignored.

Update proposals are queued and applied between sessions, in arrival order,
producing a new graph version; live sessions keep their old version.
"""

import json
import logging
import secrets
from dataclasses import dataclass, field
from pathlib import Path

from . import engine as eng
from .errors import DataError, SchemaError, UnknownNodeError
from .kg import KnowledgeGraph, UpdateProposal, apply_update

logger = logging.getLogger(__name__)


class SessionStore:
    def __init__(self, log_dir=None):
        self.log_dir = Path(log_dir) if log_dir else None
        if self.log_dir:
            self.log_dir.mkdir(parents=True, exist_ok=True)
        self.sessions: dict[str, eng.Session] = {}
        self._flushed: dict[str, int] = {}  # engine events already written
        self._file_seq: dict[str, int] = {}

    # -- logging ------------------------------------------------------------

    def _log_path(self, session_id: str) -> Path:
        return self.log_dir / f"{session_id}.jsonl"

    def _append(self, session_id: str, kind: str, payload: dict) -> None:
        if not self.log_dir:
            self._file_seq[session_id] = self._file_seq.get(session_id, 0) + 1
            return
        seq = self._file_seq.get(session_id, 0)
        record = {"session_id": session_id, "seq": seq, "kind": kind, "payload": payload}
        with open(self._log_path(session_id), "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, sort_keys=True, separators=(",", ":")))
            fh.write("\n")
        self._file_seq[session_id] = seq + 1

    def _flush_events(self, session: eng.Session) -> None:
        start = self._flushed.get(session.id, 0)
        for ev in session.events[start:]:
            self._append(session.id, ev["kind"], ev["payload"])
        self._flushed[session.id] = len(session.events)

    # -- lifecycle ------------------------------------------------------------

    def create(
        self,
        graph: KnowledgeGraph,
        initial_symptoms,
        config: eng.EngineConfig,
    ) -> eng.Session:
        session_id = "sess_" + secrets.token_urlsafe(12)
        session = eng.start_session(graph, initial_symptoms, config, session_id=session_id)
        self.sessions[session_id] = session
        self._append(
            session_id,
            "created",
            {
                "graph_version": graph.version,
                "config": config.to_dict(),
                "initial_symptoms": list(session.initial_symptoms),
            },
        )
        self._flush_events(session)
        return session

    def get(self, session_id: str) -> eng.Session | None:
        return self.sessions.get(session_id)

    def ask(self, session_id: str) -> eng.QuestionBatch | None:
        session = self.sessions[session_id]
        batch = eng.next_questions(session)
        if batch is None:
            # Ran out of candidates: the forced finalization must survive a
            # restart, so it gets its own log record.
            self._append(session_id, "finalized", {"forced": True})
        self._flush_events(session)
        return batch

    def record_answers(self, session_id: str, answers: eng.AnswerSet) -> eng.Session:
        session = self.sessions[session_id]
        eng.record_answers(session, answers)
        self._flush_events(session)
        return session

    def finalize(self, session_id: str, expert=None) -> eng.Diagnosis:
        session = self.sessions[session_id]
        diagnosis = eng.finalize(session, expert)
        self._flush_events(session)
        return diagnosis

    def live_session_count(self, graph_version: int) -> int:
        return sum(
            1
            for s in self.sessions.values()
            if s.graph.version == graph_version and s.state is not eng.SessionState.FINALIZED
        )

    # -- recovery -------------------------------------------------------------

    def recover(self, graph: KnowledgeGraph) -> list[str]:
        """Rebuild sessions from every log in the directory; returns ids.

        Logs bound to a different graph version are skipped with a warning.
        """
        if not self.log_dir:
            return []
        recovered = []
        for path in sorted(self.log_dir.glob("*.jsonl")):
            records = read_log(path)
            if not records:
                continue
            created = records[0]
            if created["kind"] != "created":
                logger.warning("log %s does not start with a created record", path.name)
                continue
            if created["payload"]["graph_version"] != graph.version:
                logger.warning(
                    "log %s bound to graph version %s, current is %s; skipped",
                    path.name,
                    created["payload"]["graph_version"],
                    graph.version,
                )
                continue
            session = replay_session(graph, records)
            self.sessions[session.id] = session
            self._flushed[session.id] = len(session.events)
            self._file_seq[session.id] = len(records)
            recovered.append(session.id)
        return recovered


def read_log(path) -> list[dict]:
    """Parse a session event log, dropping a trailing partial line."""
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            if lineno == len(lines):
                logger.warning("dropping truncated trailing record in %s", path)
                break
            raise SchemaError(f"corrupt event log: {exc.msg}", line=lineno) from exc
    return records


def replay_session(graph: KnowledgeGraph, records) -> eng.Session:
    """Re-run a logged session from scratch.

    Question events are recomputed and verified against the log; a mismatch
    means the graph or config drifted and raises. The diagnosis is restored
    from its event payload (a remote expert's text is not recomputable).
    """
    created = records[0]
    if created["kind"] != "created":
        raise SchemaError("event log must start with a created record")
    payload = created["payload"]
    config = eng.EngineConfig.from_dict(payload["config"])
    session = eng.start_session(
        graph,
        payload["initial_symptoms"],
        config,
        session_id=created["session_id"],
    )
    for record in records[1:]:
        kind = record["kind"]
        if kind == "question":
            batch = eng.next_questions(session)
            logged = record["payload"]["symptoms"]
            if batch is None or list(batch.symptoms) != logged:
                raise DataError(
                    f"event log divergence at seq {record['seq']}: "
                    f"recomputed {list(batch.symptoms) if batch else None}, logged {logged}"
                )
        elif kind == "answer":
            answers = {
                s: eng.Answer(v) for s, v in record["payload"]["answers"].items()
            }
            eng.record_answers(session, answers)
        elif kind == "finalized":
            eng.force_finalize(session)
        elif kind == "diagnosis":
            p = record["payload"]
            if session.state is not eng.SessionState.FINALIZED:
                eng.force_finalize(session)
            session.diagnosis = eng.Diagnosis(
                disease=p["disease"],
                confidence=p["confidence"],
                advice_text=p["advice_text"],
                update_proposal=UpdateProposal.from_dict(p["update_proposal"]),
                provenance=p["provenance"],
            )
            session._emit("diagnosis", session.diagnosis.to_dict())
        else:
            raise SchemaError(f"unknown event kind {kind!r}")
    return session


@dataclass
class UpdateQueue:
    proposals: list[UpdateProposal] = field(default_factory=list)

    def enqueue(self, proposal: UpdateProposal) -> None:
        self.proposals.append(proposal)

    def __len__(self) -> int:
        return len(self.proposals)


def apply_pending_updates(
    store: SessionStore,
    queue: UpdateQueue,
    graph: KnowledgeGraph,
    step: float = 0.05,
    allow_create: bool = False,
    defer_if_live: bool = True,
) -> tuple[KnowledgeGraph, int, list[dict]]:
    """Apply queued proposals in arrival order; returns (graph, applied, audit).

    Defers (queue intact, graph unchanged) while any live session is bound to
    the current version. Proposals referencing stale nodes or edges are
    skipped with an audit record instead of poisoning the queue. An empty
    queue is a no-op: no version bump.
    """
    if defer_if_live and store.live_session_count(graph.version) > 0:
        return graph, 0, []
    if not queue.proposals:
        return graph, 0, []
    applied = 0
    audit: list[dict] = []
    for proposal in queue.proposals:
        try:
            graph = apply_update(graph, proposal, step=step, allow_create=allow_create)
            applied += 1
        except UnknownNodeError as exc:
            audit.append({"provenance": proposal.provenance, "reason": str(exc)})
            logger.warning("skipped proposal from %s: %s", proposal.provenance, exc)
    queue.proposals.clear()
    return graph, applied, audit
