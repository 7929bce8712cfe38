"""HTTP consultation service.

Thin JSON layer over the engine: create a session, post answers (structured
or free text), inspect state. Finalized sessions enqueue their update
proposals; the queue is drained between sessions via apply_pending_updates,
never while a live session is bound to the current graph version.
"""

import logging
from dataclasses import dataclass, field as dc_field

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import engine as eng
from .adapters import CueLexicon, RuleBasedGuidance, TermAliasTable
from .errors import DataError, UnknownNodeError, ValidationError
from .kg import KnowledgeGraph
from .store import SessionStore, UpdateQueue, apply_pending_updates

logger = logging.getLogger(__name__)


class CreateSessionBody(BaseModel):
    initial_text: str | None = None
    symptom_ids: list[str] | None = None
    config: dict | None = None


class AnswersBody(BaseModel):
    answers: dict[str, str] | None = None
    text: str | None = None


@dataclass
class AppContext:
    graph: KnowledgeGraph
    store: SessionStore
    queue: UpdateQueue
    guidance: RuleBasedGuidance
    expert: object | None = None
    defaults: eng.EngineConfig = dc_field(default_factory=eng.EngineConfig)
    strict: bool = True
    update_step: float = 0.05


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=status, content={"error": {"code": code, "message": message}}
    )


def _ranking_view(session: eng.Session, top: int = 5) -> list[dict]:
    return [{"disease": d, "similarity": s} for d, s in session.ranking[:top]]


def _question_view(ctx: AppContext, batch: eng.QuestionBatch) -> dict:
    return {
        "round": batch.round_no,
        "symptoms": list(batch.symptoms),
        "text": ctx.guidance.render_question(batch),
    }


def _advance(ctx: AppContext, session: eng.Session) -> dict:
    """Ask the next batch or finalize, returning the client-facing payload."""
    payload: dict = {
        "session_id": session.id,
        "state": session.state.value,
        "round": len(session.history),
        "ranking": _ranking_view(session),
        "question": None,
        "diagnosis": None,
    }
    if session.state is eng.SessionState.READY_TO_ASK:
        batch = ctx.store.ask(session.id)
        if batch is not None:
            payload["state"] = session.state.value
            payload["question"] = _question_view(ctx, batch)
            return payload
    if session.state is eng.SessionState.FINALIZED:
        diagnosis = ctx.store.finalize(session.id, ctx.expert)
        ctx.queue.enqueue(diagnosis.update_proposal)
        payload["state"] = session.state.value
        payload["diagnosis"] = diagnosis.to_dict()
    return payload


def create_app(
    graph: KnowledgeGraph,
    *,
    alias_table: TermAliasTable | None = None,
    cues: CueLexicon | None = None,
    defaults: eng.EngineConfig | None = None,
    log_dir=None,
    strict: bool = True,
    expert=None,
) -> FastAPI:
    table = alias_table or TermAliasTable.for_graph(graph)
    ctx = AppContext(
        graph=graph,
        store=SessionStore(log_dir=log_dir),
        queue=UpdateQueue(),
        guidance=RuleBasedGuidance(table, cues),
        expert=expert,
        defaults=defaults or eng.EngineConfig(),
        strict=strict,
    )
    app = FastAPI(title="dopi consultation service")
    app.state.ctx = ctx

    @app.exception_handler(RequestValidationError)
    async def _malformed(request: Request, exc: RequestValidationError):
        return _error(400, "BAD_REQUEST", "malformed request body")

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        if body.initial_text is None and body.symptom_ids is None:
            return _error(400, "BAD_REQUEST", "provide initial_text or symptom_ids")
        symptoms: set[str] = set(body.symptom_ids or [])
        if body.initial_text:
            aligned = ctx.guidance.align(body.initial_text)
            if not aligned and not symptoms and ctx.strict:
                return _error(422, "NO_SYMPTOMS", "no symptoms recognized in the text")
            symptoms |= aligned
        try:
            config = (
                eng.EngineConfig.from_dict({**ctx.defaults.to_dict(), **body.config})
                if body.config
                else ctx.defaults
            )
        except DataError as exc:
            return _error(400, "BAD_CONFIG", str(exc))
        try:
            session = ctx.store.create(ctx.graph, symptoms, config)
        except UnknownNodeError as exc:
            return _error(422, "UNKNOWN_SYMPTOM", str(exc))
        return _advance(ctx, session)

    @app.post("/sessions/{session_id}/answers")
    def post_answers(session_id: str, body: AnswersBody):
        session = ctx.store.get(session_id)
        if session is None:
            return _error(404, "UNKNOWN_SESSION", f"no session {session_id!r}")
        if session.state is not eng.SessionState.AWAITING_ANSWERS:
            return _error(409, "WRONG_STATE", f"session is {session.state.value}")
        if body.answers is None and body.text is None:
            return _error(400, "BAD_REQUEST", "provide answers or text")
        if body.answers is not None:
            try:
                answers = {s: eng.Answer(v) for s, v in body.answers.items()}
            except ValueError as exc:
                return _error(400, "BAD_REQUEST", f"bad answer value: {exc}")
        else:
            answers = ctx.guidance.parse_answer(body.text, session.outstanding)
        try:
            ctx.store.record_answers(session_id, answers)
        except ValidationError as exc:
            return _error(422, "ANSWER_OUTSIDE_BATCH", str(exc))
        return _advance(ctx, session)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        session = ctx.store.get(session_id)
        if session is None:
            return _error(404, "UNKNOWN_SESSION", f"no session {session_id!r}")
        return {
            "session_id": session.id,
            "state": session.state.value,
            "round": len(session.history),
            "recorder": {
                "present": sorted(session.recorder.present),
                "absent": sorted(session.recorder.absent),
                "asked": sorted(session.recorder.asked),
            },
            "ranking": _ranking_view(session),
            "outstanding": list(session.outstanding.symptoms) if session.outstanding else None,
            "history": [
                {
                    "round": batch.round_no,
                    "symptoms": list(batch.symptoms),
                    "answers": {s: a.value for s, a in sorted(answers.items())},
                }
                for batch, answers in session.history
            ],
            "diagnosis": session.diagnosis.to_dict() if session.diagnosis else None,
        }

    return app


def drain_updates(app: FastAPI, defer_if_live: bool = True):
    """Apply queued proposals and swap in the new graph version."""
    ctx: AppContext = app.state.ctx
    new_graph, applied, audit = apply_pending_updates(
        ctx.store,
        ctx.queue,
        ctx.graph,
        step=ctx.update_step,
        defer_if_live=defer_if_live,
    )
    ctx.graph = new_graph
    return new_graph, applied, audit
