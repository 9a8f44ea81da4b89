"""HTTP interface for consultations and knowledge-base editing.

All responses are JSON with confidence values rendered at a fixed six
decimals (see ``wire``). Errors share one shape::

    {"error": {"code": "<machine code>", "message": "..."}}

with the machine codes documented in FORMATS.md. Knowledge-base edits use
optimistic concurrency: the client sends the digest it read in ``If-Match``
and a stale digest is rejected with 409 ``kb_conflict``, so editors never
block consultation sessions (which stay pinned to their own snapshot).
"""

from __future__ import annotations

from pathlib import Path
from typing import Literal, Optional

from fastapi import FastAPI, Header, Request, Response
from fastapi.exceptions import RequestValidationError
from pydantic import BaseModel
from starlette.exceptions import HTTPException as StarletteHTTPException

from .engine import Observation, ObservationSource, explain
from .kb import (
    Condition,
    Connective,
    Hypothesis,
    IntegrityError,
    IssueKind,
    KnowledgeKind,
    Relation,
    Rule,
    Season,
    UnknownRuleError,
    delete_rule,
    upsert_rule,
)
from .store import AdvisoryStore, MissingSnapshotError, UnknownSessionError
from .wire import consultation_payload, kb_payload, render_json

__all__ = ["create_app"]

_VERB = Literal["is", "shows", "appears", "are"]
_SEASON = Literal["spring", "summer", "autumn", "winter", "unspecified"]


class PremiseIn(BaseModel):
    object: str
    verb: _VERB = "is"
    value: str


class ConclusionIn(BaseModel):
    statement: str
    season: Optional[_SEASON] = None


class RuleIn(BaseModel):
    premises: list[PremiseIn]
    connective: Literal["and", "or"] = "and"
    conclusion: ConclusionIn
    cf: float
    knowledge_kind: Literal["derivation", "factual", "control"] = "derivation"


class ObservationIn(BaseModel):
    object: str
    verb: _VERB = "is"
    value: str
    cf: Optional[float] = None


class ObservationsIn(BaseModel):
    observations: list[ObservationIn]


def _json(payload: dict, status_code: int = 200) -> Response:
    return Response(
        content=render_json(payload) + "\n",
        media_type="application/json",
        status_code=status_code,
    )


def _error(status_code: int, code: str, message: str) -> Response:
    return _json({"error": {"code": code, "message": message}}, status_code)


class _ApiFailure(Exception):
    def __init__(self, status_code: int, code: str, message: str):
        self.status_code = status_code
        self.code = code
        self.message = message
        super().__init__(message)


_ISSUE_CODES = {
    IssueKind.UNKNOWN_INDICATOR: "unknown_indicator",
    IssueKind.ILLEGAL_STATE: "illegal_state",
    IssueKind.CF_OUT_OF_RANGE: "invalid_cf",
}


def create_app(
    store: AdvisoryStore,
    cors_origin: Optional[str] = None,
    ui_dir: Optional[Path] = None,
) -> FastAPI:
    app = FastAPI(title="dsage", docs_url=None, redoc_url=None, openapi_url=None)

    if cors_origin:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=[cors_origin],
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.exception_handler(_ApiFailure)
    async def handle_failure(request: Request, exc: _ApiFailure) -> Response:
        return _error(exc.status_code, exc.code, exc.message)

    @app.exception_handler(RequestValidationError)
    async def handle_validation(request: Request, exc: RequestValidationError) -> Response:
        first = exc.errors()[0] if exc.errors() else {}
        where = ".".join(str(part) for part in first.get("loc", ()))
        message = f"{first.get('msg', 'invalid request body')} at {where}" if where else "invalid request body"
        return _error(400, "schema_invalid", message)

    @app.exception_handler(StarletteHTTPException)
    async def handle_http(request: Request, exc: StarletteHTTPException) -> Response:
        code = {404: "not_found", 405: "method_not_allowed"}.get(exc.status_code, "http_error")
        return _error(exc.status_code, code, str(exc.detail))

    def _load_session(session_id: str):
        try:
            return store.load_session(session_id)
        except UnknownSessionError as exc:
            raise _ApiFailure(404, "unknown_session", str(exc)) from exc

    def _require_head_match(if_match: Optional[str]) -> str:
        if not if_match:
            raise _ApiFailure(400, "schema_invalid", "If-Match header with the current KB digest is required")
        head = store.head()
        if head is None:
            raise _ApiFailure(404, "not_found", "store has no knowledge base yet")
        if if_match.strip('"') != head:
            raise _ApiFailure(409, "kb_conflict", f"knowledge base is at {head}, not {if_match}")
        return head

    def _observation(kb, entry: ObservationIn) -> Observation:
        condition = Condition(entry.object, Relation(entry.verb), entry.value)
        indicator = kb.indicator(condition.object)
        if indicator is None:
            raise _ApiFailure(422, "unknown_indicator", f"unknown indicator {condition.object!r}")
        if condition.value not in indicator.legal_values:
            raise _ApiFailure(
                422, "illegal_state", f"{condition.value!r} is not a legal state of {condition.object!r}"
            )
        if entry.cf is None:
            return Observation(condition, 1.0, ObservationSource.DEFAULT)
        if not 0.0 <= entry.cf <= 1.0:
            raise _ApiFailure(422, "invalid_cf", f"confidence {entry.cf} is outside [0, 1]")
        return Observation(condition, entry.cf, ObservationSource.USER)

    # -- endpoints ----------------------------------------------------------

    @app.get("/api/health")
    async def health() -> Response:
        return _json({"status": "ok"})

    @app.get("/api/kb")
    async def get_kb() -> Response:
        digest = store.head()
        if digest is None:
            raise _ApiFailure(404, "not_found", "store has no knowledge base yet")
        return _json(kb_payload(store.load_kb(digest), digest))

    @app.put("/api/kb/rules/{rule_id}")
    async def put_rule(
        rule_id: str, body: RuleIn, if_match: Optional[str] = Header(None, alias="If-Match")
    ) -> Response:
        _require_head_match(if_match)
        kb = store.head_kb()
        rule = Rule(
            id=rule_id,
            premises=tuple(
                Condition(p.object, Relation(p.verb), p.value) for p in body.premises
            ),
            connective=Connective(body.connective),
            conclusion=Hypothesis(
                body.conclusion.statement,
                Season(body.conclusion.season) if body.conclusion.season else Season.UNSPECIFIED,
            ),
            expert_cf=body.cf,
            knowledge_kind=KnowledgeKind(body.knowledge_kind),
        )
        try:
            updated = upsert_rule(kb, rule)
        except IntegrityError as exc:
            issue = exc.issues[0]
            raise _ApiFailure(422, _ISSUE_CODES.get(issue.kind, "invalid_rule"), issue.message) from exc
        digest = store.commit_kb(updated)
        return _json({"kb_version": digest, "rule_id": rule_id})

    @app.delete("/api/kb/rules/{rule_id}")
    async def remove_rule(
        rule_id: str, if_match: Optional[str] = Header(None, alias="If-Match")
    ) -> Response:
        _require_head_match(if_match)
        kb = store.head_kb()
        try:
            updated = delete_rule(kb, rule_id)
        except UnknownRuleError as exc:
            raise _ApiFailure(404, "unknown_rule", str(exc)) from exc
        except IntegrityError as exc:
            issue = exc.issues[0]
            raise _ApiFailure(422, _ISSUE_CODES.get(issue.kind, "invalid_rule"), issue.message) from exc
        digest = store.commit_kb(updated)
        return _json({"kb_version": digest, "rule_id": rule_id})

    @app.post("/api/sessions", status_code=201)
    async def create_session() -> Response:
        try:
            session = store.create_session()
        except MissingSnapshotError as exc:
            raise _ApiFailure(404, "not_found", str(exc)) from exc
        return _json(
            {
                "id": session.id,
                "kb_version": session.kb_version,
                "created_at": session.created_at.isoformat(),
            },
            status_code=201,
        )

    @app.put("/api/sessions/{session_id}/observations")
    async def put_observations(session_id: str, body: ObservationsIn) -> Response:
        session = _load_session(session_id)
        kb = store.load_kb(session.kb_version)
        observations = [_observation(kb, entry) for entry in body.observations]
        updated = store.replace_observations(session, observations)
        return _json({"session_id": updated.id, "count": len(updated.wm)})

    @app.post("/api/sessions/{session_id}/advise")
    async def advise(session_id: str) -> Response:
        session = _load_session(session_id)
        updated, advisories = store.advise(session)
        result = updated.last_result
        assert result is not None
        payload = consultation_payload(
            advisories,
            result,
            kb_version=updated.kb_version,
            explain_for=lambda a: explain(result, a.hypothesis),
        )
        return _json(payload)

    @app.post("/api/sessions/{session_id}/rebase")
    async def rebase(session_id: str) -> Response:
        session = _load_session(session_id)
        try:
            updated = store.rebase_session(session)
        except MissingSnapshotError as exc:
            raise _ApiFailure(404, "not_found", str(exc)) from exc
        return _json({"session_id": updated.id, "kb_version": updated.kb_version, "kb_rebased": True})

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
