"""HTTP surface of the auth/index server.

Thin by design: every handler decodes the raw body with the strict codec,
calls one ServerCore method, and encodes the result. All failures travel
as ApiError and map to exactly one status code each. Responses are
canonical JSON bytes, so the wire format is identical whether a message
came from here or from the codec directly.

Device endpoints carry the token in the body; physician endpoints carry
the session token in an ``Authorization: Bearer`` header because their
request bodies are pure payloads.
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, Request, Response
from starlette.concurrency import run_in_threadpool

from pumplink.protocol import (
    ApiError,
    ErrorCode,
    EventReport,
    IndexRequest,
    LoginRequest,
    ProposalRequest,
    ResolveRequest,
    SetIndexRequest,
    decode_message,
    dumps_canonical,
    encode_message,
    error_body,
)
from pumplink.server.core import ServerCore

_JSON = "application/json"


def _bearer_token(request: Request) -> str:
    header = request.headers.get("authorization", "")
    if not header.startswith("Bearer "):
        raise ApiError(ErrorCode.TOKEN_UNKNOWN, "missing bearer session token")
    return header[len("Bearer ") :].strip()


def _int_param(request: Request, name: str) -> Optional[int]:
    raw = request.query_params.get(name)
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise ApiError(ErrorCode.MALFORMED, f"{name} must be an integer")


def create_app(core: ServerCore) -> FastAPI:
    app = FastAPI(openapi_url=None, docs_url=None, redoc_url=None)
    app.state.core = core

    @app.exception_handler(ApiError)
    async def _on_api_error(request: Request, exc: ApiError) -> Response:
        return Response(content=error_body(exc), status_code=exc.status, media_type=_JSON)

    def _ok(body: bytes) -> Response:
        return Response(content=body, status_code=200, media_type=_JSON)

    # -- device endpoints --------------------------------------------------

    @app.post("/api/login")
    async def login(request: Request) -> Response:
        req = decode_message(await request.body(), LoginRequest)
        # key stretching is deliberately slow; keep it off the event loop
        resp = await run_in_threadpool(core.handle_login, req)
        return _ok(encode_message(resp))

    @app.post("/api/index")
    async def index(request: Request) -> Response:
        req = decode_message(await request.body(), IndexRequest)
        return _ok(encode_message(core.handle_index(req)))

    @app.post("/api/patients/{patient_id}/events")
    async def device_event(patient_id: str, request: Request) -> Response:
        report = decode_message(await request.body(), EventReport)
        if report.patient_id != patient_id:
            raise ApiError(ErrorCode.MALFORMED, "patient_id in path and body disagree")
        return _ok(encode_message(core.report_device_event(report)))

    # -- physician endpoints -----------------------------------------------

    @app.post("/api/patients/{patient_id}/index")
    async def set_index(patient_id: str, request: Request) -> Response:
        session = _bearer_token(request)
        req = decode_message(await request.body(), SetIndexRequest)
        resp = core.set_infusion_index(session, patient_id, req.volume_ml, req.rate_ml_h)
        return _ok(encode_message(resp))

    @app.post("/api/patients/{patient_id}/proposal")
    async def propose(patient_id: str, request: Request) -> Response:
        req = decode_message(await request.body(), ProposalRequest)
        return _ok(encode_message(core.propose_index(patient_id, req.volume_ml, req.rate_ml_h)))

    @app.post("/api/patients/{patient_id}/proposal/resolve")
    async def resolve(patient_id: str, request: Request) -> Response:
        session = _bearer_token(request)
        req = decode_message(await request.body(), ResolveRequest)
        return _ok(encode_message(core.resolve_proposal(session, patient_id, req.approve)))

    @app.get("/api/patients/{patient_id}/history")
    async def history(patient_id: str, request: Request) -> Response:
        session = _bearer_token(request)
        entries = core.get_history(
            session, patient_id, _int_param(request, "from_ms"), _int_param(request, "to_ms")
        )
        return _ok(dumps_canonical({"entries": [e.to_wire() for e in entries]}))

    @app.get("/api/patients/{patient_id}/status")
    async def status(patient_id: str, request: Request) -> Response:
        session = _bearer_token(request)
        return _ok(dumps_canonical(core.get_status(session, patient_id)))

    @app.get("/api/patients")
    async def patients(request: Request) -> Response:
        session = _bearer_token(request)
        return _ok(dumps_canonical({"patients": core.list_patients(session)}))

    # -- operational -------------------------------------------------------

    @app.get("/healthz")
    async def healthz() -> Response:
        return _ok(dumps_canonical({"ok": True}))

    return app
