"""HTTP facade over replay sessions.

A thin JSON API the RepViz frontend (or any script) drives:

* ``POST /sessions`` - create a session from an uploaded trace or a file in
  the configured trace directory
* ``GET /sessions/{id}/state`` - descriptor, replayed prefix, per-node lanes
* ``POST /sessions/{id}/choose`` - replay one frontier event
* ``POST /sessions/{id}/reset`` - back to the initial state
* ``GET /sessions/{id}/replays`` - exhaustive enumeration for small traces
* ``GET /healthz``

Sessions live in memory, one mutation at a time per session, and are evicted
after an idle TTL.  Responses are pure functions of the trace and the
accepted choice sequence.
"""
from __future__ import annotations

import io
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .clock import CounterMode
from .errors import (
    RepClError,
    ReplayBoundError,
    ReplayChoiceError,
    TraceCycleError,
    TraceFormatError,
)
from .replay import ReplaySession, enumerate_replays
from .trace import EventRecord, ParsedTrace, parse_ascii, parse_binary, parse_jsonl

DEFAULT_TTL_SECONDS = 3600.0


class EventSummary(BaseModel):
    event_key: str
    event_id: int
    event_type: str
    node: str
    mx: int
    offsets: dict[str, int]
    counters: dict[str, int] | None = None
    counter_sum: int | None = None
    sender: str
    receiver: str | None = None


class SessionDescriptor(BaseModel):
    session_id: str
    trace_name: str
    total_events: int
    replayed_count: int
    frontier: list[EventSummary]
    done: bool
    n: int
    epsilon: int
    interval_us: int
    counter_mode: str
    nodes: list[str]


class LaneState(BaseModel):
    node: str
    events: list[EventSummary]


class SessionState(BaseModel):
    descriptor: SessionDescriptor
    replayed: list[EventSummary]
    lanes: list[LaneState]


class CreateSessionRequest(BaseModel):
    path: str


class ChooseRequest(BaseModel):
    event_key: str


class ReplaysResponse(BaseModel):
    sequences: list[list[str]]
    truncated: bool


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, violated_constraint: str | None = None):
        self.status = status
        self.code = code
        self.message = message
        self.violated_constraint = violated_constraint


@dataclass
class _Slot:
    session: ReplaySession
    name: str
    lock: threading.Lock = field(default_factory=threading.Lock)
    last_used: float = field(default_factory=time.monotonic)


class SessionStore:
    def __init__(self, ttl_seconds: float = DEFAULT_TTL_SECONDS):
        self.ttl = ttl_seconds
        self._slots: dict[str, _Slot] = {}
        self._lock = threading.Lock()

    def sweep(self) -> None:
        cutoff = time.monotonic() - self.ttl
        with self._lock:
            for sid in [s for s, slot in self._slots.items() if slot.last_used < cutoff]:
                del self._slots[sid]

    def put(self, session: ReplaySession, name: str) -> str:
        self.sweep()
        sid = uuid.uuid4().hex[:12]
        with self._lock:
            self._slots[sid] = _Slot(session=session, name=name)
        return sid

    def get(self, sid: str) -> _Slot:
        self.sweep()
        with self._lock:
            slot = self._slots.get(sid)
            if slot is None:
                raise ApiError(404, "session_not_found", f"no session {sid}")
            slot.last_used = time.monotonic()
            return slot


def _summary(record: EventRecord, trace: ParsedTrace) -> EventSummary:
    sum_mode = trace.config.counter_mode is CounterMode.SUM
    return EventSummary(
        event_key=record.key,
        event_id=record.event_id,
        event_type=record.event_type.value,
        node=record.node,
        mx=record.ts.mx,
        offsets={str(k): v for k, v in sorted(record.ts.offsets.items())},
        counters=None if sum_mode else {str(k): v for k, v in sorted(record.ts.counters.items())},
        counter_sum=record.ts.counter_sum if sum_mode else None,
        sender=record.sender,
        receiver=record.receiver,
    )


def _descriptor(sid: str, slot: _Slot) -> SessionDescriptor:
    session = slot.session
    trace = session.trace
    return SessionDescriptor(
        session_id=sid,
        trace_name=slot.name,
        total_events=len(session.events),
        replayed_count=len(session.replayed),
        frontier=[_summary(r, trace) for r in session.sorted_frontier()],
        done=session.done,
        n=trace.config.n,
        epsilon=trace.config.epsilon,
        interval_us=trace.config.interval_us,
        counter_mode=trace.config.counter_mode.value,
        nodes=list(trace.nodes),
    )


def _state(sid: str, slot: _Slot) -> SessionState:
    session = slot.session
    trace = session.trace
    replayed = [_summary(session.events[k], trace) for k in session.replayed]
    lanes = []
    for node in sorted(trace.nodes):
        lanes.append(
            LaneState(
                node=node,
                events=[s for s in replayed if s.node == node],
            )
        )
    return SessionState(descriptor=_descriptor(sid, slot), replayed=replayed, lanes=lanes)


def _parse_upload(name: str, blob: bytes) -> ParsedTrace:
    try:
        if blob.startswith(b"RPCLTR"):
            return parse_binary(io.BytesIO(blob))
        text = blob.decode("utf-8")
        lines = text.splitlines()
        first = next((ln for ln in lines if ln.strip()), "")
        if first.lstrip().startswith("{"):
            return parse_jsonl(lines)
        return parse_ascii(lines)
    except TraceFormatError as exc:
        raise ApiError(400, "trace_parse_error", str(exc)) from exc
    except UnicodeDecodeError as exc:
        raise ApiError(400, "trace_parse_error", f"{name}: not valid UTF-8") from exc


def create_app(
    trace_dir: str | None = None,
    static_dir: str | None = None,
    ttl_seconds: float = DEFAULT_TTL_SECONDS,
) -> FastAPI:
    app = FastAPI(title="repcl replay service")
    store = SessionStore(ttl_seconds=ttl_seconds)
    app.state.store = store
    app.state.trace_dir = Path(trace_dir) if trace_dir else None
    if static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=static_dir, html=True), name="ui")

    @app.exception_handler(ApiError)
    async def _api_error(_request: Request, exc: ApiError) -> JSONResponse:
        body: dict = {"code": exc.code, "message": exc.message}
        if exc.violated_constraint is not None:
            body["violated_constraint"] = exc.violated_constraint
        return JSONResponse(status_code=exc.status, content=body)

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.get("/traces")
    def traces() -> dict:
        base = app.state.trace_dir
        if base is None or not base.is_dir():
            return {"traces": []}
        names = sorted(
            p.name
            for p in base.iterdir()
            if p.is_file() and p.suffix in (".jsonl", ".txt", ".log", ".bin", ".repcl")
        )
        return {"traces": names}

    @app.post("/sessions", response_model=SessionDescriptor, status_code=201)
    async def create_session(request: Request) -> SessionDescriptor:
        content_type = request.headers.get("content-type", "")
        if content_type.startswith("multipart/form-data"):
            form = await request.form()
            upload = form.get("trace") or form.get("file")
            if upload is None or isinstance(upload, str):
                raise ApiError(400, "bad_request", "multipart form must carry a trace file")
            blob = await upload.read()
            name = upload.filename or "upload"
            trace = _parse_upload(name, blob)
        else:
            try:
                body = CreateSessionRequest.model_validate(await request.json())
            except Exception as exc:
                raise ApiError(400, "bad_request", f"expected {{path}} body: {exc}") from exc
            base = app.state.trace_dir or Path.cwd()
            target = (base / body.path).resolve()
            if not str(target).startswith(str(base.resolve())):
                raise ApiError(400, "bad_request", "path escapes the trace directory")
            if not target.is_file():
                raise ApiError(404, "trace_not_found", f"no trace file {body.path}")
            name = body.path
            trace = _parse_upload(name, target.read_bytes())
        try:
            session = ReplaySession(trace)
        except TraceCycleError as exc:
            raise ApiError(400, "trace_cycle", str(exc)) from exc
        sid = store.put(session, name)
        return _descriptor(sid, store.get(sid))

    @app.get("/sessions/{sid}/state", response_model=SessionState)
    def get_state(sid: str) -> SessionState:
        slot = store.get(sid)
        with slot.lock:
            return _state(sid, slot)

    @app.post("/sessions/{sid}/choose", response_model=SessionDescriptor)
    def choose(sid: str, body: ChooseRequest) -> SessionDescriptor:
        slot = store.get(sid)
        with slot.lock:
            try:
                slot.session.choose(body.event_key)
            except ReplayChoiceError as exc:
                raise ApiError(
                    409, "not_in_frontier", str(exc), violated_constraint=exc.violated_constraint
                ) from exc
            return _descriptor(sid, slot)

    @app.post("/sessions/{sid}/reset", response_model=SessionDescriptor)
    def reset(sid: str) -> SessionDescriptor:
        slot = store.get(sid)
        with slot.lock:
            slot.session.reset()
            return _descriptor(sid, slot)

    @app.get("/sessions/{sid}/replays", response_model=ReplaysResponse)
    def replays(sid: str, limit: int | None = None) -> ReplaysResponse:
        slot = store.get(sid)
        with slot.lock:
            try:
                sequences = enumerate_replays(slot.session.trace, limit=limit)
            except ReplayBoundError as exc:
                raise ApiError(400, "trace_too_large", str(exc)) from exc
            except RepClError as exc:
                raise ApiError(400, "enumeration_failed", str(exc)) from exc
        truncated = limit is not None and len(sequences) >= limit
        return ReplaysResponse(sequences=[list(s) for s in sequences], truncated=truncated)

    return app
