"""HTTP service: knowledge-base browsing, live sessions, FMEA reports.

State model: the knowledge base is immutable and shared; every session
is backed by an append-only ``<session-id>.itlog`` file in the
persistence directory, and the fault log lives in ``faultlog.itrec``
next to them. Any view the API serves is reproducible from those files
alone, which is exactly how restart recovery works: on startup the store
replays every event log it finds.

Sessions are single-writer. Each one carries a mutex; a second advance
arriving while one is in flight gets 409 instead of waiting, so slow
clients cannot interleave transitions.
"""

from __future__ import annotations

import logging
import threading
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from . import fmea
from .fmea import FAULT_LOG_SUFFIX, FaultRecord, FaultRecordStore, UNRESOLVED
from .model import KnowledgeBase, NodeKind, UnknownFailureModeError, UnknownTreeError
from .potential import PotentialParams, grid_csv_text
from .session import (
    EVENT_LOG_SUFFIX,
    Clock,
    EventKind,
    InvalidAnswerError,
    Session,
    SessionFinishedError,
    SessionStatus,
    abort_session,
    advance,
    append_events,
    current_prompt,
    read_event_log,
    replay,
    start_session,
    utc_now,
)

logger = logging.getLogger(__name__)

FAULT_LOG_NAME = "faultlog" + FAULT_LOG_SUFFIX


class _SessionHandle:
    def __init__(self, session: Session, log_path: Path, persisted: int = 0):
        self.session = session
        self.log_path = log_path
        self.persisted = persisted
        self.lock = threading.Lock()

    def flush(self) -> None:
        fresh = self.session.events[self.persisted :]
        append_events(self.log_path, fresh)
        self.persisted = len(self.session.events)


class SessionService:
    """Owns the session handles and the fault log for one service process."""

    def __init__(self, kb: KnowledgeBase, persistence_dir: str | Path, clock: Clock = utc_now):
        self.kb = kb
        self.persistence_dir = Path(persistence_dir)
        self.persistence_dir.mkdir(parents=True, exist_ok=True)
        self.clock = clock
        self._handles: dict[str, _SessionHandle] = {}
        self._registry_lock = threading.Lock()
        self._faultlog_lock = threading.Lock()
        self._recover()

    @property
    def fault_log_path(self) -> Path:
        return self.persistence_dir / FAULT_LOG_NAME

    def _recover(self) -> None:
        for log_path in sorted(self.persistence_dir.glob("*" + EVENT_LOG_SUFFIX)):
            try:
                events = read_event_log(log_path)
                session = replay(self.kb, events)
            except Exception:
                logger.exception("could not recover session log %s", log_path)
                continue
            session.clock = self.clock
            self._handles[session.id] = _SessionHandle(
                session, log_path, persisted=len(events)
            )
        if self._handles:
            logger.info("recovered %d session(s)", len(self._handles))

    def create_session(self, tree_id: str) -> _SessionHandle:
        session = start_session(self.kb, tree_id, clock=self.clock)
        log_path = self.persistence_dir / (session.id + EVENT_LOG_SUFFIX)
        handle = _SessionHandle(session, log_path)
        handle.flush()
        with self._registry_lock:
            self._handles[session.id] = handle
        return handle

    def handle(self, session_id: str) -> _SessionHandle:
        with self._registry_lock:
            try:
                return self._handles[session_id]
            except KeyError:
                raise HTTPException(404, f"unknown session '{session_id}'") from None

    def session_ids(self) -> list[str]:
        with self._registry_lock:
            return sorted(self._handles)

    def ingest_fault_record(self, record: FaultRecord) -> tuple[bool, int]:
        """Returns (added, total records) after idempotent ingestion."""
        with self._faultlog_lock:
            store = fmea.load_fault_log(self.fault_log_path, self.kb)
            added = store.ingest(record)
            if added:
                fmea.append_fault_record(self.fault_log_path, record)
            return added, len(store)

    def fault_store(self) -> FaultRecordStore:
        with self._faultlog_lock:
            return fmea.load_fault_log(self.fault_log_path, self.kb)


def session_view(service: SessionService, session: Session) -> dict:
    """Projection of one session for API clients; pure function of the
    session's event log plus the knowledge base."""
    kb = service.kb
    view: dict = {
        "session": session.id,
        "status": session.status.value,
        "stack_depth": len(session.stack),
        "breadcrumb": [
            {"tree": c.tree, "text": kb.tree(c.tree).node(c.node).text}
            for c in session.trail
        ],
        "prompt": None,
        "hints": None,
        "finding": None,
    }
    if session.is_active:
        prompt = current_prompt(session)
        view["prompt"] = {
            "kind": prompt.kind.value,
            "text": prompt.text,
            "answers": list(prompt.answers),
            "context_note": prompt.context_note,
        }
        if prompt.kind is NodeKind.DECISION:
            ranked = fmea.rank_branches(kb, session.cursor.tree, session.cursor.node)
            view["hints"] = [
                {"label": rb.label, "score": rb.cost.score if rb.cost else None}
                for rb in ranked
            ]
    elif session.status is SessionStatus.FINISHED_FINDING:
        view["finding"] = _finding_view(service, session)
    return view


def _finding_view(service: SessionService, session: Session) -> dict:
    kb = service.kb
    node = session.node
    ref = next(
        e.payload["ref"]
        for e in session.events
        if e.kind is EventKind.FINDING_RECORDED
    )
    finding: dict = {
        "node": node.id,
        "text": node.text,
        "context_note": node.note,
        "mode": None,
    }
    if kb.has_failure_mode(ref):
        mode = kb.failure_mode(ref)
        overall = max(mode.cost.levels())
        finding["mode"] = {
            "id": mode.id,
            "name": mode.name,
            "area": mode.area.value,
            "operational_impact": mode.cost.operational_impact.value,
            "time_cost": mode.cost.time_cost.value,
            "disturbance_risk": mode.cost.disturbance_risk.value,
            "effects": {
                dim.value: fmea.describe_severity(dim, getattr(mode.cost, dim.value)).effect_text
                for dim in fmea.CostDimension
            },
            "intervention": fmea.INTERVENTIONS[overall],
            "definition": fmea.SEVERITY_DEFINITIONS[overall],
        }
    return finding


class CreateSessionRequest(BaseModel):
    tree: str


class AdvanceRequest(BaseModel):
    answer: str | None = None
    acknowledge: bool = False


class FaultRecordRequest(BaseModel):
    session: str
    ts: str
    mode: str
    area: str = ""
    duration_s: float = 0.0
    notes: str = ""


def create_app(
    kb: KnowledgeBase,
    persistence_dir: str | Path,
    clock: Clock = utc_now,
) -> FastAPI:
    app = FastAPI(title="itriage", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    service = SessionService(kb, persistence_dir, clock)
    app.state.service = service

    # -- knowledge base ------------------------------------------------

    @app.get("/kb/trees")
    def list_trees() -> list[dict]:
        return [
            {"id": t.id, "title": t.title, "node_count": len(t.nodes)}
            for t in kb.trees
        ]

    @app.get("/kb/trees/{tree_id}")
    def get_tree(tree_id: str) -> dict:
        try:
            tree = kb.tree(tree_id)
        except UnknownTreeError:
            raise HTTPException(404, f"unknown tree '{tree_id}'") from None
        return {
            "id": tree.id,
            "title": tree.title,
            "nodes": [
                {
                    "id": n.id,
                    "kind": n.kind.value,
                    "text": n.text,
                    "edges": [{"label": e.label, "target": e.target} for e in n.edges],
                    "jump_target": (
                        {"tree": n.jump_target.tree, "resume": n.jump_target.resume}
                        if n.jump_target
                        else None
                    ),
                    "failure_mode": n.failure_mode_ref,
                    "open": n.open_flag,
                    "note": n.note,
                }
                for n in tree.nodes
            ],
        }

    @app.get("/kb/failure-modes")
    def list_failure_modes() -> list[dict]:
        return [
            {
                "id": m.id,
                "area": m.area.value,
                "name": m.name,
                "operational_impact": m.cost.operational_impact.value,
                "time_cost": m.cost.time_cost.value,
                "disturbance_risk": m.cost.disturbance_risk.value,
                "notes": m.notes,
            }
            for m in kb.catalog
        ]

    # -- sessions --------------------------------------------------------

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionRequest) -> dict:
        try:
            handle = service.create_session(body.tree)
        except UnknownTreeError:
            raise HTTPException(404, f"unknown tree '{body.tree}'") from None
        return session_view(service, handle.session)

    @app.get("/sessions")
    def list_sessions() -> list[str]:
        return service.session_ids()

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        handle = service.handle(session_id)
        return session_view(service, handle.session)

    @app.post("/sessions/{session_id}/advance")
    def advance_session(session_id: str, body: AdvanceRequest) -> dict:
        handle = service.handle(session_id)
        if body.answer is None and not body.acknowledge:
            raise HTTPException(400, "provide an answer or acknowledge: true")
        if not handle.lock.acquire(blocking=False):
            raise HTTPException(409, "session is busy with another advance")
        try:
            try:
                advance(handle.session, body.answer)
            except SessionFinishedError as exc:
                raise HTTPException(409, str(exc)) from None
            except InvalidAnswerError as exc:
                raise HTTPException(400, str(exc)) from None
            handle.flush()
        finally:
            handle.lock.release()
        return session_view(service, handle.session)

    @app.delete("/sessions/{session_id}")
    def delete_session(session_id: str) -> dict:
        handle = service.handle(session_id)
        if not handle.lock.acquire(blocking=False):
            raise HTTPException(409, "session is busy with another advance")
        try:
            try:
                abort_session(handle.session)
            except SessionFinishedError as exc:
                raise HTTPException(409, str(exc)) from None
            handle.flush()
        finally:
            handle.lock.release()
        return session_view(service, handle.session)

    # -- FMEA ------------------------------------------------------------

    @app.get("/reports/fmea")
    def fmea_report() -> dict:
        store = service.fault_store()
        rows = fmea.report_rows(kb, store)
        return {
            "records": len(store),
            "rows": [
                {
                    "area": r.area,
                    "mode": r.mode_id,
                    "name": r.name,
                    "operational_impact": r.impact.value,
                    "time_cost": r.time_cost.value,
                    "disturbance_risk": r.disturbance.value,
                    "count": r.count,
                    "fraction": r.fraction,
                    "bucket": r.bucket,
                    "rpn": r.rpn,
                }
                for r in rows
            ],
        }

    @app.post("/faultlog", status_code=201)
    def ingest_fault(body: FaultRecordRequest) -> dict:
        if body.mode != UNRESOLVED and not kb.has_failure_mode(body.mode):
            raise HTTPException(400, f"unknown failure mode '{body.mode}'")
        try:
            record = fmea.record_from_json(body.model_dump_json())
        except (ValueError, KeyError) as exc:
            raise HTTPException(400, f"bad fault record: {exc}") from None
        try:
            added, count = service.ingest_fault_record(record)
        except UnknownFailureModeError as exc:
            raise HTTPException(400, str(exc)) from None
        return {"added": added, "records": count}

    # -- potential grid ----------------------------------------------------

    @app.get("/potential/grid")
    def potential_grid(
        u: float,
        u_rf: float,
        omega: float,
        a: float,
        b: float,
        c: float,
        ap: float,
        bp: float,
        cp: float,
        axes: str = "xy",
        lo1: float = -1.0,
        hi1: float = 1.0,
        lo2: float = -1.0,
        hi2: float = 1.0,
        n1: int = 50,
        n2: int = 50,
        t: float = 0.0,
    ):
        from fastapi.responses import PlainTextResponse

        if len(axes) != 2:
            raise HTTPException(400, "axes must be two of x, y, z, e.g. 'xy'")
        try:
            params = PotentialParams(u, u_rf, omega, (a, b, c), (ap, bp, cp))
            text = grid_csv_text(
                params, (axes[0], axes[1]), ((lo1, hi1), (lo2, hi2)), (n1, n2), t
            )
        except ValueError as exc:
            raise HTTPException(400, str(exc)) from None
        return PlainTextResponse(text, media_type="text/csv")

    return app
