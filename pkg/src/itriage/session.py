"""Guided troubleshooting sessions over a knowledge base.

A session walks one person through the decision trees: it rests on
action, note, decision and jump nodes (emitting a prompt), and advances
one input at a time. Arriving at a terminal settles immediately:

    finish   -> session ends with status ``finished_ok``
    finding  -> the suspected failure mode is recorded, status
                ``finished_finding``
    return   -> the jump stack pops and the walk resumes in the caller
                tree at the node recorded by the jump; an empty stack
                ends the session with ``finished_ok``

Jump nodes rest like prompts; acknowledging one pushes
``(current tree, resume node)`` onto the stack and lands on the target
tree's first real node (the start node's successor).

Every transition appends events to an append-only log, and
``replay(kb, events)`` reconstructs the exact session state from that
log, verifying along the way that the recorded events are consistent
with the knowledge base (tampered labels or reordered events are
rejected with the offending sequence number). Timestamps come from an
injected clock so runs are reproducible under test.

Event logs persist as ``<session-id>.itlog`` files, one JSON object per
line with fields ``seq``, ``ts`` (RFC 3339) and ``kind`` plus the
kind-specific payload.
"""

from __future__ import annotations

import enum
import json
import secrets
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable

from .model import KnowledgeBase, Node, NodeKind

EVENT_LOG_SUFFIX = ".itlog"

#: Cycles are legitimate in these trees; this guard turns authoring
#: mistakes (or adversarial logs) into clean aborts instead of hangs.
DEFAULT_MAX_STEPS = 10_000

Clock = Callable[[], datetime]


def utc_now() -> datetime:
    return datetime.now(timezone.utc)


class SessionStatus(str, enum.Enum):
    ACTIVE = "active"
    FINISHED_OK = "finished_ok"
    FINISHED_FINDING = "finished_finding"
    ABORTED = "aborted"


class EventKind(str, enum.Enum):
    STARTED = "started"
    PROMPTED = "prompted"
    ANSWERED = "answered"
    ACKNOWLEDGED = "acknowledged"
    JUMPED = "jumped"
    RETURNED = "returned"
    FINDING_RECORDED = "finding_recorded"
    FINISHED = "finished"


#: Event kinds supplied by the caller; everything else is engine-derived.
INPUT_EVENT_KINDS = frozenset({EventKind.ANSWERED, EventKind.ACKNOWLEDGED})


@dataclass(frozen=True)
class SessionEvent:
    seq: int
    ts: datetime
    kind: EventKind
    payload: dict[str, str] = field(default_factory=dict)

    def signature(self) -> tuple[str, tuple[tuple[str, str], ...]]:
        """Kind and payload only, for comparisons that ignore timestamps."""
        return (self.kind.value, tuple(sorted(self.payload.items())))


@dataclass(frozen=True)
class Cursor:
    tree: str
    node: str


@dataclass(frozen=True)
class Prompt:
    kind: NodeKind
    text: str
    answers: tuple[str, ...] = ()
    context_note: str | None = None


class SessionError(Exception):
    """Base class for session-engine errors."""


class SessionFinishedError(SessionError):
    def __init__(self, session_id: str, status: SessionStatus):
        self.session_id = session_id
        self.status = status
        super().__init__(f"session {session_id} already ended ({status.value})")


class InvalidAnswerError(SessionError):
    def __init__(self, message: str, available: tuple[str, ...] = ()):
        self.available = available
        super().__init__(message)


class ReplayError(SessionError):
    def __init__(self, seq: int | None, message: str):
        self.seq = seq
        where = "event log" if seq is None else f"event {seq}"
        super().__init__(f"{where}: {message}")


@dataclass
class Session:
    """Mutable walk state; single writer, one advance at a time."""

    id: str
    kb: KnowledgeBase
    cursor: Cursor
    stack: list[Cursor]
    events: list[SessionEvent]
    status: SessionStatus
    trail: list[Cursor]
    steps: int = 0
    max_steps: int = DEFAULT_MAX_STEPS
    clock: Clock = utc_now

    @property
    def node(self) -> Node:
        return self.kb.tree(self.cursor.tree).node(self.cursor.node)

    @property
    def is_active(self) -> bool:
        return self.status is SessionStatus.ACTIVE

    def visited_texts(self) -> list[str]:
        return [self.kb.tree(c.tree).node(c.node).text for c in self.trail]

    def _stamp(self, emits: list[tuple[EventKind, dict[str, str]]]) -> None:
        for kind, payload in emits:
            self.events.append(
                SessionEvent(len(self.events), self.clock(), kind, payload)
            )


def new_session_id() -> str:
    """URL-safe random 128-bit identifier, safe to use as a file name."""
    return secrets.token_urlsafe(16)


def start_session(
    kb: KnowledgeBase,
    tree_id: str,
    clock: Clock = utc_now,
    session_id: str | None = None,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> Session:
    """Open a session on ``tree_id``, resting on the start node's successor."""
    tree = kb.tree(tree_id)  # raises UnknownTreeError
    sid = session_id if session_id is not None else new_session_id()
    session = Session(
        id=sid,
        kb=kb,
        cursor=Cursor(tree_id, tree.start_node().id),
        stack=[],
        events=[],
        status=SessionStatus.ACTIVE,
        trail=[],
        max_steps=max_steps,
        clock=clock,
    )
    emits: list[tuple[EventKind, dict[str, str]]] = [
        (EventKind.STARTED, {"tree": tree_id, "session": sid})
    ]
    landing = tree.start_node().edges[0].target
    _settle(session, Cursor(tree_id, landing), emits)
    session._stamp(emits)
    return session


def current_prompt(session: Session) -> Prompt:
    """The prompt for the node the session is resting on (pure read)."""
    if not session.is_active:
        raise SessionFinishedError(session.id, session.status)
    node = session.node
    answers = node.branch_labels() if node.kind is NodeKind.DECISION else ()
    return Prompt(node.kind, node.text, answers, node.note)


def advance(session: Session, answer: str | None = None) -> Session:
    """Apply one input: a branch label for decisions, None to acknowledge.

    Decision cursors require ``answer`` to be one of the prompt's labels;
    action, note and jump cursors require ``answer is None``. Exceeding
    ``max_steps`` aborts the session cleanly instead of raising.
    """
    if not session.is_active:
        raise SessionFinishedError(session.id, session.status)

    session.steps += 1
    if session.steps > session.max_steps:
        emits: list[tuple[EventKind, dict[str, str]]] = []
        _finish(session, SessionStatus.ABORTED, emits)
        session._stamp(emits)
        return session

    emits = _transition(session, answer)
    session._stamp(emits)
    return session


def abort_session(session: Session) -> Session:
    """Abort an active session (no-op error if already ended)."""
    if not session.is_active:
        raise SessionFinishedError(session.id, session.status)
    emits: list[tuple[EventKind, dict[str, str]]] = []
    _finish(session, SessionStatus.ABORTED, emits)
    session._stamp(emits)
    return session


# ---------------------------------------------------------------------------
# Transition core (shared by live sessions and replay)
# ---------------------------------------------------------------------------


def _transition(
    session: Session, answer: str | None
) -> list[tuple[EventKind, dict[str, str]]]:
    node = session.node
    emits: list[tuple[EventKind, dict[str, str]]] = []

    if node.kind is NodeKind.DECISION:
        labels = node.branch_labels()
        if answer is None:
            raise InvalidAnswerError(
                f"node '{node.id}' is a decision; expected one of {list(labels)}",
                labels,
            )
        if answer not in labels:
            raise InvalidAnswerError(
                f"answer {answer!r} is not available at node '{node.id}'; "
                f"expected one of {list(labels)}",
                labels,
            )
        emits.append((EventKind.ANSWERED, {"label": answer}))
        target = next(e.target for e in node.edges if e.label == answer)
        _settle(session, Cursor(session.cursor.tree, target), emits)
        return emits

    if node.kind in (NodeKind.ACTION, NodeKind.NOTE):
        if answer is not None:
            raise InvalidAnswerError(
                f"node '{node.id}' takes a plain acknowledgement, not an answer"
            )
        emits.append((EventKind.ACKNOWLEDGED, {}))
        _settle(session, Cursor(session.cursor.tree, node.edges[0].target), emits)
        return emits

    if node.kind is NodeKind.JUMP:
        if answer is not None:
            raise InvalidAnswerError(
                f"node '{node.id}' takes a plain acknowledgement, not an answer"
            )
        assert node.jump_target is not None
        emits.append((EventKind.ACKNOWLEDGED, {}))
        session.stack.append(Cursor(session.cursor.tree, node.jump_target.resume))
        target_tree = session.kb.tree(node.jump_target.tree)
        landing = target_tree.start_node().edges[0].target
        emits.append((EventKind.JUMPED, {"tree": target_tree.id, "node": landing}))
        _settle(session, Cursor(target_tree.id, landing), emits)
        return emits

    raise SessionError(
        f"session {session.id} is resting on unexpected node kind "
        f"{node.kind.value}"
    )


def _settle(
    session: Session,
    cursor: Cursor,
    emits: list[tuple[EventKind, dict[str, str]]],
) -> None:
    """Move to ``cursor`` and run any immediate terminal/return effects."""
    while True:
        session.cursor = cursor
        node = session.kb.tree(cursor.tree).node(cursor.node)

        if node.kind is NodeKind.FINISH:
            session.trail.append(cursor)
            _finish(session, SessionStatus.FINISHED_OK, emits)
            return

        if node.kind is NodeKind.FINDING:
            session.trail.append(cursor)
            ref = node.failure_mode_ref if node.failure_mode_ref else node.id
            emits.append((EventKind.FINDING_RECORDED, {"ref": ref}))
            _finish(session, SessionStatus.FINISHED_FINDING, emits)
            return

        if node.kind is NodeKind.RETURN:
            session.trail.append(cursor)
            if not session.stack:
                _finish(session, SessionStatus.FINISHED_OK, emits)
                return
            cursor = session.stack.pop()
            emits.append(
                (EventKind.RETURNED, {"tree": cursor.tree, "node": cursor.node})
            )
            continue

        # action / note / decision / jump: rest here and prompt
        session.trail.append(cursor)
        emits.append((EventKind.PROMPTED, {"tree": cursor.tree, "node": cursor.node}))
        return


def _finish(
    session: Session,
    status: SessionStatus,
    emits: list[tuple[EventKind, dict[str, str]]],
) -> None:
    session.status = status
    emits.append((EventKind.FINISHED, {"status": status.value}))


# ---------------------------------------------------------------------------
# Replay
# ---------------------------------------------------------------------------


def replay(kb: KnowledgeBase, events: Iterable[SessionEvent]) -> Session:
    """Reconstruct a session from its event log.

    The input events are re-driven through the engine: answered and
    acknowledged events become inputs, and every derived event the engine
    emits must match the recorded one. The reconstructed session keeps
    the recorded events (timestamps included) as its log.

    Raises:
        ReplayError: when the log is empty, does not begin with
            ``started``, contains an input the knowledge base does not
            allow at that point, or diverges from the engine's own
            transitions.
    """
    recorded = list(events)
    if not recorded:
        raise ReplayError(None, "no events; expected a started event first")
    first = recorded[0]
    if first.kind is not EventKind.STARTED:
        raise ReplayError(first.seq, "log must begin with a started event")
    for i, event in enumerate(recorded):
        if event.seq != i:
            raise ReplayError(event.seq, f"sequence numbers not contiguous at {i}")

    tree_id = first.payload.get("tree")
    if tree_id is None:
        raise ReplayError(first.seq, "started event is missing its tree")
    sid = first.payload.get("session", "replayed")

    shadow = Session(
        id=sid,
        kb=kb,
        cursor=Cursor(tree_id, "start"),
        stack=[],
        events=[],
        status=SessionStatus.ACTIVE,
        trail=[],
    )
    try:
        tree = kb.tree(tree_id)
    except KeyError:
        raise ReplayError(first.seq, f"started on unknown tree '{tree_id}'") from None

    emits: list[tuple[EventKind, dict[str, str]]] = [
        (EventKind.STARTED, {"tree": tree_id, "session": sid})
    ]
    shadow.cursor = Cursor(tree_id, tree.start_node().id)
    _settle(shadow, Cursor(tree_id, tree.start_node().edges[0].target), emits)

    pos = _check_emits(recorded, 0, emits)
    while pos < len(recorded):
        event = recorded[pos]
        if not shadow.is_active:
            raise ReplayError(event.seq, "events continue after the session ended")
        if event.kind is EventKind.FINISHED:
            # only a clean abort may appear without a driving input
            if event.payload.get("status") == SessionStatus.ABORTED.value:
                shadow.status = SessionStatus.ABORTED
                pos += 1
                continue
            raise ReplayError(event.seq, "unexpected finished event")
        if event.kind not in INPUT_EVENT_KINDS:
            raise ReplayError(
                event.seq, f"expected an input event, found {event.kind.value}"
            )
        answer = event.payload.get("label") if event.kind is EventKind.ANSWERED else None
        try:
            emits = _transition(shadow, answer)
        except SessionError as exc:
            raise ReplayError(event.seq, str(exc)) from exc
        pos = _check_emits(recorded, pos, emits)

    shadow.events = recorded
    return shadow


def _check_emits(
    recorded: list[SessionEvent],
    pos: int,
    emits: list[tuple[EventKind, dict[str, str]]],
) -> int:
    for kind, payload in emits:
        if pos >= len(recorded):
            raise ReplayError(None, f"log ends early; expected {kind.value}")
        event = recorded[pos]
        if event.kind is not kind or event.payload != payload:
            raise ReplayError(
                event.seq,
                f"recorded {event.kind.value} {event.payload} does not match "
                f"engine transition {kind.value} {payload}",
            )
        pos += 1
    return pos


# ---------------------------------------------------------------------------
# Event log persistence (.itlog)
# ---------------------------------------------------------------------------


def event_to_json(event: SessionEvent) -> str:
    record: dict[str, object] = {
        "seq": event.seq,
        "ts": event.ts.isoformat(),
        "kind": event.kind.value,
    }
    record.update(event.payload)
    return json.dumps(record, ensure_ascii=False)


def event_from_json(line: str) -> SessionEvent:
    record = json.loads(line)
    ts_raw = str(record.pop("ts"))
    if ts_raw.endswith("Z"):
        ts_raw = ts_raw[:-1] + "+00:00"
    return SessionEvent(
        seq=int(record.pop("seq")),
        ts=datetime.fromisoformat(ts_raw),
        kind=EventKind(record.pop("kind")),
        payload={k: str(v) for k, v in record.items()},
    )


def append_events(path: str | Path, events: Iterable[SessionEvent]) -> None:
    lines = [event_to_json(e) + "\n" for e in events]
    if not lines:
        return
    with open(path, "a", encoding="utf-8", newline="") as fh:
        fh.writelines(lines)


def write_event_log(path: str | Path, events: Iterable[SessionEvent]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.writelines(event_to_json(e) + "\n" for e in events)


def read_event_log(path: str | Path) -> list[SessionEvent]:
    events: list[SessionEvent] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for line in fh:
            line = line.strip()
            if line:
                events.append(event_from_json(line))
    return events
