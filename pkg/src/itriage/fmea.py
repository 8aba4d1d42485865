"""FMEA-style cost algebra, fault logging and risk scoring.

Severity levels map onto ordinal scores (Low=1, Medium=2, High=3) and a
cost vector aggregates as a weighted sum of its three ordinals. That is
the simplest monotone algebra consistent with a purely qualitative
severity source; swap it out once real occurrence data accumulates.

The risk priority number follows the classical severity x occurrence x
detection product. No detection dimension exists in the catalog, so the
disturbance-risk ordinal stands in for the detection slot; treat RPN
values as relative ordering hints, not calibrated risk.

Occurrence is counted from an append-only fault log (``.itrec``, one
JSON record per line). Occurrence buckets need a minimum amount of data:
with fewer than ``MIN_RESOLVED_FOR_BUCKETS`` resolved records every mode
stays in bucket 1, because a fraction computed from a couple of records
says nothing about frequency.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Iterable, NamedTuple

from .model import (
    Area,
    CostVector,
    KnowledgeBase,
    NodeKind,
    SeverityLevel,
    UnknownFailureModeError,
)

FAULT_LOG_SUFFIX = ".itrec"

#: Sentinel mode id for sessions that ended on an uncataloged finding.
UNRESOLVED = "unresolved"

#: Resolved records needed before occurrence fractions leave bucket 1.
MIN_RESOLVED_FOR_BUCKETS = 5

#: Default weights: all three cost dimensions count equally.
DEFAULT_WEIGHTS = (1.0, 1.0, 1.0)


class CostDimension(str, enum.Enum):
    OPERATIONAL_IMPACT = "operational_impact"
    TIME_COST = "time_cost"
    DISTURBANCE_RISK = "disturbance_risk"


def ordinal(level: SeverityLevel) -> int:
    """Low -> 1, Medium -> 2, High -> 3."""
    return level.rank


# ---------------------------------------------------------------------------
# Severity descriptor tables
# ---------------------------------------------------------------------------

#: What each severity level means per dimension.
EFFECT_TABLE: dict[tuple[CostDimension, SeverityLevel], str] = {
    (CostDimension.TIME_COST, SeverityLevel.LOW): "Hours",
    (CostDimension.TIME_COST, SeverityLevel.MEDIUM): "Days",
    (CostDimension.TIME_COST, SeverityLevel.HIGH): "Weeks",
    (CostDimension.OPERATIONAL_IMPACT, SeverityLevel.LOW): "Motion is introduced",
    (CostDimension.OPERATIONAL_IMPACT, SeverityLevel.MEDIUM): "Trapped for few minutes",
    (CostDimension.OPERATIONAL_IMPACT, SeverityLevel.HIGH): "Ion loss",
    (CostDimension.DISTURBANCE_RISK, SeverityLevel.LOW): "Unlikely to happen",
    (CostDimension.DISTURBANCE_RISK, SeverityLevel.MEDIUM): "Could happen",
    (CostDimension.DISTURBANCE_RISK, SeverityLevel.HIGH): "Mostlikely will happen",
}

#: What a failure of each severity means for the system.
SEVERITY_DEFINITIONS: dict[SeverityLevel, str] = {
    SeverityLevel.LOW: "Minor performance loss or cosmetic fault",
    SeverityLevel.MEDIUM: "Degrades fidelity or reliability of trapping",
    SeverityLevel.HIGH: "Prevents trapping or damages hardware",
}

#: Typical intervention per severity level.
INTERVENTIONS: dict[SeverityLevel, str] = {
    SeverityLevel.LOW: "Simple recalibration or adjustment",
    SeverityLevel.MEDIUM: "Re-alignment or moderate component replacement",
    SeverityLevel.HIGH: "Extensive intervention (e.g. disassembly, replacing hardware)",
}


@dataclass(frozen=True)
class SeverityDescriptor:
    dimension: CostDimension
    level: SeverityLevel
    effect_text: str
    intervention_text: str


def describe_severity(
    dimension: CostDimension | str, level: SeverityLevel | str
) -> SeverityDescriptor:
    """Effect and intervention text for one (dimension, level) cell."""
    dimension = CostDimension(dimension)
    level = SeverityLevel(level)
    return SeverityDescriptor(
        dimension, level, EFFECT_TABLE[(dimension, level)], INTERVENTIONS[level]
    )


# ---------------------------------------------------------------------------
# Weighted cost and branch ranking
# ---------------------------------------------------------------------------

Weights = tuple[float, float, float]


@dataclass(frozen=True)
class WeightedCost:
    weights: Weights
    score: float


def weighted_cost(cost: CostVector, weights: Weights = DEFAULT_WEIGHTS) -> WeightedCost:
    """Weighted sum of the ordinal severities; weights must be non-negative."""
    if any(w < 0 for w in weights):
        raise ValueError(f"weights must be non-negative, got {weights}")
    score = (
        weights[0] * ordinal(cost.operational_impact)
        + weights[1] * ordinal(cost.time_cost)
        + weights[2] * ordinal(cost.disturbance_risk)
    )
    return WeightedCost(tuple(float(w) for w in weights), float(score))


class RankedBranch(NamedTuple):
    label: str
    cost: WeightedCost | None


def reachable_findings(kb: KnowledgeBase, tree_id: str, node_id: str) -> list[str]:
    """Finding node ids reachable from ``node_id`` without leaving the tree.

    Traversal follows all local edges (including nested sub-decisions) and
    stops at jumps, returns and finishes.
    """
    tree = kb.tree(tree_id)
    found: list[str] = []
    seen: set[str] = set()
    frontier = [node_id]
    while frontier:
        current = frontier.pop()
        if current in seen or not tree.has_node(current):
            continue
        seen.add(current)
        node = tree.node(current)
        if node.kind is NodeKind.FINDING:
            found.append(node.id)
            continue
        frontier.extend(e.target for e in node.edges)
    return sorted(found)


def rank_branches(
    kb: KnowledgeBase,
    tree_id: str,
    decision_node_id: str,
    weights: Weights = DEFAULT_WEIGHTS,
) -> list[RankedBranch]:
    """Order a decision's branches by the weighted cost of their findings.

    Each branch is scored with the cheapest linked failure mode among the
    findings it can reach (cheapest plausible root cause first). Branches
    whose findings carry no catalog link get no score and sort last; ties
    keep declaration order.
    """
    tree = kb.tree(tree_id)
    node = tree.node(decision_node_id)
    if node.kind is not NodeKind.DECISION:
        raise ValueError(
            f"node '{decision_node_id}' in tree '{tree_id}' is a "
            f"{node.kind.value}, not a decision"
        )

    ranked: list[RankedBranch] = []
    for edge in node.edges:
        assert edge.label is not None
        scores = []
        for finding_id in reachable_findings(kb, tree_id, edge.target):
            ref = tree.node(finding_id).failure_mode_ref
            if ref is not None and kb.has_failure_mode(ref):
                scores.append(weighted_cost(kb.failure_mode(ref).cost, weights))
        best = min(scores, key=lambda c: c.score) if scores else None
        ranked.append(RankedBranch(edge.label, best))

    ranked.sort(key=lambda rb: (rb.cost is None, rb.cost.score if rb.cost else 0.0))
    return ranked


# ---------------------------------------------------------------------------
# Fault records and occurrence statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FaultRecord:
    """Outcome of one finished troubleshooting session."""

    session_id: str
    finished_at: datetime
    mode_id: str  # catalog id or UNRESOLVED
    area: str
    duration_s: float
    notes: str = ""

    def dedup_key(self) -> tuple[str, str]:
        return (self.session_id, self.finished_at.isoformat())


class FaultRecordStore:
    """In-memory fault log bound to a knowledge base; one writer at a time."""

    def __init__(self, kb: KnowledgeBase, records: Iterable[FaultRecord] = ()):
        self.kb = kb
        self.records: list[FaultRecord] = []
        self._keys: set[tuple[str, str]] = set()
        for record in records:
            self.ingest(record)

    def __len__(self) -> int:
        return len(self.records)

    def ingest(self, record: FaultRecord) -> bool:
        """Add one record; duplicates (same session and timestamp) are no-ops.

        Returns True when the record was actually added.
        """
        if record.mode_id != UNRESOLVED and not self.kb.has_failure_mode(record.mode_id):
            raise UnknownFailureModeError(record.mode_id)
        key = record.dedup_key()
        if key in self._keys:
            return False
        self._keys.add(key)
        self.records.append(record)
        return True

    def resolved_records(self) -> list[FaultRecord]:
        return [r for r in self.records if r.mode_id != UNRESOLVED]


class OccurrenceStats(NamedTuple):
    count: int
    fraction: float
    bucket: int  # 1..3


def occurrence(store: FaultRecordStore, mode_id: str) -> OccurrenceStats:
    """How often ``mode_id`` shows up among resolved fault records.

    Buckets: fraction < 0.05 -> 1, 0.05..0.25 -> 2, above 0.25 -> 3.
    With fewer than MIN_RESOLVED_FOR_BUCKETS resolved records the bucket
    stays at 1 regardless of fraction (an empty store reports (0, 0, 1)).
    """
    resolved = store.resolved_records()
    count = sum(1 for r in resolved if r.mode_id == mode_id)
    fraction = count / len(resolved) if resolved else 0.0
    if len(resolved) < MIN_RESOLVED_FOR_BUCKETS or fraction < 0.05:
        bucket = 1
    elif fraction <= 0.25:
        bucket = 2
    else:
        bucket = 3
    return OccurrenceStats(count, fraction, bucket)


def risk_priority(kb: KnowledgeBase, store: FaultRecordStore, mode_id: str) -> int:
    """RPN = impact ordinal x occurrence bucket x disturbance ordinal (1..27)."""
    mode = kb.failure_mode(mode_id)
    bucket = occurrence(store, mode_id).bucket
    return (
        ordinal(mode.cost.operational_impact)
        * bucket
        * ordinal(mode.cost.disturbance_risk)
    )


# ---------------------------------------------------------------------------
# Report rows (shared by the CLI table and the HTTP report endpoint)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReportRow:
    area: str
    mode_id: str
    name: str
    impact: SeverityLevel
    time_cost: SeverityLevel
    disturbance: SeverityLevel
    count: int
    fraction: float
    bucket: int
    rpn: int


def report_rows(kb: KnowledgeBase, store: FaultRecordStore) -> list[ReportRow]:
    """One row per catalog mode, in catalog (per-area) order."""
    rows = []
    for mode in kb.catalog:
        stats = occurrence(store, mode.id)
        rows.append(
            ReportRow(
                area=mode.area.value,
                mode_id=mode.id,
                name=mode.name,
                impact=mode.cost.operational_impact,
                time_cost=mode.cost.time_cost,
                disturbance=mode.cost.disturbance_risk,
                count=stats.count,
                fraction=stats.fraction,
                bucket=stats.bucket,
                rpn=risk_priority(kb, store, mode.id),
            )
        )
    return rows


# ---------------------------------------------------------------------------
# Fault log persistence (.itrec)
# ---------------------------------------------------------------------------


def record_to_json(record: FaultRecord) -> str:
    return json.dumps(
        {
            "session": record.session_id,
            "ts": record.finished_at.isoformat(),
            "mode": record.mode_id,
            "area": record.area,
            "duration_s": record.duration_s,
            "notes": record.notes,
        },
        ensure_ascii=False,
    )


def record_from_json(line: str) -> FaultRecord:
    raw = json.loads(line)
    ts_raw = str(raw["ts"])
    if ts_raw.endswith("Z"):
        ts_raw = ts_raw[:-1] + "+00:00"
    return FaultRecord(
        session_id=str(raw["session"]),
        finished_at=datetime.fromisoformat(ts_raw),
        mode_id=str(raw["mode"]),
        area=str(raw.get("area", "")),
        duration_s=float(raw.get("duration_s", 0.0)),
        notes=str(raw.get("notes", "")),
    )


def load_fault_log(path: str | Path, kb: KnowledgeBase) -> FaultRecordStore:
    """Read a fault log file; a missing file yields an empty store."""
    store = FaultRecordStore(kb)
    path = Path(path)
    if not path.exists():
        return store
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for line in fh:
            line = line.strip()
            if line:
                store.ingest(record_from_json(line))
    return store


def append_fault_record(path: str | Path, record: FaultRecord) -> None:
    with open(path, "a", encoding="utf-8", newline="") as fh:
        fh.write(record_to_json(record) + "\n")


def fault_record_from_session(session, notes: str = "") -> FaultRecord:
    """Build the fault record for a finished session.

    Sessions that ended on a cataloged finding record that mode id and
    area; sessions whose finding had no catalog link record UNRESOLVED.
    """
    from .session import EventKind, SessionStatus

    if session.status is not SessionStatus.FINISHED_FINDING:
        raise ValueError(
            f"session {session.id} did not end on a finding "
            f"({session.status.value})"
        )
    ref = next(
        e.payload["ref"]
        for e in session.events
        if e.kind is EventKind.FINDING_RECORDED
    )
    if session.kb.has_failure_mode(ref):
        mode_id = ref
        area = session.kb.failure_mode(ref).area.value
    else:
        mode_id = UNRESOLVED
        area = "unknown"
    first_ts = session.events[0].ts
    last_ts = session.events[-1].ts
    return FaultRecord(
        session_id=session.id,
        finished_at=last_ts,
        mode_id=mode_id,
        area=area,
        duration_s=(last_ts - first_ts).total_seconds(),
        notes=notes,
    )
