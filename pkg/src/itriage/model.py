"""Domain model for troubleshooting knowledge bases.

A knowledge base bundles a set of decision trees (one per hardware
subsystem), a catalog of failure modes with qualitative severity ratings,
and a handful of named numeric constants. Everything here is an immutable
value object: once a KnowledgeBase passes validation it can be shared
freely between threads and sessions.

Node kinds and their edge rules:

    start     exactly one unlabeled edge, exactly one per tree
    action    exactly one unlabeled edge
    note      exactly one unlabeled edge (informational step)
    decision  >= 2 edges with distinct non-empty labels, unless the node
              is flagged ``open`` (deliberately incomplete), in which case
              any number of labeled branches, including zero, is allowed
    jump      no local edges; transfers to another tree and records where
              to resume in the current tree when that tree returns
    return    terminal; pops the jump stack (or finishes the session)
    finding   terminal; names a suspected failure mode
    finish    terminal; successful end of a walk
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple


class SeverityLevel(str, enum.Enum):
    """Ordinal severity scale used across all cost dimensions."""

    LOW = "Low"
    MEDIUM = "Medium"
    HIGH = "High"

    @property
    def rank(self) -> int:
        """Position in the Low < Medium < High order, starting at 1."""
        return _SEVERITY_RANK[self]

    def __lt__(self, other: object) -> bool:  # type: ignore[override]
        if not isinstance(other, SeverityLevel):
            return NotImplemented
        return self.rank < other.rank

    def __le__(self, other: object) -> bool:  # type: ignore[override]
        if not isinstance(other, SeverityLevel):
            return NotImplemented
        return self.rank <= other.rank

    def __gt__(self, other: object) -> bool:  # type: ignore[override]
        if not isinstance(other, SeverityLevel):
            return NotImplemented
        return self.rank > other.rank

    def __ge__(self, other: object) -> bool:  # type: ignore[override]
        if not isinstance(other, SeverityLevel):
            return NotImplemented
        return self.rank >= other.rank


_SEVERITY_RANK = {
    SeverityLevel.LOW: 1,
    SeverityLevel.MEDIUM: 2,
    SeverityLevel.HIGH: 3,
}


class Area(str, enum.Enum):
    """Hardware subsystem a failure mode belongs to."""

    VACUUM = "Vacuum"
    ELECTRONICS = "Electronics"
    OPTICS = "Optics"
    IMAGING = "Imaging"


#: One-line role summary for each subsystem, shown alongside findings.
AREA_ROLES: dict[Area, str] = {
    Area.VACUUM: (
        "Achieves and maintains ultra-high vacuum to minimize background "
        "gas collisions and maintain quantum coherence."
    ),
    Area.ELECTRONICS: (
        "Generates and controls the DC and RF voltages necessary for "
        "trapping ions with stability and minimum noise."
    ),
    Area.OPTICS: (
        "Provides the lasers for ablation (atom loading), photoionization, "
        "Doppler cooling, and internal state control."
    ),
    Area.IMAGING: (
        "Collects and detects fluorescence emitted by the ion using "
        "objective lenses, cameras, and photomultiplier tubes."
    ),
}


class NodeKind(str, enum.Enum):
    START = "start"
    ACTION = "action"
    NOTE = "note"
    DECISION = "decision"
    JUMP = "jump"
    RETURN = "return"
    FINDING = "finding"
    FINISH = "finish"


#: Kinds with no outgoing edges at all.
TERMINAL_KINDS = frozenset({NodeKind.RETURN, NodeKind.FINDING, NodeKind.FINISH})


class Edge(NamedTuple):
    """Directed edge to another node in the same tree."""

    label: str | None
    target: str


class JumpTarget(NamedTuple):
    """Destination tree plus the node to resume at in the current tree."""

    tree: str
    resume: str


@dataclass(frozen=True)
class CostVector:
    """Qualitative cost of a failure mode along the three FMEA axes."""

    operational_impact: SeverityLevel
    time_cost: SeverityLevel
    disturbance_risk: SeverityLevel

    def levels(self) -> tuple[SeverityLevel, SeverityLevel, SeverityLevel]:
        return (self.operational_impact, self.time_cost, self.disturbance_risk)


@dataclass(frozen=True)
class FailureMode:
    """A cataloged way the apparatus can fail, with its cost vector."""

    id: str
    area: Area
    name: str
    cost: CostVector
    notes: str | None = None


@dataclass(frozen=True)
class Node:
    id: str
    kind: NodeKind
    text: str
    edges: tuple[Edge, ...] = ()
    jump_target: JumpTarget | None = None
    failure_mode_ref: str | None = None
    open_flag: bool = False
    note: str | None = None

    def branch_labels(self) -> tuple[str, ...]:
        return tuple(e.label for e in self.edges if e.label is not None)


@dataclass(frozen=True)
class TreeGraph:
    """One decision tree; nodes keep their declaration order."""

    id: str
    title: str
    nodes: tuple[Node, ...]

    def __post_init__(self) -> None:
        index = {n.id: n for n in self.nodes}
        object.__setattr__(self, "_index", index)

    def node(self, node_id: str) -> Node:
        try:
            return self._index[node_id]  # type: ignore[attr-defined]
        except KeyError:
            raise UnknownNodeError(self.id, node_id) from None

    def has_node(self, node_id: str) -> bool:
        return node_id in self._index  # type: ignore[attr-defined]

    def start_node(self) -> Node:
        for n in self.nodes:
            if n.kind is NodeKind.START:
                return n
        raise KnowledgeBaseIntegrityError(
            [f"tree '{self.id}' has no start node"]
        )


class Constant(NamedTuple):
    """Named scalar with an optional unit, e.g. a pressure bound in Pa."""

    value: float
    unit: str | None = None


@dataclass(frozen=True)
class KnowledgeBase:
    name: str
    version: str
    trees: tuple[TreeGraph, ...]
    catalog: tuple[FailureMode, ...] = ()
    constants: dict[str, Constant] = field(default_factory=dict)
    notes: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "_tree_index", {t.id: t for t in self.trees})
        object.__setattr__(self, "_mode_index", {m.id: m for m in self.catalog})

    def tree(self, tree_id: str) -> TreeGraph:
        try:
            return self._tree_index[tree_id]  # type: ignore[attr-defined]
        except KeyError:
            raise UnknownTreeError(tree_id) from None

    def has_tree(self, tree_id: str) -> bool:
        return tree_id in self._tree_index  # type: ignore[attr-defined]

    def failure_mode(self, mode_id: str) -> FailureMode:
        try:
            return self._mode_index[mode_id]  # type: ignore[attr-defined]
        except KeyError:
            raise UnknownFailureModeError(mode_id) from None

    def has_failure_mode(self, mode_id: str) -> bool:
        return mode_id in self._mode_index  # type: ignore[attr-defined]


class KnowledgeBaseError(Exception):
    """Base class for knowledge-base errors."""


class KnowledgeBaseIntegrityError(KnowledgeBaseError):
    """Raised when a knowledge base fails structural validation."""

    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("; ".join(problems))


class UnknownTreeError(KnowledgeBaseError, KeyError):
    def __init__(self, tree_id: str):
        self.tree_id = tree_id
        super().__init__(f"unknown tree '{tree_id}'")


class UnknownNodeError(KnowledgeBaseError, KeyError):
    def __init__(self, tree_id: str, node_id: str):
        self.tree_id = tree_id
        self.node_id = node_id
        super().__init__(f"unknown node '{node_id}' in tree '{tree_id}'")


class UnknownFailureModeError(KnowledgeBaseError, KeyError):
    def __init__(self, mode_id: str):
        self.mode_id = mode_id
        super().__init__(f"unknown failure mode '{mode_id}'")


def validate_knowledge_base(kb: KnowledgeBase) -> list[str]:
    """Return all structural problems of ``kb`` (empty list means valid).

    Checks id uniqueness, referential closure of edges, jump targets and
    finding references, and the per-kind edge arity rules documented at
    module level.
    """
    problems: list[str] = []

    seen_trees: set[str] = set()
    for tree in kb.trees:
        if tree.id in seen_trees:
            problems.append(f"duplicate tree id '{tree.id}'")
        seen_trees.add(tree.id)

    seen_modes: set[str] = set()
    for mode in kb.catalog:
        if mode.id in seen_modes:
            problems.append(f"duplicate failure mode id '{mode.id}'")
        seen_modes.add(mode.id)

    for tree in kb.trees:
        prefix = f"tree '{tree.id}'"
        seen_nodes: set[str] = set()
        start_count = 0
        for node in tree.nodes:
            if node.id in seen_nodes:
                problems.append(f"{prefix}: duplicate node id '{node.id}'")
            seen_nodes.add(node.id)
            if node.kind is NodeKind.START:
                start_count += 1
            problems.extend(_node_problems(kb, tree, node))
        if start_count == 0:
            problems.append(f"{prefix}: no start node")
        elif start_count > 1:
            problems.append(f"{prefix}: {start_count} start nodes, expected 1")

    return problems


def _node_problems(kb: KnowledgeBase, tree: TreeGraph, node: Node) -> list[str]:
    problems: list[str] = []
    where = f"tree '{tree.id}', node '{node.id}'"

    for edge in node.edges:
        if not tree.has_node(edge.target):
            problems.append(f"{where}: unresolved edge target '{edge.target}'")

    if node.kind in (NodeKind.START, NodeKind.ACTION, NodeKind.NOTE):
        if len(node.edges) != 1 or node.edges[0].label is not None:
            problems.append(
                f"{where}: {node.kind.value} node must have exactly one "
                "unlabeled edge"
            )
    elif node.kind is NodeKind.DECISION:
        labels = [e.label for e in node.edges]
        if any(lbl is None or lbl == "" for lbl in labels):
            problems.append(f"{where}: decision branches must carry non-empty labels")
        distinct = {lbl for lbl in labels if lbl}
        if len(distinct) != len([lbl for lbl in labels if lbl]):
            problems.append(f"{where}: duplicate branch labels on decision")
        if not node.open_flag and len(distinct) < 2:
            problems.append(
                f"{where}: decision needs at least 2 distinct labeled branches "
                "(or the open flag)"
            )
    elif node.kind is NodeKind.JUMP:
        if node.edges:
            problems.append(f"{where}: jump node must not have local edges")
        if node.jump_target is None:
            problems.append(f"{where}: jump node is missing its target")
        else:
            if not kb.has_tree(node.jump_target.tree):
                problems.append(
                    f"{where}: unresolved jump target tree "
                    f"'{node.jump_target.tree}'"
                )
            if not tree.has_node(node.jump_target.resume):
                problems.append(
                    f"{where}: unresolved jump resume node "
                    f"'{node.jump_target.resume}'"
                )
    elif node.kind in TERMINAL_KINDS:
        if node.edges:
            problems.append(f"{where}: {node.kind.value} node must be terminal")
        if node.kind is NodeKind.FINDING and node.failure_mode_ref is not None:
            if not kb.has_failure_mode(node.failure_mode_ref):
                problems.append(
                    f"{where}: unresolved finding reference "
                    f"'{node.failure_mode_ref}'"
                )

    if node.kind is not NodeKind.JUMP and node.jump_target is not None:
        problems.append(f"{where}: only jump nodes may carry a jump target")

    return problems


def build_knowledge_base(
    name: str,
    version: str,
    trees: Iterable[TreeGraph],
    catalog: Iterable[FailureMode] = (),
    constants: Mapping[str, Constant] | None = None,
    notes: str | None = None,
) -> KnowledgeBase:
    """Assemble and validate a KnowledgeBase.

    Raises:
        KnowledgeBaseIntegrityError: with the full problem list if any
            structural invariant is violated. On success the returned
            bundle is immutable and safe to share.
    """
    kb = KnowledgeBase(
        name=name,
        version=version,
        trees=tuple(trees),
        catalog=tuple(catalog),
        constants=dict(constants or {}),
        notes=notes,
    )
    problems = validate_knowledge_base(kb)
    if problems:
        raise KnowledgeBaseIntegrityError(problems)
    return kb


def lookup_failure_mode(kb: KnowledgeBase, area: Area | str, name: str) -> FailureMode:
    """Find the catalog entry with the given area and display name."""
    area = Area(area)
    for mode in kb.catalog:
        if mode.area is area and mode.name == name:
            return mode
    raise UnknownFailureModeError(f"{area.value}/{name}")
