"""Static analysis of knowledge bases.

Catches graph-level defects the grammar cannot express. Rules:

    R1  edge target does not resolve (error)
    R2  decision with fewer than 2 distinct labeled branches: error when
        the node is not flagged open, warning when it is
    R3  node unreachable from the tree's start node (error)
    R4  node cannot reach any terminal (error); jump and return nodes
        count as local terminals, and so do open decisions with no
        branches at all, which mark deliberate dead ends
    R5  jump target tree or resume node missing (error)
    R6  duplicate edge labels on one decision (error)
    R7  finding references an unknown failure mode (error)
    R8  tree that contains a return node but is never referenced by any
        jump and is not named "main" (warning): its returns can never
        resume anywhere

Linting never mutates the knowledge base and is deterministic: the
diagnostic list is sorted by (tree id, node id, rule).
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import KnowledgeBase, Node, NodeKind, TreeGraph

MAIN_TREE_ID = "main"


@dataclass(frozen=True)
class LintDiagnostic:
    rule: str  # "R1".."R8"
    severity: str  # "error" or "warning"
    tree: str
    node: str | None
    message: str

    def __str__(self) -> str:
        location = self.tree if self.node is None else f"{self.tree}.{self.node}"
        return f"{self.severity} {self.rule} {location}: {self.message}"


def lint(kb: KnowledgeBase) -> list[LintDiagnostic]:
    """Analyze ``kb`` and return all diagnostics, ordered deterministically."""
    diagnostics: list[LintDiagnostic] = []
    for tree in kb.trees:
        diagnostics.extend(_lint_tree(kb, tree))
    diagnostics.extend(_lint_orphan_trees(kb))
    diagnostics.sort(key=lambda d: (d.tree, d.node or "", d.rule))
    return diagnostics


def has_errors(diagnostics: list[LintDiagnostic]) -> bool:
    return any(d.severity == "error" for d in diagnostics)


def _lint_tree(kb: KnowledgeBase, tree: TreeGraph) -> list[LintDiagnostic]:
    out: list[LintDiagnostic] = []

    def report(rule: str, severity: str, node: Node | None, message: str) -> None:
        out.append(
            LintDiagnostic(rule, severity, tree.id, node.id if node else None, message)
        )

    for node in tree.nodes:
        # R1: dangling local edges (re-checked even though build catches them)
        for edge in node.edges:
            if not tree.has_node(edge.target):
                report(
                    "R1", "error", node,
                    f"edge target '{edge.target}' does not resolve",
                )

        # R2 / R6: decision branch shape
        if node.kind is NodeKind.DECISION:
            labels = [e.label for e in node.edges if e.label]
            distinct = set(labels)
            if len(distinct) < len(labels):
                dupes = sorted({lbl for lbl in labels if labels.count(lbl) > 1})
                report(
                    "R6", "error", node,
                    f"duplicate branch labels {dupes} on decision",
                )
            if len(distinct) < 2:
                if node.open_flag:
                    report(
                        "R2", "warning", node,
                        f"open decision has {len(distinct)} branch(es); "
                        "the walk may dead-end here",
                    )
                else:
                    report(
                        "R2", "error", node,
                        f"decision has {len(distinct)} distinct labeled "
                        "branch(es), needs at least 2 or the open flag",
                    )

        # R5: jump references
        if node.kind is NodeKind.JUMP:
            target = node.jump_target
            if target is None:
                report("R5", "error", node, "jump node has no target")
            else:
                if not kb.has_tree(target.tree):
                    report(
                        "R5", "error", node,
                        f"jump target tree '{target.tree}' is missing",
                    )
                if not tree.has_node(target.resume):
                    report(
                        "R5", "error", node,
                        f"jump resume node '{target.resume}' is missing",
                    )

        # R7: finding references
        if node.kind is NodeKind.FINDING and node.failure_mode_ref is not None:
            if not kb.has_failure_mode(node.failure_mode_ref):
                report(
                    "R7", "error", node,
                    f"finding references unknown failure mode "
                    f"'{node.failure_mode_ref}'",
                )

    out.extend(_lint_reachability(tree))
    return out


def _is_local_terminal(node: Node) -> bool:
    """Nodes at which a walk legitimately stops progressing in this tree."""
    if node.kind in (NodeKind.FINISH, NodeKind.RETURN, NodeKind.FINDING, NodeKind.JUMP):
        return True
    # Deliberate dead end drawn without any continuation; R2 already warns.
    return node.kind is NodeKind.DECISION and node.open_flag and not node.edges


def _lint_reachability(tree: TreeGraph) -> list[LintDiagnostic]:
    out: list[LintDiagnostic] = []
    start = next((n for n in tree.nodes if n.kind is NodeKind.START), None)
    if start is None:
        return out  # build-level defect, not re-reported here

    # R3: forward reachability from start
    reached: set[str] = set()
    frontier = [start.id]
    while frontier:
        node_id = frontier.pop()
        if node_id in reached or not tree.has_node(node_id):
            continue
        reached.add(node_id)
        frontier.extend(e.target for e in tree.node(node_id).edges)
    for node in tree.nodes:
        if node.id not in reached:
            out.append(
                LintDiagnostic(
                    "R3", "error", tree.id, node.id,
                    "node is unreachable from the start node",
                )
            )

    # R4: every node must be able to reach a local terminal
    can_finish: set[str] = {n.id for n in tree.nodes if _is_local_terminal(n)}
    changed = True
    while changed:
        changed = False
        for node in tree.nodes:
            if node.id in can_finish:
                continue
            if any(
                tree.has_node(e.target) and e.target in can_finish
                for e in node.edges
            ):
                can_finish.add(node.id)
                changed = True
    for node in tree.nodes:
        if node.id not in can_finish:
            out.append(
                LintDiagnostic(
                    "R4", "error", tree.id, node.id,
                    "no terminal (finish/return/finding/jump) is reachable "
                    "from this node",
                )
            )

    return out


def _lint_orphan_trees(kb: KnowledgeBase) -> list[LintDiagnostic]:
    referenced: set[str] = set()
    for tree in kb.trees:
        for node in tree.nodes:
            if node.kind is NodeKind.JUMP and node.jump_target is not None:
                referenced.add(node.jump_target.tree)

    out: list[LintDiagnostic] = []
    for tree in kb.trees:
        if tree.id == MAIN_TREE_ID or tree.id in referenced:
            continue
        has_return = any(n.kind is NodeKind.RETURN for n in tree.nodes)
        if has_return:
            out.append(
                LintDiagnostic(
                    "R8", "warning", tree.id, None,
                    "tree contains return nodes but is never referenced by "
                    "any jump; its returns cannot resume anywhere",
                )
            )
    return out
