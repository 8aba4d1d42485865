"""Flowchart export: render one tree as a Graphviz DOT digraph.

Node kinds map onto the shapes the original diagrams use: decisions are
diamonds, actions and notes boxes, start/finish ellipses. Jump and
return nodes come out as dashed boxes and findings as double-bordered
boxes so terminal diagnoses stand out. Edge labels are preserved.
"""

from __future__ import annotations

from .model import Node, NodeKind, TreeGraph

_SHAPES: dict[NodeKind, str] = {
    NodeKind.START: "ellipse",
    NodeKind.FINISH: "ellipse",
    NodeKind.ACTION: "box",
    NodeKind.NOTE: "box",
    NodeKind.DECISION: "diamond",
    NodeKind.JUMP: "box",
    NodeKind.RETURN: "box",
    NodeKind.FINDING: "box",
}


def _quote(value: str) -> str:
    escaped = value.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
    return f'"{escaped}"'


def _node_attrs(node: Node) -> list[str]:
    attrs = [f"label={_quote(node.text)}", f"shape={_SHAPES[node.kind]}"]
    if node.kind in (NodeKind.JUMP, NodeKind.RETURN):
        attrs.append("style=dashed")
    if node.kind is NodeKind.FINDING:
        attrs.append("peripheries=2")
    return attrs


def export_flowchart(tree: TreeGraph, rankdir: str = "TB") -> str:
    """DOT text for ``tree``; one node statement per node, one edge
    statement per edge, deterministic order."""
    lines = [f"digraph {_quote(tree.id)} {{"]
    lines.append(f"  rankdir={rankdir};")
    lines.append(f"  label={_quote(tree.title)};")
    lines.append("  labelloc=t;")
    for node in tree.nodes:
        lines.append(f"  {_quote(node.id)} [{', '.join(_node_attrs(node))}];")
    for node in tree.nodes:
        for edge in node.edges:
            stmt = f"  {_quote(node.id)} -> {_quote(edge.target)}"
            if edge.label is not None:
                stmt += f" [label={_quote(edge.label)}]"
            lines.append(stmt + ";")
    lines.append("}")
    return "\n".join(lines) + "\n"
