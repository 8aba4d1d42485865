"""Static checks and flowchart export.

The bundled knowledge base lints clean except for three warnings: the
source diagrams deliberately leave two remediation steps and one
decision without a continuation, and those nodes carry the ``open``
flag. The demo then breaks the bundle on purpose to show an error-level
diagnostic, and renders one tree as Graphviz DOT.

Run:  python demos/03_lint_and_flowcharts.py
"""

from dataclasses import replace

from itriage import default_knowledge_base
from itriage.flowchart import export_flowchart
from itriage.lint import lint
from itriage.model import Edge, KnowledgeBase, TreeGraph

kb = default_knowledge_base()

print("Lint of the bundled knowledge base:")
for diag in lint(kb):
    print(f"  {diag}")
print()

# Break one edge and lint again: dangling targets are R1 errors, and the
# stranded subtree shows up as unreachable (R3).
main = kb.tree("main")
signal = main.node("signal")
broken_signal = replace(signal, edges=(Edge("Yes", "ghost"), signal.edges[1]))
broken_nodes = tuple(
    broken_signal if n.id == "signal" else n for n in main.nodes
)
broken = KnowledgeBase(
    kb.name, kb.version,
    tuple(
        TreeGraph(t.id, t.title, broken_nodes) if t.id == "main" else t
        for t in kb.trees
    ),
    kb.catalog, dict(kb.constants), kb.notes,
)

print("After retargeting signal/Yes at a ghost node:")
for diag in lint(broken)[:6]:
    print(f"  {diag}")
print("  ...")
print()

print("Graphviz DOT for the vacuum tree (pipe into `dot -Tpng`):")
print(export_flowchart(kb.tree("vacuum")))
