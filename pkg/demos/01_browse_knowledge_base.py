"""Tour of the bundled knowledge base.

The default bundle covers six decision trees (one survey tree plus the
vacuum, electronics, optics, ablation and imaging subsystem trees), an
11-entry failure-mode catalog, and two numeric constants.

Run:  python demos/01_browse_knowledge_base.py
"""

from itriage import default_knowledge_base

kb = default_knowledge_base()

print(f"Knowledge base: {kb.name} v{kb.version}")
print(f"Convention: {kb.notes}")
print()

print("Trees:")
for tree in kb.trees:
    kinds = {}
    for node in tree.nodes:
        kinds[node.kind.value] = kinds.get(node.kind.value, 0) + 1
    summary = ", ".join(f"{count} {kind}" for kind, count in sorted(kinds.items()))
    print(f"  {tree.id:<12} {tree.title:<36} ({summary})")
print()

print("Failure-mode catalog (impact / time / disturbance):")
for mode in kb.catalog:
    cost = mode.cost
    print(
        f"  [{mode.area.value:<11}] {mode.name:<38} "
        f"{cost.operational_impact.value} / {cost.time_cost.value} / "
        f"{cost.disturbance_risk.value}"
    )
print()

print("Constants:")
for name, constant in kb.constants.items():
    unit = f" {constant.unit}" if constant.unit else ""
    print(f"  {name} = {constant.value}{unit}")
print()

# Every cross-reference in an accepted bundle resolves; spot-check the
# jump wiring of the main tree.
main = kb.tree("main")
for node in main.nodes:
    if node.jump_target is not None:
        print(
            f"  main.{node.id}: '{node.text}' jumps to tree "
            f"'{node.jump_target.tree}', resumes at main.{node.jump_target.resume}"
        )
