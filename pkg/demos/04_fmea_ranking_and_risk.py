"""FMEA cost algebra: branch ranking, fault logging, risk priorities.

Severity levels map to ordinals (Low=1, Medium=2, High=3). A decision's
branches rank by the cheapest linked failure mode among the findings
they lead to, so a troubleshooter can try the least costly hypothesis
first. Occurrence counting turns finished sessions into a quantitative
layer: the more records accumulate, the more the risk priority numbers
differentiate.

Run:  python demos/04_fmea_ranking_and_risk.py
"""

from datetime import datetime, timedelta, timezone

from itriage import default_knowledge_base
from itriage.fmea import (
    FaultRecord,
    FaultRecordStore,
    describe_severity,
    occurrence,
    rank_branches,
    report_rows,
    risk_priority,
    weighted_cost,
)

kb = default_knowledge_base()

leak = kb.failure_mode("leak_gasket_valve")
print(f"{leak.name}: weighted cost {weighted_cost(leak.cost).score:.0f} "
      "(equal weights, range 3..9)")
for dim in ("operational_impact", "time_cost", "disturbance_risk"):
    level = getattr(leak.cost, dim)
    desc = describe_severity(dim, level)
    print(f"  {dim:<19} {level.value:<7} {desc.effect_text}")
print()

print("Vacuum fan-out, ranked cheapest-first (equal weights):")
for branch in rank_branches(kb, "vacuum", "troubleshoot"):
    score = f"{branch.cost.score:.0f}" if branch.cost else "unlinked"
    print(f"  {branch.label:<20} {score}")

print()
print("Same fan-out ranked by time cost alone (weights 0,1,0):")
for branch in rank_branches(kb, "vacuum", "troubleshoot", (0, 1, 0)):
    score = f"{branch.cost.score:.0f}" if branch.cost else "unlinked"
    print(f"  {branch.label:<20} {score}  (ties keep declaration order)")
print()

# Simulate a quarter of lab history: leaks dominate.
store = FaultRecordStore(kb)
t0 = datetime(2026, 1, 5, tzinfo=timezone.utc)
history = ["leak_gasket_valve"] * 4 + ["outgassing_bakeout"] * 2 + [
    "frequency_drift", "camera_pmt_misalignment", "rf_detuning", "frequency_drift",
]
for i, mode_id in enumerate(history):
    store.ingest(FaultRecord(f"session-{i}", t0 + timedelta(days=3 * i),
                             mode_id, kb.failure_mode(mode_id).area.value, 3600.0))

stats = occurrence(store, "leak_gasket_valve")
print(f"Leak occurrence after {len(store)} records: count={stats.count}, "
      f"fraction={stats.fraction:.2f}, bucket={stats.bucket}")
print()

print("Risk priorities (impact x occurrence bucket x disturbance):")
for row in sorted(report_rows(kb, store), key=lambda r: -r.rpn):
    print(f"  {row.rpn:>3}  {row.name} [{row.area}]")

assert risk_priority(kb, store, "leak_gasket_valve") == 27
