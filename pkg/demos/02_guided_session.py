"""A guided troubleshooting walk, scripted.

Reproduces the no-signal path: the user reports no trap signal, pressure
turns out to be below the UHV bound, and the vacuum tree pins the fault
on a leak. Shows prompts, the cross-tree jump with its stack entry, and
the event log a session leaves behind.

Run:  python demos/02_guided_session.py
"""

from itriage import default_knowledge_base
from itriage.model import NodeKind
from itriage.session import advance, current_prompt, replay, start_session

kb = default_knowledge_base()
session = start_session(kb, "main")

script = iter(["No", "No", "Yes", "No", "Leakage"])

while session.is_active:
    prompt = current_prompt(session)
    if prompt.kind is NodeKind.DECISION:
        answer = next(script)
        print(f"[{session.cursor.tree}] {prompt.text}")
        print(f"    -> {answer}   (options were {list(prompt.answers)})")
        advance(session, answer)
    else:
        print(f"[{session.cursor.tree}] ({prompt.kind.value}) {prompt.text}")
        if prompt.context_note:
            print(f"    note: {prompt.context_note}")
        advance(session)
    if session.stack:
        frames = ", ".join(f"{c.tree}.{c.node}" for c in session.stack)
        print(f"    stack: [{frames}]")

print()
print(f"Status: {session.status.value}")
print(f"Visited: {' > '.join(session.visited_texts())}")
print()

# The event log fully determines the session: replaying it reconstructs
# cursor, stack and status.
print("Event log:")
for event in session.events:
    print(f"  {event.seq:>3}  {event.kind.value:<17} {event.payload}")

twin = replay(kb, session.events)
assert (twin.cursor, twin.stack, twin.status) == (
    session.cursor, session.stack, session.status,
)
print()
print("Replay reconstructed the identical session state.")
