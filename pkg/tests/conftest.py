from __future__ import annotations

import random
import sys
from datetime import datetime, timedelta, timezone
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from itriage import default_knowledge_base
from itriage.model import NodeKind
from itriage.session import Session, advance, current_prompt, start_session


@pytest.fixture(scope="session")
def kb():
    return default_knowledge_base()


class TickClock:
    """Deterministic clock advancing one second per call."""

    def __init__(self, start: datetime | None = None):
        self.now = start or datetime(2026, 1, 1, tzinfo=timezone.utc)

    def __call__(self) -> datetime:
        current = self.now
        self.now = self.now + timedelta(seconds=1)
        return current


@pytest.fixture
def clock():
    return TickClock()


def drive(session: Session, inputs: list[str | None]) -> Session:
    for value in inputs:
        advance(session, value)
    return session


def random_walk(kb, rng: random.Random, max_inputs: int = 60) -> Session:
    """Walk randomly from a random tree until the session ends or the
    walk gives up (dead end or budget exhausted)."""
    tree_id = rng.choice([t.id for t in kb.trees])
    session = start_session(kb, tree_id, clock=TickClock())
    for _ in range(max_inputs):
        if not session.is_active:
            break
        prompt = current_prompt(session)
        if prompt.kind is NodeKind.DECISION:
            if not prompt.answers:
                break  # deliberate dead end: only an abort could continue
            advance(session, rng.choice(prompt.answers))
        else:
            advance(session)
    return session


ACCEPTANCE_PREFIX = "tests/test_acceptance.py"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance" in nodeid and getattr(report, "when", "call") == "call":
                name = nodeid.split("::")[-1]
                verdict = "PASS" if outcome == "passed" else "FAIL"
                lines.append(f"ACCEPTANCE {verdict}: {name}")
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
