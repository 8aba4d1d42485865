from __future__ import annotations

import random

import pytest

from conftest import drive, random_walk
from itriage.model import NodeKind, UnknownTreeError
from itriage.session import (
    EventKind,
    InvalidAnswerError,
    ReplayError,
    SessionFinishedError,
    SessionStatus,
    abort_session,
    advance,
    current_prompt,
    event_from_json,
    event_to_json,
    read_event_log,
    replay,
    start_session,
    write_event_log,
)

# Main-tree all-Yes troubleshooting walk: No at the first decision, then
# acknowledge actions and answer Yes at every remaining decision.
ALL_YES_INPUTS: list[str | None] = [
    None, "No", None, None, "Yes", None, "Yes", None, "Yes", "Yes",
    None, "Yes", None, "Yes",
]

ALL_YES_TEXTS = [
    "Check trap signal",
    "Does the user see the signal?",
    "Start troubleshooting",
    "Check pressure",
    "Pressure > UHV?",
    "Check trapping potential",
    "Potential components working?",
    "Check ion presence",
    "Does user see ablation sparks?",
    "Does user see fluorescence from 1st ionizaton?",
    "Check cooling fluorescence",
    "Does user see fluorescence from cooling laser?",
    "Check if it is the Trapping signal → Check signal presence when "
    "repump laser is ON/OFF",
    "Does signal presence correlate with the repump ON/OFF?",
    "Finish",
]


class TestStartSession:
    def test_main_starts_at_check_signal(self, kb, clock):
        session = start_session(kb, "main", clock)
        assert session.node.text == "Check trap signal"
        assert [e.kind for e in session.events] == [
            EventKind.STARTED, EventKind.PROMPTED,
        ]

    def test_vacuum_starts_at_baked(self, kb, clock):
        session = start_session(kb, "vacuum", clock)
        assert session.node.text == "Baked?"
        assert session.node.kind is NodeKind.DECISION

    def test_unknown_tree(self, kb):
        with pytest.raises(UnknownTreeError):
            start_session(kb, "nope")

    def test_sequence_numbers_contiguous(self, kb, clock):
        session = drive(start_session(kb, "main", clock), ALL_YES_INPUTS)
        assert [e.seq for e in session.events] == list(range(len(session.events)))
        finished = [e for e in session.events if e.kind is EventKind.FINISHED]
        assert len(finished) == 1
        assert session.events[-1].kind is EventKind.FINISHED


class TestAdvance:
    def test_no_at_signal_reaches_troubleshoot(self, kb, clock):
        session = drive(start_session(kb, "main", clock), [None, "No"])
        assert session.node.text == "Start troubleshooting"

    def test_prompt_after_two_steps(self, kb, clock):
        session = drive(start_session(kb, "main", clock), [None, "No", None])
        prompt = current_prompt(session)
        assert prompt.kind is NodeKind.ACTION
        assert prompt.text == "Check pressure"
        assert prompt.answers == ()

    def test_jump_pushes_stack_and_lands_in_vacuum(self, kb, clock):
        session = drive(start_session(kb, "main", clock), [None, "No", None, None, "No"])
        assert session.node.text == "Go to Vac_tree"
        advance(session)  # acknowledge the jump
        assert session.cursor.tree == "vacuum"
        assert session.node.text == "Baked?"
        assert [(c.tree, c.node) for c in session.stack] == [("main", "potential")]

    def test_return_pops_to_check_trapping_potential(self, kb, clock):
        session = drive(
            start_session(kb, "main", clock),
            [None, "No", None, None, "No", None, "Yes", None, "Yes"],
        )
        assert session.cursor.tree == "main"
        assert session.node.text == "Check trapping potential"
        assert session.stack == []
        assert session.is_active

    def test_fidelity_walk(self, kb, clock):
        session = drive(start_session(kb, "main", clock), ALL_YES_INPUTS)
        assert session.visited_texts() == ALL_YES_TEXTS
        assert session.status is SessionStatus.FINISHED_OK

    @pytest.mark.parametrize("k", [0, 1, 5])
    def test_tune_fluorescence_loop(self, kb, clock, k):
        inputs: list[str | None] = [None, "Yes"]
        for _ in range(k):
            inputs += [None, "No"]  # acknowledge tune, loop back
        inputs += [None, "Yes"]  # acknowledge tune, finish
        session = drive(start_session(kb, "main", clock), inputs)
        assert session.status is SessionStatus.FINISHED_OK
        visits = [t for t in session.visited_texts() if t == "Tune voltage/laser freq."]
        assert len(visits) == k + 1

    def test_vacuum_fanout_answers_in_declaration_order(self, kb, clock):
        session = drive(start_session(kb, "vacuum", clock), ["Yes", None, "No"])
        prompt = current_prompt(session)
        assert prompt.answers == ("Leakage", "Outgassing", "Component Failure")

    def test_finding_records_mode_and_finishes(self, kb, clock):
        session = drive(
            start_session(kb, "vacuum", clock), ["Yes", None, "No", "Leakage"]
        )
        assert session.status is SessionStatus.FINISHED_FINDING
        recorded = [e for e in session.events if e.kind is EventKind.FINDING_RECORDED]
        assert recorded == [recorded[0]]
        assert recorded[0].payload == {"ref": "leak_gasket_valve"}

    def test_invalid_answer(self, kb, clock):
        session = drive(start_session(kb, "main", clock), [None])
        with pytest.raises(InvalidAnswerError) as err:
            advance(session, "Maybe")
        assert err.value.available == ("Yes", "No")

    def test_answer_on_action_rejected(self, kb, clock):
        session = start_session(kb, "main", clock)
        with pytest.raises(InvalidAnswerError):
            advance(session, "Yes")

    def test_advancing_finished_session(self, kb, clock):
        session = drive(start_session(kb, "vacuum", clock), ["Yes", None, "Yes"])
        assert session.status is SessionStatus.FINISHED_OK  # returned on empty stack
        with pytest.raises(SessionFinishedError):
            advance(session)
        with pytest.raises(SessionFinishedError):
            current_prompt(session)

    def test_max_steps_aborts_cleanly(self, kb, clock):
        session = start_session(kb, "main", clock, max_steps=3)
        drive(session, [None, "Yes", None])  # three steps spent
        advance(session, "No")  # fourth exceeds the budget
        assert session.status is SessionStatus.ABORTED
        assert session.events[-1].payload == {"status": "aborted"}

    def test_abort_session(self, kb, clock):
        session = start_session(kb, "main", clock)
        abort_session(session)
        assert session.status is SessionStatus.ABORTED
        with pytest.raises(SessionFinishedError):
            abort_session(session)

    def test_ablation_return_resumes_at_ionization(self, kb, clock):
        session = start_session(kb, "main", clock)
        # main: down to the spark decision, then into optics
        drive(session, [None, "No", None, None, "Yes", None, "Yes", None, "No", None])
        assert session.cursor == type(session.cursor)("optics", "check_cam")
        assert [(c.tree, c.node) for c in session.stack] == [("main", "check_cool")]
        # optics: spark "No" jumps into the ablation track
        drive(session, [None, "No", None])
        assert session.cursor.tree == "ablation"
        assert len(session.stack) == 2
        # walk the alignment branch to "Return to Optics Module"
        drive(session, [None, "Alignment", None, None, "Yes", "Yes", None, "Yes"])
        assert session.cursor.tree == "optics"
        assert session.cursor.node == "ionization"
        assert [(c.tree, c.node) for c in session.stack] == [("main", "check_cool")]


class TestReplay:
    def test_replay_matches_live_walk(self, kb, clock):
        live = drive(start_session(kb, "main", clock), ALL_YES_INPUTS)
        replayed = replay(kb, live.events)
        assert replayed.cursor == live.cursor
        assert replayed.stack == live.stack
        assert replayed.status == live.status
        assert replayed.trail == live.trail
        assert replayed.events == live.events
        assert replayed.id == live.id

    def test_replay_empty_log(self, kb):
        with pytest.raises(ReplayError):
            replay(kb, [])

    def test_replay_tampered_label(self, kb, clock):
        live = drive(start_session(kb, "main", clock), [None, "No"])
        tampered = list(live.events)
        bad = tampered[4]
        assert bad.kind is EventKind.ANSWERED
        tampered[4] = type(bad)(bad.seq, bad.ts, bad.kind, {"label": "Maybe"})
        with pytest.raises(ReplayError) as err:
            replay(kb, tampered)
        assert err.value.seq == 4

    def test_replay_detects_divergent_derived_event(self, kb, clock):
        live = drive(start_session(kb, "main", clock), [None, "No"])
        tampered = list(live.events)
        prompted = tampered[5]
        assert prompted.kind is EventKind.PROMPTED
        tampered[5] = type(prompted)(
            prompted.seq, prompted.ts, prompted.kind, {"tree": "main", "node": "tune"}
        )
        with pytest.raises(ReplayError) as err:
            replay(kb, tampered)
        assert err.value.seq == 5

    def test_replay_aborted_session(self, kb, clock):
        live = start_session(kb, "main", clock)
        abort_session(live)
        replayed = replay(kb, live.events)
        assert replayed.status is SessionStatus.ABORTED

    def test_replay_100_random_walks(self, kb):
        rng = random.Random(7)
        for _ in range(100):
            live = random_walk(kb, rng)
            replayed = replay(kb, live.events)
            assert replayed.cursor == live.cursor
            assert replayed.stack == live.stack
            assert replayed.status == live.status
            assert replayed.trail == live.trail


class TestStackInvariant:
    def test_depth_equals_jumps_minus_returns(self, kb):
        rng = random.Random(21)
        for _ in range(200):
            session = random_walk(kb, rng)
            depth = 0
            for event in session.events:
                if event.kind is EventKind.JUMPED:
                    depth += 1
                elif event.kind is EventKind.RETURNED:
                    depth -= 1
                assert depth >= 0
            # terminal returns on an empty stack do not emit RETURNED
            assert depth >= len(session.stack)


class TestEventLogIo:
    def test_json_round_trip(self, kb, clock):
        session = drive(start_session(kb, "main", clock), ALL_YES_INPUTS)
        for event in session.events:
            assert event_from_json(event_to_json(event)) == event

    def test_file_round_trip(self, kb, clock, tmp_path):
        session = drive(start_session(kb, "vacuum", clock), ["Yes", None, "No", "Leakage"])
        path = tmp_path / f"{session.id}.itlog"
        write_event_log(path, session.events)
        assert read_event_log(path) == session.events
        replayed = replay(kb, read_event_log(path))
        assert replayed.status is SessionStatus.FINISHED_FINDING

    def test_zulu_timestamps_accepted(self):
        event = event_from_json(
            '{"seq": 0, "ts": "2026-01-01T00:00:00Z", "kind": "started", '
            '"tree": "main", "session": "s"}'
        )
        assert event.ts.tzinfo is not None
