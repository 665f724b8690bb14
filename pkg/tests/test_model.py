from __future__ import annotations

import pytest
from helpers import random_traces

from shbrace import (
    Event,
    GenParams,
    OpKind,
    conflicting,
    drop_flagged_events,
    event_threads,
    generate_random,
    last_thread_event,
    last_write,
    parse,
    validate_well_formed,
)


def rules_of(report):
    return {(v.event_idx, v.rule) for v in report.violations}


class TestValidation:
    def test_goldens_are_well_formed(self, goldens):
        for name, trace in goldens.items():
            report = validate_well_formed(trace)
            assert report.ok, (name, report.violations)

    def test_reentrant_acquire(self):
        report = validate_well_formed(parse("t1 acq l\nt1 acq l\n"))
        assert rules_of(report) == {(1, "reentrant-acquire")}
        assert "reentrant acquire" in report.violations[0].message

    def test_release_without_acquire(self):
        report = validate_well_formed(parse("t1 rel l\n"))
        assert rules_of(report) == {(0, "release-unheld")}
        assert "release without acquire" in report.violations[0].message

    def test_acquire_of_held_lock(self):
        report = validate_well_formed(parse("t1 acq l\nt2 acq l\n"))
        assert rules_of(report) == {(1, "acquire-held")}

    def test_release_by_other_thread(self):
        report = validate_well_formed(parse("t1 acq l\nt2 rel l\n"))
        assert rules_of(report) == {(1, "release-wrong-thread")}

    def test_fork_of_running_thread(self):
        report = validate_well_formed(parse("t2 w x\nt1 fork t2\n"))
        assert (1, "fork-after-events") in rules_of(report)

    def test_double_fork(self):
        report = validate_well_formed(parse("t1 fork t2\nt2 w x\nt3 fork t2\n"))
        assert (2, "fork-after-events") in rules_of(report)
        assert (2, "double-fork") in rules_of(report)

    def test_self_fork_and_self_join(self):
        assert rules_of(validate_well_formed(parse("t1 fork t1\n"))) == {(0, "self-fork")}
        assert rules_of(validate_well_formed(parse("t1 w x\nt1 join t1\n"))) == {(1, "self-join")}

    def test_event_after_join(self):
        report = validate_well_formed(parse("t2 w x\nt1 join t2\nt2 r x\n"))
        assert rules_of(report) == {(2, "event-after-join")}

    def test_join_counts_as_event_of_target(self):
        # a second join of the same thread touches a joined thread
        report = validate_well_formed(parse("t2 w x\nt1 join t2\nt3 join t2\n"))
        assert (2, "event-after-join") in rules_of(report)

    def test_join_of_thread_without_events(self):
        report = validate_well_formed(parse("t1 join t2\n"))
        assert rules_of(report) == {(0, "join-no-events")}

    def test_join_of_forked_idle_thread_is_fine(self):
        # the fork event itself belongs to the child's projection
        report = validate_well_formed(parse("t1 fork t2\nt1 join t2\n"))
        assert report.ok

    def test_lenient_drop_converges(self):
        trace = parse("t1 acq l\nt1 acq l\nt1 w x\nt1 rel l\nt1 rel l\n")
        cleaned, dropped = drop_flagged_events(trace)
        assert validate_well_formed(cleaned).ok
        assert len(cleaned.events) == 3
        assert {v.rule for v in dropped} == {"reentrant-acquire", "release-unheld"}


class TestDerivedTables:
    def test_last_write_examples(self, golden3):
        events = golden3.events
        assert last_write(golden3, events[6]) == events[4]
        assert last_write(golden3, events[11]) == events[9]

    def test_last_write_without_prior_write(self):
        trace = parse("t1 r x\n")
        assert last_write(trace, trace.events[0]) is None

    def test_last_write_rejects_non_read(self, golden3):
        with pytest.raises(ValueError):
            last_write(golden3, golden3.events[1])

    def test_last_thread_event_examples(self, golden3):
        events = golden3.events
        assert last_thread_event(golden3, events[1]) == events[0]
        assert last_thread_event(golden3, events[6]) is None
        assert last_thread_event(golden3, events[8]) == events[7]
        assert last_thread_event(golden3, events[10]) == events[9]

    def test_child_projection_includes_fork_and_join(self, golden3):
        t4 = golden3.threads.intern("t4")
        assert golden3.projection(t4) == [7, 8, 9, 10]

    def test_tables_match_quadratic_reference(self):
        big = generate_random(GenParams(threads=5, events=1000, vars=3, locks=2, seed=77))
        for trace in [big, *random_traces(40, seed=2024, max_events=200)]:
            events = trace.events
            lw = trace.lw_table()
            ltho = trace.ltho_table()
            for e in events:
                expected_lw = None
                expected_ltho = None
                for other in events[: e.idx]:
                    if (
                        e.kind is OpKind.READ
                        and other.kind is OpKind.WRITE
                        and other.target == e.target
                    ):
                        expected_lw = other.idx
                    if set(event_threads(other)) & set(event_threads(e)):
                        expected_ltho = other.idx
                if e.kind is OpKind.READ:
                    assert lw[e.idx] == expected_lw
                assert ltho[e.idx] == expected_ltho


class TestConflicting:
    def test_write_read_conflicts(self):
        w = Event(0, 0, OpKind.WRITE, 0)
        r = Event(1, 1, OpKind.READ, 0)
        assert conflicting(w, r)

    def test_two_reads_do_not_conflict(self):
        r1 = Event(0, 0, OpKind.READ, 0)
        r2 = Event(1, 1, OpKind.READ, 0)
        assert not conflicting(r1, r2)

    def test_same_thread_does_not_conflict(self):
        w = Event(0, 0, OpKind.WRITE, 0)
        r = Event(1, 0, OpKind.READ, 0)
        assert not conflicting(w, r)

    def test_different_variables_do_not_conflict(self):
        w = Event(0, 0, OpKind.WRITE, 0)
        r = Event(1, 1, OpKind.READ, 1)
        assert not conflicting(w, r)

    def test_lock_events_do_not_conflict(self):
        a = Event(0, 0, OpKind.ACQUIRE, 0)
        b = Event(1, 1, OpKind.RELEASE, 0)
        assert not conflicting(a, b)


def test_location_defaults_to_event_index():
    trace = parse("t1 w x main.c:3\nt2 r x\n")
    assert trace.location_of(0) == "main.c:3"
    assert trace.location_of(1) == "1"
