from __future__ import annotations

import pytest
from helpers import random_traces

from shbrace import (
    OracleCapExceeded,
    RacePair,
    all_schedulable_pairs,
    check_correct_reordering,
    first_hb_race,
    generate_random,
    GenParams,
    hb_closure,
    is_schedulable_pair,
    parse,
    shb_closure,
)
from shbrace.model import iter_conflicting_pairs
from shbrace.oracle import event_cap_from_env


class TestClosures:
    def test_golden1_hb_is_thread_order(self, golden1):
        hb = hb_closure(golden1)
        assert hb.leq(0, 1) and hb.leq(2, 3)
        assert not hb.leq(0, 3) and not hb.leq(1, 2)

    def test_golden3_lock_edge(self, golden3):
        hb = hb_closure(golden3)
        # the second writer is ordered after the first via the lock handoff
        assert hb.leq(1, 4)
        assert hb.leq(2, 3)

    def test_golden3_fork_join_dual_thread_order(self, golden3):
        hb = hb_closure(golden3)
        assert hb.leq(7, 8) and hb.leq(9, 10)
        assert hb.leq(6, 11)

    def test_empty_trace(self):
        assert hb_closure(parse("")).n == 0

    def test_golden1_shb_is_a_total_chain(self, golden1):
        shb = shb_closure(golden1)
        for i in range(4):
            for j in range(i, 4):
                assert shb.leq(i, j)

    def test_golden2_shb_equals_thread_order(self, golden2):
        shb = shb_closure(golden2)
        assert shb.leq(0, 1) and shb.leq(2, 3)
        assert not shb.leq(0, 3) and not shb.leq(1, 2)

    def test_golden4_shb_is_trace_order(self, golden4):
        shb = shb_closure(golden4)
        n = len(golden4.events)
        assert all(shb.leq(i, j) for i in range(n) for j in range(i, n))

    def test_containment_chain(self):
        for trace in random_traces(60, seed=61, max_events=18):
            hb = hb_closure(trace)
            shb = shb_closure(trace)
            n = len(trace.events)
            for t in range(len(trace.threads)):
                proj = trace.projection(t)
                for a, b in zip(proj, proj[1:]):
                    assert hb.leq(a, b)  # thread order is contained
            for i in range(n):
                for j in range(n):
                    if hb.leq(i, j):
                        assert shb.leq(i, j)
                    if shb.leq(i, j) and i != j:
                        assert i < j  # contained in trace order


class TestSchedulablePairs:
    def test_golden1(self, golden1):
        assert is_schedulable_pair(golden1, 1, 2) is True
        assert is_schedulable_pair(golden1, 0, 3) is False

    def test_golden2_both_races(self, golden2):
        assert is_schedulable_pair(golden2, 1, 2) is True
        assert is_schedulable_pair(golden2, 0, 3) is True

    def test_golden3_witness(self, golden3):
        found, witness = is_schedulable_pair(golden3, 1, 6, return_witness=True)
        assert found
        assert witness[-2:] in ([1, 6], [6, 1])
        assert check_correct_reordering(golden3, witness) == []

    def test_golden4_unschedulable_pairs(self, golden4):
        assert is_schedulable_pair(golden4, 1, 4) is False
        assert is_schedulable_pair(golden4, 8, 11) is False
        assert is_schedulable_pair(golden4, 3, 10) is False

    def test_rejects_bad_input(self, golden1):
        with pytest.raises(ValueError, match="not conflicting"):
            is_schedulable_pair(golden1, 0, 1)
        with pytest.raises(ValueError, match="e1 < e2"):
            is_schedulable_pair(golden1, 3, 0)

    def test_all_pairs_goldens(self, goldens):
        expected = {
            "golden1": {(1, 2)},
            "golden2": {(0, 3), (1, 2)},
            "golden3": {(1, 6), (4, 6)},
            "golden4": {(1, 2), (4, 5), (8, 9), (11, 12)},
        }
        for name, trace in goldens.items():
            assert all_schedulable_pairs(trace) == {RacePair(*p) for p in expected[name]}, name

    def test_single_thread_trace(self):
        trace = generate_random(GenParams(threads=1, events=8, vars=2, locks=1, seed=5))
        assert all_schedulable_pairs(trace) == set()

    def test_witnesses_are_valid_reorderings(self):
        for trace in random_traces(80, seed=62, max_events=12):
            for e1, e2 in iter_conflicting_pairs(trace):
                found, witness = is_schedulable_pair(trace, e1, e2, return_witness=True)
                if found:
                    assert sorted(witness[-2:]) == [e1, e2]
                    assert check_correct_reordering(trace, witness) == []

    def test_prune_never_changes_the_answer(self):
        for trace in random_traces(150, seed=63, max_events=10):
            for e1, e2 in iter_conflicting_pairs(trace):
                assert is_schedulable_pair(trace, e1, e2, prune=True) == is_schedulable_pair(
                    trace, e1, e2, prune=False
                )

    def test_characterization_via_closure(self):
        # schedulable iff the latest same-thread predecessor of the second
        # event does not causally depend on the first
        for trace in random_traces(250, seed=64, max_events=14):
            shb = shb_closure(trace)
            ltho = trace.ltho_table()
            expected = set()
            for e1, e2 in iter_conflicting_pairs(trace):
                f = ltho[e2]
                if f is None or not shb.leq(e1, f):
                    expected.add(RacePair(e1, e2))
            assert all_schedulable_pairs(trace) == expected

    def test_matches_streaming_engine_up_to_twenty_events(self):
        from shbrace import enumerate_pairs, run_detector

        for trace in random_traces(120, seed=66, max_events=20):
            out = run_detector(trace, "shb", record_timestamps=True)
            engine_pairs = set(enumerate_pairs(trace, out.timestamps))
            assert engine_pairs == all_schedulable_pairs(trace)


class TestFirstRace:
    def test_golden1(self, golden1):
        assert first_hb_race(golden1) == RacePair(1, 2)

    def test_golden3_tie_breaks_towards_later_first_event(self, golden3):
        assert first_hb_race(golden3) == RacePair(4, 6)

    def test_race_free_trace(self):
        trace = parse("t1 w x\nt1 fork t2\nt2 r x\n")
        assert first_hb_race(trace) is None

    def test_first_race_is_always_schedulable(self):
        for trace in random_traces(200, seed=65, max_events=14):
            first = first_hb_race(trace)
            if first is not None:
                assert first in all_schedulable_pairs(trace)


class TestCaps:
    def test_event_cap(self):
        trace = generate_random(GenParams(threads=2, events=30, vars=2, locks=0, seed=1))
        with pytest.raises(OracleCapExceeded, match="30 events"):
            all_schedulable_pairs(trace)
        assert len(all_schedulable_pairs(trace, event_cap=40)) >= 0

    def test_thread_cap(self):
        trace = parse("".join(f"t{i} w x\n" for i in range(1, 7)))
        with pytest.raises(OracleCapExceeded, match="threads"):
            hb_closure(trace)

    def test_env_override(self, monkeypatch):
        monkeypatch.delenv("SHB_ORACLE_CAP", raising=False)
        assert event_cap_from_env() == 24
        monkeypatch.setenv("SHB_ORACLE_CAP", "40")
        assert event_cap_from_env() == 40
        monkeypatch.setenv("SHB_ORACLE_CAP", "nope")
        with pytest.raises(ValueError):
            event_cap_from_env()
