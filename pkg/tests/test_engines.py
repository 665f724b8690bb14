from __future__ import annotations

import pytest
from helpers import random_traces, warning_set

from shbrace import (
    OpKind,
    RaceKind,
    RaceWarning,
    hb_closure,
    parse,
    run_detector,
    shb_closure,
)
from shbrace.vclock import vt_leq, vt_update

WW = RaceKind.WITH_WRITE
WR = RaceKind.WITH_READ


def warns(trace, engine):
    return [(w.event_idx, w.kind) for w in run_detector(trace, engine).warnings]


class TestShbGolden:
    def test_golden1(self, golden1):
        assert warns(golden1, "shb") == [(2, WW)]

    def test_golden2(self, golden2):
        assert warns(golden2, "shb") == [(2, WR), (3, WR)]

    def test_golden3(self, golden3):
        assert warns(golden3, "shb") == [(6, WW)]

    def test_golden4(self, golden4):
        assert warns(golden4, "shb") == [(2, WW), (5, WW), (9, WW), (12, WW)]

    def test_golden1_timestamps(self, golden1):
        out = run_detector(golden1, "shb", record_timestamps=True)
        c = out.timestamps
        assert c == [(1, 0), (1, 0), (1, 1), (1, 1)]
        # the write-read chain makes everything ordered up to the last event
        assert vt_leq(c[1], c[2]) and vt_leq(c[2], c[3]) and vt_leq(c[0], c[3])

    def test_golden3_stats(self, golden3):
        out = run_detector(golden3, "shb")
        assert out.stats == {
            "reads": 2, "writes": 4, "acquires": 2, "releases": 2, "forks": 1, "joins": 1,
        }


class TestHbGolden:
    def test_golden1(self, golden1):
        assert warns(golden1, "hb") == [(2, WW), (3, WR)]

    def test_golden3(self, golden3):
        assert warns(golden3, "hb") == [(6, WW), (8, WW), (9, WW), (11, WW)]


class TestFhbGolden:
    def test_golden1(self, golden1):
        assert warns(golden1, "fhb") == [(2, WW)]

    def test_golden2_misses_second_race(self, golden2):
        assert warns(golden2, "fhb") == [(2, WR)]

    def test_single_thread(self):
        trace = parse("t1 w x\nt1 r x\nt1 w x\n")
        assert warns(trace, "fhb") == []


class TestEdgeCases:
    @pytest.mark.parametrize("engine", ["hb", "shb", "fhb", "shb-epoch"])
    def test_empty_trace(self, engine):
        out = run_detector(parse(""), engine, record_timestamps=True)
        assert out.warnings == [] and out.timestamps == []

    def test_join_of_never_run_thread(self):
        # the join sees the target's initial clock and stays benign
        trace = parse("t1 fork t2\nt1 join t2\nt1 w x\n")
        assert warns(trace, "shb") == []

    def test_join_of_never_forked_thread_is_total(self):
        # flagged by validation, but the engines must not fall over
        trace = parse("t1 join t2\nt1 w x\n")
        for engine in ("hb", "shb", "fhb", "shb-epoch"):
            assert warns(trace, engine) == []

    def test_unknown_engine(self, golden1):
        with pytest.raises(ValueError, match="unknown engine"):
            run_detector(golden1, "wcp")

    def test_probe_sees_state_every_event(self, golden1):
        seen = []
        run_detector(golden1, "shb", probe=lambda idx, st: seen.append((idx, st.engine)))
        assert seen == [(0, "shb"), (1, "shb"), (2, "shb"), (3, "shb")]

    def test_warned_events_deduplicates(self):
        trace = parse("t1 r x\nt1 w x\nt2 w x\n")
        out = run_detector(trace, "shb")
        assert out.warnings == [RaceWarning(2, WR), RaceWarning(2, WW)]
        assert out.warned_events == [2]


class TestTimestampProperties:
    def test_thread_monotonicity(self):
        for trace in random_traces(150, seed=31, max_events=40):
            out = run_detector(trace, "shb", record_timestamps=True)
            last = {}
            for e in trace.events:
                if e.thread in last:
                    assert vt_leq(out.timestamps[last[e.thread]], out.timestamps[e.idx])
                last[e.thread] = e.idx

    def test_cross_thread_order_matches_bumped_comparison(self):
        # e1 ordered before e2 across threads iff e1's timestamp fits under
        # e2's with its local component bumped by one
        for trace in random_traces(120, seed=32, max_events=16):
            out = run_detector(trace, "shb", record_timestamps=True)
            shb = shb_closure(trace)
            for e1 in trace.events:
                for e2 in trace.events[e1.idx + 1:]:
                    if e1.thread == e2.thread:
                        continue
                    c2 = out.timestamps[e2.idx]
                    bumped = vt_update(c2, c2[e2.thread] + 1, e2.thread)
                    assert vt_leq(out.timestamps[e1.idx], bumped) == shb.leq(e1.idx, e2.idx)

    def test_lock_and_last_write_clocks_hold_latest_timestamps(self):
        # after any prefix, the lock clock equals the timestamp of the last
        # release and the last-write clock the timestamp of the last write
        for trace in random_traces(60, seed=35, max_events=40):
            out = run_detector(trace, "shb", record_timestamps=True)
            last_rel: dict[int, int] = {}
            last_wr: dict[int, int] = {}

            def probe(idx, state):
                e = trace.events[idx]
                if e.kind is OpKind.RELEASE:
                    last_rel[e.target] = idx
                elif e.kind is OpKind.WRITE:
                    last_wr[e.target] = idx
                for lock, li in last_rel.items():
                    assert tuple(state.lock_clocks[lock]) == out.timestamps[li]
                for var, wi in last_wr.items():
                    assert tuple(state.last_write_clocks[var]) == out.timestamps[wi]

            run_detector(trace, "shb", probe=probe)

    def test_hb_timestamps_match_hb_closure(self):
        for trace in random_traces(120, seed=33, max_events=16):
            out = run_detector(trace, "hb", record_timestamps=True)
            hb = hb_closure(trace)
            for e1 in trace.events:
                for e2 in trace.events[e1.idx:]:
                    got = vt_leq(out.timestamps[e1.idx], out.timestamps[e2.idx])
                    assert got == hb.leq(e1.idx, e2.idx), (e1.idx, e2.idx)


class TestInclusionChain:
    def test_warnings_fhb_shb_hb(self):
        for trace in random_traces(300, seed=34, max_events=50):
            fhb = warning_set(run_detector(trace, "fhb"))
            shb = warning_set(run_detector(trace, "shb"))
            hb = warning_set(run_detector(trace, "hb"))
            assert fhb <= shb <= hb
