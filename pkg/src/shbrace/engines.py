"""Streaming vector-clock race detectors.

Three engines share one state shape (per-thread clocks ``C``, per-lock
clocks ``L``, per-variable last-write clocks ``LW`` and read/write access
histories ``R``/``W``) and differ only in their read/write handlers:

``shb``
    Maintains ``LW`` and joins it into the reader's clock, so the computed
    timestamps order every read after the write it observed. A warning at
    an event means some earlier conflicting event forms a race with it that
    is actually schedulable in an alternate interleaving of the trace.

``hb``
    The classical unsound-beyond-the-first-race baseline: identical to
    ``shb`` with all ``LW`` bookkeeping removed (the write-time local clock
    increment is kept). Warnings flag plain happens-before races.

``fhb``
    Force ordering: a developer-style baseline that, after each detected
    race, merges the racing access history into the current thread's clock
    so the pair is treated as ordered from then on. It keeps the
    last-write clock (its read handler joins it, so its writes must store
    it; dropping the clock instead would let a force-join smuggle in only
    the racing writer's local component and produce unschedulable reports
    downstream). Sound but incomplete. Its write handler performs no local
    increment.

Event timestamps (recorded on request for the pair-enumeration pass) are
the value of the thread clock after the handler for reads, acquires and
joins, and the value just before the trailing local increment for writes,
releases and forks. The ``fhb`` engine timestamps accesses with the clock
*before* any force-ordering join, since a forced edge is not part of the
event's own causal past.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass
from operator import le
from typing import Callable, NamedTuple

from .model import OpKind, Trace


class RaceKind(str, enum.Enum):
    WITH_READ = "with-read"
    WITH_WRITE = "with-write"

    def __str__(self) -> str:
        return self.value


class RaceWarning(NamedTuple):
    event_idx: int
    kind: RaceKind


class DetectorState:
    """Live view of an engine's clocks, passed to per-event probes."""

    __slots__ = (
        "engine",
        "thread_clocks",
        "lock_clocks",
        "last_write_clocks",
        "read_history",
        "write_history",
    )

    def __init__(self, engine, thread_clocks, lock_clocks, last_write_clocks,
                 read_history, write_history) -> None:
        self.engine = engine
        self.thread_clocks = thread_clocks
        self.lock_clocks = lock_clocks
        self.last_write_clocks = last_write_clocks
        self.read_history = read_history
        self.write_history = write_history


Probe = Callable[[int, DetectorState], None]


@dataclass
class DetectorOutput:
    engine: str
    warnings: list[RaceWarning]
    timestamps: list[tuple[int, ...]] | None
    stats: dict[str, int]

    @property
    def warned_events(self) -> list[int]:
        """Distinct event indices with at least one warning, in order."""
        seen: list[int] = []
        for w in self.warnings:
            if not seen or seen[-1] != w.event_idx:
                seen.append(w.event_idx)
        return seen


ENGINES = ("hb", "shb", "fhb", "shb-epoch")

_STAT_KEYS = {
    OpKind.READ: "reads",
    OpKind.WRITE: "writes",
    OpKind.ACQUIRE: "acquires",
    OpKind.RELEASE: "releases",
    OpKind.FORK: "forks",
    OpKind.JOIN: "joins",
}


def _stats(trace: Trace) -> dict[str, int]:
    counts = Counter(e.kind for e in trace.events)
    return {name: counts.get(kind, 0) for kind, name in _STAT_KEYS.items()}


def _initial_clocks(n_threads: int) -> list[list[int]]:
    clocks = []
    for t in range(n_threads):
        c = [0] * n_threads
        c[t] = 1
        clocks.append(c)
    return clocks


def run_detector(
    trace: Trace,
    engine: str = "shb",
    record_timestamps: bool = False,
    probe: Probe | None = None,
) -> DetectorOutput:
    """One streaming pass of the chosen engine over the trace.

    ``record_timestamps`` costs O(events x threads) memory and is required
    for race-pair enumeration; warning-only runs should leave it off.
    ``probe`` is called after every event with the live detector state.
    """
    if engine == "shb":
        warnings, stamps = _run_shb(trace, record_timestamps, probe)
    elif engine == "hb":
        warnings, stamps = _run_hb(trace, record_timestamps, probe)
    elif engine == "fhb":
        warnings, stamps = _run_fhb(trace, record_timestamps, probe)
    elif engine == "shb-epoch":
        from .epoch import _run_epoch

        warnings, stamps = _run_epoch(trace, record_timestamps, probe)
    else:
        raise ValueError(f"unknown engine '{engine}' (choose from {ENGINES})")
    return DetectorOutput(engine, warnings, stamps, _stats(trace))


def _run_shb(trace, record, probe):
    READ, WRITE, ACQUIRE, RELEASE, FORK = (
        OpKind.READ, OpKind.WRITE, OpKind.ACQUIRE, OpKind.RELEASE, OpKind.FORK,
    )
    WITH_READ, WITH_WRITE = RaceKind.WITH_READ, RaceKind.WITH_WRITE
    T = len(trace.threads)
    C = _initial_clocks(T)
    L: list[list[int] | None] = [None] * len(trace.locks)
    LW: list[list[int] | None] = [None] * len(trace.variables)
    R: list[list[int] | None] = [None] * len(trace.variables)
    W: list[list[int] | None] = [None] * len(trace.variables)
    warnings: list[RaceWarning] = []
    warn = warnings.append
    stamps: list[tuple[int, ...]] | None = [] if record else None
    state = DetectorState("shb", C, L, LW, R, W) if probe else None

    for idx, t, kind, x, _loc in trace.events:
        ct = C[t]
        if kind == READ:
            w = W[x]
            if w is not None and not all(map(le, w, ct)):
                warn(RaceWarning(idx, WITH_WRITE))
            lw = LW[x]
            if lw is not None and not all(map(le, lw, ct)):
                ct[:] = map(max, ct, lw)
            r = R[x]
            if r is None:
                r = R[x] = [0] * T
            r[t] = ct[t]
            if stamps is not None:
                stamps.append(tuple(ct))
        elif kind == WRITE:
            r = R[x]
            if r is not None and not all(map(le, r, ct)):
                warn(RaceWarning(idx, WITH_READ))
            w = W[x]
            if w is not None and not all(map(le, w, ct)):
                warn(RaceWarning(idx, WITH_WRITE))
            LW[x] = ct.copy()
            if w is None:
                w = W[x] = [0] * T
            w[t] = ct[t]
            if stamps is not None:
                stamps.append(tuple(ct))
            ct[t] += 1
        elif kind == ACQUIRE:
            ll = L[x]
            if ll is not None and not all(map(le, ll, ct)):
                ct[:] = map(max, ct, ll)
            if stamps is not None:
                stamps.append(tuple(ct))
        elif kind == RELEASE:
            L[x] = ct.copy()
            if stamps is not None:
                stamps.append(tuple(ct))
            ct[t] += 1
        elif kind == FORK:
            cu = ct.copy()
            cu[x] = 1
            C[x] = cu
            if stamps is not None:
                stamps.append(tuple(ct))
            ct[t] += 1
        else:  # JOIN; a never-run target contributes its initial clock
            cu = C[x]
            if not all(map(le, cu, ct)):
                ct[:] = map(max, ct, cu)
            if stamps is not None:
                stamps.append(tuple(ct))
        if state is not None:
            probe(idx, state)
    return warnings, stamps


def _run_hb(trace, record, probe):
    READ, WRITE, ACQUIRE, RELEASE, FORK = (
        OpKind.READ, OpKind.WRITE, OpKind.ACQUIRE, OpKind.RELEASE, OpKind.FORK,
    )
    WITH_READ, WITH_WRITE = RaceKind.WITH_READ, RaceKind.WITH_WRITE
    T = len(trace.threads)
    C = _initial_clocks(T)
    L: list[list[int] | None] = [None] * len(trace.locks)
    R: list[list[int] | None] = [None] * len(trace.variables)
    W: list[list[int] | None] = [None] * len(trace.variables)
    warnings: list[RaceWarning] = []
    warn = warnings.append
    stamps: list[tuple[int, ...]] | None = [] if record else None
    state = DetectorState("hb", C, L, [None] * len(trace.variables), R, W) if probe else None

    for idx, t, kind, x, _loc in trace.events:
        ct = C[t]
        if kind == READ:
            w = W[x]
            if w is not None and not all(map(le, w, ct)):
                warn(RaceWarning(idx, WITH_WRITE))
            r = R[x]
            if r is None:
                r = R[x] = [0] * T
            r[t] = ct[t]
            if stamps is not None:
                stamps.append(tuple(ct))
        elif kind == WRITE:
            r = R[x]
            if r is not None and not all(map(le, r, ct)):
                warn(RaceWarning(idx, WITH_READ))
            w = W[x]
            if w is not None and not all(map(le, w, ct)):
                warn(RaceWarning(idx, WITH_WRITE))
            if w is None:
                w = W[x] = [0] * T
            w[t] = ct[t]
            if stamps is not None:
                stamps.append(tuple(ct))
            ct[t] += 1
        elif kind == ACQUIRE:
            ll = L[x]
            if ll is not None and not all(map(le, ll, ct)):
                ct[:] = map(max, ct, ll)
            if stamps is not None:
                stamps.append(tuple(ct))
        elif kind == RELEASE:
            L[x] = ct.copy()
            if stamps is not None:
                stamps.append(tuple(ct))
            ct[t] += 1
        elif kind == FORK:
            cu = ct.copy()
            cu[x] = 1
            C[x] = cu
            if stamps is not None:
                stamps.append(tuple(ct))
            ct[t] += 1
        else:  # JOIN
            cu = C[x]
            if not all(map(le, cu, ct)):
                ct[:] = map(max, ct, cu)
            if stamps is not None:
                stamps.append(tuple(ct))
        if state is not None:
            probe(idx, state)
    return warnings, stamps


def _run_fhb(trace, record, probe):
    READ, WRITE, ACQUIRE, RELEASE, FORK = (
        OpKind.READ, OpKind.WRITE, OpKind.ACQUIRE, OpKind.RELEASE, OpKind.FORK,
    )
    WITH_READ, WITH_WRITE = RaceKind.WITH_READ, RaceKind.WITH_WRITE
    T = len(trace.threads)
    C = _initial_clocks(T)
    L: list[list[int] | None] = [None] * len(trace.locks)
    LW: list[list[int] | None] = [None] * len(trace.variables)
    R: list[list[int] | None] = [None] * len(trace.variables)
    W: list[list[int] | None] = [None] * len(trace.variables)
    warnings: list[RaceWarning] = []
    warn = warnings.append
    stamps: list[tuple[int, ...]] | None = [] if record else None
    state = DetectorState("fhb", C, L, LW, R, W) if probe else None

    for idx, t, kind, x, _loc in trace.events:
        ct = C[t]
        if kind == READ:
            if stamps is not None:
                stamps.append(tuple(ct))
            w = W[x]
            if w is not None and not all(map(le, w, ct)):
                warn(RaceWarning(idx, WITH_WRITE))
                ct[:] = map(max, ct, w)  # force ordering
            lw = LW[x]
            if lw is not None and not all(map(le, lw, ct)):
                ct[:] = map(max, ct, lw)
            r = R[x]
            if r is None:
                r = R[x] = [0] * T
            r[t] = ct[t]
        elif kind == WRITE:
            if stamps is not None:
                stamps.append(tuple(ct))
            r = R[x]
            if r is not None and not all(map(le, r, ct)):
                warn(RaceWarning(idx, WITH_READ))
                ct[:] = map(max, ct, r)  # force ordering
            w = W[x]
            if w is not None and not all(map(le, w, ct)):
                warn(RaceWarning(idx, WITH_WRITE))
                ct[:] = map(max, ct, w)  # force ordering
            LW[x] = ct.copy()
            if w is None:
                w = W[x] = [0] * T
            w[t] = ct[t]
            # no local increment at writes
        elif kind == ACQUIRE:
            ll = L[x]
            if ll is not None and not all(map(le, ll, ct)):
                ct[:] = map(max, ct, ll)
            if stamps is not None:
                stamps.append(tuple(ct))
        elif kind == RELEASE:
            L[x] = ct.copy()
            if stamps is not None:
                stamps.append(tuple(ct))
            ct[t] += 1
        elif kind == FORK:
            cu = ct.copy()
            cu[x] = 1
            C[x] = cu
            if stamps is not None:
                stamps.append(tuple(ct))
            ct[t] += 1
        else:  # JOIN
            cu = C[x]
            if not all(map(le, cu, ct)):
                ct[:] = map(max, ct, cu)
            if stamps is not None:
                stamps.append(tuple(ct))
        if state is not None:
            probe(idx, state)
    return warnings, stamps
