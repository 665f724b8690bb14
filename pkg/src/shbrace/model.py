"""Event and trace model for recorded concurrent executions.

A trace is a sequence of events, each performed by one thread: reads and
writes of shared variables, lock acquires and releases, and thread
fork/join. Identifiers are interned per namespace (threads, locks,
variables) into dense indices in first-appearance order, which keeps runs
deterministic and lets the analyses use array-backed state.

Fork and join events are special: an event ``<t, fork(u)>`` or
``<t, join(u)>`` counts as an event of *both* threads ``t`` and ``u``.
Thread projections, ``last_thread_event`` and the thread order used by the
reference closures all follow this dual-membership rule.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple


class OpKind(enum.IntEnum):
    """Operation performed by an event."""

    READ = 0
    WRITE = 1
    ACQUIRE = 2
    RELEASE = 3
    FORK = 4
    JOIN = 5


ACCESS_KINDS = (OpKind.READ, OpKind.WRITE)
LOCK_KINDS = (OpKind.ACQUIRE, OpKind.RELEASE)
THREAD_KINDS = (OpKind.FORK, OpKind.JOIN)


class Ident(NamedTuple):
    """An interned identifier: its source symbol and dense index."""

    symbol: str
    index: int


class Event(NamedTuple):
    """One trace entry.

    ``idx`` doubles as the unique event id (events are identified by their
    position in the owning trace). ``thread`` and ``target`` are dense
    indices into the trace registries; the namespace of ``target`` depends
    on ``kind`` (variables for read/write, locks for acquire/release,
    threads for fork/join). ``location`` is an opaque source location used
    only for reporting.
    """

    idx: int
    thread: int
    kind: OpKind
    target: int
    location: str | None = None


def event_threads(e: Event) -> tuple[int, ...]:
    """Threads this event belongs to (fork/join belong to both sides)."""
    if e.kind in THREAD_KINDS and e.target != e.thread:
        return (e.thread, e.target)
    return (e.thread,)


def conflicting(e1: Event, e2: Event) -> bool:
    """True iff the events access the same variable from different threads
    and at least one of them is a write."""
    return (
        e1.kind in ACCESS_KINDS
        and e2.kind in ACCESS_KINDS
        and e1.target == e2.target
        and e1.thread != e2.thread
        and (e1.kind is OpKind.WRITE or e2.kind is OpKind.WRITE)
    )


class Registry:
    """Interns symbols of one namespace into dense indices.

    Indices are assigned in first-appearance order and never change for
    the lifetime of the owning trace.
    """

    __slots__ = ("symbols", "_index")

    def __init__(self) -> None:
        self.symbols: list[str] = []
        self._index: dict[str, int] = {}

    def intern(self, symbol: str) -> int:
        idx = self._index.get(symbol)
        if idx is None:
            idx = len(self.symbols)
            self._index[symbol] = idx
            self.symbols.append(symbol)
        return idx

    def ident(self, index: int) -> Ident:
        return Ident(self.symbols[index], index)

    def __len__(self) -> int:
        return len(self.symbols)

    def __contains__(self, symbol: str) -> bool:
        return symbol in self._index


class Trace:
    """Validated-on-demand, immutable sequence of events.

    Derived tables (last write per read, last thread event per event,
    per-thread projections) are computed lazily and cached; the instance
    is safe to share across threads after construction.
    """

    __slots__ = (
        "events",
        "threads",
        "locks",
        "variables",
        "source_lines",
        "_lw",
        "_ltho",
        "_projections",
    )

    def __init__(
        self,
        events: list[Event],
        threads: Registry,
        locks: Registry,
        variables: Registry,
        source_lines: tuple[int, ...] | None = None,
    ) -> None:
        self.events = events
        self.threads = threads
        self.locks = locks
        self.variables = variables
        self.source_lines = source_lines
        self._lw: tuple[int | None, ...] | None = None
        self._ltho: tuple[int | None, ...] | None = None
        self._projections: list[list[int]] | None = None

    def __len__(self) -> int:
        return len(self.events)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Trace):
            return NotImplemented
        return (
            self.events == other.events
            and self.threads.symbols == other.threads.symbols
            and self.locks.symbols == other.locks.symbols
            and self.variables.symbols == other.variables.symbols
        )

    def __hash__(self) -> int:  # identity hashing; traces are containers
        return id(self)

    def location_of(self, idx: int) -> str:
        """Reporting location of an event; defaults to the decimal event
        index so location-pair reports degrade to event-pair reports."""
        loc = self.events[idx].location
        return loc if loc is not None else str(idx)

    def lw_table(self) -> tuple[int | None, ...]:
        """For each event: index of the latest write to the same variable
        strictly before it (reads only; None elsewhere or if no write)."""
        if self._lw is None:
            last_write: dict[int, int] = {}
            table: list[int | None] = [None] * len(self.events)
            for e in self.events:
                if e.kind is OpKind.READ:
                    table[e.idx] = last_write.get(e.target)
                elif e.kind is OpKind.WRITE:
                    last_write[e.target] = e.idx
            self._lw = tuple(table)
        return self._lw

    def ltho_table(self) -> tuple[int | None, ...]:
        """For each event: index of the latest earlier event of the same
        thread, under the fork/join dual-membership rule."""
        if self._ltho is None:
            last_of_thread: dict[int, int] = {}
            table: list[int | None] = [None] * len(self.events)
            for e in self.events:
                members = event_threads(e)
                prev = [last_of_thread[u] for u in members if u in last_of_thread]
                table[e.idx] = max(prev) if prev else None
                for u in members:
                    last_of_thread[u] = e.idx
            self._ltho = tuple(table)
        return self._ltho

    def projection(self, thread: int) -> list[int]:
        """Event indices of the given thread, dual membership included."""
        if self._projections is None:
            projections: list[list[int]] = [[] for _ in range(len(self.threads))]
            for e in self.events:
                for u in event_threads(e):
                    projections[u].append(e.idx)
            self._projections = projections
        return self._projections[thread]

    def accesses_by_variable(self) -> dict[int, tuple[list[int], list[int]]]:
        """Per variable: (read event indices, write event indices)."""
        table: dict[int, tuple[list[int], list[int]]] = {}
        for e in self.events:
            if e.kind is OpKind.READ:
                table.setdefault(e.target, ([], []))[0].append(e.idx)
            elif e.kind is OpKind.WRITE:
                table.setdefault(e.target, ([], []))[1].append(e.idx)
        return table


class TraceBuilder:
    """Accumulates events by symbol and produces an interned Trace."""

    def __init__(self) -> None:
        self.threads = Registry()
        self.locks = Registry()
        self.variables = Registry()
        self.events: list[Event] = []

    def add(
        self,
        thread: str,
        kind: OpKind,
        target: str,
        location: str | None = None,
    ) -> Event:
        tid = self.threads.intern(thread)
        if kind in ACCESS_KINDS:
            tgt = self.variables.intern(target)
        elif kind in LOCK_KINDS:
            tgt = self.locks.intern(target)
        else:
            tgt = self.threads.intern(target)
        e = Event(len(self.events), tid, kind, tgt, location)
        self.events.append(e)
        return e

    def build(self, source_lines: tuple[int, ...] | None = None) -> Trace:
        return Trace(self.events, self.threads, self.locks, self.variables, source_lines)


# ---------------------------------------------------------------------------
# Well-formedness validation
# ---------------------------------------------------------------------------


class Violation(NamedTuple):
    event_idx: int
    rule: str
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_well_formed(trace: Trace) -> ValidationReport:
    """Check lock discipline and fork/join sanity.

    Lock rules follow the non-reentrant lock model: per lock, the
    projection must be a prefix of alternating acquire/release pairs by a
    single thread at a time. The fork/join rules are stricter than strictly
    necessary for the analyses but match what real trace loggers produce:

    - a thread may be forked at most once, and only before any of its events;
    - fork/join must not target the performing thread;
    - a joined thread must not appear again afterwards;
    - joining a thread with no prior events is flagged (the detectors still
      accept such traces, using the target's initial clock).
    """
    report = ValidationReport()
    holder: dict[int, int] = {}
    forked: set[int] = set()
    joined: set[int] = set()
    proj_len: dict[int, int] = {}

    def flag(e: Event, rule: str, message: str) -> None:
        report.violations.append(Violation(e.idx, rule, message))

    for e in trace.events:
        members = event_threads(e)
        dead = [u for u in members if u in joined]
        if dead:
            flag(
                e,
                "event-after-join",
                f"event of thread '{trace.threads.symbols[dead[0]]}' after it was joined",
            )
        kind = e.kind
        if kind is OpKind.ACQUIRE:
            owner = holder.get(e.target)
            if owner is None:
                holder[e.target] = e.thread
            elif owner == e.thread:
                flag(e, "reentrant-acquire",
                     f"reentrant acquire of lock '{trace.locks.symbols[e.target]}'")
            else:
                flag(e, "acquire-held",
                     f"acquire of lock '{trace.locks.symbols[e.target]}' held by another thread")
        elif kind is OpKind.RELEASE:
            owner = holder.get(e.target)
            if owner is None:
                flag(e, "release-unheld",
                     f"release without acquire of lock '{trace.locks.symbols[e.target]}'")
            elif owner != e.thread:
                flag(e, "release-wrong-thread",
                     f"release of lock '{trace.locks.symbols[e.target]}' held by another thread")
            else:
                del holder[e.target]
        elif kind is OpKind.FORK:
            if e.target == e.thread:
                flag(e, "self-fork", "fork targets the performing thread")
            else:
                if proj_len.get(e.target, 0) > 0:
                    flag(e, "fork-after-events",
                         f"fork of thread '{trace.threads.symbols[e.target]}' that already has events")
                if e.target in forked:
                    flag(e, "double-fork",
                         f"thread '{trace.threads.symbols[e.target]}' was already forked")
                forked.add(e.target)
        elif kind is OpKind.JOIN:
            if e.target == e.thread:
                flag(e, "self-join", "join targets the performing thread")
            else:
                if proj_len.get(e.target, 0) == 0:
                    flag(e, "join-no-events",
                         f"join of thread '{trace.threads.symbols[e.target]}' with no events")
                joined.add(e.target)
        for u in members:
            proj_len[u] = proj_len.get(u, 0) + 1
    return report


def drop_flagged_events(trace: Trace) -> tuple[Trace, list[Violation]]:
    """Remove offending events until validation passes (lenient mode).

    Dropping an event can create new violations (e.g. the release matching
    a dropped acquire), so validation is re-run until it is clean. Returns
    the cleaned trace and every violation seen along the way.
    """
    dropped: list[Violation] = []
    current = trace
    for _ in range(len(trace.events) + 1):
        report = validate_well_formed(current)
        if report.ok:
            return current, dropped
        dropped.extend(report.violations)
        bad = {v.event_idx for v in report.violations}
        builder = TraceBuilder()
        for e in current.events:
            if e.idx in bad:
                continue
            kind = e.kind
            if kind in ACCESS_KINDS:
                target = current.variables.symbols[e.target]
            elif kind in LOCK_KINDS:
                target = current.locks.symbols[e.target]
            else:
                target = current.threads.symbols[e.target]
            builder.add(current.threads.symbols[e.thread], kind, target, e.location)
        current = builder.build()
    return current, dropped  # pragma: no cover - loop always terminates earlier


# ---------------------------------------------------------------------------
# Reference computations
# ---------------------------------------------------------------------------


def last_write(trace: Trace, e: Event) -> Event | None:
    """The unique latest write to the same variable strictly before the
    given read, or None if the read sees no prior write."""
    if e.kind is not OpKind.READ:
        raise ValueError(f"last_write expects a read event, got {e.kind.name}")
    idx = trace.lw_table()[e.idx]
    return None if idx is None else trace.events[idx]


def last_thread_event(trace: Trace, e: Event) -> Event | None:
    """The latest earlier event of the same thread (dual-membership rule),
    or None if there is no such event."""
    idx = trace.ltho_table()[e.idx]
    return None if idx is None else trace.events[idx]


def iter_conflicting_pairs(trace: Trace) -> Iterable[tuple[int, int]]:
    """All conflicting (e1, e2) index pairs with e1 < e2, grouped per
    variable so the cost is quadratic in per-variable access counts."""
    for _var, (reads, writes) in sorted(trace.accesses_by_variable().items()):
        events = trace.events
        for i, w in enumerate(writes):
            wt = events[w].thread
            for w2 in writes[i + 1:]:
                if events[w2].thread != wt:
                    yield (w, w2)
            for r in reads:
                if events[r].thread != wt:
                    yield (min(w, r), max(w, r))
