"""Ground-truth race certification for small traces.

Two independent reference computations back the streaming engines:

- explicit transitive closures of the happens-before order (thread order
  plus release-to-acquire edges) and of its strengthening with
  last-write-to-read edges, as boolean matrices over event indices;
- an exhaustive search over *correct reorderings*: alternate interleavings
  that keep every thread's sequence a prefix of the original, respect lock
  mutual exclusion, never flip or orphan happens-before-ordered events, and
  preserve the last write seen by every read that is not the final event of
  its thread. A conflicting pair is a schedulable race iff some such
  reordering ends with the two events adjacent, in either order.

The search is exponential and exists purely as a desk-scale certifier, so
it enforces a hard size cap and refuses bigger inputs.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from .model import OpKind, Trace, conflicting, event_threads, iter_conflicting_pairs
from .report import RacePair

DEFAULT_EVENT_CAP = 24
DEFAULT_THREAD_CAP = 5
CAP_ENV_VAR = "SHB_ORACLE_CAP"


class OracleCapExceeded(ValueError):
    """The trace is too large for exhaustive certification."""


def event_cap_from_env(default: int = DEFAULT_EVENT_CAP) -> int:
    value = os.environ.get(CAP_ENV_VAR)
    if value is None:
        return default
    try:
        return int(value)
    except ValueError as exc:
        raise ValueError(f"{CAP_ENV_VAR} must be an integer, got {value!r}") from exc


def _check_caps(trace: Trace, event_cap: int, thread_cap: int) -> None:
    if len(trace.events) > event_cap:
        raise OracleCapExceeded(
            f"trace has {len(trace.events)} events, oracle cap is {event_cap}"
        )
    if len(trace.threads) > thread_cap:
        raise OracleCapExceeded(
            f"trace has {len(trace.threads)} threads, oracle cap is {thread_cap}"
        )


# ---------------------------------------------------------------------------
# Reference partial-order closures
# ---------------------------------------------------------------------------


@dataclass
class PartialOrderMatrix:
    """Reflexive, transitively closed relation over event indices."""

    flavor: str
    rows: list[list[bool]]

    def leq(self, i: int, j: int) -> bool:
        return self.rows[i][j]

    @property
    def n(self) -> int:
        return len(self.rows)


def _close(rows: list[list[bool]]) -> None:
    n = len(rows)
    for k in range(n):
        rk = rows[k]
        for i in range(n):
            if rows[i][k]:
                ri = rows[i]
                for j in range(n):
                    if rk[j]:
                        ri[j] = True


def _thread_and_lock_edges(trace: Trace) -> list[list[bool]]:
    n = len(trace.events)
    rows = [[i == j for j in range(n)] for i in range(n)]
    for t in range(len(trace.threads)):
        proj = trace.projection(t)
        for a, b in zip(proj, proj[1:]):
            rows[a][b] = True
    by_lock: dict[int, list[int]] = {}
    for e in trace.events:
        if e.kind in (OpKind.ACQUIRE, OpKind.RELEASE):
            by_lock.setdefault(e.target, []).append(e.idx)
    for indices in by_lock.values():
        events = trace.events
        for i, a in enumerate(indices):
            if events[a].kind is OpKind.RELEASE:
                for b in indices[i + 1:]:
                    if events[b].kind is OpKind.ACQUIRE:
                        rows[a][b] = True
    return rows


def hb_closure(
    trace: Trace,
    event_cap: int = DEFAULT_EVENT_CAP,
    thread_cap: int = DEFAULT_THREAD_CAP,
) -> PartialOrderMatrix:
    """Happens-before: thread order (with fork/join dual membership) plus
    release-to-acquire edges per lock, transitively closed."""
    _check_caps(trace, event_cap, thread_cap)
    rows = _thread_and_lock_edges(trace)
    _close(rows)
    return PartialOrderMatrix("hb", rows)


def shb_closure(
    trace: Trace,
    event_cap: int = DEFAULT_EVENT_CAP,
    thread_cap: int = DEFAULT_THREAD_CAP,
) -> PartialOrderMatrix:
    """Happens-before strengthened with last-write-to-read edges."""
    _check_caps(trace, event_cap, thread_cap)
    rows = _thread_and_lock_edges(trace)
    lw = trace.lw_table()
    for e in trace.events:
        if e.kind is OpKind.READ and lw[e.idx] is not None:
            rows[lw[e.idx]][e.idx] = True
    _close(rows)
    return PartialOrderMatrix("shb", rows)


# ---------------------------------------------------------------------------
# Exhaustive reordering search
# ---------------------------------------------------------------------------


class _SearchContext:
    """Per-trace precomputation shared by every pair query."""

    def __init__(self, trace: Trace, event_cap: int, thread_cap: int) -> None:
        _check_caps(trace, event_cap, thread_cap)
        self.trace = trace
        self.n_threads = len(trace.threads)
        self.n_locks = len(trace.locks)
        self.n_vars = len(trace.variables)
        events = trace.events
        self.kinds = [e.kind for e in events]
        self.targets = [e.target for e in events]
        self.performers = [e.thread for e in events]
        self.projections = [trace.projection(t) for t in range(self.n_threads)]
        # (thread, position-in-projection) memberships per event
        self.members: list[list[tuple[int, int]]] = [[] for _ in events]
        for t, proj in enumerate(self.projections):
            for pos, idx in enumerate(proj):
                self.members[idx].append((t, pos))
        hb = hb_closure(trace, event_cap, thread_cap)
        self.hb = hb
        self.preds: list[tuple[int, ...]] = [
            tuple(i for i in range(len(events)) if i != j and hb.rows[i][j])
            for j in range(len(events))
        ]
        self.lw = trace.lw_table()

    def appended(self, cursors: tuple[int, ...], idx: int) -> bool:
        t, pos = self.members[idx][0]
        return cursors[t] > pos


class _PairSearch:
    """Exhaustive DFS deciding whether one conflicting pair can be placed
    adjacently at the end of a valid reordering."""

    def __init__(self, ctx: _SearchContext, e1: int, e2: int, prune: bool) -> None:
        self.ctx = ctx
        self.e1 = e1
        self.e2 = e2
        self.prune = prune
        self.required = (set(ctx.preds[e1]) | set(ctx.preds[e2])) - {e1, e2}
        self.visited: set[tuple] = set()
        self.path: list[int] = []

    def initial_state(self) -> tuple:
        ctx = self.ctx
        cursors = (0,) * ctx.n_threads
        holders = (-1,) * ctx.n_locks
        lastw = (-1,) * ctx.n_vars
        poisoned = 0
        return (cursors, holders, lastw, poisoned)

    def _can_append(self, state: tuple, idx: int, final: bool) -> bool:
        ctx = self.ctx
        cursors, holders, _lastw, poisoned = state
        if not final and (idx == self.e1 or idx == self.e2):
            return False
        for t, pos in ctx.members[idx]:
            if cursors[t] != pos or poisoned & (1 << t):
                return False
        for g in ctx.preds[idx]:
            if not ctx.appended(cursors, g):
                return False
        kind = ctx.kinds[idx]
        if kind is OpKind.ACQUIRE:
            return holders[ctx.targets[idx]] == -1
        if kind is OpKind.RELEASE:
            return holders[ctx.targets[idx]] == ctx.performers[idx]
        return True

    def _apply(self, state: tuple, idx: int) -> tuple:
        ctx = self.ctx
        cursors, holders, lastw, poisoned = state
        new_cursors = list(cursors)
        for t, pos in ctx.members[idx]:
            new_cursors[t] = pos + 1
        kind = ctx.kinds[idx]
        target = ctx.targets[idx]
        if kind is OpKind.ACQUIRE:
            holders = holders[:target] + (ctx.performers[idx],) + holders[target + 1:]
        elif kind is OpKind.RELEASE:
            holders = holders[:target] + (-1,) + holders[target + 1:]
        elif kind is OpKind.WRITE:
            lastw = lastw[:target] + (idx,) + lastw[target + 1:]
        elif kind is OpKind.READ:
            expected = ctx.lw[idx]
            actual = lastw[target] if lastw[target] != -1 else None
            if actual != expected:
                # the read no longer sees its original write: it may stay
                # in the reordering only as the final event of its thread
                poisoned |= 1 << ctx.performers[idx]
        return (tuple(new_cursors), holders, lastw, poisoned)

    def _finishable(self, state: tuple) -> bool:
        for a, b in ((self.e1, self.e2), (self.e2, self.e1)):
            if self._can_append(state, a, final=True):
                mid = self._apply(state, a)
                if self._can_append(mid, b, final=True):
                    self.path.extend((a, b))
                    return True
        return False

    def _dead(self, state: tuple) -> bool:
        # a poisoned thread never advances, so any still-missing
        # prerequisite of the pair sitting in one is unreachable
        cursors, _holders, _lastw, poisoned = state
        if not poisoned:
            return False
        ctx = self.ctx
        for idx in self.required:
            if not ctx.appended(cursors, idx):
                for t, _pos in ctx.members[idx]:
                    if poisoned & (1 << t):
                        return True
        return False

    def run(self) -> bool:
        ctx = self.ctx
        if self.prune:
            # prerequisites of the pair that themselves require the pair
            # can never be scheduled before it
            for idx in self.required:
                if ctx.hb.rows[self.e1][idx] or ctx.hb.rows[self.e2][idx]:
                    return False
        return self._search(self.initial_state())

    def _search(self, state: tuple) -> bool:
        if self._finishable(state):
            return True
        if state in self.visited:
            return False
        self.visited.add(state)
        if self.prune and self._dead(state):
            return False
        ctx = self.ctx
        cursors = state[0]
        tried: set[int] = set()
        for t in range(ctx.n_threads):
            pos = cursors[t]
            proj = ctx.projections[t]
            if pos >= len(proj):
                continue
            idx = proj[pos]
            if idx in tried:
                continue
            tried.add(idx)
            if self._can_append(state, idx, final=False):
                self.path.append(idx)
                if self._search(self._apply(state, idx)):
                    return True
                self.path.pop()
        return False


def is_schedulable_pair(
    trace: Trace,
    e1: int,
    e2: int,
    event_cap: int = DEFAULT_EVENT_CAP,
    thread_cap: int = DEFAULT_THREAD_CAP,
    prune: bool = True,
    return_witness: bool = False,
    _ctx: _SearchContext | None = None,
):
    """Exhaustively decide whether the conflicting pair (e1, e2) can end a
    valid reordering, adjacently, in either order.

    With ``return_witness`` the result is ``(decision, witness)`` where the
    witness is the full reordering as a list of event indices (or None).
    """
    if not e1 < e2:
        raise ValueError("expected e1 < e2")
    if not conflicting(trace.events[e1], trace.events[e2]):
        raise ValueError(f"events {e1} and {e2} are not conflicting")
    ctx = _ctx if _ctx is not None else _SearchContext(trace, event_cap, thread_cap)
    search = _PairSearch(ctx, e1, e2, prune)
    found = search.run()
    if return_witness:
        return found, (list(search.path) if found else None)
    return found


def all_schedulable_pairs(
    trace: Trace,
    event_cap: int = DEFAULT_EVENT_CAP,
    thread_cap: int = DEFAULT_THREAD_CAP,
    prune: bool = True,
) -> set[RacePair]:
    """Every conflicting pair certified schedulable by the search."""
    ctx = _SearchContext(trace, event_cap, thread_cap)
    out: set[RacePair] = set()
    for e1, e2 in iter_conflicting_pairs(trace):
        if is_schedulable_pair(trace, e1, e2, event_cap, thread_cap, prune, _ctx=ctx):
            out.add(RacePair(e1, e2))
    return out


def first_hb_race(
    trace: Trace,
    event_cap: int = DEFAULT_EVENT_CAP,
    thread_cap: int = DEFAULT_THREAD_CAP,
) -> RacePair | None:
    """The happens-before race minimal in the (second event, then maximal
    first event) order, or None when no conflicting pair is unordered."""
    hb = hb_closure(trace, event_cap, thread_cap)
    best: RacePair | None = None
    for e1, e2 in iter_conflicting_pairs(trace):
        if hb.rows[e1][e2]:
            continue
        if best is None or (e2, -e1) < (best.e2, -best.e1):
            best = RacePair(e1, e2)
    return best


# ---------------------------------------------------------------------------
# Independent witness validation (used by the test suite)
# ---------------------------------------------------------------------------


def check_correct_reordering(trace: Trace, witness: list[int]) -> list[str]:
    """Re-check a witness against the reordering rules from first
    principles; returns human-readable problems (empty means valid).

    Deliberately written as a straight re-validation, separate from the
    search, so the two can cross-check each other.
    """
    problems: list[str] = []
    events = trace.events
    if len(set(witness)) != len(witness):
        problems.append("witness repeats events")
    present = set(witness)
    order = {idx: pos for pos, idx in enumerate(witness)}

    # per-thread prefix of the original projections
    for t in range(len(trace.threads)):
        original = [i for i in trace.projection(t)]
        taken = [i for i in witness if i in set(original)]
        if original[: len(taken)] != taken:
            problems.append(f"projection of thread {t} is not a prefix")

    # lock discipline
    holder: dict[int, int] = {}
    for idx in witness:
        e = events[idx]
        if e.kind is OpKind.ACQUIRE:
            if e.target in holder:
                problems.append(f"acquire of held lock at {idx}")
            holder[e.target] = e.thread
        elif e.kind is OpKind.RELEASE:
            if holder.get(e.target) != e.thread:
                problems.append(f"release of unheld lock at {idx}")
            holder.pop(e.target, None)

    # happens-before: downward closed, never flipped
    hb = hb_closure(trace)
    for j in witness:
        for i in range(len(events)):
            if i != j and hb.rows[i][j]:
                if i not in present:
                    problems.append(f"missing predecessor {i} of {j}")
                elif order[i] > order[j]:
                    problems.append(f"flipped order {i} -> {j}")

    # last-write preservation for non-thread-final reads
    lw = trace.lw_table()
    last_write_now: dict[int, int] = {}
    last_in_thread: dict[int, int] = {}
    for idx in witness:
        for t in event_threads(events[idx]):
            last_in_thread[t] = idx
    for idx in witness:
        e = events[idx]
        if e.kind is OpKind.WRITE:
            last_write_now[e.target] = idx
        elif e.kind is OpKind.READ and last_in_thread.get(e.thread) != idx:
            if last_write_now.get(e.target) != lw[idx]:
                problems.append(f"read {idx} sees a different last write")
    return problems
