"""Text format and random generation of traces.

Format: one event per non-empty, non-comment line, UTF-8, LF or CRLF::

    line := '#' comment | <thread> <op> <target> [<location>]
    op   := r | w | acq | rel | fork | join

Fields are separated by one or more spaces or tabs; identifiers match
``[A-Za-z0-9_.:$-]+``. Reads and writes target variables, acq/rel target
locks, fork/join target threads.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from typing import Iterable

from .model import OpKind, Trace, TraceBuilder

OP_TOKENS = {
    "r": OpKind.READ,
    "w": OpKind.WRITE,
    "acq": OpKind.ACQUIRE,
    "rel": OpKind.RELEASE,
    "fork": OpKind.FORK,
    "join": OpKind.JOIN,
}
TOKEN_OF_OP = {kind: tok for tok, kind in OP_TOKENS.items()}

_IDENT_RE = re.compile(r"[A-Za-z0-9_.:$-]+\Z")


class TraceParseError(ValueError):
    """Raised on malformed trace text; carries the 1-based line number."""

    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"{message} at line {line}")
        self.line = line


def parse(text: str | Iterable[str]) -> Trace:
    """Parse trace text into a Trace, interning identifiers in file order."""
    if isinstance(text, str):
        lines: Iterable[str] = text.splitlines()
    else:
        lines = text
    builder = TraceBuilder()
    source_lines: list[int] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = stripped.split()
        if not 3 <= len(fields) <= 4:
            raise TraceParseError(lineno, f"expected 3 or 4 fields, got {len(fields)}")
        thread, op, target = fields[0], fields[1], fields[2]
        location = fields[3] if len(fields) == 4 else None
        kind = OP_TOKENS.get(op)
        if kind is None:
            raise TraceParseError(lineno, f"unknown op '{op}'")
        for ident in (thread, target):
            if not _IDENT_RE.match(ident):
                raise TraceParseError(lineno, f"empty or invalid identifier '{ident}'")
        builder.add(thread, kind, target, location)
        source_lines.append(lineno)
    return builder.build(tuple(source_lines))


def serialize(trace: Trace) -> str:
    """Inverse of parse: one line per event, trailing newline if non-empty."""
    out: list[str] = []
    for e in trace.events:
        thread = trace.threads.symbols[e.thread]
        if e.kind in (OpKind.READ, OpKind.WRITE):
            target = trace.variables.symbols[e.target]
        elif e.kind in (OpKind.ACQUIRE, OpKind.RELEASE):
            target = trace.locks.symbols[e.target]
        else:
            target = trace.threads.symbols[e.target]
        line = f"{thread} {TOKEN_OF_OP[e.kind]} {target}"
        if e.location is not None:
            line += f" {e.location}"
        out.append(line)
    return "\n".join(out) + ("\n" if out else "")


# ---------------------------------------------------------------------------
# Random well-formed traces for differential testing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GenParams:
    """Knobs for the random trace generator.

    Generated traces always pass ``validate_well_formed``: lock events come
    in balanced per-thread acquire/release pairs, forks precede any event of
    the child, and joins come only after the child's last event. The event
    mix is biased towards reads and writes (~70%, read-heavy) to resemble
    real access-dominated traces.
    """

    threads: int = 2
    events: int = 50
    vars: int = 3
    locks: int = 1
    fork_join: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.events < 0:
            raise ValueError("events must be >= 0")
        if self.vars < 1:
            raise ValueError("vars must be >= 1")
        if self.locks < 0:
            raise ValueError("locks must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")


def generate_random(params: GenParams) -> Trace:
    """Deterministic random trace: same params including seed, same trace."""
    rng = random.Random(params.seed)
    thread_syms = [f"t{i + 1}" for i in range(params.threads)]
    var_syms = [f"x{i + 1}" for i in range(params.vars)]
    lock_syms = [f"l{i + 1}" for i in range(params.locks)]

    # Thread 1 always runs from the start; others may wait to be forked.
    pending: list[int] = []
    if params.fork_join and params.threads > 1:
        pending = [u for u in range(1, params.threads) if rng.random() < 0.5]
    active = [u for u in range(params.threads) if u not in pending]

    lock_holder: dict[int, int] = {}
    held_by: dict[int, list[int]] = {t: [] for t in range(params.threads)}
    performed: dict[int, int] = {t: 0 for t in range(params.threads)}

    builder = TraceBuilder()

    def emit(thread: int, kind: OpKind, target: str) -> None:
        builder.add(thread_syms[thread], kind, target)
        performed[thread] += 1

    def emit_access(thread: int) -> None:
        kind = OpKind.READ if rng.random() < 0.64 else OpKind.WRITE
        emit(thread, kind, rng.choice(var_syms))

    categories = ["access"] * 70
    if params.locks > 0:
        categories += ["lock"] * 15
    if params.fork_join and params.threads > 1:
        categories += ["thread"] * 15

    n = params.events
    while len(builder.events) + len(lock_holder) < n:
        category = rng.choice(categories)
        thread = rng.choice(active)
        if category == "lock":
            if held_by[thread] and rng.random() < 0.6:
                lock = rng.choice(held_by[thread])
                emit(thread, OpKind.RELEASE, lock_syms[lock])
                held_by[thread].remove(lock)
                del lock_holder[lock]
                continue
            free = [l for l in range(params.locks) if l not in lock_holder]
            # Each acquire reserves one budget slot for its flush release.
            if free and len(builder.events) + len(lock_holder) + 2 <= n:
                lock = rng.choice(free)
                emit(thread, OpKind.ACQUIRE, lock_syms[lock])
                lock_holder[lock] = thread
                held_by[thread].append(lock)
                continue
            if held_by[thread]:
                lock = rng.choice(held_by[thread])
                emit(thread, OpKind.RELEASE, lock_syms[lock])
                held_by[thread].remove(lock)
                del lock_holder[lock]
                continue
            emit_access(thread)
        elif category == "thread":
            joinable = [
                u
                for u in active
                if u != thread and performed[u] > 0 and not held_by[u]
            ]
            if pending and (not joinable or rng.random() < 0.6):
                child = pending.pop(rng.randrange(len(pending)))
                emit(thread, OpKind.FORK, thread_syms[child])
                active.append(child)
            elif joinable and len(active) > 1:
                child = rng.choice(joinable)
                emit(thread, OpKind.JOIN, thread_syms[child])
                active.remove(child)
            else:
                emit_access(thread)
        else:
            emit_access(thread)

    # Balance any still-held locks; budget was reserved above.
    for lock in sorted(lock_holder):
        emit(lock_holder[lock], OpKind.RELEASE, lock_syms[lock])

    return builder.build()
