"""Shared corpus builders for the differential test suites."""

from __future__ import annotations

import random
from typing import Iterator

from shbrace import GenParams, Trace, generate_random
from shbrace.model import OpKind, TraceBuilder


def random_traces(
    count: int,
    seed: int,
    max_events: int,
    max_threads: int = 4,
    max_vars: int = 3,
    max_locks: int = 2,
    fork_join_p: float = 0.7,
) -> Iterator[Trace]:
    """Seeded stream of random well-formed traces."""
    rng = random.Random(seed)
    for _ in range(count):
        params = GenParams(
            threads=rng.randint(1, max_threads),
            events=rng.randint(0, max_events),
            vars=rng.randint(1, max_vars),
            locks=rng.randint(0, max_locks),
            fork_join=rng.random() < fork_join_p,
            seed=rng.getrandbits(64),
        )
        yield generate_random(params)


def read_heavy_trace(n_events: int, threads: int = 8, n_vars: int = 256, seed: int = 7) -> Trace:
    """Synthetic read-dominated workload with a thread-local access pattern:
    every variable is written only by its owning thread, and most reads hit
    owned variables. This is the regime adaptive access histories target."""
    rng = random.Random(seed)
    builder = TraceBuilder()
    thread_syms = [f"t{i}" for i in range(threads)]
    var_syms = [f"x{i}" for i in range(n_vars)]

    def owned(v: int, t: int) -> int:
        v = v - (v % threads) + t
        return v - threads if v >= n_vars else v

    thread_picks = rng.choices(range(threads), k=n_events)
    var_picks = rng.choices(range(n_vars), k=n_events)
    rolls = rng.choices(range(100), k=n_events)
    for t, v, roll in zip(thread_picks, var_picks, rolls):
        if roll < 88:
            target = owned(v, t) if roll >= 13 else v
            builder.add(thread_syms[t], OpKind.READ, var_syms[target])
        else:
            builder.add(thread_syms[t], OpKind.WRITE, var_syms[owned(v, t)])
    return builder.build()


def warning_set(output) -> set:
    return set(output.warnings)
