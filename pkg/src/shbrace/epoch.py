"""Epoch-optimized variant of the ``shb`` engine.

Access histories rarely need full vector generality: most variables are
only ever touched in a totally ordered way, in which case a single
``count@thread`` epoch suffices and comparisons are O(1). This engine keeps
``R`` and ``W`` adaptive while ``C``, ``L`` and ``LW`` stay plain vectors
(those maintain the partial order itself and cannot be compressed).

- ``W`` is fully adaptive: it holds an epoch exactly while the latest write
  is ordered after every earlier write to the same variable, inflates to a
  vector when two writes race, and collapses back to an epoch as soon as a
  new write dominates the whole history again.
- ``R`` is semi-adaptive: once inflated it stays a vector, since checking
  for re-compression on every read would cost more than it saves on
  read-dominated traces.

Warning behaviour is identical to the vector ``shb`` engine on every
input; only the representation differs.
"""

from __future__ import annotations

from operator import le

from .engines import DetectorOutput, DetectorState, Probe, RaceKind, RaceWarning, _initial_clocks, _stats
from .model import OpKind, Trace
from .vclock import Epoch

_EPOCH_ZERO = Epoch(0, 0)


def run_epoch_detector(
    trace: Trace,
    record_timestamps: bool = False,
    probe: Probe | None = None,
) -> DetectorOutput:
    """Epoch-optimized pass; warning set equals ``run_detector(.., "shb")``."""
    warnings, stamps = _run_epoch(trace, record_timestamps, probe)
    return DetectorOutput("shb-epoch", warnings, stamps, _stats(trace))


def _run_epoch(trace, record, probe):
    READ, WRITE, ACQUIRE, RELEASE, FORK = (
        OpKind.READ, OpKind.WRITE, OpKind.ACQUIRE, OpKind.RELEASE, OpKind.FORK,
    )
    WITH_READ, WITH_WRITE = RaceKind.WITH_READ, RaceKind.WITH_WRITE
    T = len(trace.threads)
    C = _initial_clocks(T)
    L: list[list[int] | None] = [None] * len(trace.locks)
    LW: list[list[int] | None] = [None] * len(trace.variables)
    R: list = [_EPOCH_ZERO] * len(trace.variables)
    W: list = [_EPOCH_ZERO] * len(trace.variables)
    warnings: list[RaceWarning] = []
    warn = warnings.append
    stamps: list[tuple[int, ...]] | None = [] if record else None
    state = DetectorState("shb-epoch", C, L, LW, R, W) if probe else None

    for idx, t, kind, x, _loc in trace.events:
        ct = C[t]
        if kind == READ:
            w = W[x]
            if type(w) is Epoch:
                ordered = w[0] <= ct[w[1]]
            else:
                ordered = all(map(le, w, ct))
            if not ordered:
                warn(RaceWarning(idx, WITH_WRITE))
                lw = LW[x]
                if lw is not None and not all(map(le, lw, ct)):
                    ct[:] = map(max, ct, lw)
            # else: the write history is ordered before this read, and each
            # history component travels only inside the full timestamp of
            # the write it names, so the reader's clock already contains
            # the last write's timestamp: the join would be a no-op
            r = R[x]
            if type(r) is Epoch:
                c, u = r
                if c <= ct[u]:
                    if u != t or c != ct[t]:  # already this exact epoch: keep it
                        R[x] = Epoch(ct[t], t)
                else:
                    # inflate; updates applied left to right so u == t keeps c
                    vec = [0] * T
                    vec[t] = ct[t]
                    vec[u] = c
                    R[x] = vec
            else:
                r[t] = ct[t]
            if stamps is not None:
                stamps.append(tuple(ct))
        elif kind == WRITE:
            r = R[x]
            if type(r) is Epoch:
                if r[0] > ct[r[1]]:
                    warn(RaceWarning(idx, WITH_READ))
            elif not all(map(le, r, ct)):
                warn(RaceWarning(idx, WITH_READ))
            w = W[x]
            if type(w) is Epoch:
                ordered = w[0] <= ct[w[1]]
            else:
                ordered = all(map(le, w, ct))
            if ordered:
                # every earlier write is ordered before this one: compress
                W[x] = Epoch(ct[t], t)
            else:
                warn(RaceWarning(idx, WITH_WRITE))
                if type(w) is Epoch:
                    vec = [0] * T
                    vec[t] = ct[t]
                    vec[w[1]] = w[0]
                    W[x] = vec
                else:
                    w[t] = ct[t]
            LW[x] = ct.copy()
            # the trailing history update of the component for t is already
            # reflected by both branches above; re-applying it is a no-op
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
