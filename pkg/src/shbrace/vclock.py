"""Vector times, epochs, and the comparison/join/update algebra.

Vector times map thread indices to counters; they are represented densely
as integer sequences where a missing trailing component reads as zero, so
values of different lengths compare consistently. An epoch ``c@t`` is the
compressed form of the vector time that is zero everywhere except ``c`` at
component ``t``; comparing an epoch against a vector time is O(1).
"""

from __future__ import annotations

from itertools import zip_longest
from typing import NamedTuple, Sequence, Union

VectorTime = Sequence[int]


class Epoch(NamedTuple):
    """Compressed timestamp ``count @ thread``."""

    count: int
    thread: int

    def __str__(self) -> str:
        return f"{self.count}@{self.thread}"


AdaptiveTime = Union[Epoch, VectorTime]


def vt_bottom(size: int = 0) -> list[int]:
    """The zero vector time."""
    return [0] * size


def vt_get(v: VectorTime, t: int) -> int:
    return v[t] if t < len(v) else 0


def vt_leq(v1: VectorTime, v2: VectorTime) -> bool:
    """Pointwise comparison."""
    return all(a <= b for a, b in zip_longest(v1, v2, fillvalue=0))


def vt_join(v1: VectorTime, v2: VectorTime) -> list[int]:
    """Pointwise maximum."""
    return [max(a, b) for a, b in zip_longest(v1, v2, fillvalue=0)]


def vt_update(v: VectorTime, n: int, u: int) -> list[int]:
    """Copy of ``v`` with component ``u`` set to ``n``."""
    out = list(v)
    if u >= len(out):
        out.extend(0 for _ in range(u + 1 - len(out)))
    out[u] = n
    return out


def vt_equal(v1: VectorTime, v2: VectorTime) -> bool:
    """Semantic equality: zero components never distinguish values."""
    return all(a == b for a, b in zip_longest(v1, v2, fillvalue=0))


def epoch_leq(e: Epoch, v: VectorTime) -> bool:
    """Constant-time comparison of an epoch against a vector time."""
    return e.count <= vt_get(v, e.thread)


def epoch_to_vector(e: Epoch, size: int = 0) -> list[int]:
    out = vt_bottom(max(size, e.thread + 1))
    out[e.thread] = e.count
    return out


def adaptive_leq(a: AdaptiveTime, v: VectorTime) -> bool:
    """Compare either representation against a vector time."""
    if isinstance(a, Epoch):
        return epoch_leq(a, v)
    return vt_leq(a, v)


def adaptive_to_vector(a: AdaptiveTime, size: int = 0) -> list[int]:
    if isinstance(a, Epoch):
        return epoch_to_vector(a, size)
    out = list(a)
    if len(out) < size:
        out.extend(0 for _ in range(size - len(out)))
    return out


def adaptive_equal(a: AdaptiveTime, b: AdaptiveTime) -> bool:
    """Representation-independent equality of adaptive timestamps."""
    return vt_equal(adaptive_to_vector(a), adaptive_to_vector(b))
