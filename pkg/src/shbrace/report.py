"""Turn detector output into racy event pairs and rendered reports.

A streaming engine only says *this* event races with *something* earlier.
Recovering the actual pairs is a second pass over the recorded per-event
timestamps:

- for ``shb`` timestamps, a conflicting pair ``(e1, e2)`` is schedulable
  iff ``e2``'s latest same-thread predecessor ``f`` does not causally
  depend on ``e1`` (``f`` undefined, or not ``e1 <= f`` in the recorded
  order);
- for ``hb`` (and ``fhb``) timestamps, a pair is reported iff the two
  timestamps are incomparable, the classical unordered-accesses criterion.

Reports also aggregate pairs into deduplicated unordered source-location
pairs; events without a recorded location fall back to their event index.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from .engines import DetectorOutput, RaceWarning, run_detector
from .model import Trace, conflicting, iter_conflicting_pairs
from .vclock import vt_leq


class RacePair(NamedTuple):
    """Conflicting events certified to race, as indices with e1 < e2."""

    e1: int
    e2: int


class AccessHistoryOverflow(RuntimeError):
    """Raised when a per-variable access list exceeds the configured cap."""


def schedulable_pair_test(
    trace: Trace,
    timestamps: Sequence[tuple[int, ...]],
    e1: int,
    e2: int,
) -> bool:
    """Decide whether a conflicting pair is a schedulable race.

    ``timestamps`` must come from an ``shb`` (or ``shb-epoch``) run over the
    same trace. True iff the latest same-thread predecessor of ``e2`` is
    undefined or not causally after ``e1``; trace order alone rules out the
    predecessor when it precedes ``e1``.
    """
    if not e1 < e2:
        raise ValueError("expected e1 < e2")
    if not conflicting(trace.events[e1], trace.events[e2]):
        raise ValueError(f"events {e1} and {e2} are not conflicting")
    f = trace.ltho_table()[e2]
    if f is None:
        return True
    return not (e1 <= f and vt_leq(timestamps[e1], timestamps[f]))


def _check_cap(trace: Trace, max_var_accesses: int | None) -> None:
    if max_var_accesses is None:
        return
    for var, (reads, writes) in trace.accesses_by_variable().items():
        n = len(reads) + len(writes)
        if n > max_var_accesses:
            symbol = trace.variables.symbols[var]
            raise AccessHistoryOverflow(
                f"variable '{symbol}' has {n} accesses (cap {max_var_accesses})"
            )


def enumerate_pairs(
    trace: Trace,
    timestamps: Sequence[tuple[int, ...]],
    max_var_accesses: int | None = None,
) -> list[RacePair]:
    """All schedulable conflicting pairs under ``shb`` timestamps, sorted
    by (e2, e1). Cost is quadratic per variable, not per trace."""
    _check_cap(trace, max_var_accesses)
    ltho = trace.ltho_table()
    pairs = []
    for e1, e2 in iter_conflicting_pairs(trace):
        f = ltho[e2]
        if f is None or not (e1 <= f and vt_leq(timestamps[e1], timestamps[f])):
            pairs.append(RacePair(e1, e2))
    pairs.sort(key=lambda p: (p.e2, p.e1))
    return pairs


def enumerate_pairs_hb(
    trace: Trace,
    timestamps: Sequence[tuple[int, ...]],
    max_var_accesses: int | None = None,
) -> list[RacePair]:
    """All conflicting pairs left unordered by the recorded timestamps.

    With ``hb`` timestamps this yields exactly the happens-before races;
    it is also used with ``fhb`` timestamps, where forced edges make the
    result the subset of races that engine still distinguishes.
    """
    _check_cap(trace, max_var_accesses)
    pairs = []
    for e1, e2 in iter_conflicting_pairs(trace):
        if not vt_leq(timestamps[e1], timestamps[e2]):
            pairs.append(RacePair(e1, e2))
    pairs.sort(key=lambda p: (p.e2, p.e1))
    return pairs


# ---------------------------------------------------------------------------
# Report assembly and rendering
# ---------------------------------------------------------------------------


@dataclass
class RaceReport:
    engine: str
    event_count: int
    warnings: list[RaceWarning]
    pairs: list[RacePair] | None
    # locations of each pair's events, aligned with ``pairs``
    pair_locations: list[tuple[str, str]] | None
    # deduplicated unordered location pairs
    location_pairs: list[tuple[str, str]] | None
    stats: dict[str, int]
    notices: list[str] = field(default_factory=list)

    @property
    def warned_event_count(self) -> int:
        return len({w.event_idx for w in self.warnings})


def location_pairs_of(trace: Trace, pairs: Sequence[RacePair]) -> list[tuple[str, str]]:
    """Unordered, deduplicated location pairs for the given race pairs."""
    seen = {tuple(sorted((trace.location_of(p.e1), trace.location_of(p.e2)))) for p in pairs}
    return sorted(seen)


def analyze_trace(
    trace: Trace,
    engine: str = "shb",
    want_pairs: bool = True,
    max_var_accesses: int | None = None,
) -> RaceReport:
    """Run an engine and assemble the full report.

    When pair enumeration is requested but the per-variable access cap is
    exceeded, the report degrades to warning-only with an explicit notice
    instead of silently truncating.
    """
    output = run_detector(trace, engine, record_timestamps=want_pairs)
    return build_report(trace, output, max_var_accesses=max_var_accesses)


def build_report(
    trace: Trace,
    output: DetectorOutput,
    max_var_accesses: int | None = None,
) -> RaceReport:
    pairs: list[RacePair] | None = None
    pair_locs: list[tuple[str, str]] | None = None
    loc_pairs: list[tuple[str, str]] | None = None
    notices: list[str] = []
    if output.timestamps is not None:
        try:
            if output.engine in ("shb", "shb-epoch"):
                pairs = enumerate_pairs(trace, output.timestamps, max_var_accesses)
            else:
                pairs = enumerate_pairs_hb(trace, output.timestamps, max_var_accesses)
        except AccessHistoryOverflow as exc:
            notices.append(f"pair enumeration skipped: {exc}; report is warning-only")
        if pairs is not None:
            pair_locs = [(trace.location_of(p.e1), trace.location_of(p.e2)) for p in pairs]
            loc_pairs = location_pairs_of(trace, pairs)
            defaulted = sorted(
                {i for p in pairs for i in p if trace.events[i].location is None}
            )
            if defaulted:
                notices.append(
                    "events without a source location use their event index "
                    f"in location pairs: {defaulted}"
                )
    return RaceReport(
        engine=output.engine,
        event_count=len(trace.events),
        warnings=output.warnings,
        pairs=pairs,
        pair_locations=pair_locs,
        location_pairs=loc_pairs,
        stats=output.stats,
        notices=notices,
    )


def render(report: RaceReport, fmt: str = "text") -> str:
    """Serialize a report; output is deterministic for identical inputs."""
    if fmt == "json":
        return _render_json(report)
    if fmt == "csv":
        return _render_csv(report)
    if fmt == "text":
        return _render_text(report)
    raise ValueError(f"unknown format '{fmt}' (choose from text, json, csv)")


def _render_json(report: RaceReport) -> str:
    payload: dict = {
        "engine": report.engine,
        "event_count": report.event_count,
        "warnings": [{"event": w.event_idx, "kind": str(w.kind)} for w in report.warnings],
        "pairs": None if report.pairs is None else [list(p) for p in report.pairs],
        "location_pairs": None
        if report.location_pairs is None
        else [list(p) for p in report.location_pairs],
        "stats": report.stats,
    }
    if report.notices:
        payload["notices"] = list(report.notices)
    return json.dumps(payload, indent=2) + "\n"


def _render_csv(report: RaceReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    pairs = report.pairs or []
    locs = report.pair_locations or [(str(p.e1), str(p.e2)) for p in pairs]
    for p, (loc1, loc2) in zip(pairs, locs):
        writer.writerow([p.e1, p.e2, loc1, loc2])
    return buf.getvalue()


def _render_text(report: RaceReport) -> str:
    lines = [
        f"engine: {report.engine}",
        "events: {} ({})".format(
            report.event_count,
            " ".join(f"{k}={v}" for k, v in report.stats.items()),
        ),
        f"warnings: {report.warned_event_count}",
    ]
    for w in report.warnings:
        lines.append(f"  event {w.event_idx}: race {str(w.kind).replace('-', ' ')}")
    if report.pairs is not None:
        lines.append(f"pairs: {len(report.pairs)}")
        locs = report.pair_locations or [(str(p.e1), str(p.e2)) for p in report.pairs]
        for p, (loc1, loc2) in zip(report.pairs, locs):
            lines.append(f"  ({p.e1}, {p.e2})  {loc1} | {loc2}")
    if report.location_pairs is not None:
        lines.append(f"location pairs: {len(report.location_pairs)}")
        for a, b in report.location_pairs:
            lines.append(f"  {a} | {b}")
    for notice in report.notices:
        lines.append(f"note: {notice}")
    return "\n".join(lines) + "\n"
