"""Sound data-race detection for recorded concurrent executions.

The library analyzes a trace of reads, writes, lock operations and thread
fork/join with streaming vector-clock engines, reports races that are
actually schedulable in an alternate interleaving of the same trace, and
can certify results against an exhaustive reordering search on small
inputs.
"""

from .engines import (
    ENGINES,
    DetectorOutput,
    DetectorState,
    RaceKind,
    RaceWarning,
    run_detector,
)
from .epoch import run_epoch_detector
from .model import (
    Event,
    OpKind,
    Registry,
    Trace,
    TraceBuilder,
    ValidationReport,
    Violation,
    conflicting,
    drop_flagged_events,
    event_threads,
    last_thread_event,
    last_write,
    validate_well_formed,
)
from .oracle import (
    DEFAULT_EVENT_CAP,
    DEFAULT_THREAD_CAP,
    OracleCapExceeded,
    PartialOrderMatrix,
    all_schedulable_pairs,
    check_correct_reordering,
    first_hb_race,
    hb_closure,
    is_schedulable_pair,
    shb_closure,
)
from .report import (
    AccessHistoryOverflow,
    RacePair,
    RaceReport,
    analyze_trace,
    build_report,
    enumerate_pairs,
    enumerate_pairs_hb,
    render,
    schedulable_pair_test,
)
from .traceio import GenParams, TraceParseError, generate_random, parse, serialize
from .vclock import (
    AdaptiveTime,
    Epoch,
    adaptive_leq,
    epoch_leq,
    vt_bottom,
    vt_equal,
    vt_join,
    vt_leq,
    vt_update,
)

__version__ = "0.1.0"

__all__ = [
    "AccessHistoryOverflow",
    "AdaptiveTime",
    "DEFAULT_EVENT_CAP",
    "DEFAULT_THREAD_CAP",
    "DetectorOutput",
    "DetectorState",
    "ENGINES",
    "Epoch",
    "Event",
    "GenParams",
    "OpKind",
    "OracleCapExceeded",
    "PartialOrderMatrix",
    "RaceKind",
    "RacePair",
    "RaceReport",
    "RaceWarning",
    "Registry",
    "Trace",
    "TraceBuilder",
    "TraceParseError",
    "ValidationReport",
    "Violation",
    "adaptive_leq",
    "all_schedulable_pairs",
    "analyze_trace",
    "build_report",
    "check_correct_reordering",
    "conflicting",
    "drop_flagged_events",
    "enumerate_pairs",
    "enumerate_pairs_hb",
    "epoch_leq",
    "event_threads",
    "first_hb_race",
    "generate_random",
    "hb_closure",
    "is_schedulable_pair",
    "last_thread_event",
    "last_write",
    "parse",
    "render",
    "run_detector",
    "run_epoch_detector",
    "schedulable_pair_test",
    "serialize",
    "shb_closure",
    "validate_well_formed",
    "vt_bottom",
    "vt_equal",
    "vt_join",
    "vt_leq",
    "vt_update",
]
