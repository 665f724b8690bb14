"""Matplotlib rendering of traces and engine comparisons.

The CLI report path can drop a figure next to its delimited output: a
per-thread lane view of the trace with racy pairs drawn as connectors, or
a bar chart of warning/pair counts per engine. matplotlib is imported
lazily with the Agg backend so headless runs and non-figure invocations
stay light.
"""

from __future__ import annotations

from .model import OpKind, Trace
from .report import RaceReport

_OP_LABEL = {
    OpKind.READ: "r",
    OpKind.WRITE: "w",
    OpKind.ACQUIRE: "acq",
    OpKind.RELEASE: "rel",
    OpKind.FORK: "fork",
    OpKind.JOIN: "join",
}

_ANNOTATION_LIMIT = 80


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def save_race_figure(trace: Trace, report: RaceReport, path: str) -> None:
    """Lane plot: one column per thread, trace order top to bottom, racy
    pairs connected. Event labels are dropped on large traces."""
    plt = _pyplot()
    n_threads = max(1, len(trace.threads))
    n_events = max(1, len(trace.events))
    fig, ax = plt.subplots(
        figsize=(1.8 + 1.1 * n_threads, 1.5 + min(0.28 * n_events, 14.0))
    )
    annotate = len(trace.events) <= _ANNOTATION_LIMIT

    warned = {w.event_idx for w in report.warnings}
    xs, ys, colors = [], [], []
    for e in trace.events:
        xs.append(e.thread)
        ys.append(e.idx)
        colors.append("tab:red" if e.idx in warned else "tab:blue")
        if annotate:
            if e.kind in (OpKind.READ, OpKind.WRITE):
                target = trace.variables.symbols[e.target]
            elif e.kind in (OpKind.ACQUIRE, OpKind.RELEASE):
                target = trace.locks.symbols[e.target]
            else:
                target = trace.threads.symbols[e.target]
            ax.annotate(
                f"{e.idx}: {_OP_LABEL[e.kind]}({target})",
                (e.thread, e.idx),
                textcoords="offset points",
                xytext=(8, 0),
                fontsize=7,
                va="center",
            )
    ax.scatter(xs, ys, c=colors, s=18, zorder=3)

    for pair in report.pairs or []:
        a, b = trace.events[pair.e1], trace.events[pair.e2]
        ax.plot(
            [a.thread, b.thread],
            [a.idx, b.idx],
            color="tab:red",
            linewidth=0.9,
            alpha=0.7,
            zorder=2,
        )

    ax.set_xticks(range(n_threads))
    ax.set_xticklabels(trace.threads.symbols or ["t?"])
    ax.set_xlim(-0.5, n_threads - 0.2)
    ax.invert_yaxis()
    ax.set_ylabel("event index")
    pair_count = "-" if report.pairs is None else str(len(report.pairs))
    ax.set_title(
        f"{report.engine}: {report.warned_event_count} warned events, {pair_count} pairs"
    )
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_comparison_figure(counts: dict[str, tuple[int, int | None]], path: str) -> None:
    """Grouped bars of warned-event and pair counts per engine."""
    plt = _pyplot()
    engines = list(counts)
    warnings = [counts[e][0] for e in engines]
    pairs = [0 if counts[e][1] is None else counts[e][1] for e in engines]
    fig, ax = plt.subplots(figsize=(1.6 + 1.3 * len(engines), 3.2))
    xs = range(len(engines))
    width = 0.38
    ax.bar([x - width / 2 for x in xs], warnings, width, label="warned events")
    ax.bar([x + width / 2 for x in xs], pairs, width, label="race pairs")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(engines)
    ax.set_ylabel("count")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
