"""Command-line front end.

Subcommands::

    analyze  run one engine over a trace file and render a report
    compare  run every engine, print counts and set differences
    oracle   certify races by exhaustive reordering search (small traces)
    gen      emit a random well-formed trace, or fuzz engines vs oracle

Exit codes: 0 no races, 2 races found, 1 input/usage error (``compare``
and ``gen --fuzz`` also use 1 for detected disagreements). Identical
invocations produce byte-identical output unless ``--timing`` is given.
"""

from __future__ import annotations

import argparse
import random
import sys
import time

from .engines import ENGINES, run_detector
from .model import Trace, drop_flagged_events, validate_well_formed
from .oracle import (
    OracleCapExceeded,
    all_schedulable_pairs,
    event_cap_from_env,
    first_hb_race,
)
from .report import RacePair, analyze_trace, render
from .traceio import GenParams, TraceParseError, generate_random, parse, serialize


class CliError(Exception):
    """Fatal usage or input error; message goes to stderr, exit 1."""


def _read_input(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise CliError(f"cannot read '{path}': {exc.strerror}") from exc


def _load_trace(path: str, lenient: bool, err) -> Trace:
    try:
        trace = parse(_read_input(path))
    except TraceParseError as exc:
        raise CliError(f"parse error: {exc}") from exc
    report = validate_well_formed(trace)
    if report.ok:
        return trace
    lines = trace.source_lines
    for v in report.violations:
        line = f" (line {lines[v.event_idx]})" if lines else ""
        print(f"validation: event {v.event_idx}{line}: {v.message}", file=err)
    if not lenient:
        raise CliError("trace is not well-formed (use --lenient to skip offending events)")
    trace, dropped = drop_flagged_events(trace)
    print(f"lenient mode: skipped {len({v.event_idx for v in dropped})} event(s)", file=err)
    return trace


def _write_output(text: str, out_path: str | None) -> None:
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _cmd_analyze(args, err) -> int:
    trace = _load_trace(args.input, args.lenient, err)
    started = time.perf_counter()
    report = analyze_trace(trace, args.engine, want_pairs=args.report != "warnings")
    elapsed = time.perf_counter() - started
    text = render(report, args.format)
    _write_output(text, args.out)
    if args.figure:
        from . import figures

        figures.save_race_figure(trace, report, args.figure)
    if args.timing:
        print(f"analysis took {elapsed:.3f}s", file=err)
    return 2 if report.warnings else 0


def _cmd_compare(args, err) -> int:
    trace = _load_trace(args.input, args.lenient, err)
    reports = {}
    for engine in ("hb", "shb", "fhb"):
        reports[engine] = analyze_trace(trace, engine, want_pairs=True)
    epoch_out = run_detector(trace, "shb-epoch")
    shb_out_warnings = reports["shb"].warnings

    lines = []
    counts: dict[str, tuple[int, int | None]] = {}
    for engine, rep in reports.items():
        n_pairs = None if rep.pairs is None else len(rep.pairs)
        counts[engine] = (rep.warned_event_count, n_pairs)
        lines.append(f"{engine}: warnings={rep.warned_event_count} pairs={n_pairs}")
    epoch_warned = len({w.event_idx for w in epoch_out.warnings})
    counts["shb-epoch"] = (epoch_warned, None)
    lines.append(f"shb-epoch: warnings={epoch_warned}")

    def pairset(engine: str) -> set[RacePair]:
        return set(reports[engine].pairs or [])

    def fmt_pairs(pairs: set[RacePair]) -> str:
        return " ".join(f"({p.e1},{p.e2})" for p in sorted(pairs)) or "-"

    lines.append(f"pairs hb-shb: {fmt_pairs(pairset('hb') - pairset('shb'))}")
    lines.append(f"pairs shb-fhb: {fmt_pairs(pairset('shb') - pairset('fhb'))}")
    warn_diff = set(reports["shb"].warnings) - set(reports["fhb"].warnings)
    lines.append(
        "warnings shb-fhb: "
        + (" ".join(f"{w.event_idx}:{w.kind}" for w in sorted(warn_diff)) or "-")
    )

    epoch_ok = epoch_out.warnings == shb_out_warnings
    lines.append(f"shb-epoch vs shb warnings: {'MATCH' if epoch_ok else 'MISMATCH'}")
    _write_output("\n".join(lines) + "\n", args.out)
    if args.figure:
        from . import figures

        figures.save_comparison_figure(counts, args.figure)
    return 0 if epoch_ok else 1


def _cmd_oracle(args, err) -> int:
    trace = _load_trace(args.input, args.lenient, err)
    cap = event_cap_from_env()
    try:
        certified = all_schedulable_pairs(trace, event_cap=cap)
    except OracleCapExceeded as exc:
        raise CliError(str(exc)) from exc
    lines = [f"schedulable pairs: {len(certified)}"]
    lines.extend(f"  ({p.e1}, {p.e2})" for p in sorted(certified))
    exit_code = 0
    if args.check:
        report = analyze_trace(trace, "shb", want_pairs=True)
        engine_pairs = set(report.pairs or [])
        if engine_pairs == certified:
            noun = "pair" if len(certified) == 1 else "pairs"
            lines.append(f"MATCH: {len(certified)} {noun}")
        else:
            lines.append(
                "MISMATCH: engine-only="
                + str(sorted(engine_pairs - certified))
                + " oracle-only="
                + str(sorted(certified - engine_pairs))
            )
            exit_code = 1
    _write_output("\n".join(lines) + "\n", args.out)
    return exit_code


def differential_check(trace: Trace, event_cap: int) -> list[str]:
    """All cross-engine and engine-vs-oracle consistency checks used by
    fuzzing; returns a list of failure descriptions."""
    failures: list[str] = []
    shb = analyze_trace(trace, "shb", want_pairs=True)
    hb = analyze_trace(trace, "hb", want_pairs=True)
    fhb = analyze_trace(trace, "fhb", want_pairs=True)
    epoch = run_detector(trace, "shb-epoch")

    if epoch.warnings != shb.warnings:
        failures.append("shb-epoch warnings differ from shb")
    if not set(fhb.warnings) <= set(shb.warnings):
        failures.append("fhb warnings not a subset of shb")
    if not set(shb.warnings) <= set(hb.warnings):
        failures.append("shb warnings not a subset of hb")
    if not set(shb.pairs or []) <= set(hb.pairs or []):
        failures.append("shb pairs not a subset of hb pairs")

    try:
        certified = all_schedulable_pairs(trace, event_cap=event_cap)
    except OracleCapExceeded:
        return failures
    if set(shb.pairs or []) != certified:
        failures.append(
            f"shb pairs {sorted(shb.pairs or [])} != oracle {sorted(certified)}"
        )
    first = first_hb_race(trace, event_cap=event_cap)
    if first is not None and first not in certified:
        failures.append(f"first hb race {first} not schedulable")
    return failures


def _shrink(trace: Trace, still_failing) -> Trace:
    """Greedy event removal keeping the failure alive and the trace valid."""
    current = trace
    changed = True
    while changed:
        changed = False
        for drop in range(len(current.events) - 1, -1, -1):
            candidate = parse(
                "".join(
                    line + "\n"
                    for i, line in enumerate(serialize(current).splitlines())
                    if i != drop
                )
            )
            if not validate_well_formed(candidate).ok:
                continue
            if still_failing(candidate):
                current = candidate
                changed = True
                break
    return current


def _cmd_gen(args, err) -> int:
    if args.fuzz is not None:
        return _run_fuzz(args, err)
    try:
        params = GenParams(
            threads=args.threads,
            events=args.events,
            vars=args.vars,
            locks=args.locks,
            fork_join=args.fork_join,
            seed=args.seed,
        )
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    _write_output(serialize(generate_random(params)), args.out)
    return 0


def _run_fuzz(args, err) -> int:
    cap = event_cap_from_env()
    rng = random.Random(args.seed)
    rounds = args.fuzz
    for i in range(rounds):
        params = GenParams(
            threads=rng.randint(1, 4),
            events=rng.randint(0, args.max_events),
            vars=rng.randint(1, 3),
            locks=rng.randint(0, 2),
            fork_join=rng.random() < 0.7,
            seed=rng.getrandbits(64),
        )
        trace = generate_random(params)
        failures = differential_check(trace, cap)
        if failures:
            shrunk = _shrink(trace, lambda t: bool(differential_check(t, cap)))
            final = differential_check(shrunk, cap)
            print(f"mismatch on round {i + 1}/{rounds}: {'; '.join(failures)}", file=err)
            print("shrunken counterexample:", file=err)
            print(f"  failures: {'; '.join(final)}", file=err)
            sys.stdout.write(serialize(shrunk))
            return 1
    print(f"{rounds}/{rounds} OK")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shbrace",
        description="Detect schedulable data races in recorded execution traces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_input(p):
        p.add_argument("input", help="trace file, or '-' for standard input")
        p.add_argument("--lenient", action="store_true",
                       help="skip events that fail validation instead of aborting")
        p.add_argument("--out", help="write output to this file instead of stdout")

    p = sub.add_parser("analyze", help="run one engine and report races")
    add_input(p)
    p.add_argument("--engine", choices=ENGINES, default="shb")
    p.add_argument("--report", choices=("warnings", "pairs", "locations"),
                   default="pairs",
                   help="warnings is a cheap single pass; pairs/locations record timestamps")
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")
    p.add_argument("--figure", help="also render a lane figure to this file")
    p.add_argument("--timing", action="store_true",
                   help="print analysis wall time to stderr")

    p = sub.add_parser("compare", help="run all engines and diff their results")
    add_input(p)
    p.add_argument("--figure", help="also render a count comparison to this file")

    p = sub.add_parser("oracle", help="exhaustively certify races (small traces)")
    add_input(p)
    p.add_argument("--check", action="store_true",
                   help="compare the oracle's pairs against the shb engine")

    p = sub.add_parser("gen", help="generate a random well-formed trace")
    p.add_argument("--threads", type=int, default=2)
    p.add_argument("--events", type=int, default=50)
    p.add_argument("--vars", type=int, default=3)
    p.add_argument("--locks", type=int, default=1)
    p.add_argument("--fork-join", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the trace to this file instead of stdout")
    p.add_argument("--fuzz", type=int, metavar="N",
                   help="instead of emitting one trace, run N generate/analyze/certify "
                        "rounds and report the first disagreement, shrunken")
    p.add_argument("--max-events", type=int, default=12,
                   help="event budget per fuzz round (oracle-sized)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    err = sys.stderr
    handlers = {
        "analyze": _cmd_analyze,
        "compare": _cmd_compare,
        "oracle": _cmd_oracle,
        "gen": _cmd_gen,
    }
    try:
        return handlers[args.command](args, err)
    except CliError as exc:
        print(f"error: {exc}", file=err)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
