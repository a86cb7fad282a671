"""Command-line interface: ``ghosttrace run|transform|check|bench``.

Exit codes: 0 success, 1 null dereference (run) or divergence (check),
2 parse/resolve/usage error, 3 internal or non-NPE program error.
"""

from __future__ import annotations

import argparse
import csv
import sys
import traceback
from pathlib import Path

from .errors import AlreadyTransformed, ParseError, ResolveError
from .harness import check_equivalence, measure_overhead
from .lang import parse_file, pretty_print, resolve
from .runtime import interpret
from .trace import render_json, render_raw, render_text
from .transform import RULES, transform_program

EXIT_OK = 0
EXIT_NPE = 1
EXIT_INPUT = 2
EXIT_INTERNAL = 3

CSV_HEADER = ["program", "orig_ms", "instr_ms", "ratio"]


def _load(path):
    return resolve(parse_file(path))


def cmd_run(args) -> int:
    program = _load(args.file)
    if not program.instrumented:
        program, _ = transform_program(program)
    if args.emit_transformed:
        Path(args.emit_transformed).write_text(pretty_print(program, preserve_lines=True))
    result = interpret(program)
    for line in result.output:
        print(line)
    sys.stdout.flush()
    if result.outcome == "npe":
        report = result.report
        if args.trace_format == "json":
            sys.stderr.write(render_json(report))
        else:
            sys.stderr.write(render_text(report))
        if args.raw and report.trace is not None:
            sys.stderr.write("Raw causality links (temporal order):\n")
            sys.stderr.write(render_raw(report.trace))
        return EXIT_NPE
    if result.outcome == "error":
        print(f"error: {result.error}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


def cmd_transform(args) -> int:
    program = _load(args.file)
    try:
        out, report = transform_program(program)
    except AlreadyTransformed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    text = pretty_print(out, preserve_lines=True)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    if args.report:
        sys.stderr.write(report.summary())
    return EXIT_OK


def cmd_check(args) -> int:
    program = _load(args.file)
    if program.instrumented:
        print("error: check needs an uninstrumented program", file=sys.stderr)
        return EXIT_INPUT
    paired = check_equivalence(program, disabled_rules=args.disable_rule or ())
    print(paired.verdict.describe())
    return EXIT_OK if paired.verdict.equal else EXIT_NPE


def cmd_bench(args) -> int:
    directory = Path(args.dir)
    if not directory.is_dir():
        print(f"error: {directory} is not a directory", file=sys.stderr)
        return EXIT_INPUT
    rows = []
    for path in sorted(directory.glob("*.mini")):
        rows.append(measure_overhead(_load(path), args.repetitions))
    if args.csv:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in rows:
            w.writerow([Path(r.program).name, f"{r.orig_ms:.3f}", f"{r.instr_ms:.3f}", f"{r.ratio:.2f}"])
    else:
        print(f"{'program':<28}{'orig_ms':>10}{'instr_ms':>10}{'ratio':>8}")
        for r in rows:
            flag = "  (low confidence)" if r.low_confidence else ""
            print(f"{Path(r.program).name:<28}{r.orig_ms:>10.3f}{r.instr_ms:>10.3f}{r.ratio:>8.2f}{flag}")
    if args.figure:
        from .plotting import overhead_figure

        overhead_figure(rows, args.figure)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ghosttrace", description="Null-dereference causality traces for MiniLang programs."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="instrument and run a program, reporting null dereferences")
    p.add_argument("file")
    p.add_argument("--trace-format", choices=("text", "json"), default="text")
    p.add_argument("--raw", action="store_true", help="also dump the raw causal links")
    p.add_argument("--emit-transformed", metavar="PATH", help="write the instrumented program to PATH")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("transform", help="print the instrumented program")
    p.add_argument("file")
    p.add_argument("-o", "--output", metavar="PATH")
    p.add_argument("--report", action="store_true", help="print per-rule counts to stderr")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("check", help="compare original and instrumented executions")
    p.add_argument("file")
    p.add_argument(
        "--disable-rule",
        action="append",
        choices=sorted(RULES),
        help="leave one rule out of the instrumentation (repeatable)",
    )
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("bench", help="time every .mini program of a directory in both modes")
    p.add_argument("dir")
    p.add_argument("--csv", action="store_true")
    p.add_argument("--repetitions", type=int, default=5)
    p.add_argument("--figure", metavar="PATH", help="save an overhead bar chart")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ResolveError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
