"""Behavioral equivalence between original and instrumented runs, and overhead.

Two runs are equivalent when their ordered lists of method calls and
returned values agree once the calls to the injected helpers are removed.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from typing import Optional

from .events import CALL, HELPER_CLASS, RETURN, EventLog, ExecutionEvent
from .lang import ast as A
from .lang.resolver import resolve
from .runtime import INSTRUMENTED, ORIGINAL, RunResult, interpret
from .transform import transform_program

__all__ = [
    "CALL",
    "RETURN",
    "EventLog",
    "ExecutionEvent",
    "EquivalenceVerdict",
    "Overhead",
    "record_execution",
    "filter_instrumentation",
    "compare",
    "check_equivalence",
    "measure_overhead",
]


@dataclass
class EquivalenceVerdict:
    equal: bool
    # (index, event of the first log, event of the second log); a missing
    # event means one log ended early
    first_divergence: Optional[tuple[int, Optional[ExecutionEvent], Optional[ExecutionEvent]]] = None

    def describe(self) -> str:
        if self.equal:
            return "EQUIVALENT"
        i, a, b = self.first_divergence
        show = lambda e: "<end of log>" if e is None else f"{e.kind} {e.method} {e.payload}"
        return f"DIVERGENT at event {i}\n  original:     {show(a)}\n  instrumented: {show(b)}"


def _prepare(p: A.Program, mode: str) -> A.Program:
    if not p.resolved:
        p = resolve(p)
    if mode == INSTRUMENTED and not p.instrumented:
        p, _ = transform_program(p)
    return p


def run_mode(p: A.Program, mode: str, **limits) -> RunResult:
    return interpret(_prepare(p, mode), mode, **limits)


def record_execution(p: A.Program, mode: str = ORIGINAL, **limits) -> EventLog:
    """Run ``p`` and return its event log; the RunResult is attached as ``outcome``.

    An uninstrumented program is transformed first when ``mode`` is
    instrumented.
    """
    result = run_mode(p, mode, **limits)
    log = result.events
    log.outcome = result
    return log


def filter_instrumentation(log: EventLog) -> EventLog:
    prefix = HELPER_CLASS + "#"
    out = EventLog(program_id=log.program_id, mode=log.mode, outcome=log.outcome)
    for event in log.events:
        if not event.method.startswith(prefix):
            out.record(event.kind, event.method, event.payload)
    return out


def compare(a: EventLog, b: EventLog) -> EquivalenceVerdict:
    """Strict positional comparison of kind, method and payload."""
    for i, (x, y) in enumerate(zip(a.events, b.events)):
        if x.key() != y.key():
            return EquivalenceVerdict(False, (i, x, y))
    n, m = len(a.events), len(b.events)
    if n != m:
        i = min(n, m)
        return EquivalenceVerdict(
            False, (i, a.events[i] if i < n else None, b.events[i] if i < m else None)
        )
    return EquivalenceVerdict(True)


@dataclass
class PairedRun:
    original: RunResult
    instrumented: RunResult
    verdict: EquivalenceVerdict


def check_equivalence(p: A.Program, disabled_rules=(), **limits) -> PairedRun:
    """Run ``p`` as written and instrumented, and compare the filtered logs."""
    p = _prepare(p, ORIGINAL)
    q, _ = transform_program(p, disabled_rules)
    a = interpret(p, ORIGINAL, **limits)
    b = interpret(q, INSTRUMENTED, **limits)
    verdict = compare(filter_instrumentation(a.events), filter_instrumentation(b.events))
    return PairedRun(a, b, verdict)


@dataclass
class Overhead:
    program: str
    orig_ms: float
    instr_ms: float
    repetitions: int

    @property
    def ratio(self) -> float:
        return self.instr_ms / self.orig_ms if self.orig_ms > 0 else float("inf")

    @property
    def low_confidence(self) -> bool:
        return self.repetitions < 2


def measure_overhead(p: A.Program, repetitions: int = 5, **limits) -> Overhead:
    """Median run times of both versions; the transformation itself is not timed."""
    if repetitions < 1:
        raise ValueError("repetitions must be at least 1")
    p = _prepare(p, ORIGINAL)
    q, _ = transform_program(p)
    orig, instr = [], []
    for _ in range(repetitions):
        orig.append(interpret(p, ORIGINAL, **limits).wall_time)
        instr.append(interpret(q, INSTRUMENTED, **limits).wall_time)
    return Overhead(p.filename, statistics.median(orig) * 1000, statistics.median(instr) * 1000, repetitions)
