from __future__ import annotations

import json
from pathlib import Path

import pytest
from hypothesis import HealthCheck, given, settings

from minigen import programs

from ghosttrace.events import EventLog
from ghosttrace.harness import (
    check_equivalence,
    compare,
    filter_instrumentation,
    measure_overhead,
    record_execution,
)
from ghosttrace.lang import parse, parse_file
from ghosttrace.runtime import INSTRUMENTED, ORIGINAL

CORPUS = Path(__file__).resolve().parent.parent / "corpus"
GOLDEN = CORPUS / "golden"
MANIFEST = json.loads((CORPUS / "manifest.json").read_text())
ENTRIES = MANIFEST["rows"] + MANIFEST["extras"]


def log_of(*triples):
    log = EventLog()
    for kind, method, payload in triples:
        log.record(kind, method, payload)
    return log


@pytest.mark.parametrize("path", sorted(CORPUS.glob("*.mini")), ids=lambda p: p.stem)
def test_original_log_matches_golden(path):
    log = record_execution(parse_file(path), ORIGINAL)
    golden = EventLog.from_tsv((GOLDEN / f"{path.stem}.events.tsv").read_text())
    assert compare(log, golden).equal
    assert log.is_nested()


@pytest.mark.parametrize("path", sorted(CORPUS.glob("*.mini")), ids=lambda p: p.stem)
def test_instrumented_log_filters_to_golden(path):
    log = record_execution(parse_file(path), INSTRUMENTED)
    assert log.is_nested()
    golden = EventLog.from_tsv((GOLDEN / f"{path.stem}.events.tsv").read_text())
    assert compare(filter_instrumentation(log), golden).equal


@pytest.mark.parametrize("entry", ENTRIES, ids=lambda e: e["file"])
def test_corpus_manifest(entry):
    log = record_execution(parse_file(CORPUS / entry["file"]), INSTRUMENTED)
    result = log.outcome
    assert result.outcome == "npe"
    trace = result.report.trace
    golden = json.loads((GOLDEN / entry["file"].replace(".mini", ".kinds.json")).read_text())
    assert trace.kinds() == golden == entry["expected_kinds"]
    assert trace.links[0].location.line == entry["root_line"]
    assert result.report.symptom.location.line == entry["symptom_line"]
    assert trace.symptom_only == entry["symptom_only"]
    assert len(result.report.display.elements) == entry["display_blocks"]


def test_tsv_round_trip():
    log = log_of(("call", "A#main", "()"), ("call", "A#f", "(1, null)"), ("return", "A#f", "<A@3>"), ("return", "A#main", "void"))
    again = EventLog.from_tsv(log.to_tsv())
    assert [e.key() for e in again.events] == [e.key() for e in log.events]
    assert [e.seq for e in again.events] == [0, 1, 2, 3]


def test_is_nested():
    assert log_of(("call", "A#m", "()"), ("return", "A#m", "void")).is_nested()
    assert not log_of(("call", "A#m", "()"), ("return", "A#n", "void")).is_nested()
    assert not log_of(("call", "A#m", "()")).is_nested()
    assert not log_of(("return", "A#m", "void")).is_nested()


def test_filter_drops_helper_events_only():
    log = log_of(
        ("call", "A#main", "()"),
        ("call", "NullDetector#nullAssign", "(null)"),
        ("return", "NullDetector#nullAssign", "null"),
        ("return", "A#main", "void"),
    )
    out = filter_instrumentation(log)
    assert [e.method for e in out.events] == ["A#main", "A#main"]
    assert [e.seq for e in out.events] == [0, 1]


def test_compare_reports_first_divergence():
    a = log_of(("call", "A#main", "()"), ("call", "A#f", "(1)"), ("return", "A#f", "2"))
    b = log_of(("call", "A#main", "()"), ("call", "A#f", "(1)"), ("return", "A#f", "3"))
    v = compare(a, b)
    assert not v.equal
    i, x, y = v.first_divergence
    assert i == 2 and x.payload == "2" and y.payload == "3"
    assert v.describe().startswith("DIVERGENT at event 2")


def test_compare_length_mismatch():
    a = log_of(("call", "A#main", "()"), ("return", "A#main", "void"))
    b = log_of(("call", "A#main", "()"))
    v = compare(a, b)
    assert not v.equal and v.first_divergence[0] == 1 and v.first_divergence[2] is None
    assert compare(a, a).describe() == "EQUIVALENT"


GUARDED = """class A {
    int v;
    static int size(A a) {
        if (a == null) { return 0; }
        if (a instanceof A) { return 1; }
        return 2;
    }
    static void main() {
        A a = null;
        print(A.size(a));
    }
}
"""


def test_instrumentation_is_equivalent():
    paired = check_equivalence(parse(GUARDED, "g.mini"))
    assert paired.verdict.equal
    assert paired.original.output == paired.instrumented.output == ["0"]


@pytest.mark.parametrize("rules", [["eq_null"], ["eq_null", "instanceof"]])
def test_dropping_a_preservation_rule_diverges(rules):
    # without the rewrites the ghost fails the null check and passes instanceof
    paired = check_equivalence(parse(GUARDED, "g.mini"), disabled_rules=rules)
    assert not paired.verdict.equal
    assert paired.instrumented.output != paired.original.output


def test_dropping_the_exorcism_lets_a_library_see_a_ghost():
    src = """extern A lib.echo(A a) = echo;
class A {
    static void main() { A a = null; A b = lib.echo(a); print(b); }
}"""
    good = check_equivalence(parse(src))
    assert good.verdict.equal and not good.instrumented.extern_saw_ghost
    bad = check_equivalence(parse(src), disabled_rules=["extern_call"])
    assert bad.instrumented.extern_saw_ghost


def test_measure_overhead():
    o = measure_overhead(parse_file(CORPUS / "simple1_analog.mini"), repetitions=3)
    assert o.orig_ms > 0 and o.instr_ms > 0
    assert o.repetitions == 3 and not o.low_confidence
    assert measure_overhead(parse_file(CORPUS / "simple1_analog.mini"), repetitions=1).low_confidence
    with pytest.raises(ValueError):
        measure_overhead(parse_file(CORPUS / "simple1_analog.mini"), repetitions=0)


@settings(max_examples=100, deadline=None, suppress_health_check=list(HealthCheck))
@given(programs(crash=True))
def test_null_bearing_programs_stay_equivalent(src):
    paired = check_equivalence(parse(src, "gen.mini"))
    assert paired.verdict.equal, paired.verdict.describe()
    assert paired.original.outcome == paired.instrumented.outcome
    assert not paired.instrumented.extern_saw_ghost
