from __future__ import annotations

import re
from collections import Counter
from pathlib import Path

import pytest
from hypothesis import HealthCheck, given, settings

from minigen import programs

from ghosttrace.errors import AlreadyTransformed
from ghosttrace.lang import Location, parse, parse_file, pretty_print, resolve
from ghosttrace.lang import ast as A
from ghosttrace.lang.resolver import is_ref
from ghosttrace.transform import RULES, parse_tag, position_tag, transform_program

CORPUS = Path(__file__).resolve().parent.parent / "corpus"
CORPUS_FILES = sorted(CORPUS.glob("*.mini")) + sorted((CORPUS / "bench").glob("*.mini"))

SAMPLE = """\
extern A lib.get(A a) = echo;
class A {
    A next;
    IntBox box;
    A(A n) { this.next = n; }
    A step(final A other) {
        A t;
        t = other;
        if (t == null) { return this; }
        if (t instanceof A) { return t.next; }
        int k = this.box + 1;
        return lib.get(t);
    }
    static void main() {
        A a = new A(null);
        A b = a.step(a);
        print(b == a);
    }
}
"""


def instrumented_text(src: str, name: str = "s.mini", disabled=()):
    out, report = transform_program(parse(src, name), disabled)
    return pretty_print(out, preserve_lines=True), report


def test_position_tag_round_trip():
    tag = position_tag("f2", Location("Solver.mini", 55))
    assert tag == "f2, Solver.mini:55"
    assert parse_tag(tag) == ("f2", Location("Solver.mini", 55))
    # variable names containing commas are not produced, but file names with ':' survive
    assert parse_tag("x, C:/dir/a.mini:3") == ("x", Location("C:/dir/a.mini", 3))


def test_rule_examples():
    text, report = instrumented_text(SAMPLE)
    lines = text.splitlines()
    assert lines[0].startswith("@instrumented")
    assert 'A next = nullAssign(null, "next, s.mini:3");' in lines[2]
    assert 'n = nullPassed(n, "n, s.mini:5")' in lines[4]
    assert 'this.next = nullAssign(n, "next, s.mini:5")' in lines[4]
    # final parameter renamed, original name re-declared from the duplicate
    assert "A step(A other_dup)" in lines[5]
    assert 'A other = nullPassed(other_dup, "other, s.mini:6");' in lines[5]
    assert 'A t = nullAssign(null, "t, s.mini:7");' in lines[6]
    assert "t == null || t instanceof NullGhost" in lines[8]
    assert "t instanceof A && !(t instanceof NullGhost)" in lines[9]
    assert 'nullDeref(t, "t, s.mini:10").next' in lines[9]
    assert 'nullUnbox(this.box, "box, s.mini:11")' in lines[10]
    assert 'lib.get(exorcise(t, "a, s.mini:12"))' in lines[11]
    assert 'new A(nullParam(null, "n, s.mini:15"))' in lines[14]
    assert 'a.step(nullParam(a, "other, s.mini:16"))' in lines[15]
    assert "b == a || (b == null || b instanceof NullGhost) && (a == null || a instanceof NullGhost)" in lines[16]
    assert report.counts["decl_default"] == 3


def test_statement_lines_preserved():
    text, _ = instrumented_text(SAMPLE)
    src_lines = SAMPLE.splitlines()
    out_lines = text.splitlines()
    for n in (8, 11, 15, 16):
        first_token = src_lines[n - 1].split()[0]
        assert first_token in out_lines[n - 1]


def test_this_new_and_boxes_not_wrapped():
    src = """
class B {
    IntBox total;
    B self() { return this; }
    void main() {
        B b = new B();
        B c = this;
        IntBox n = 4;
        this.total = 5;
        B d = b.self();
        print(d == c);
        print(n);
    }
}
"""
    text, _ = instrumented_text(src)
    assert "nullAssign(new" not in text
    assert "nullAssign(this" not in text
    assert 'IntBox n = 4;' in text
    assert "this.total = 5;" in text


def test_not_equal_is_negated():
    text, _ = instrumented_text("class A { void main() { A a = null; print(a != null); } }")
    assert "!(a == null || a instanceof NullGhost)" in text


def test_already_transformed():
    out, _ = transform_program(parse(SAMPLE, "s.mini"))
    with pytest.raises(AlreadyTransformed):
        transform_program(out)
    reparsed = parse(pretty_print(out), "s.mini")
    with pytest.raises(AlreadyTransformed):
        transform_program(reparsed)


def test_transform_does_not_mutate_input():
    p = resolve(parse(SAMPLE, "s.mini"))
    before = pretty_print(p)
    transform_program(p)
    assert pretty_print(p) == before


def test_disabled_rule():
    text, report = instrumented_text(SAMPLE, disabled=["field_access", "eq_null"])
    assert "nullDeref" not in text
    assert "instanceof NullGhost) {" not in text.split("\n")[8]
    assert report.counts["field_access"] == 0
    with pytest.raises(ValueError):
        transform_program(parse(SAMPLE), ["no_such_rule"])


# ---------------------------------------------------------------- census
#
# An independent count of the sites each rule applies to, computed on the
# resolved original program.


def _unwrapped(e):
    return not isinstance(e, (A.New, A.This, A.Box))


def census(p: A.Program) -> Counter:
    c: Counter = Counter()
    for cls in p.classes:
        for f in cls.fields:
            if is_ref(f.type):
                if f.init is None:
                    c["decl_default"] += 1
                elif _unwrapped(f.init):
                    c["assign"] += 1
        for m in cls.methods:
            c["method_entry"] += sum(1 for prm in m.params if is_ref(prm.type))
    for node in A.walk(p):
        if isinstance(node, A.MethodDecl):
            for n in A.walk(node):
                if isinstance(n, A.Return) and n.value is not None and is_ref(node.return_type):
                    c["return"] += not isinstance(n.value, A.Box)
        elif isinstance(node, A.VarDecl) and is_ref(node.type):
            if node.init is None:
                c["decl_default"] += 1
            elif _unwrapped(node.init):
                c["assign"] += 1
        elif isinstance(node, A.Assign) and is_ref(node.target.type):
            c["assign"] += _unwrapped(node.value)
        elif isinstance(node, A.FieldAccess):
            c["field_access"] += not isinstance(node.obj, A.This)
        elif isinstance(node, A.Unbox):
            c["unbox"] += 1
        elif isinstance(node, A.InstanceOf):
            c["instanceof"] += 1
        elif isinstance(node, A.Binary) and node.op in ("==", "!=") and node.operand_type == "ref":
            c["eq_null"] += 1
        elif isinstance(node, A.Call) and node.kind in ("static", "instance"):
            c["call_args"] += sum(
                1 for a, prm in zip(node.args, node.method.params) if is_ref(prm.type) and not isinstance(a, A.Box)
            )
        elif isinstance(node, A.New) and node.ctor is not None:
            c["call_args"] += sum(
                1 for a, prm in zip(node.args, node.ctor.params) if is_ref(prm.type) and not isinstance(a, A.Box)
            )
        elif isinstance(node, A.ExternCall):
            c["extern_call"] += sum(
                1 for a, prm in zip(node.args, node.decl.params) if is_ref(prm.type) and not isinstance(a, A.Box)
            )
    return c


def _check_census(p: A.Program):
    p = resolve(p)
    expected = census(p)
    out, report = transform_program(p)
    assert report.counts == {rule: expected.get(rule, 0) for rule in RULES}
    text = pretty_print(out)
    injected = Counter(re.findall(r"\b(null[A-Z]\w*|exorcise)\(", text))
    assert dict(injected) == report.helper_counts()


@pytest.mark.parametrize("path", CORPUS_FILES, ids=lambda p: p.name)
def test_census_corpus(path):
    _check_census(parse_file(path))


def test_census_sample():
    _check_census(parse(SAMPLE, "s.mini"))


@settings(max_examples=80, deadline=None, suppress_health_check=list(HealthCheck))
@given(programs())
def test_census_generated(src):
    _check_census(parse(src, "gen.mini"))
