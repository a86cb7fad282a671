from __future__ import annotations

import json

import pytest

from ghosttrace.errors import ValidationFailure
from ghosttrace.lang import Location
from ghosttrace.trace import (
    CausalityTrace,
    CausalLink,
    Frame,
    LinkKind,
    NPEReport,
    Symptom,
    append_link,
    postprocess,
    render_json,
    render_raw,
    render_text,
    report_dict,
    validate,
)

F = "t.mini"


def link(kind, line, seq, var="v", extern=False, stack=(), role=None, source=None, sig=None):
    return CausalLink(LinkKind(kind), Location(F, line), var, sig, "main", stack, role, source, extern, seq)


def trace(*links, symptom_only=False):
    return CausalityTrace(list(links), symptom_only)


def test_eight_link_kinds():
    assert [k.value for k in LinkKind] == [
        "literal", "entry", "invoke", "return", "unbox", "assign", "deref", "extern",
    ]
    assert LinkKind.ENTRY.description == "null at entry"
    assert LinkKind.EXTERN.description == "external call"


def test_append_keeps_order():
    t = trace(link("literal", 1, 1))
    append_link(t, link("assign", 1, 2))
    append_link(t, link("deref", 3, 3))
    assert t.kinds() == ["literal", "assign", "deref"]
    assert len(t) == 3


def test_copy_is_independent():
    t = trace(link("literal", 1, 1))
    c = t.copy()
    append_link(c, link("deref", 2, 2))
    assert len(t) == 1 and len(c) == 2


@pytest.mark.parametrize(
    "links",
    [
        [("literal", False), ("assign", False), ("deref", False)],
        [("return", True), ("assign", False), ("deref", False)],
        [("entry", True), ("deref", False)],
        [("literal", False), ("extern", True)],
        [("literal", False), ("deref", False), ("assign", False)],  # caught NPE, null moves on
    ],
)
def test_validate_accepts(links):
    t = trace(*[link(k, i + 1, i + 1, extern=x) for i, (k, x) in enumerate(links)])
    assert validate(t)


@pytest.mark.parametrize(
    "links, prop",
    [
        ([("assign", False), ("deref", False)], "a"),
        ([("deref", False)], "a"),
        ([("return", False), ("deref", False)], "a"),
        ([("entry", False), ("deref", False)], "a"),
        ([("invoke", True), ("deref", False)], "a"),
        ([("literal", False), ("extern", False)], "x"),
    ],
)
def test_validate_rejects(links, prop):
    t = trace(*[link(k, i + 1, i + 1, extern=x) for i, (k, x) in enumerate(links)])
    with pytest.raises(ValidationFailure) as info:
        validate(t)
    assert info.value.prop == prop


def test_validate_rejects_empty_and_unordered():
    with pytest.raises(ValidationFailure):
        validate(trace())
    with pytest.raises(ValidationFailure) as info:
        validate(trace(link("literal", 1, 5), link("deref", 2, 3)))
    assert info.value.prop == "order"


def test_symptom_only_trace():
    assert validate(trace(link("deref", 4, 1), symptom_only=True))
    assert validate(trace(link("unbox", 4, 1), symptom_only=True))
    with pytest.raises(ValidationFailure):
        validate(trace(link("literal", 1, 1), link("deref", 4, 2), symptom_only=True))


def test_literal_assign_merge():
    t = trace(
        link("literal", 5, 1, var="f2", role="field"),
        link("assign", 5, 2, var="f2", role="field"),
        link("deref", 9, 3, var="f2", role="field"),
    )
    d = postprocess(t)
    assert [el.kinds for el in d.elements] == [["literal", "assign"], ["deref"]]
    assert d.elements[0].message == "Field f2 set to null"
    assert d.raw is t


def test_literal_assign_different_lines_not_merged():
    t = trace(link("literal", 5, 1), link("assign", 6, 2), link("deref", 9, 3))
    assert len(postprocess(t).elements) == 3


def _call_pair(order):
    caller = Frame("C.solve", F, 66)
    callee = Frame("C.bisect", F, 70)
    inv = link("invoke", 66, 3, var="f", stack=(caller,), source="field", sig="C f2")
    ent = link("entry", 70, 3, var="f", stack=(callee, caller))
    return [inv, ent] if order == "ie" else [ent, inv]


@pytest.mark.parametrize("order", ["ie", "ei"])
def test_invoke_entry_merge(order):
    t = trace(link("literal", 55, 1), link("assign", 55, 2), *_call_pair(order), link("deref", 88, 4))
    d = postprocess(t)
    assert len(d.elements) == 3
    middle = d.elements[1]
    assert middle.message == "Parameter f bound to field f2"
    assert middle.location.line == 66


def test_invoke_entry_of_different_calls_not_merged():
    caller = Frame("C.main", F, 10)
    inv = link("invoke", 66, 1, stack=(caller,))
    ent = link("entry", 70, 2, stack=(Frame("C.g", F, 70), Frame("C.main", F, 12)))
    t = trace(link("literal", 66, 1), inv, ent)
    assert len(postprocess(t).elements) == 3


def test_one_to_one_otherwise():
    t = trace(
        link("return", 3, 1, extern=True, sig="lib.get()"),
        link("return", 4, 2, var="foo"),
        link("assign", 8, 3, var="x"),
        link("deref", 9, 4, var="x", role="local"),
    )
    d = postprocess(t)
    assert [el.kinds for el in d.elements] == [["return"], ["return"], ["assign"], ["deref"]]
    assert d.elements[0].message == "Null returned by external call lib.get()"
    assert d.elements[3].message == "For local : x"


def _report():
    main = Frame("Demo.main", F, 26)
    ctor = Frame("Plot.<init>", F, 17)
    t = trace(
        link("literal", 26, 1, var="axis", stack=(main,)),
        link("entry", 16, 2, var="axis", stack=(ctor, main)),
        link("invoke", 26, 2, var="axis", stack=(main,), source="literal"),
        link("deref", 17, 3, var="axis", role="parameter", stack=(ctor, main)),
    )
    return NPEReport(Symptom(Location(F, 17), "axis", "parameter", (ctor, main)), t)


def test_render_text_layout():
    text = render_text(_report(), color=False)
    lines = text.splitlines()
    assert lines[0] == 'Exception in thread "main" NullPointerException'
    assert lines[1] == "\tat Plot.<init>(t.mini:17)"
    assert lines[2] == "\tat Demo.main(t.mini:26)"
    assert lines[3].startswith("Causality trace")
    body = lines[4:]
    assert body[0] == "For parameter : axis"
    assert body[1] == "\tat Plot.<init>(t.mini:17)"
    assert body[2] == "Parameter axis bound to null literal"
    assert body[4] == "Null literal for axis"
    assert len(body) == 6
    # each display element is rendered exactly once
    assert sum(1 for l in body if not l.startswith("\t")) == 3


def test_render_text_color(monkeypatch):
    monkeypatch.setenv("GHOSTTRACE_COLOR", "1")
    assert "\x1b[1m" in render_text(_report())
    monkeypatch.setenv("GHOSTTRACE_COLOR", "0")
    assert "\x1b[" not in render_text(_report())


def test_render_json_schema():
    data = json.loads(render_json(_report()))
    assert set(data) == {"symptom", "links", "display"}
    assert data["symptom"] == {
        "file": F,
        "line": 17,
        "variable": "axis",
        "kind": "parameter",
        "stack": ["Plot.<init>(t.mini:17)", "Demo.main(t.mini:26)"],
    }
    assert [l["kind"] for l in data["links"]] == ["literal", "entry", "invoke", "deref"]
    assert set(data["links"][0]) == {"kind", "variable", "exprSignature", "file", "line", "thread", "stack"}
    assert [d["kinds"] for d in data["display"]] == [["literal"], ["entry", "invoke"], ["deref"]]


def test_report_without_trace():
    r = NPEReport(Symptom(Location(F, 3), None, "thrown"))
    assert r.display is None
    assert report_dict(r)["links"] == []
    assert "Causality trace" not in render_text(r)


def test_render_raw():
    text = render_raw(_report().trace)
    assert text.splitlines()[0].split()[:2] == ["0", "literal"]
    assert len(text.splitlines()) == 4
