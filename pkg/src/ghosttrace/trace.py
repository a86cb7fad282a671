"""Causal links, causality traces, and NPE reports.

A causality trace is the temporally ordered list of null-propagating
constructs a null went through, from where it appeared to where it was
dereferenced. Raw traces are recorded by the runtime; ``postprocess`` folds
the two redundant link pairs into single display elements and the renderers
turn a report into text or JSON.
"""

from __future__ import annotations

import enum
import json
import os
from dataclasses import dataclass, field
from typing import Optional

from .errors import ValidationFailure
from .lang.ast import Location

THREAD = "main"


class LinkKind(enum.Enum):
    LITERAL = "literal"
    ENTRY = "entry"
    INVOKE = "invoke"
    RETURN = "return"
    UNBOX = "unbox"
    ASSIGN = "assign"
    DEREF = "deref"
    EXTERN = "extern"

    @property
    def description(self) -> str:
        return _DESCRIPTIONS[self]


_DESCRIPTIONS = {
    LinkKind.LITERAL: "null literal",
    LinkKind.ENTRY: "null at entry",
    LinkKind.INVOKE: "null at invocation",
    LinkKind.RETURN: "null return",
    LinkKind.UNBOX: "unboxed null",
    LinkKind.ASSIGN: "null assignment",
    LinkKind.DEREF: "null dereference",
    LinkKind.EXTERN: "external call",
}

ORIGIN_KINDS = (LinkKind.LITERAL, LinkKind.RETURN, LinkKind.ENTRY)


@dataclass(frozen=True)
class Frame:
    method: str  # "Class.method"
    file: str
    line: int

    def __str__(self) -> str:
        return f"{self.method}({self.file}:{self.line})"


@dataclass(frozen=True)
class CausalLink:
    kind: LinkKind
    location: Location
    variable: Optional[str] = None
    expr_signature: Optional[str] = None
    thread: str = THREAD
    stack: tuple[Frame, ...] = ()
    # what ``variable`` names: "field", "local", "parameter", "method", "extern"
    role: Optional[str] = None
    # what the wrapped expression was: "literal", "field", "local", "parameter",
    # "call", "extern", "new", "expression"
    source: Optional[str] = None
    extern: bool = False  # recorded at an external-library boundary
    seq: int = 0


@dataclass
class CausalityTrace:
    links: list[CausalLink] = field(default_factory=list)
    # degenerate trace of a null that reached a dereference without passing
    # any instrumented site
    symptom_only: bool = False

    def kinds(self) -> list[str]:
        return [link.kind.value for link in self.links]

    def __len__(self) -> int:
        return len(self.links)

    def copy(self) -> "CausalityTrace":
        return CausalityTrace(list(self.links), self.symptom_only)


def append_link(trace: CausalityTrace, link: CausalLink) -> CausalityTrace:
    trace.links.append(link)
    return trace


def validate(trace: CausalityTrace) -> bool:
    """Check the trace-shape properties; raise ValidationFailure on the first violation.

    (a) the first link is a null literal, or a return/entry at an external
        boundary; a symptom-only trace is a single dereference or unboxing
    (b) dereferences may appear anywhere (caught NPEs), so nothing to check
    (c) a return with no earlier origin happens only at an external boundary
    Every external-call link must sit on an external call site.
    """
    links = trace.links
    if not links:
        raise ValidationFailure("a", 0, "empty trace")
    if trace.symptom_only:
        if len(links) != 1 or links[0].kind not in (LinkKind.DEREF, LinkKind.UNBOX):
            raise ValidationFailure("a", 0, "symptom-only trace must be a single dereference")
        return True
    first = links[0]
    if first.kind is not LinkKind.LITERAL:
        if first.kind not in (LinkKind.RETURN, LinkKind.ENTRY):
            raise ValidationFailure("a", 0, f"trace starts with {first.kind.value}")
        if not first.extern:
            raise ValidationFailure(
                "a", 0, f"trace starts with {first.kind.value} outside an external boundary"
            )
    for i, link in enumerate(links):
        if link.kind is LinkKind.EXTERN and not link.extern:
            raise ValidationFailure("x", i, "external-call link outside an external call site")
        if link.kind is LinkKind.RETURN and i == 0 and not link.extern:
            raise ValidationFailure("c", i, "return of a null with no origin")
    seqs = [link.seq for link in links]
    if any(b < a for a, b in zip(seqs, seqs[1:])):
        raise ValidationFailure("order", 0, "links are not in temporal order")
    return True


# ---------------------------------------------------------------- display


@dataclass(frozen=True)
class DisplayElement:
    message: str
    location: Location
    links: tuple[CausalLink, ...]
    frame: Optional[Frame] = None

    @property
    def kinds(self) -> list[str]:
        return [link.kind.value for link in self.links]


@dataclass
class DisplayTrace:
    elements: list[DisplayElement]
    raw: CausalityTrace


def _name(signature: Optional[str]) -> str:
    return signature.split()[-1] if signature else "?"


def _source_text(link: CausalLink) -> str:
    sig = link.expr_signature
    src = link.source
    if src == "literal":
        return "null literal"
    if src in ("field", "local", "parameter"):
        return f"{src} {_name(sig)}"
    if src == "call":
        return f"return value of {sig}"
    if src == "extern":
        return f"external call {sig}"
    return f"expression {sig}" if sig else "expression"


_ROLE_TITLE = {"field": "Field", "local": "Variable", "parameter": "Parameter"}


def _message(link: CausalLink) -> str:
    var = link.variable or "?"
    k = link.kind
    if k is LinkKind.LITERAL:
        return f"Null literal for {var}"
    if k is LinkKind.ASSIGN:
        return f"{_ROLE_TITLE.get(link.role, 'Variable')} {var} assigned null from {_source_text(link)}"
    if k is LinkKind.INVOKE:
        return f"Null passed as parameter {var} ({_source_text(link)})"
    if k is LinkKind.ENTRY:
        suffix = " from an external callback" if link.extern else ""
        return f"Parameter {var} received null{suffix}"
    if k is LinkKind.RETURN:
        if link.extern:
            return f"Null returned by external call {link.expr_signature or var}"
        return f"Null returned by {var}"
    if k is LinkKind.UNBOX:
        return f"Unboxing null {link.role or 'expression'} : {var}"
    if k is LinkKind.DEREF:
        if link.role in ("field", "local", "parameter"):
            return f"For {link.role} : {var}"
        return f"For expression : {link.expr_signature or var}"
    return f"Null ghost exorcised before external call {var}"


def same_call(invoke: CausalLink, entry: CausalLink) -> bool:
    # the callee frame is on top of the entry link's stack; its caller sits below
    if len(entry.stack) < 2:
        return False
    caller = entry.stack[1]
    return (caller.file, caller.line) == (invoke.location.file, invoke.location.line)


def postprocess(trace: CausalityTrace) -> DisplayTrace:
    """Fold redundant adjacent links into display elements.

    A null literal immediately assigned at the same location becomes one
    "set to null" element; an invocation paired with the entry of the called
    method becomes one "bound to" element. Everything else maps one-to-one.
    """
    links = trace.links
    out: list[DisplayElement] = []
    i = 0
    while i < len(links):
        cur = links[i]
        nxt = links[i + 1] if i + 1 < len(links) else None
        if (
            nxt is not None
            and cur.kind is LinkKind.LITERAL
            and nxt.kind is LinkKind.ASSIGN
            and cur.location == nxt.location
        ):
            title = _ROLE_TITLE.get(nxt.role, "Variable")
            out.append(
                DisplayElement(f"{title} {nxt.variable} set to null", nxt.location, (cur, nxt), _top(nxt))
            )
            i += 2
            continue
        if nxt is not None and {cur.kind, nxt.kind} == {LinkKind.INVOKE, LinkKind.ENTRY}:
            invoke, entry = (cur, nxt) if cur.kind is LinkKind.INVOKE else (nxt, cur)
            if same_call(invoke, entry):
                msg = f"Parameter {entry.variable} bound to {_source_text(invoke)}"
                out.append(DisplayElement(msg, invoke.location, (cur, nxt), _top(invoke)))
                i += 2
                continue
        out.append(DisplayElement(_message(cur), cur.location, (cur,), _top(cur)))
        i += 1
    return DisplayTrace(out, trace)


def _top(link: CausalLink) -> Optional[Frame]:
    return link.stack[0] if link.stack else None


# ----------------------------------------------------------------- reports


@dataclass
class Symptom:
    location: Location
    variable: Optional[str]
    kind: str  # "parameter" | "local" | "field" | "expression" | "thrown"
    stack: tuple[Frame, ...] = ()

    def describe(self) -> str:
        if self.kind == "thrown":
            return "Thrown explicitly"
        if self.kind in ("parameter", "local", "field"):
            return f"For {self.kind} : {self.variable}"
        return f"For expression : {self.variable}" if self.variable else "For expression"


@dataclass
class NPEReport:
    symptom: Symptom
    trace: Optional[CausalityTrace] = None
    display: Optional[DisplayTrace] = None

    def __post_init__(self):
        if self.trace is not None and self.display is None:
            self.display = postprocess(self.trace)


def _color_enabled(color: Optional[bool]) -> bool:
    if color is not None:
        return color
    return os.environ.get("GHOSTTRACE_COLOR", "0") == "1"


def render_text(report: NPEReport, color: Optional[bool] = None) -> str:
    """Conventional stack trace, then one block per display element, symptom first."""
    bold = (lambda s: f"\x1b[1m{s}\x1b[0m") if _color_enabled(color) else (lambda s: s)
    lines = [f'Exception in thread "{THREAD}" NullPointerException']
    for fr in report.symptom.stack:
        lines.append(f"\tat {fr}")
    if report.display is not None and report.display.elements:
        lines.append("Causality trace (symptom first, root cause last):")
        for el in reversed(report.display.elements):
            lines.append(bold(el.message))
            where = el.frame.method if el.frame is not None else "?"
            lines.append(f"\tat {where}({el.location.file}:{el.location.line})")
    return "\n".join(lines) + "\n"


def _link_json(link: CausalLink) -> dict:
    return {
        "kind": link.kind.value,
        "variable": link.variable,
        "exprSignature": link.expr_signature,
        "file": link.location.file,
        "line": link.location.line,
        "thread": link.thread,
        "stack": [str(fr) for fr in link.stack],
    }


def report_dict(report: NPEReport) -> dict:
    s = report.symptom
    links = report.trace.links if report.trace is not None else []
    display = report.display.elements if report.display is not None else []
    return {
        "symptom": {
            "file": s.location.file,
            "line": s.location.line,
            "variable": s.variable,
            "kind": s.kind,
            "stack": [str(fr) for fr in s.stack],
        },
        "links": [_link_json(link) for link in links],
        "display": [
            {
                "message": el.message,
                "file": el.location.file,
                "line": el.location.line,
                "kinds": el.kinds,
            }
            for el in display
        ],
    }


def render_json(report: NPEReport) -> str:
    return json.dumps(report_dict(report), indent=2) + "\n"


def render_raw(trace: CausalityTrace) -> str:
    """One line per raw link, temporal order."""
    out = []
    for i, link in enumerate(trace.links):
        var = f" {link.variable}" if link.variable else ""
        out.append(f"{i:3d} {link.kind.value:<8}{var} @ {link.location}")
    return "\n".join(out) + "\n"
