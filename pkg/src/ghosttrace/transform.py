"""Source-to-source instrumentation of MiniLang programs.

Expression rules (null checks, instanceof, external calls, unboxing, field
dereference) and statement rules (assignment, implicit null declaration, call
arguments, method entry, return) are applied together in one bottom-up pass
over a resolved program. Each rule wraps a construct in a call to one of the
null-detection helpers; the wrapped node keeps its source location.
"""

from __future__ import annotations

import copy
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import AlreadyTransformed
from .lang import ast as A
from .lang.printer import expr_text
from .lang.resolver import is_ref, resolve

# Freshly boxed ints, ``new`` results and ``this`` are never null and are left
# unwrapped where a helper would otherwise be injected.

# rule name -> helper it injects (None for the pure rewrites)
RULES = {
    "eq_null": None,
    "instanceof": None,
    "extern_call": "exorcise",
    "unbox": "nullUnbox",
    "field_access": "nullDeref",
    "assign": "nullAssign",
    "decl_default": "nullAssign",
    "call_args": "nullParam",
    "method_entry": "nullPassed",
    "return": "nullReturn",
}


@dataclass
class TransformReport:
    applications: list[tuple[str, A.Location]] = field(default_factory=list)

    @property
    def counts(self) -> dict[str, int]:
        c = Counter(rule for rule, _ in self.applications)
        return {rule: c.get(rule, 0) for rule in RULES}

    def add(self, rule: str, loc: A.Location):
        self.applications.append((rule, loc))

    def helper_counts(self) -> dict[str, int]:
        out: Counter = Counter()
        for rule, _ in self.applications:
            helper = RULES[rule]
            if helper is not None:
                out[helper] += 1
        return dict(out)

    def summary(self) -> str:
        lines = [f"{rule:<14}{n}" for rule, n in self.counts.items()]
        lines.append(f"{'total':<14}{len(self.applications)}")
        return "\n".join(lines) + "\n"


def position_tag(var: str, loc: A.Location) -> str:
    return f"{var}, {loc.file}:{loc.line}"


def parse_tag(tag: str) -> tuple[str, A.Location]:
    var, _, where = tag.rpartition(", ")
    file, _, line = where.rpartition(":")
    return var, A.Location(file, int(line))


def _helper(name: str, value: A.Expr, var: str, loc: A.Location) -> A.Call:
    return A.Call(None, name, [value, A.StrLit(position_tag(var, loc), loc=loc)], loc=loc)


def _label(e: A.Expr) -> str:
    """Short name for the value an expression denotes, used in position tags."""
    while isinstance(e, (A.Box, A.Unbox)):
        e = e.expr
    if isinstance(e, A.Var):
        return e.name
    if isinstance(e, A.FieldAccess):
        return e.name
    if isinstance(e, A.This):
        return "this"
    if isinstance(e, A.Call):
        return e.name + "()"
    if isinstance(e, A.ExternCall):
        return f"lib.{e.name}()"
    return expr_text(e)


def _is_null_test(e: A.Expr) -> A.Expr:
    # e == null || e instanceof NullGhost
    return A.Binary(
        "||",
        A.Binary("==", e, A.NullLit(loc=e.loc), loc=e.loc),
        A.InstanceOf(copy.deepcopy(e), A.NULL_GHOST, loc=e.loc),
        loc=e.loc,
    )


def _raw(e: A.Expr) -> A.Expr:
    return copy.deepcopy(e)


class Transformer:
    def __init__(self, program: A.Program, disabled_rules: Iterable[str] = ()):
        self.p = program
        self.report = TransformReport()
        self.disabled = frozenset(disabled_rules)
        unknown = self.disabled - set(RULES)
        if unknown:
            raise ValueError(f"unknown rule(s): {', '.join(sorted(unknown))}")
        self.method: Optional[A.MethodDecl] = None
        # parameter names before final parameters get renamed
        self.param_names = {
            id(m): [prm.name for prm in m.params] for c in program.classes for m in c.methods
        }

    def on(self, rule: str, loc: A.Location) -> bool:
        if rule in self.disabled:
            return False
        self.report.add(rule, loc)
        return True

    # ------------------------------------------------------------ program

    def program(self) -> A.Program:
        for c in self.p.classes:
            for f in c.fields:
                self.field_decl(f)
            for m in c.methods:
                self.method_decl(m)
        self.p.instrumented = True
        return self.p

    def field_decl(self, f: A.FieldDecl):
        self.method = None
        if not is_ref(f.type):
            if f.init is not None:
                f.init = self.expr(f.init)
            return
        if f.init is None:
            if self.on("decl_default", f.loc):
                f.init = _helper("nullAssign", A.NullLit(loc=f.loc), f.name, f.loc)
            return
        f.init = self.assigned(f.init, f.name, f.loc)

    def method_decl(self, m: A.MethodDecl):
        self.method = m
        m.body = self.block(m.body)
        prologue = []
        taken = {prm.name for prm in m.params} | {
            n.name for n in A.walk(m) if isinstance(n, A.VarDecl)
        }
        for prm in m.params:
            if not is_ref(prm.type) or not self.on("method_entry", m.loc):
                continue
            if prm.final:
                dup = prm.name + "_dup"
                while dup in taken:
                    dup += "_"
                taken.add(dup)
                orig = prm.name
                prm.name, prm.final = dup, False
                init = _helper("nullPassed", A.Var(dup, loc=m.loc), orig, m.loc)
                prologue.append(A.VarDecl(prm.type, orig, init, loc=m.loc))
            else:
                init = _helper("nullPassed", A.Var(prm.name, loc=m.loc), prm.name, m.loc)
                prologue.append(A.Assign(A.Var(prm.name, loc=m.loc), init, loc=m.loc))
        m.body = prologue + m.body
        self.method = None

    # ---------------------------------------------------------- statements

    def block(self, stmts: list[A.Stmt]) -> list[A.Stmt]:
        return [self.stmt(s) for s in stmts]

    def assigned(self, value: A.Expr, var: str, loc: A.Location) -> A.Expr:
        """Right-hand side of an assignment to a reference-typed target."""
        new = self.expr(value)
        if isinstance(value, (A.New, A.This, A.Box)):
            return new
        if self.on("assign", loc):
            return _helper("nullAssign", new, var, loc)
        return new

    def stmt(self, s: A.Stmt) -> A.Stmt:
        if isinstance(s, A.VarDecl):
            if not is_ref(s.type):
                if s.init is not None:
                    s.init = self.expr(s.init)
            elif s.init is None:
                if self.on("decl_default", s.loc):
                    s.init = _helper("nullAssign", A.NullLit(loc=s.loc), s.name, s.loc)
            else:
                s.init = self.assigned(s.init, s.name, s.loc)
            return s
        if isinstance(s, A.Assign):
            tgt = s.target
            if isinstance(tgt, A.FieldAccess):
                s.target = self.expr(tgt)
            if is_ref(tgt.type):
                s.value = self.assigned(s.value, tgt.name, s.loc)
            else:
                s.value = self.expr(s.value)
            return s
        if isinstance(s, A.ExprStmt):
            s.expr = self.expr(s.expr)
            return s
        if isinstance(s, A.Return):
            if s.value is not None:
                boxed = isinstance(s.value, A.Box)
                s.value = self.expr(s.value)
                if is_ref(self.method.return_type) and not boxed and self.on("return", s.loc):
                    s.value = _helper("nullReturn", s.value, self.method.name, s.loc)
            return s
        if isinstance(s, A.If):
            s.cond = self.expr(s.cond)
            s.then = self.block(s.then)
            if s.orelse is not None:
                s.orelse = self.block(s.orelse)
            return s
        if isinstance(s, A.While):
            s.cond = self.expr(s.cond)
            s.body = self.block(s.body)
            return s
        if isinstance(s, A.TryCatch):
            s.body = self.block(s.body)
            s.handler = self.block(s.handler)
            return s
        if isinstance(s, A.Throw):
            s.expr = self.expr(s.expr)
            return s
        raise TypeError(f"unexpected statement {type(s).__name__}")

    # --------------------------------------------------------- expressions

    def expr(self, e: A.Expr) -> A.Expr:
        if isinstance(e, A.FieldAccess):
            return self.field_access(e)
        if isinstance(e, A.Call):
            return self.call(e)
        if isinstance(e, A.ExternCall):
            return self.extern_call(e)
        if isinstance(e, A.New):
            e.args = self.call_args(e.args, e.ctor, e.loc)
            return e
        if isinstance(e, A.Binary):
            if e.operand_type == "ref" and e.op in ("==", "!="):
                return self.ref_equality(e)
            e.left = self.expr(e.left)
            e.right = self.expr(e.right)
            return e
        if isinstance(e, A.Unary):
            e.operand = self.expr(e.operand)
            return e
        if isinstance(e, A.InstanceOf):
            return self.instanceof(e)
        if isinstance(e, A.Unbox):
            return self.unbox(e)
        if isinstance(e, A.Box):
            e.expr = self.expr(e.expr)
            return e
        return e

    def field_access(self, e: A.FieldAccess) -> A.Expr:
        obj = self.expr(e.obj)
        if not isinstance(e.obj, A.This) and self.on("field_access", e.loc):
            obj = _helper("nullDeref", obj, _label(e.obj), e.loc)
        e.obj = obj
        return e

    def call(self, e: A.Call) -> A.Expr:
        if e.kind == "builtin":
            e.args = [self.expr(a) for a in e.args]
            return e
        if e.receiver is not None and e.kind == "instance":
            e.receiver = self.expr(e.receiver)
        e.args = self.call_args(e.args, e.method, e.loc)
        return e

    def call_args(self, args: list[A.Expr], callee: Optional[A.MethodDecl], loc) -> list[A.Expr]:
        if callee is None:
            return args
        out = []
        names = self.param_names[id(callee)]
        for a, prm, name in zip(args, callee.params, names):
            boxed = isinstance(a, A.Box)
            a = self.expr(a)
            if is_ref(prm.type) and not boxed and self.on("call_args", loc):
                a = _helper("nullParam", a, name, loc)
            out.append(a)
        return out

    def extern_call(self, e: A.ExternCall) -> A.Expr:
        out = []
        for a, prm in zip(e.args, e.decl.params):
            boxed = isinstance(a, A.Box)
            a = self.expr(a)
            if is_ref(prm.type) and not boxed and self.on("extern_call", e.loc):
                a = _helper("exorcise", a, prm.name, e.loc)
            out.append(a)
        e.args = out
        return e

    def unbox(self, e: A.Unbox) -> A.Expr:
        inner = self.expr(e.expr)
        if self.on("unbox", e.loc):
            return _helper("nullUnbox", inner, _label(e.expr), e.loc)
        e.expr = inner
        return e

    def instanceof(self, e: A.InstanceOf) -> A.Expr:
        original = _raw(e.expr)
        e.expr = self.expr(e.expr)
        if e.cls == A.NULL_GHOST or not self.on("instanceof", e.loc):
            return e
        # e1 instanceof T && !(e1 instanceof NullGhost)
        return A.Binary(
            "&&",
            e,
            A.Unary("!", A.InstanceOf(original, A.NULL_GHOST, loc=e.loc), loc=e.loc),
            loc=e.loc,
        )

    def ref_equality(self, e: A.Binary) -> A.Expr:
        # Only the first occurrence of each operand is instrumented: the later
        # copies are reached only after it has been evaluated without error.
        left_raw, right_raw = _raw(e.left), _raw(e.right)
        e.left = self.expr(e.left)
        e.right = self.expr(e.right)
        negate = e.op == "!="
        if not self.on("eq_null", e.loc):
            return e
        eq = A.Binary("==", e.left, e.right, loc=e.loc)
        if isinstance(right_raw, A.NullLit) or isinstance(left_raw, A.NullLit):
            probe = left_raw if isinstance(right_raw, A.NullLit) else right_raw
            new: A.Expr = A.Binary("||", eq, A.InstanceOf(probe, A.NULL_GHOST, loc=e.loc), loc=e.loc)
        else:
            both = A.Binary("&&", _is_null_test(left_raw), _is_null_test(right_raw), loc=e.loc)
            new = A.Binary("||", eq, both, loc=e.loc)
        if negate:
            new = A.Unary("!", new, loc=e.loc)
        return new


def transform_program(program: A.Program, disabled_rules: Iterable[str] = ()):
    """Instrument ``program``; returns (instrumented resolved program, TransformReport).

    ``disabled_rules`` switches individual rules off; it exists to build
    deliberately broken instrumentations for testing the equivalence checker.
    """
    if program.instrumented:
        raise AlreadyTransformed(f"{program.filename} is already instrumented")
    p = program if program.resolved else resolve(program)
    p = copy.deepcopy(p)
    t = Transformer(p, disabled_rules)
    out = t.program()
    return resolve(out), t.report
