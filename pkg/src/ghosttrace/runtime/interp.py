"""Tree-walking interpreter for original and instrumented MiniLang programs."""

from __future__ import annotations

import sys
import time
from dataclasses import dataclass, field, replace
from typing import Optional

from .. import events as ev
from ..lang import ast as A
from ..lang.printer import expr_text
from ..lang.resolver import resolve
from ..trace import (
    THREAD,
    CausalityTrace,
    CausalLink,
    Frame,
    LinkKind,
    NPEReport,
    Symptom,
    same_call,
)
from ..transform import parse_tag
from .values import VOID, BoxedInt, Ghost, Obj, render

ORIGINAL = "original"
INSTRUMENTED = "instrumented"

BUILTIN_CLASS = "System"


class NPESignal(Exception):
    """A NullPointerException travelling through the interpreted program."""

    def __init__(self, report: NPEReport, exc_obj: Optional[Obj] = None):
        super().__init__(report.symptom.describe())
        self.report = report
        self.exc_obj = exc_obj


class GhostNPE(NPESignal):
    """NPE raised by a ghost-aware check; its report carries a causality trace."""

    catchable = True


class ProgramError(Exception):
    """A non-NPE failure of the interpreted program (or a resource limit)."""


@dataclass
class RunResult:
    outcome: str  # "normal" | "npe" | "error"
    events: ev.EventLog
    value: object = None
    report: Optional[NPEReport] = None
    error: Optional[str] = None
    output: list[str] = field(default_factory=list)
    wall_time: float = 0.0
    extern_saw_ghost: bool = False


class _Frame:
    __slots__ = ("name", "file", "line", "locals", "this", "method", "from_extern")

    def __init__(self, name, file, line, this=None, method=None, from_extern=False):
        self.name = name
        self.file = file
        self.line = line
        self.locals: dict = {}
        self.this = this
        self.method = method
        self.from_extern = from_extern


class _Ret:
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value


def default_value(ty: str):
    if ty == A.INT:
        return 0
    if ty == A.BOOLEAN:
        return False
    return None


def _strip(e: A.Expr) -> A.Expr:
    """Look through coercions and helper wrappers to the expression written by the user."""
    while True:
        if isinstance(e, (A.Box, A.Unbox)):
            e = e.expr
        elif isinstance(e, A.Call) and e.kind == "helper":
            e = e.args[0]
        else:
            return e


def role_of(e: A.Expr) -> str:
    e = _strip(e)
    if isinstance(e, A.Var):
        return e.binding or "local"
    if isinstance(e, A.FieldAccess):
        return "field"
    return "expression"


def source_of(e: A.Expr) -> str:
    e = _strip(e)
    if isinstance(e, A.NullLit):
        return "literal"
    if isinstance(e, A.Var):
        return e.binding or "local"
    if isinstance(e, A.FieldAccess):
        return "field"
    if isinstance(e, A.Call):
        return "call"
    if isinstance(e, A.ExternCall):
        return "extern"
    if isinstance(e, A.New):
        return "new"
    return "expression"


def label_of(e: A.Expr) -> str:
    e = _strip(e)
    if isinstance(e, (A.Var, A.FieldAccess)):
        return e.name
    if isinstance(e, A.This):
        return "this"
    return expr_text(e)


def _types(params) -> str:
    return ", ".join(p.type for p in params)


def method_signature(m: A.MethodDecl) -> str:
    return f"{m.owner}.{m.name}({_types(m.params)})"


def signature_of(e: A.Expr) -> str:
    e = _strip(e)
    if isinstance(e, A.NullLit):
        return "null"
    if isinstance(e, (A.Var, A.FieldAccess)):
        return f"{e.type} {e.name}"
    if isinstance(e, A.This):
        return f"{e.type} this"
    if isinstance(e, A.Call) and e.method is not None:
        return f"{e.target}.{e.name}({_types(e.method.params)})"
    if isinstance(e, A.ExternCall):
        return f"lib.{e.name}({_types(e.decl.params)})"
    if isinstance(e, A.New):
        return f"new {e.cls}({_types(e.ctor.params) if e.ctor else ''})"
    return expr_text(e)


def _java_div(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


class Interpreter:
    def __init__(self, program: A.Program, max_steps: int = 5_000_000, max_depth: int = 400):
        if not program.resolved:
            program = resolve(program)
        self.p = program
        self.table = program.table
        self.instrumented = program.instrumented
        self.max_steps = max_steps
        self.max_depth = max_depth
        self.log = ev.EventLog(program_id=program.filename, mode=INSTRUMENTED if self.instrumented else ORIGINAL)
        self.output: list[str] = []
        self.frames: list[_Frame] = []
        self.steps = 0
        self.next_oid = 0
        self.link_seq = 0
        self.extern_saw_ghost = False
        self._dispatch: dict = {}
        self._tags: dict[int, tuple] = {}
        self._eval = {
            A.NullLit: lambda e: None,
            A.IntLit: lambda e: e.value,
            A.BoolLit: lambda e: e.value,
            A.StrLit: lambda e: e.value,
            A.This: lambda e: self.frames[-1].this,
            A.Var: lambda e: self.frames[-1].locals[e.name],
            A.FieldAccess: self.e_field,
            A.Call: self.e_call,
            A.ExternCall: self.e_extern,
            A.New: self.e_new,
            A.Binary: self.e_binary,
            A.Unary: self.e_unary,
            A.InstanceOf: self.e_instanceof,
            A.Unbox: self.e_unbox,
            A.Box: lambda e: BoxedInt(self.eval(e.expr)),
        }

    # ------------------------------------------------------------- driver

    def run(self) -> RunResult:
        old_limit = sys.getrecursionlimit()
        sys.setrecursionlimit(max(old_limit, 40 * self.max_depth + 1000))
        start = time.perf_counter()
        result = RunResult("normal", self.log)
        try:
            result.value = self.call_entry()
        except NPESignal as exc:
            result.outcome, result.report = "npe", exc.report
        except ProgramError as exc:
            result.outcome, result.error = "error", str(exc)
        except RecursionError:
            result.outcome, result.error = "error", "StackOverflowError"
        finally:
            sys.setrecursionlimit(old_limit)
        result.wall_time = time.perf_counter() - start
        result.output = self.output
        result.extern_saw_ghost = self.extern_saw_ghost
        return result

    def call_entry(self):
        cls = self.p.cls(self.p.entry_class)
        main = cls.method(self.p.entry)
        this = None if main.static else self.construct(cls.name, [])
        return self.invoke(main, this, [])

    # ------------------------------------------------------------ helpers

    def stack(self) -> tuple[Frame, ...]:
        return tuple(Frame(f.name, f.file, f.line) for f in reversed(self.frames))

    def link(self, kind: LinkKind, loc: A.Location, variable=None, sig=None, role=None, source=None, extern=False):
        self.link_seq += 1
        return CausalLink(kind, loc, variable, sig, THREAD, self.stack(), role, source, extern, self.link_seq)

    def alloc(self, cls: str) -> Obj:
        self.next_oid += 1
        return Obj(cls, {}, self.next_oid)

    def lookup(self, cls: str, name: str) -> A.MethodDecl:
        key = (cls, name)
        m = self._dispatch.get(key)
        if m is None:
            m = self._dispatch[key] = self.table.method(cls, name)
        return m

    def fail(self, v, site: A.Expr, loc: A.Location, kind: LinkKind, sig: Optional[str] = None):
        """Raise the NPE for dereferencing or unboxing ``v`` (null, ghost or empty box)."""
        self.frames[-1].line = loc.line
        var, role = label_of(site), role_of(site)
        symptom = Symptom(loc, var, role, self.stack())
        if isinstance(v, Ghost):
            v.trace.links.append(self.link(kind, loc, var, sig, role, source_of(site)))
            raise GhostNPE(NPEReport(symptom, v.trace.copy()))
        if self.instrumented:
            # the null never passed an instrumented site
            trace = CausalityTrace([self.link(kind, loc, var, sig, role, source_of(site))], symptom_only=True)
            raise GhostNPE(NPEReport(symptom, trace))
        raise NPESignal(NPEReport(symptom))

    # --------------------------------------------------------- invocation

    def invoke(self, m: A.MethodDecl, this, args: list, from_extern: bool = False):
        if len(self.frames) >= self.max_depth:
            raise ProgramError("StackOverflowError")
        frame = _Frame(f"{m.owner}.{m.name}", m.loc.file, m.loc.line, this, m, from_extern)
        for prm, a in zip(m.params, args):
            frame.locals[prm.name] = a
        qual = f"{m.owner}#{m.name}"
        self.log.record(ev.CALL, qual, "(" + ", ".join(render(a) for a in args) + ")")
        self.frames.append(frame)
        try:
            r = self.block(m.body)
        except NPESignal:
            self.frames.pop()
            self.log.record(ev.RETURN, qual, ev.EXCEPTIONAL)
            raise
        except Exception:
            self.frames.pop()
            self.log.record(ev.RETURN, qual, "!error")
            raise
        self.frames.pop()
        value = VOID if r is None else r.value
        self.log.record(ev.RETURN, qual, render(value))
        return value

    def construct(self, cls: str, args: list) -> Obj:
        obj = self.alloc(cls)
        for f in self.table.all_fields(cls):
            obj.fields[f.name] = default_value(f.type)
        self.init_level(cls, obj, args)
        return obj

    def init_level(self, cls: str, obj: Obj, args: list):
        """Run the initializers and constructor of one class of ``obj``'s chain.

        Superclass levels run first, with no arguments, like an implicit
        ``super()``.
        """
        decl = self.p.cls(cls)
        if decl is None:
            return
        if len(self.frames) >= self.max_depth:
            raise ProgramError("StackOverflowError")
        ctor = decl.ctor
        frame = _Frame(f"{cls}.<init>", decl.loc.file, (ctor or decl).loc.line, obj, ctor)
        qual = f"{cls}#<init>"
        self.log.record(ev.CALL, qual, "(" + ", ".join(render(a) for a in args) + ")")
        self.frames.append(frame)
        try:
            if decl.superclass is not None:
                self.init_level(decl.superclass, obj, [])
            for f in decl.fields:
                if f.init is not None:
                    frame.line = f.loc.line
                    obj.fields[f.name] = self.eval(f.init)
            if ctor is not None:
                frame.line = ctor.loc.line
                for prm, a in zip(ctor.params, args):
                    frame.locals[prm.name] = a
                self.block(ctor.body)
        except NPESignal:
            self.frames.pop()
            self.log.record(ev.RETURN, qual, ev.EXCEPTIONAL)
            raise
        except Exception:
            self.frames.pop()
            self.log.record(ev.RETURN, qual, "!error")
            raise
        self.frames.pop()
        self.log.record(ev.RETURN, qual, "void")

    # ---------------------------------------------------------- statements

    def block(self, stmts: list[A.Stmt]) -> Optional[_Ret]:
        for s in stmts:
            r = self.stmt(s)
            if r is not None:
                return r
        return None

    def stmt(self, s: A.Stmt) -> Optional[_Ret]:
        self.steps += 1
        if self.steps > self.max_steps:
            raise ProgramError("step limit exceeded")
        frame = self.frames[-1]
        frame.line = s.loc.line
        t = type(s)
        if t is A.VarDecl:
            frame.locals[s.name] = default_value(s.type) if s.init is None else self.eval(s.init)
        elif t is A.Assign:
            tgt = s.target
            if type(tgt) is A.Var:
                frame.locals[tgt.name] = self.eval(s.value)
            else:
                obj = self.eval(tgt.obj)
                if not isinstance(obj, Obj):
                    self.fail(obj, tgt.obj, tgt.loc, LinkKind.DEREF)
                value = self.eval(s.value)
                obj.fields[tgt.name] = value
        elif t is A.ExprStmt:
            self.eval(s.expr)
        elif t is A.Return:
            return _Ret(VOID if s.value is None else self.eval(s.value))
        elif t is A.If:
            if self.eval(s.cond):
                return self.block(s.then)
            if s.orelse is not None:
                return self.block(s.orelse)
        elif t is A.While:
            while self.eval(s.cond):
                r = self.block(s.body)
                if r is not None:
                    return r
                self.steps += 1
                if self.steps > self.max_steps:
                    raise ProgramError("step limit exceeded")
                frame.line = s.loc.line
        elif t is A.TryCatch:
            depth = len(self.frames)
            try:
                return self.block(s.body)
            except NPESignal as exc:
                del self.frames[depth:]
                if s.var is not None:
                    if exc.exc_obj is None:
                        exc.exc_obj = self.alloc(A.NPE_CLASS)
                    frame.locals[s.var] = exc.exc_obj
                return self.block(s.handler)
        elif t is A.Throw:
            v = self.eval(s.expr)
            if not isinstance(v, Obj):
                self.fail(v, s.expr, s.loc, LinkKind.DEREF)
            raise NPESignal(NPEReport(Symptom(s.loc, None, "thrown", self.stack())), v)
        else:
            raise TypeError(f"unknown statement {t.__name__}")
        return None

    # --------------------------------------------------------- expressions

    def eval(self, e: A.Expr):
        return self._eval[type(e)](e)

    def e_field(self, e: A.FieldAccess):
        obj = self.eval(e.obj)
        if type(obj) is not Obj:
            self.fail(obj, e.obj, e.loc, LinkKind.DEREF)
        return obj.fields[e.name]

    def e_call(self, e: A.Call):
        kind = e.kind
        if kind == "helper":
            return self.helper(e)
        if kind == "builtin":
            v = self.eval(e.args[0])
            text = render(v)
            self.log.record(ev.CALL, f"{BUILTIN_CLASS}#print", f"({text})")
            self.output.append(text)
            self.log.record(ev.RETURN, f"{BUILTIN_CLASS}#print", "void")
            return VOID
        frame = self.frames[-1]
        if kind == "static":
            args = [self.eval(a) for a in e.args]
            frame.line = e.loc.line
            return self.invoke(e.method, None, args)
        recv = frame.this if e.receiver is None else self.eval(e.receiver)
        args = [self.eval(a) for a in e.args]
        frame.line = e.loc.line
        if type(recv) is not Obj:
            sig = f"{e.target}.{e.name}({_types(e.method.params)})"
            self.fail(recv, e.receiver, e.loc, LinkKind.DEREF, sig)
        return self.invoke(self.lookup(recv.cls, e.name), recv, args)

    def e_extern(self, e: A.ExternCall):
        args = [self.eval(a) for a in e.args]
        decl = e.decl
        if any(isinstance(a, Ghost) for a in args):
            self.extern_saw_ghost = True
        frame = self.frames[-1]
        frame.line = e.loc.line
        qual = f"lib#{decl.name}"
        self.log.record(ev.CALL, qual, "(" + ", ".join(render(a) for a in args) + ")")
        self.frames.append(_Frame(f"lib.{decl.name}", decl.loc.file, decl.loc.line))
        try:
            result = self.stub(decl, args)
        except NPESignal:
            self.frames.pop()
            self.log.record(ev.RETURN, qual, ev.EXCEPTIONAL)
            raise
        except Exception:
            self.frames.pop()
            self.log.record(ev.RETURN, qual, "!error")
            raise
        self.frames.pop()
        self.log.record(ev.RETURN, qual, render(result))
        return result

    def stub(self, decl: A.ExternDecl, args: list):
        kind = decl.stub
        if kind == "returns_null":
            return None
        if kind == "echo":
            return args[0]
        if kind == "returns_fresh":
            if decl.return_type == A.INTBOX:
                return BoxedInt(None)
            obj = self.alloc(decl.return_type)
            for f in self.table.all_fields(decl.return_type):
                obj.fields[f.name] = default_value(f.type)
            return obj
        # callback: invoke the named method on the first argument with null arguments
        target = args[0]
        if type(target) is Obj:
            m = self.lookup(target.cls, decl.callback)
            self.invoke(m, target, [default_value(p.type) for p in m.params], from_extern=True)
        return VOID

    def e_new(self, e: A.New):
        args = [self.eval(a) for a in e.args]
        self.frames[-1].line = e.loc.line
        return self.construct(e.cls, args)

    def e_binary(self, e: A.Binary):
        op = e.op
        if op == "&&":
            return bool(self.eval(e.left)) and bool(self.eval(e.right))
        if op == "||":
            return bool(self.eval(e.left)) or bool(self.eval(e.right))
        a = self.eval(e.left)
        b = self.eval(e.right)
        if op == "==":
            return a is b if e.operand_type == "ref" else a == b
        if op == "!=":
            return a is not b if e.operand_type == "ref" else a != b
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            if b == 0:
                raise ProgramError("ArithmeticException: / by zero")
            return _java_div(a, b)
        if op == "%":
            if b == 0:
                raise ProgramError("ArithmeticException: % by zero")
            return a - b * _java_div(a, b)
        if op == "<":
            return a < b
        if op == "<=":
            return a <= b
        if op == ">":
            return a > b
        if op == ">=":
            return a >= b
        raise TypeError(f"unknown operator {op}")

    def e_unary(self, e: A.Unary):
        v = self.eval(e.operand)
        return (not v) if e.op == "!" else -v

    def e_instanceof(self, e: A.InstanceOf):
        v = self.eval(e.expr)
        if e.cls == A.NULL_GHOST:
            return isinstance(v, Ghost)
        if v is None:
            return False
        if isinstance(v, Ghost):
            # a ghost is an instance of the class it haunts
            return self.table.is_subclass(v.haunted, e.cls)
        cls = A.INTBOX if isinstance(v, BoxedInt) else v.cls
        return self.table.is_subclass(cls, e.cls)

    def e_unbox(self, e: A.Unbox):
        v = self.eval(e.expr)
        if isinstance(v, BoxedInt) and v.value is not None:
            return v.value
        self.fail(v, e.expr, e.loc, LinkKind.UNBOX)

    # -------------------------------------------------- null-detection helpers

    def tag(self, e: A.Call) -> tuple[str, A.Location]:
        t = self._tags.get(id(e))
        if t is None:
            t = self._tags[id(e)] = parse_tag(e.args[1].value)
        return t

    def helper(self, e: A.Call):
        arg = e.args[0]
        x = self.eval(arg)
        qual = f"{ev.HELPER_CLASS}#{e.name}"
        self.log.record(ev.CALL, qual, f"({render(x)})")
        try:
            result = getattr(self, "h_" + e.name)(x, e, arg)
        except NPESignal:
            self.log.record(ev.RETURN, qual, ev.EXCEPTIONAL)
            raise
        self.log.record(ev.RETURN, qual, render(result))
        return result

    def _propagate(self, x, e: A.Call, arg: A.Expr, kind: LinkKind, role: str, sig: Optional[str]):
        if isinstance(x, Ghost):
            var, loc = self.tag(e)
            x.trace.links.append(self.link(kind, loc, var, sig, role, source_of(arg)))
            return x
        if x is not None:
            return x
        var, loc = self.tag(e)
        trace = CausalityTrace()
        inner = _strip(arg)
        if isinstance(inner, A.NullLit):
            trace.links.append(self.link(LinkKind.LITERAL, loc, var, "null", role, "literal"))
            extern = False
        elif isinstance(inner, A.ExternCall):
            trace.links.append(
                self.link(LinkKind.RETURN, loc, f"lib.{inner.name}", signature_of(inner), "extern", "extern", True)
            )
            extern = False
        else:
            # a null that arrived from outside the instrumented code
            extern = True
        trace.links.append(self.link(kind, loc, var, sig, role, source_of(arg), extern))
        return Ghost(e.haunt or A.OBJECT, trace)

    def h_nullAssign(self, x, e, arg):
        return self._propagate(x, e, arg, LinkKind.ASSIGN, e.role or "local", signature_of(arg))

    def h_nullParam(self, x, e, arg):
        return self._propagate(x, e, arg, LinkKind.INVOKE, "parameter", signature_of(arg))

    def h_nullPassed(self, x, e, arg):
        if isinstance(x, Ghost) and x.trace.links:
            # binding an argument at a call site is stored entry-first
            prev = x.trace.links[-1]
            var, loc = self.tag(e)
            entry = self.link(LinkKind.ENTRY, loc, var, signature_of(arg), "parameter", source_of(arg))
            if prev.kind is LinkKind.INVOKE and same_call(prev, entry):
                x.trace.links.insert(-1, replace(entry, seq=prev.seq))
            else:
                x.trace.links.append(entry)
            return x
        return self._propagate(x, e, arg, LinkKind.ENTRY, "parameter", signature_of(arg))

    def h_nullReturn(self, x, e, arg):
        m = self.frames[-1].method
        sig = method_signature(m) if m is not None else None
        return self._propagate(x, e, arg, LinkKind.RETURN, "method", sig)

    def h_exorcise(self, x, e, arg):
        if isinstance(x, Ghost):
            var, loc = self.tag(e)
            x.trace.links.append(self.link(LinkKind.EXTERN, loc, var, signature_of(arg), "extern", source_of(arg), True))
            return None
        return x

    def h_nullUnbox(self, x, e, arg):
        if isinstance(x, BoxedInt) and x.value is not None:
            return x.value
        _, loc = self.tag(e)
        self.fail(x, arg, loc, LinkKind.UNBOX)

    def h_nullDeref(self, x, e, arg):
        if type(x) is Obj or isinstance(x, BoxedInt):
            return x
        _, loc = self.tag(e)
        self.fail(x, arg, loc, LinkKind.DEREF)


def interpret(program: A.Program, mode: Optional[str] = None, **limits) -> RunResult:
    """Run ``program``; ``mode`` defaults to what the program's marker says."""
    if not program.resolved:
        program = resolve(program)
    if mode is None:
        mode = INSTRUMENTED if program.instrumented else ORIGINAL
    if mode == INSTRUMENTED and not program.instrumented:
        raise ValueError("instrumented mode needs a transformed program")
    if mode == ORIGINAL and program.instrumented:
        raise ValueError("original mode needs an uninstrumented program")
    return Interpreter(program, **limits).run()


def eval_expr(program: A.Program, expr: A.Expr, env: dict, this=None):
    """Evaluate one resolved expression of ``program`` with local bindings ``env``."""
    it = Interpreter(program)
    frame = _Frame("<eval>.<eval>", program.filename, expr.loc.line, this)
    frame.locals.update(env)
    it.frames.append(frame)
    return it.eval(expr)
