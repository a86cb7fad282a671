"""Name binding and nominal type checking for MiniLang.

``resolve`` works on a deep copy, annotates every expression with its static
type, binds variables, method calls and field accesses, and makes the
IntBox <-> int coercions explicit as ``Box``/``Unbox`` nodes. The first error
in source order is reported.
"""

from __future__ import annotations

import copy
from typing import Optional

from ..errors import ResolveError
from . import ast as A

HELPERS = (
    "nullAssign",
    "nullParam",
    "nullPassed",
    "nullReturn",
    "exorcise",
    "nullUnbox",
    "nullDeref",
)
BUILTINS = ("print",)

_BUILTIN_CLASSES = {
    A.OBJECT: None,
    A.INTBOX: A.OBJECT,
    A.NPE_CLASS: A.OBJECT,
}


class ClassTable:
    def __init__(self, program: A.Program):
        self.decls: dict[str, A.ClassDecl] = {c.name: c for c in program.classes}

    def exists(self, name: str) -> bool:
        return name in self.decls or name in _BUILTIN_CLASSES

    def superclass(self, name: str) -> Optional[str]:
        if name in self.decls:
            return self.decls[name].superclass or A.OBJECT
        return _BUILTIN_CLASSES.get(name)

    def chain(self, name: str) -> list[str]:
        """``name`` followed by its ancestors, up to Object."""
        out = []
        while name is not None:
            out.append(name)
            name = self.superclass(name)
        return out

    def is_subclass(self, sub: str, sup: str) -> bool:
        return sup in self.chain(sub)

    def field(self, cls: str, name: str) -> Optional[A.FieldDecl]:
        for c in self.chain(cls):
            decl = self.decls.get(c)
            if decl is not None:
                for f in decl.fields:
                    if f.name == name:
                        return f
        return None

    def all_fields(self, cls: str) -> list[A.FieldDecl]:
        """Fields of ``cls`` including inherited ones, root class first."""
        out = []
        for c in reversed(self.chain(cls)):
            decl = self.decls.get(c)
            if decl is not None:
                out.extend(decl.fields)
        return out

    def method(self, cls: str, name: str) -> Optional[A.MethodDecl]:
        for c in self.chain(cls):
            decl = self.decls.get(c)
            if decl is not None:
                m = decl.method(name)
                if m is not None and not m.is_ctor:
                    return m
        return None


def is_ref(t: Optional[str]) -> bool:
    return t is not None and t not in A.PRIMITIVES and t != A.VOID


def is_pure(e: A.Expr) -> bool:
    """Side-effect free: safe to evaluate twice."""
    if isinstance(e, (A.Var, A.This, A.NullLit, A.IntLit, A.BoolLit, A.StrLit)):
        return True
    if isinstance(e, A.FieldAccess):
        return is_pure(e.obj)
    if isinstance(e, (A.Box, A.Unbox)):
        return is_pure(e.expr)
    if isinstance(e, A.Call) and e.receiver is None and e.name in HELPERS:
        return all(is_pure(a) for a in e.args)
    return False


class _Scope:
    def __init__(self):
        self.frames: list[dict[str, tuple[str, str, bool]]] = [{}]

    def push(self):
        self.frames.append({})

    def pop(self):
        self.frames.pop()

    def declare(self, name, ty, binding, final, loc):
        if self.lookup(name) is not None:
            raise ResolveError(f"variable {name!r} is already defined", loc)
        self.frames[-1][name] = (ty, binding, final)

    def lookup(self, name):
        for frame in reversed(self.frames):
            if name in frame:
                return frame[name]
        return None


class Resolver:
    def __init__(self, program: A.Program):
        self.p = program
        self.t = ClassTable(program)
        self.cls: Optional[A.ClassDecl] = None
        self.method: Optional[A.MethodDecl] = None
        self.static = False
        self.scope = _Scope()

    # ------------------------------------------------------------ helpers

    def check_type(self, ty: str, loc, allow_void: bool = False):
        if ty in A.PRIMITIVES or (allow_void and ty == A.VOID):
            return
        if ty == A.VOID:
            raise ResolveError("'void' is only valid as a return type", loc)
        if not self.t.exists(ty):
            raise ResolveError(f"unknown type {ty!r}", loc)

    def assignable(self, src: str, dst: str) -> Optional[str]:
        """Coercion needed to use a ``src`` value as ``dst``: "", "box", "unbox" or None."""
        if src == dst:
            return ""
        if dst in A.PRIMITIVES:
            if dst == A.INT and src == A.INTBOX:
                return "unbox"
            return None
        if dst == A.VOID:
            return None
        if src == A.NULL_TYPE:
            return ""
        if dst == A.INTBOX and src == A.INT:
            return "box"
        if src == A.INT and dst == A.OBJECT:
            return None
        if is_ref(src) and self.t.exists(src) and self.t.is_subclass(src, dst):
            return ""
        return None

    def coerce(self, e: A.Expr, dst: str, loc, what: str) -> A.Expr:
        how = self.assignable(e.type, dst)
        if how is None:
            raise ResolveError(f"{what}: cannot use {_show(e.type)} as {dst}", loc)
        if how == "unbox":
            return A.Unbox(e, loc=e.loc)
        if how == "box":
            return A.Box(e, loc=e.loc)
        return e

    def to_int(self, e: A.Expr, loc, what: str) -> A.Expr:
        return self.coerce(e, A.INT, loc, what)

    def to_bool(self, e: A.Expr, loc, what: str) -> A.Expr:
        return self.coerce(e, A.BOOLEAN, loc, what)

    # --------------------------------------------------------- declarations

    def run(self) -> A.Program:
        p = self.p
        seen = set()
        for ext in p.externs:
            if ext.name in seen:
                raise ResolveError(f"duplicate extern {ext.name!r}", ext.loc)
            seen.add(ext.name)
        seen = set()
        for c in p.classes:
            if c.name in seen or c.name in _BUILTIN_CLASSES or c.name == A.NULL_GHOST:
                raise ResolveError(f"duplicate class {c.name!r}", c.loc)
            seen.add(c.name)
        for c in p.classes:
            self.check_class_header(c)
        for c in p.classes:
            sup = self.t.decls.get(c.superclass)
            if sup is not None and sup.ctor is not None and sup.ctor.params:
                # superclass constructors run implicitly, without arguments
                raise ResolveError(f"constructor of superclass {sup.name!r} takes parameters", c.loc)
        for ext in p.externs:
            self.check_extern(ext)
        self.find_entry()
        for c in p.classes:
            self.cls = c
            for f in c.fields:
                self.field_init(c, f)
            for m in c.methods:
                self.method_body(c, m)
        self.cls = None
        p.table = self.t
        p.resolved = True
        return p

    def check_class_header(self, c: A.ClassDecl):
        if c.superclass is not None:
            if c.superclass not in self.t.decls and c.superclass != A.OBJECT:
                raise ResolveError(f"unknown superclass {c.superclass!r}", c.loc)
            seen = {c.name}
            s = c.superclass
            while s in self.t.decls:
                if s in seen:
                    raise ResolveError(f"inheritance cycle through {c.name!r}", c.loc)
                seen.add(s)
                s = self.t.decls[s].superclass
        names = set()
        for f in c.fields:
            f.owner = c.name
            self.check_type(f.type, f.loc)
            if f.name in names:
                raise ResolveError(f"duplicate field {f.name!r}", f.loc)
            names.add(f.name)
            sup = self.t.superclass(c.name)
            if sup is not None and self.t.field(sup, f.name) is not None:
                raise ResolveError(f"field {f.name!r} hides an inherited field", f.loc)
        names = set()
        for m in c.methods:
            m.owner = c.name
            if m.name in names:
                what = "constructor" if m.is_ctor else f"method {m.name!r}"
                raise ResolveError(f"duplicate {what} (overloading is not supported)", m.loc)
            names.add(m.name)
            self.check_type(m.return_type, m.loc, allow_void=True)
            pnames = set()
            for prm in m.params:
                self.check_type(prm.type, prm.loc)
                if prm.name in pnames:
                    raise ResolveError(f"duplicate parameter {prm.name!r}", prm.loc)
                pnames.add(prm.name)
            if m.is_ctor:
                continue
            sup = self.t.superclass(c.name)
            inherited = self.t.method(sup, m.name) if sup is not None else None
            if inherited is not None:
                if (
                    inherited.static != m.static
                    or inherited.return_type != m.return_type
                    or [q.type for q in inherited.params] != [q.type for q in m.params]
                ):
                    raise ResolveError(f"method {m.name!r} overrides with a different signature", m.loc)

    def check_extern(self, ext: A.ExternDecl):
        self.check_type(ext.return_type, ext.loc, allow_void=True)
        for prm in ext.params:
            self.check_type(prm.type, prm.loc)
        ret = ext.return_type
        if ext.stub in ("returns_null", "returns_fresh") and not is_ref(ret):
            raise ResolveError(f"stub {ext.stub} needs a reference return type", ext.loc)
        if ext.stub == "echo":
            if not ext.params or self.assignable(ext.params[0].type, ret) != "":
                raise ResolveError("echo stub must return its first parameter's type", ext.loc)
        if ext.stub == "callback":
            if ret != A.VOID:
                raise ResolveError("callback stub must return void", ext.loc)
            if not ext.params or ext.params[0].type not in self.t.decls:
                raise ResolveError("callback stub needs a class-typed first parameter", ext.loc)
            target = self.t.method(ext.params[0].type, ext.callback)
            if target is None or target.static:
                raise ResolveError(
                    f"class {ext.params[0].type!r} has no instance method {ext.callback!r}", ext.loc
                )

    def find_entry(self):
        found = [
            (c, m)
            for c in self.p.classes
            for m in c.methods
            if m.name == self.p.entry and not m.params
        ]
        if len(found) != 1:
            loc = found[1][1].loc if len(found) > 1 else A.Location(self.p.filename, 1)
            raise ResolveError(
                f"expected exactly one zero-argument '{self.p.entry}' method, found {len(found)}", loc
            )
        c, m = found[0]
        if not m.static and c.ctor is not None and c.ctor.params:
            raise ResolveError("entry class needs a zero-argument constructor", m.loc)
        self.p.entry_class = c.name

    # ------------------------------------------------------------- bodies

    def field_init(self, c: A.ClassDecl, f: A.FieldDecl):
        if f.init is None:
            return
        self.method, self.static = None, False
        self.scope = _Scope()
        f.init = self.coerce(self.expr(f.init, f.type), f.type, f.loc, f"field {f.name!r}")
        _mark_role(f.init, "field")

    def method_body(self, c: A.ClassDecl, m: A.MethodDecl):
        self.method, self.static = m, m.static
        self.scope = _Scope()
        for prm in m.params:
            self.scope.declare(prm.name, prm.type, "parameter", prm.final, prm.loc)
        self.scope.push()
        m.body = self.block(m.body)
        self.method = None

    def block(self, stmts: list[A.Stmt]) -> list[A.Stmt]:
        self.scope.push()
        try:
            return [self.stmt(s) for s in stmts]
        finally:
            self.scope.pop()

    def stmt(self, s: A.Stmt) -> A.Stmt:
        if isinstance(s, A.VarDecl):
            self.check_type(s.type, s.loc)
            if s.init is not None:
                s.init = self.coerce(self.expr(s.init, s.type), s.type, s.loc, f"variable {s.name!r}")
            passed = isinstance(s.init, A.Call) and s.init.kind == "helper" and s.init.name == "nullPassed"
            s.binding = "parameter" if passed else "local"
            _mark_role(s.init, s.binding)
            self.scope.declare(s.name, s.type, s.binding, passed, s.loc)
            return s
        if isinstance(s, A.Assign):
            tgt = s.target
            if isinstance(tgt, A.Var):
                info = self.scope.lookup(tgt.name)
                if info is None:
                    raise ResolveError(self._undeclared(tgt.name), tgt.loc)
                if info[2]:
                    raise ResolveError(f"cannot assign to final parameter {tgt.name!r}", s.loc)
                tgt.type, tgt.binding = info[0], info[1]
            else:
                s.target = self.expr(tgt)
            s.value = self.coerce(self.expr(s.value, s.target.type), s.target.type, s.loc, "assignment")
            _mark_role(s.value, "field" if isinstance(s.target, A.FieldAccess) else s.target.binding)
            return s
        if isinstance(s, A.ExprStmt):
            if not isinstance(s.expr, (A.Call, A.ExternCall, A.New)):
                raise ResolveError("not a statement", s.loc)
            s.expr = self.expr(s.expr)
            return s
        if isinstance(s, A.Return):
            rt = self.method.return_type if self.method is not None else A.VOID
            if s.value is None:
                if rt != A.VOID:
                    raise ResolveError("missing return value", s.loc)
            else:
                if rt == A.VOID:
                    raise ResolveError("void method cannot return a value", s.loc)
                s.value = self.coerce(self.expr(s.value, rt), rt, s.loc, "return")
                _mark_role(s.value, "method")
            return s
        if isinstance(s, A.If):
            s.cond = self.to_bool(self.expr(s.cond), s.loc, "if condition")
            s.then = self.block(s.then)
            if s.orelse is not None:
                s.orelse = self.block(s.orelse)
            return s
        if isinstance(s, A.While):
            s.cond = self.to_bool(self.expr(s.cond), s.loc, "while condition")
            s.body = self.block(s.body)
            return s
        if isinstance(s, A.TryCatch):
            s.body = self.block(s.body)
            self.scope.push()
            if s.var is not None:
                self.scope.declare(s.var, A.NPE_CLASS, "local", False, s.loc)
            s.handler = self.block(s.handler)
            self.scope.pop()
            return s
        if isinstance(s, A.Throw):
            s.expr = self.expr(s.expr)
            if s.expr.type != A.NPE_CLASS:
                raise ResolveError("only NullPointerException can be thrown", s.loc)
            return s
        raise ResolveError(f"unknown statement {type(s).__name__}", s.loc)

    def _undeclared(self, name: str) -> str:
        if self.cls is not None and self.t.field(self.cls.name, name) is not None:
            return f"undeclared variable {name!r} (fields are accessed as this.{name})"
        return f"undeclared variable {name!r}"

    # --------------------------------------------------------- expressions

    def expr(self, e: A.Expr, expected: Optional[str] = None) -> A.Expr:
        method = getattr(self, "e_" + type(e).__name__)
        return method(e, expected)

    def e_NullLit(self, e, expected):
        e.type = A.NULL_TYPE
        return e

    def e_IntLit(self, e, expected):
        e.type = A.INT
        return e

    def e_BoolLit(self, e, expected):
        e.type = A.BOOLEAN
        return e

    def e_StrLit(self, e, expected):
        raise ResolveError("string literals are only allowed as helper position tags", e.loc)

    def e_This(self, e, expected):
        if self.static or self.cls is None:
            raise ResolveError("'this' in a static context", e.loc)
        e.type = self.cls.name
        return e

    def e_Var(self, e, expected):
        info = self.scope.lookup(e.name)
        if info is None:
            raise ResolveError(self._undeclared(e.name), e.loc)
        e.type, e.binding = info[0], info[1]
        return e

    def e_FieldAccess(self, e, expected):
        if isinstance(e.obj, A.Var) and self.scope.lookup(e.obj.name) is None and self.t.exists(e.obj.name):
            raise ResolveError("static fields are not supported", e.loc)
        e.obj = self.expr(e.obj)
        ot = e.obj.type
        if ot not in self.t.decls:
            raise ResolveError(f"cannot access field {e.name!r} of {_show(ot)}", e.loc)
        f = self.t.field(ot, e.name)
        if f is None:
            raise ResolveError(f"class {ot!r} has no field {e.name!r}", e.loc)
        e.type, e.owner = f.type, f.owner
        return e

    def args(self, args, params, loc, what: str, role: str = "parameter") -> list[A.Expr]:
        if len(args) != len(params):
            raise ResolveError(f"{what} expects {len(params)} argument(s), got {len(args)}", loc)
        out = [
            self.coerce(self.expr(a, prm.type), prm.type, loc, f"argument {prm.name!r} of {what}")
            for a, prm in zip(args, params)
        ]
        for a in out:
            _mark_role(a, role)
        return out

    def e_Call(self, e: A.Call, expected):
        if e.receiver is None and e.name in HELPERS:
            return self.helper(e, expected)
        if e.receiver is None and e.name in BUILTINS:
            if len(e.args) != 1:
                raise ResolveError("print expects one argument", e.loc)
            e.args = [self.expr(e.args[0])]
            if e.args[0].type == A.VOID:
                raise ResolveError("cannot print a void value", e.loc)
            e.kind, e.type = "builtin", A.VOID
            return e
        if e.receiver is None:
            cls = self.cls.name if self.cls is not None else None
            m = self.t.method(cls, e.name) if cls else None
            if m is None:
                raise ResolveError(f"unknown method {e.name!r}", e.loc)
            if not m.static and self.static:
                raise ResolveError(f"instance method {e.name!r} called from a static context", e.loc)
            e.kind = "static" if m.static else "instance"
        elif (
            isinstance(e.receiver, A.Var)
            and self.scope.lookup(e.receiver.name) is None
            and e.receiver.name in self.t.decls
        ):
            cls = e.receiver.name
            m = self.t.method(cls, e.name)
            if m is None or not m.static:
                raise ResolveError(f"class {cls!r} has no static method {e.name!r}", e.loc)
            e.kind = "static"
        else:
            e.receiver = self.expr(e.receiver)
            cls = e.receiver.type
            if cls not in self.t.decls:
                raise ResolveError(f"cannot call {e.name!r} on {_show(cls)}", e.loc)
            m = self.t.method(cls, e.name)
            if m is None:
                raise ResolveError(f"class {cls!r} has no method {e.name!r}", e.loc)
            if m.static:
                raise ResolveError(f"static method {e.name!r} called on an instance", e.loc)
            e.kind = "instance"
        e.target, e.method = cls, m
        e.args = self.args(e.args, m.params, e.loc, f"{cls}.{e.name}")
        e.type = m.return_type
        return e

    def helper(self, e: A.Call, expected):
        if len(e.args) != 2 or not isinstance(e.args[1], A.StrLit):
            raise ResolveError(f"{e.name} expects (value, \"position\")", e.loc)
        e.kind = "helper"
        e.args[1].type = A.STRING_TYPE
        if e.name == "nullUnbox":
            value = self.expr(e.args[0], A.INTBOX)
            if value.type not in (A.INTBOX, A.NULL_TYPE):
                raise ResolveError("nullUnbox expects an IntBox", e.loc)
            e.args[0] = value
            e.type, e.haunt = A.INT, A.INTBOX
            return e
        want = expected if is_ref(expected) else None
        value = self.expr(e.args[0], want)
        if not is_ref(value.type):
            raise ResolveError(f"{e.name} expects a reference value", e.loc)
        e.args[0] = value
        e.type = want if value.type == A.NULL_TYPE and want else value.type
        e.haunt = e.type if e.type != A.NULL_TYPE else A.OBJECT
        return e

    def e_ExternCall(self, e: A.ExternCall, expected):
        decl = self.p.extern(e.name)
        if decl is None:
            raise ResolveError(f"unknown extern lib.{e.name}", e.loc)
        e.decl = decl
        e.args = self.args(e.args, decl.params, e.loc, f"lib.{e.name}", role="extern")
        e.type = decl.return_type
        return e

    def e_New(self, e: A.New, expected):
        if e.cls in (A.INTBOX, A.NULL_GHOST) or not self.t.exists(e.cls):
            raise ResolveError(f"cannot instantiate {e.cls!r}", e.loc)
        decl = self.t.decls.get(e.cls)
        ctor = decl.ctor if decl is not None else None
        e.ctor = ctor
        e.args = self.args(e.args, ctor.params if ctor else [], e.loc, f"new {e.cls}")
        e.type = e.cls
        return e

    def e_Binary(self, e: A.Binary, expected):
        e.left = self.expr(e.left)
        e.right = self.expr(e.right)
        lt, rt = e.left.type, e.right.type
        op = e.op
        if op in ("+", "-", "*", "/", "%", "<", "<=", ">", ">="):
            e.left = self.to_int(e.left, e.loc, f"operator {op}")
            e.right = self.to_int(e.right, e.loc, f"operator {op}")
            e.operand_type = A.INT
            e.type = A.INT if op in "+-*/%" else A.BOOLEAN
            return e
        if op in ("&&", "||"):
            e.left = self.to_bool(e.left, e.loc, f"operator {op}")
            e.right = self.to_bool(e.right, e.loc, f"operator {op}")
            e.operand_type, e.type = A.BOOLEAN, A.BOOLEAN
            return e
        # == / !=
        e.type = A.BOOLEAN
        numeric = {A.INT, A.INTBOX}
        if (lt == A.INT and rt in numeric) or (rt == A.INT and lt in numeric):
            e.left = self.to_int(e.left, e.loc, f"operator {op}")
            e.right = self.to_int(e.right, e.loc, f"operator {op}")
            e.operand_type = A.INT
            return e
        if lt == A.BOOLEAN and rt == A.BOOLEAN:
            e.operand_type = A.BOOLEAN
            return e
        if is_ref(lt) and is_ref(rt):
            for side in (e.left, e.right):
                if not is_pure(side):
                    raise ResolveError(
                        "reference comparison operands must be variables, fields or null", side.loc
                    )
            e.operand_type = "ref"
            return e
        raise ResolveError(f"cannot compare {_show(lt)} with {_show(rt)}", e.loc)

    def e_Unary(self, e: A.Unary, expected):
        e.operand = self.expr(e.operand)
        if e.op == "!":
            e.operand = self.to_bool(e.operand, e.loc, "operator !")
            e.type = A.BOOLEAN
        else:
            e.operand = self.to_int(e.operand, e.loc, "unary -")
            e.type = A.INT
        return e

    def e_InstanceOf(self, e: A.InstanceOf, expected):
        e.expr = self.expr(e.expr)
        if not is_ref(e.expr.type):
            raise ResolveError("instanceof needs a reference operand", e.loc)
        if not is_pure(e.expr):
            raise ResolveError("instanceof operand must be a variable, field or null", e.loc)
        if e.cls != A.NULL_GHOST and not self.t.exists(e.cls):
            raise ResolveError(f"unknown type {e.cls!r}", e.loc)
        e.type = A.BOOLEAN
        return e

    def e_Unbox(self, e, expected):
        return self.expr(e.expr, expected)

    e_Box = e_Unbox


def _mark_role(e, role):
    # what the variable named in a helper's position tag is
    if isinstance(e, A.Call) and e.kind == "helper" and e.name in _TAGGED:
        e.role = role


_TAGGED = ("nullAssign", "nullParam", "nullPassed", "nullReturn", "exorcise")


def _show(t) -> str:
    return {A.NULL_TYPE: "null", A.STRING_TYPE: "string", None: "?"}.get(t, t)


def resolve(program: A.Program) -> A.Program:
    """Return an annotated deep copy of ``program``; raises ResolveError."""
    p = A.strip_coercions(copy.deepcopy(program))
    return Resolver(p).run()
