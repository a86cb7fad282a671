"""MiniLang syntax tree.

Node equality is structural: source locations and the annotations written by
the resolver are excluded from comparisons, so a reparsed program compares
equal to the one it was printed from.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


def _ann(default=None):
    return field(default=default, compare=False, repr=False)


@dataclass(frozen=True)
class Location:
    file: str
    line: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}"


NOWHERE = Location("<builtin>", 1)

# built-in type names
INT = "int"
BOOLEAN = "boolean"
VOID = "void"
OBJECT = "Object"
INTBOX = "IntBox"
NPE_CLASS = "NullPointerException"
NULL_GHOST = "NullGhost"
NULL_TYPE = "<null>"
STRING_TYPE = "<string>"

PRIMITIVES = frozenset({INT, BOOLEAN})

STUB_KINDS = ("returns_null", "returns_fresh", "echo", "callback")


# ---------------------------------------------------------------- expressions


@dataclass(eq=True)
class Expr:
    pass


@dataclass(eq=True)
class NullLit(Expr):
    loc: Location = _ann(NOWHERE)
    type: Optional[str] = _ann()


@dataclass(eq=True)
class IntLit(Expr):
    value: int
    loc: Location = _ann(NOWHERE)
    type: Optional[str] = _ann()


@dataclass(eq=True)
class BoolLit(Expr):
    value: bool
    loc: Location = _ann(NOWHERE)
    type: Optional[str] = _ann()


@dataclass(eq=True)
class StrLit(Expr):
    """Only legal as the position tag of an injected helper call."""

    value: str
    loc: Location = _ann(NOWHERE)
    type: Optional[str] = _ann()


@dataclass(eq=True)
class This(Expr):
    loc: Location = _ann(NOWHERE)
    type: Optional[str] = _ann()


@dataclass(eq=True)
class Var(Expr):
    name: str
    loc: Location = _ann(NOWHERE)
    type: Optional[str] = _ann()
    binding: Optional[str] = _ann()  # "local" | "parameter"


@dataclass(eq=True)
class FieldAccess(Expr):
    obj: Expr
    name: str
    loc: Location = _ann(NOWHERE)
    type: Optional[str] = _ann()
    owner: Optional[str] = _ann()


@dataclass(eq=True)
class Call(Expr):
    """Method call. ``receiver`` is None for unqualified calls.

    The resolver sets ``kind`` to one of "instance", "static", "helper",
    "builtin"; for static calls written ``C.m()`` the receiver is the
    ``Var`` naming the class.
    """

    receiver: Optional[Expr]
    name: str
    args: list[Expr]
    loc: Location = _ann(NOWHERE)
    type: Optional[str] = _ann()
    kind: Optional[str] = _ann()
    target: Optional[str] = _ann()  # class whose method is statically bound
    method: Optional["MethodDecl"] = _ann()
    haunt: Optional[str] = _ann()  # helpers: class a fresh ghost haunts
    role: Optional[str] = _ann()  # helpers: role of the named variable


@dataclass(eq=True)
class ExternCall(Expr):
    name: str
    args: list[Expr]
    loc: Location = _ann(NOWHERE)
    type: Optional[str] = _ann()
    decl: Optional["ExternDecl"] = _ann()


@dataclass(eq=True)
class New(Expr):
    cls: str
    args: list[Expr]
    loc: Location = _ann(NOWHERE)
    type: Optional[str] = _ann()
    ctor: Optional["MethodDecl"] = _ann()


@dataclass(eq=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr
    loc: Location = _ann(NOWHERE)
    type: Optional[str] = _ann()
    operand_type: Optional[str] = _ann()  # "int" | "boolean" | "ref"


@dataclass(eq=True)
class Unary(Expr):
    op: str
    operand: Expr
    loc: Location = _ann(NOWHERE)
    type: Optional[str] = _ann()


@dataclass(eq=True)
class InstanceOf(Expr):
    expr: Expr
    cls: str
    loc: Location = _ann(NOWHERE)
    type: Optional[str] = _ann()


@dataclass(eq=True)
class Unbox(Expr):
    """IntBox -> int coercion, inserted by the resolver."""

    expr: Expr
    loc: Location = _ann(NOWHERE)
    type: Optional[str] = _ann(INT)


@dataclass(eq=True)
class Box(Expr):
    """int -> IntBox coercion, inserted by the resolver."""

    expr: Expr
    loc: Location = _ann(NOWHERE)
    type: Optional[str] = _ann(INTBOX)


# ----------------------------------------------------------------- statements


@dataclass(eq=True)
class Stmt:
    pass


@dataclass(eq=True)
class VarDecl(Stmt):
    type: str
    name: str
    init: Optional[Expr]
    loc: Location = _ann(NOWHERE)
    binding: Optional[str] = _ann()


@dataclass(eq=True)
class Assign(Stmt):
    target: Union[Var, FieldAccess]
    value: Expr
    loc: Location = _ann(NOWHERE)


@dataclass(eq=True)
class ExprStmt(Stmt):
    expr: Expr
    loc: Location = _ann(NOWHERE)


@dataclass(eq=True)
class Return(Stmt):
    value: Optional[Expr]
    loc: Location = _ann(NOWHERE)


@dataclass(eq=True)
class If(Stmt):
    cond: Expr
    then: list[Stmt]
    orelse: Optional[list[Stmt]]
    loc: Location = _ann(NOWHERE)


@dataclass(eq=True)
class While(Stmt):
    cond: Expr
    body: list[Stmt]
    loc: Location = _ann(NOWHERE)


@dataclass(eq=True)
class TryCatch(Stmt):
    body: list[Stmt]
    var: Optional[str]
    handler: list[Stmt]
    loc: Location = _ann(NOWHERE)


@dataclass(eq=True)
class Throw(Stmt):
    expr: Expr
    loc: Location = _ann(NOWHERE)


# --------------------------------------------------------------- declarations


@dataclass(eq=True)
class Param:
    name: str
    type: str
    final: bool = False
    loc: Location = _ann(NOWHERE)


@dataclass(eq=True)
class FieldDecl:
    name: str
    type: str
    init: Optional[Expr]
    loc: Location = _ann(NOWHERE)
    owner: Optional[str] = _ann()


@dataclass(eq=True)
class MethodDecl:
    name: str  # "<init>" for constructors
    params: list[Param]
    body: list[Stmt]
    return_type: str
    static: bool = False
    loc: Location = _ann(NOWHERE)
    owner: Optional[str] = _ann()

    @property
    def is_ctor(self) -> bool:
        return self.name == "<init>"


@dataclass(eq=True)
class ClassDecl:
    name: str
    superclass: Optional[str]
    fields: list[FieldDecl]
    methods: list[MethodDecl]
    loc: Location = _ann(NOWHERE)

    def method(self, name: str) -> Optional[MethodDecl]:
        for m in self.methods:
            if m.name == name:
                return m
        return None

    @property
    def ctor(self) -> Optional[MethodDecl]:
        return self.method("<init>")


@dataclass(eq=True)
class ExternDecl:
    name: str
    params: list[Param]
    return_type: str
    stub: str
    callback: Optional[str] = None
    loc: Location = _ann(NOWHERE)


@dataclass(eq=True)
class Program:
    classes: list[ClassDecl]
    externs: list[ExternDecl]
    entry: str = "main"
    instrumented: bool = False
    filename: str = _ann("<input>")
    entry_class: Optional[str] = _ann()
    resolved: bool = _ann(False)

    def cls(self, name: str) -> Optional[ClassDecl]:
        for c in self.classes:
            if c.name == name:
                return c
        return None

    def extern(self, name: str) -> Optional[ExternDecl]:
        for e in self.externs:
            if e.name == name:
                return e
        return None


# ------------------------------------------------------------------ traversal


def children(node) -> list:
    """Direct sub-nodes (expressions, statements, declarations) in source order."""
    if isinstance(node, Program):
        return [*node.externs, *node.classes]
    if isinstance(node, ClassDecl):
        return [*node.fields, *node.methods]
    if isinstance(node, FieldDecl):
        return [node.init] if node.init is not None else []
    if isinstance(node, MethodDecl):
        return list(node.body)
    if isinstance(node, VarDecl):
        return [node.init] if node.init is not None else []
    if isinstance(node, Assign):
        return [node.target, node.value]
    if isinstance(node, ExprStmt):
        return [node.expr]
    if isinstance(node, Return):
        return [node.value] if node.value is not None else []
    if isinstance(node, If):
        return [node.cond, *node.then, *(node.orelse or [])]
    if isinstance(node, While):
        return [node.cond, *node.body]
    if isinstance(node, TryCatch):
        return [*node.body, *node.handler]
    if isinstance(node, Throw):
        return [node.expr]
    if isinstance(node, FieldAccess):
        return [node.obj]
    if isinstance(node, Call):
        return ([node.receiver] if node.receiver is not None else []) + list(node.args)
    if isinstance(node, (ExternCall, New)):
        return list(node.args)
    if isinstance(node, Binary):
        return [node.left, node.right]
    if isinstance(node, Unary):
        return [node.operand]
    if isinstance(node, InstanceOf):
        return [node.expr]
    if isinstance(node, (Unbox, Box)):
        return [node.expr]
    return []


def walk(node):
    """Pre-order traversal."""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(children(n)))


def strip_coercions(node):
    """Return ``node`` with resolver-inserted Box/Unbox nodes removed, in place."""
    import dataclasses

    if isinstance(node, (Box, Unbox)):
        return strip_coercions(node.expr)
    if isinstance(node, list):
        return [strip_coercions(n) for n in node]
    if not dataclasses.is_dataclass(node) or isinstance(node, Location):
        return node
    for f in dataclasses.fields(node):
        if not f.compare:
            continue
        value = getattr(node, f.name)
        if isinstance(value, list) or dataclasses.is_dataclass(value):
            setattr(node, f.name, strip_coercions(value))
    return node


def same_structure(a, b) -> bool:
    """Structural equality ignoring locations, annotations and coercions."""
    import copy

    return strip_coercions(copy.deepcopy(a)) == strip_coercions(copy.deepcopy(b))
