"""Lexer and recursive-descent parser for MiniLang."""

from __future__ import annotations

import re
from typing import NamedTuple, Optional

from ..errors import ParseError
from . import ast as A

KEYWORDS = frozenset(
    """class extends static final return if else while try catch throw new null
    true false this instanceof extern lib int boolean void""".split()
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<block>/\*.*?\*/)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>==|!=|<=|>=|&&|\|\||[{}()\[\];,.=<>+\-*/%!@])
    """,
    re.VERBOSE | re.DOTALL,
)


class Token(NamedTuple):
    kind: str  # "ident", "kw", "int", "string", "op", "eof"
    value: str
    line: int
    col: int


def tokenize(source: str, filename: str = "<input>") -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(
                f"unexpected character {source[pos]!r}", filename, line, pos - line_start + 1
            )
        kind = m.lastgroup
        text = m.group()
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "block":
            line += text.count("\n")
            if "\n" in text:
                line_start = pos + text.rindex("\n") + 1
        elif kind == "ident":
            tokens.append(Token("kw" if text in KEYWORDS else "ident", text, line, col))
        elif kind == "string":
            tokens.append(Token("string", re.sub(r"\\(.)", r"\1", text[1:-1]), line, col))
        elif kind in ("int", "op"):
            tokens.append(Token(kind, text, line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


_BINARY_LEVELS = [
    ("||",),
    ("&&",),
    ("==", "!="),
    ("<", "<=", ">", ">="),
    ("+", "-"),
    ("*", "/", "%"),
]


class Parser:
    def __init__(self, source: str, filename: str = "<input>"):
        self.filename = filename
        self.toks = tokenize(source, filename)
        self.i = 0

    # -- token helpers

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def loc(self, tok: Optional[Token] = None) -> A.Location:
        return A.Location(self.filename, (tok or self.tok).line)

    def error(self, message: str, tok: Optional[Token] = None):
        tok = tok or self.tok
        found = "end of input" if tok.kind == "eof" else repr(tok.value)
        raise ParseError(f"{message} (found {found})", self.filename, tok.line, tok.col)

    def at(self, value: str) -> bool:
        t = self.tok
        return t.kind in ("op", "kw") and t.value == value

    def accept(self, value: str) -> bool:
        if self.at(value):
            self.i += 1
            return True
        return False

    def expect(self, value: str) -> Token:
        if not self.at(value):
            self.error(f"expected {value!r}")
        t = self.tok
        self.i += 1
        return t

    def ident(self) -> str:
        if self.tok.kind != "ident":
            self.error("expected identifier")
        t = self.tok
        self.i += 1
        return t.value

    def at_type(self) -> bool:
        return self.tok.kind == "ident" or self.tok.value in ("int", "boolean", "void") and self.tok.kind == "kw"

    def type_name(self) -> str:
        if self.tok.kind == "kw" and self.tok.value in ("int", "boolean", "void"):
            t = self.tok
            self.i += 1
            return t.value
        return self.ident()

    # -- declarations

    def program(self) -> A.Program:
        instrumented = False
        if self.at("@"):
            self.i += 1
            if self.tok.kind != "ident" or self.tok.value != "instrumented":
                self.error("expected 'instrumented' after '@'")
            self.i += 1
            instrumented = True
        classes, externs = [], []
        while self.tok.kind != "eof":
            if self.at("class"):
                classes.append(self.class_decl())
            elif self.at("extern"):
                externs.append(self.extern_decl())
            else:
                self.error("expected 'class' or 'extern'")
        prog = A.Program(classes, externs, instrumented=instrumented)
        prog.filename = self.filename
        return prog

    def extern_decl(self) -> A.ExternDecl:
        loc = self.loc()
        self.expect("extern")
        ret = self.type_name()
        self.expect("lib")
        self.expect(".")
        name = self.ident()
        params = self.params()
        self.expect("=")
        stub = self.ident()
        if stub not in A.STUB_KINDS:
            self.error(f"unknown stub kind, expected one of {', '.join(A.STUB_KINDS)}", self.peek(-1))
        callback = self.ident() if stub == "callback" else None
        self.expect(";")
        return A.ExternDecl(name, params, ret, stub, callback, loc=loc)

    def class_decl(self) -> A.ClassDecl:
        loc = self.loc()
        self.expect("class")
        name = self.ident()
        sup = self.ident() if self.accept("extends") else None
        self.expect("{")
        fields, methods = [], []
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.error("unterminated class body")
            mloc = self.loc()
            if self.tok.kind == "ident" and self.tok.value == name and self.peek().value == "(":
                self.i += 1
                params = self.params()
                body = self.block()
                methods.append(A.MethodDecl("<init>", params, body, A.VOID, loc=mloc))
                continue
            static = self.accept("static")
            ty = self.type_name()
            member = self.ident()
            if self.at("("):
                params = self.params()
                body = self.block()
                methods.append(A.MethodDecl(member, params, body, ty, static, loc=mloc))
            else:
                if static:
                    self.error("static fields are not supported")
                init = self.expr() if self.accept("=") else None
                self.expect(";")
                fields.append(A.FieldDecl(member, ty, init, loc=mloc))
        self.expect("}")
        return A.ClassDecl(name, sup, fields, methods, loc=loc)

    def params(self) -> list[A.Param]:
        self.expect("(")
        params = []
        if not self.at(")"):
            while True:
                ploc = self.loc()
                final = self.accept("final")
                ty = self.type_name()
                params.append(A.Param(self.ident(), ty, final, loc=ploc))
                if not self.accept(","):
                    break
        self.expect(")")
        return params

    # -- statements

    def block(self) -> list[A.Stmt]:
        self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.error("expected '}'")
            stmts.append(self.stmt())
        self.expect("}")
        return stmts

    def stmt(self) -> A.Stmt:
        loc = self.loc()
        if self.accept("return"):
            value = None if self.at(";") else self.expr()
            self.expect(";")
            return A.Return(value, loc=loc)
        if self.accept("if"):
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            then = self.block()
            orelse = None
            if self.accept("else"):
                orelse = [self.stmt()] if self.at("if") else self.block()
            return A.If(cond, then, orelse, loc=loc)
        if self.accept("while"):
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            return A.While(cond, self.block(), loc=loc)
        if self.accept("try"):
            body = self.block()
            self.expect("catch")
            self.expect("(")
            exc = self.ident()
            if exc != A.NPE_CLASS:
                self.error("only NullPointerException can be caught", self.peek(-1))
            var = self.ident() if self.tok.kind == "ident" else None
            self.expect(")")
            return A.TryCatch(body, var, self.block(), loc=loc)
        if self.accept("throw"):
            e = self.expr()
            self.expect(";")
            return A.Throw(e, loc=loc)
        # declaration: Type name [= expr];
        if self.at_type() and self.peek().kind == "ident":
            ty = self.type_name()
            name = self.ident()
            init = self.expr() if self.accept("=") else None
            self.expect(";")
            return A.VarDecl(ty, name, init, loc=loc)
        e = self.expr()
        if self.accept("="):
            if not isinstance(e, (A.Var, A.FieldAccess)):
                self.error("invalid assignment target", self.peek(-1))
            value = self.expr()
            self.expect(";")
            return A.Assign(e, value, loc=loc)
        self.expect(";")
        return A.ExprStmt(e, loc=loc)

    # -- expressions

    def expr(self, level: int = 0) -> A.Expr:
        if level == len(_BINARY_LEVELS):
            return self.instanceof()
        left = self.expr(level + 1)
        while self.tok.kind == "op" and self.tok.value in _BINARY_LEVELS[level]:
            op_tok = self.tok
            self.i += 1
            right = self.expr(level + 1)
            left = A.Binary(op_tok.value, left, right, loc=left.loc)
        return left

    def instanceof(self) -> A.Expr:
        e = self.unary()
        while self.accept("instanceof"):
            e = A.InstanceOf(e, self.ident(), loc=e.loc)
        return e

    def unary(self) -> A.Expr:
        loc = self.loc()
        if self.tok.kind == "op" and self.tok.value in ("!", "-"):
            op = self.tok.value
            self.i += 1
            operand = self.unary()
            if op == "-" and isinstance(operand, A.IntLit) and operand.value >= 0:
                return A.IntLit(-operand.value, loc=loc)
            return A.Unary(op, operand, loc=loc)
        return self.postfix()

    def postfix(self) -> A.Expr:
        e = self.primary()
        while self.at("."):
            self.i += 1
            name_tok = self.tok
            name = self.ident()
            if self.at("("):
                e = A.Call(e, name, self.args(), loc=A.Location(self.filename, name_tok.line))
            else:
                e = A.FieldAccess(e, name, loc=A.Location(self.filename, name_tok.line))
        return e

    def args(self) -> list[A.Expr]:
        self.expect("(")
        args = []
        if not self.at(")"):
            while True:
                args.append(self.expr())
                if not self.accept(","):
                    break
        self.expect(")")
        return args

    def primary(self) -> A.Expr:
        t = self.tok
        loc = self.loc()
        if t.kind == "int":
            self.i += 1
            return A.IntLit(int(t.value), loc=loc)
        if t.kind == "string":
            self.i += 1
            return A.StrLit(t.value, loc=loc)
        if t.kind == "kw":
            if t.value == "null":
                self.i += 1
                return A.NullLit(loc=loc)
            if t.value in ("true", "false"):
                self.i += 1
                return A.BoolLit(t.value == "true", loc=loc)
            if t.value == "this":
                self.i += 1
                return A.This(loc=loc)
            if t.value == "new":
                self.i += 1
                cls = self.ident()
                return A.New(cls, self.args(), loc=loc)
            if t.value == "lib":
                self.i += 1
                self.expect(".")
                name = self.ident()
                return A.ExternCall(name, self.args(), loc=loc)
        if t.kind == "ident":
            self.i += 1
            if self.at("("):
                return A.Call(None, t.value, self.args(), loc=loc)
            return A.Var(t.value, loc=loc)
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        self.error("expected expression")


def parse(source: str, filename: str = "<input>") -> A.Program:
    """Parse MiniLang source text into an (unresolved) Program."""
    return Parser(source, filename).program()


def parse_file(path) -> A.Program:
    from pathlib import Path

    path = Path(path)
    return parse(path.read_text(encoding="utf-8"), path.name)
