"""MiniLang pretty-printer.

With ``preserve_lines=True`` every statement and declaration is emitted on
the source line recorded in its Location (when that line has not been passed
yet), so an instrumented program printed this way reports the same line
numbers as the original.
"""

from __future__ import annotations

from . import ast as A

_PREC = {
    "||": 1,
    "&&": 2,
    "==": 3,
    "!=": 3,
    "<": 4,
    "<=": 4,
    ">": 4,
    ">=": 4,
    "+": 5,
    "-": 5,
    "*": 6,
    "/": 6,
    "%": 6,
}
_INSTANCEOF_PREC = 7
_UNARY_PREC = 8
_POSTFIX_PREC = 9


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def expr_text(e: A.Expr) -> str:
    return _expr(e)[0]


def _expr(e: A.Expr) -> tuple[str, int]:
    """Return (text, precedence of the outermost operator)."""
    if isinstance(e, (A.Box, A.Unbox)):
        return _expr(e.expr)
    if isinstance(e, A.NullLit):
        return "null", 10
    if isinstance(e, A.IntLit):
        return (str(e.value), 10) if e.value >= 0 else (str(e.value), _UNARY_PREC)
    if isinstance(e, A.BoolLit):
        return ("true" if e.value else "false"), 10
    if isinstance(e, A.StrLit):
        return _quote(e.value), 10
    if isinstance(e, A.This):
        return "this", 10
    if isinstance(e, A.Var):
        return e.name, 10
    if isinstance(e, A.FieldAccess):
        return f"{_wrap(e.obj, _POSTFIX_PREC)}.{e.name}", _POSTFIX_PREC
    if isinstance(e, A.Call):
        args = ", ".join(expr_text(a) for a in e.args)
        if e.receiver is None:
            return f"{e.name}({args})", _POSTFIX_PREC
        return f"{_wrap(e.receiver, _POSTFIX_PREC)}.{e.name}({args})", _POSTFIX_PREC
    if isinstance(e, A.ExternCall):
        return f"lib.{e.name}({', '.join(expr_text(a) for a in e.args)})", _POSTFIX_PREC
    if isinstance(e, A.New):
        return f"new {e.cls}({', '.join(expr_text(a) for a in e.args)})", _POSTFIX_PREC
    if isinstance(e, A.Unary):
        inner = _wrap(e.operand, _UNARY_PREC)
        if e.op == "-" and inner.startswith("-"):
            inner = f"({inner})"
        return f"{e.op}{inner}", _UNARY_PREC
    if isinstance(e, A.InstanceOf):
        return f"{_wrap(e.expr, _INSTANCEOF_PREC)} instanceof {e.cls}", _INSTANCEOF_PREC
    if isinstance(e, A.Binary):
        p = _PREC[e.op]
        # all binary operators are left-associative
        left = _wrap(e.left, p)
        right = _wrap(e.right, p + 1)
        return f"{left} {e.op} {right}", p
    raise TypeError(f"cannot print {type(e).__name__}")


def _wrap(e: A.Expr, min_prec: int) -> str:
    text, prec = _expr(e)
    return f"({text})" if prec < min_prec else text


def _param(p: A.Param) -> str:
    return ("final " if p.final else "") + f"{p.type} {p.name}"


class _Out:
    def __init__(self, preserve_lines: bool):
        self.preserve = preserve_lines
        self.lines: list[str] = [""]

    @property
    def line(self) -> int:
        return len(self.lines)

    def start(self, indent: int, loc: A.Location | None):
        """Begin a new construct, on ``loc.line`` when possible."""
        target = loc.line if (self.preserve and loc is not None) else None
        cur = self.lines[-1]
        if target is not None and target > self.line:
            while self.line < target:
                self.lines.append("")
        elif target is not None and cur.strip():
            self.lines[-1] += " "
            return
        elif cur.strip():
            self.lines.append("")
        if not self.lines[-1]:
            self.lines[-1] = "    " * indent

    def write(self, text: str):
        self.lines[-1] += text

    def close(self, indent: int):
        # keep closing braces on the current line so later constructs can
        # still reach their own source line
        if self.preserve:
            self.lines[-1] += " }"
        else:
            self.start(indent, None)
            self.lines[-1] += "}"

    def text(self) -> str:
        text = "\n".join(line.rstrip() for line in self.lines).rstrip("\n")
        # leading blank lines carry line numbers when preserving them
        return (text if self.preserve else text.lstrip("\n")) + "\n"


class _Printer:
    def __init__(self, preserve_lines: bool):
        self.out = _Out(preserve_lines)

    def program(self, p: A.Program):
        if p.instrumented:
            self.out.start(0, None)
            self.out.write("@instrumented")
        for ext in p.externs:
            self.out.start(0, ext.loc)
            params = ", ".join(_param(q) for q in ext.params)
            stub = ext.stub + (f" {ext.callback}" if ext.callback else "")
            self.out.write(f"extern {ext.return_type} lib.{ext.name}({params}) = {stub};")
        for c in p.classes:
            self.cls(c)

    def cls(self, c: A.ClassDecl):
        o = self.out
        o.start(0, c.loc)
        ext = f" extends {c.superclass}" if c.superclass else ""
        if not c.fields and not c.methods:
            o.write(f"class {c.name}{ext} {{ }}")
            return
        o.write(f"class {c.name}{ext} {{")
        for f in c.fields:
            o.start(1, f.loc)
            init = f" = {expr_text(f.init)}" if f.init is not None else ""
            o.write(f"{f.type} {f.name}{init};")
        for m in c.methods:
            o.start(1, m.loc)
            params = ", ".join(_param(q) for q in m.params)
            if m.is_ctor:
                o.write(f"{c.name}({params})")
            else:
                static = "static " if m.static else ""
                o.write(f"{static}{m.return_type} {m.name}({params})")
            self.block(m.body, 1)
        o.close(0)

    def block(self, stmts: list[A.Stmt], indent: int):
        o = self.out
        if not stmts:
            o.write(" { }")
            return
        o.write(" {")
        for s in stmts:
            self.stmt(s, indent + 1)
        o.close(indent)

    def stmt(self, s: A.Stmt, indent: int):
        o = self.out
        o.start(indent, s.loc)
        if isinstance(s, A.VarDecl):
            init = f" = {expr_text(s.init)}" if s.init is not None else ""
            o.write(f"{s.type} {s.name}{init};")
        elif isinstance(s, A.Assign):
            o.write(f"{expr_text(s.target)} = {expr_text(s.value)};")
        elif isinstance(s, A.ExprStmt):
            o.write(f"{expr_text(s.expr)};")
        elif isinstance(s, A.Return):
            o.write("return;" if s.value is None else f"return {expr_text(s.value)};")
        elif isinstance(s, A.If):
            o.write(f"if ({expr_text(s.cond)})")
            self.block(s.then, indent)
            if s.orelse is not None:
                if len(s.orelse) == 1 and isinstance(s.orelse[0], A.If):
                    o.write(" else")
                    self.stmt_inline_if(s.orelse[0], indent)
                else:
                    o.write(" else")
                    self.block(s.orelse, indent)
        elif isinstance(s, A.While):
            o.write(f"while ({expr_text(s.cond)})")
            self.block(s.body, indent)
        elif isinstance(s, A.TryCatch):
            o.write("try")
            self.block(s.body, indent)
            var = f" {s.var}" if s.var else ""
            o.write(f" catch ({A.NPE_CLASS}{var})")
            self.block(s.handler, indent)
        elif isinstance(s, A.Throw):
            o.write(f"throw {expr_text(s.expr)};")
        else:
            raise TypeError(f"cannot print {type(s).__name__}")

    def stmt_inline_if(self, s: A.If, indent: int):
        # "else if" stays on the line of the closing brace
        o = self.out
        o.write(f" if ({expr_text(s.cond)})")
        self.block(s.then, indent)
        if s.orelse is not None:
            o.write(" else")
            if len(s.orelse) == 1 and isinstance(s.orelse[0], A.If):
                self.stmt_inline_if(s.orelse[0], indent)
            else:
                self.block(s.orelse, indent)


def pretty_print(program: A.Program, preserve_lines: bool = False) -> str:
    """Render ``program`` as MiniLang source that reparses to an equal AST."""
    pr = _Printer(preserve_lines)
    pr.program(program)
    return pr.out.text()
