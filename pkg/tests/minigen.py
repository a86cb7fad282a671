"""Hypothesis strategies producing random MiniLang programs.

Programs are assembled as source text around a fixed pair of classes, so the
parser and resolver are exercised as well. Loops are bounded by a fresh
counter, which keeps every generated program terminating. Dereferences are
either guarded by a null check or sit inside a try/catch, so some programs
carry nulls through helpers without ever dereferencing them and others catch
the resulting NPE.
"""

from __future__ import annotations

from hypothesis import strategies as st

MAX_DEPTH = 6

PRELUDE = """\
extern Node lib.echo(Node n) = echo;
extern Node lib.nothing() = returns_null;

class Node {
    int val;
    Node next;
    Node(int v) { this.val = v; }
    int get() { return this.val; }
    Node link(Node n) { this.next = n; return this; }
}

class Util {
    static int valOf(Node n) {
        if (n == null) { return 0; }
        return n.val;
    }
    static Node pick(Node a, Node b) {
        if (a != null) { return a; }
        return b;
    }
    static Node nextOf(Node n) {
        if (n == null) { return null; }
        return n.next;
    }
}
"""


class _Scope:
    def __init__(self):
        self.ints = ["i0"]
        self.refs = ["r0", "r1"]
        self.counter = 1

    def fresh(self, prefix):
        self.counter += 1
        return f"{prefix}{self.counter}"


def _int_expr(draw, sc: _Scope, d: int) -> str:
    choice = draw(st.integers(0, 5 if d > 0 else 1))
    if choice == 0:
        return str(draw(st.integers(-5, 20)))
    if choice == 1:
        return draw(st.sampled_from(sc.ints))
    if choice == 2:
        op = draw(st.sampled_from(["+", "-", "*"]))
        return f"({_int_expr(draw, sc, d - 1)} {op} {_int_expr(draw, sc, d - 1)})"
    if choice == 3:
        return f"Util.valOf({_ref_expr(draw, sc, d - 1)})"
    if choice == 4:
        return f"new Node({_int_expr(draw, sc, d - 1)}).get()"
    return f"({_int_expr(draw, sc, d - 1)} % 7)"


def _ref_expr(draw, sc: _Scope, d: int) -> str:
    choice = draw(st.integers(0, 6 if d > 0 else 1))
    if choice == 0:
        return "null"
    if choice == 1:
        return draw(st.sampled_from(sc.refs))
    if choice == 2:
        return f"new Node({_int_expr(draw, sc, d - 1)})"
    if choice == 3:
        return f"Util.pick({_ref_expr(draw, sc, d - 1)}, {_ref_expr(draw, sc, d - 1)})"
    if choice == 4:
        return f"Util.nextOf({_ref_expr(draw, sc, d - 1)})"
    if choice == 5:
        return f"lib.echo({_ref_expr(draw, sc, d - 1)})"
    return "lib.nothing()"


def _bool_expr(draw, sc: _Scope, d: int) -> str:
    choice = draw(st.integers(0, 5 if d > 0 else 2))
    if choice == 0:
        return f"{draw(st.sampled_from(sc.refs))} == null"
    if choice == 1:
        return f"{draw(st.sampled_from(sc.refs))} != {draw(st.sampled_from(sc.refs))}"
    if choice == 2:
        return f"{draw(st.sampled_from(sc.refs))} instanceof Node"
    if choice == 3:
        return f"{_int_expr(draw, sc, d - 1)} < {_int_expr(draw, sc, d - 1)}"
    if choice == 4:
        return f"!({_bool_expr(draw, sc, d - 1)})"
    op = draw(st.sampled_from(["&&", "||"]))
    return f"({_bool_expr(draw, sc, d - 1)}) {op} ({_bool_expr(draw, sc, d - 1)})"


def _stmts(draw, sc: _Scope, d: int, indent: str) -> list[str]:
    n = draw(st.integers(1, 4))
    out: list[str] = []
    for _ in range(n):
        out.extend(_stmt(draw, sc, d, indent))
    return out


def _stmt(draw, sc: _Scope, d: int, indent: str) -> list[str]:
    choice = draw(st.integers(0, 10 if d > 0 else 5))
    if choice == 0:
        name = sc.fresh("i")
        line = f"{indent}int {name} = {_int_expr(draw, sc, d - 1)};"
        sc.ints.append(name)
        return [line]
    if choice == 1:
        name = sc.fresh("r")
        if draw(st.booleans()):
            line = f"{indent}Node {name};"
        else:
            line = f"{indent}Node {name} = {_ref_expr(draw, sc, d - 1)};"
        sc.refs.append(name)
        return [line]
    if choice == 2:
        target = draw(st.sampled_from(sc.ints))
        return [f"{indent}{target} = {_int_expr(draw, sc, d - 1)};"]
    if choice == 3:
        target = draw(st.sampled_from(sc.refs))
        return [f"{indent}{target} = {_ref_expr(draw, sc, d - 1)};"]
    if choice == 4:
        return [f"{indent}print({_int_expr(draw, sc, d - 1)});"]
    if choice == 5:
        what = draw(st.sampled_from(sc.refs))
        return [f"{indent}print({what});"]
    if choice == 6:
        r = draw(st.sampled_from(sc.refs))
        body = [
            f"{indent}    {r}.val = {_int_expr(draw, sc, d - 1)};",
            f"{indent}    {r}.next = {_ref_expr(draw, sc, d - 1)};",
            f"{indent}    print({r}.get());",
        ]
        return [f"{indent}if ({r} != null) {{", *body, f"{indent}}}"]
    if choice == 7:
        r = draw(st.sampled_from(sc.refs))
        return [
            f"{indent}try {{",
            f"{indent}    print({r}.val + {r}.next.val);",
            f"{indent}}} catch (NullPointerException e) {{",
            f"{indent}    print(-1);",
            f"{indent}}}",
        ]
    if choice == 8:
        # nested statements get their own scope: restore the visible names after
        saved = (list(sc.ints), list(sc.refs))
        lines = [f"{indent}if ({_bool_expr(draw, sc, d - 1)}) {{"]
        lines += _stmts(draw, sc, d - 1, indent + "    ")
        sc.ints, sc.refs = list(saved[0]), list(saved[1])
        lines.append(f"{indent}}} else {{")
        lines += _stmts(draw, sc, d - 1, indent + "    ")
        sc.ints, sc.refs = saved
        lines.append(f"{indent}}}")
        return lines
    if choice == 9:
        k = sc.fresh("k")
        bound = draw(st.integers(0, 4))
        saved = (list(sc.ints), list(sc.refs))
        lines = [f"{indent}int {k} = 0;", f"{indent}while ({k} < {bound}) {{"]
        lines += _stmts(draw, sc, d - 1, indent + "    ")
        lines.append(f"{indent}    {k} = {k} + 1;")
        lines.append(f"{indent}}}")
        sc.ints, sc.refs = saved
        return lines
    r = draw(st.sampled_from(sc.refs))
    return [f"{indent}{r} = Util.pick({r}, new Node({_int_expr(draw, sc, d - 1)})).link({r});"]


@st.composite
def programs(draw, max_depth: int = MAX_DEPTH, crash: bool = False) -> str:
    """Source text of a random, terminating MiniLang program.

    With ``crash`` the program ends in an unguarded dereference chain, which
    throws whenever the chosen variable or its successor is null.
    """
    sc = _Scope()
    body = [
        "        int i0 = 3;",
        "        Node r0 = new Node(1);",
        "        Node r1 = null;",
    ]
    body += _stmts(draw, sc, max_depth, "        ")
    body.append("        print(Util.valOf(r0) + Util.valOf(r1));")
    if crash:
        r = draw(st.sampled_from(sc.refs))
        body.append(f"        print({r}.next.val);")
    main = "class Main {\n    static void main() {\n" + "\n".join(body) + "\n    }\n}\n"
    return PRELUDE + "\n" + main
