"""Pretty printer; its output parses back to an equal AST."""
from __future__ import annotations

from fractions import Fraction

from . import assertion_ast as A
from . import syntax as S
from .semiring import INF


def _num(v):
    if v == INF:
        return "inf"
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    return str(v)


def pretty_lit(raw):
    if isinstance(raw, bool):
        return "true" if raw else "false"
    if isinstance(raw, frozenset):
        return "{" + ", ".join(f'"{s}"' for s in sorted(raw)) + "}"
    return _num(raw)


_PREC = {"+": 1, "-": 1, "*": 2, "div": 2, "mod": 2, "rdiv": 2, "pow": 3}
_SYM = {"div": "/", "mod": "%", "rdiv": "/", "pow": "^"}


def pretty_expr(E, prec=0):
    t = type(E)
    if t is S.Var:
        return E.name
    if t is S.Int:
        v = E.value
        if isinstance(v, Fraction) and v.denominator != 1:
            return f"({_num(v)})"
        s = _num(v)
        return f"({s})" if s.startswith("-") and prec > 0 else s
    if t is S.BinOp:
        p = _PREC[E.op]
        if E.op == "pow":
            s = f"{pretty_expr(E.left, p + 1)} ^ {pretty_expr(E.right, p)}"
        else:
            s = f"{pretty_expr(E.left, p)} {_SYM.get(E.op, E.op)} {pretty_expr(E.right, p + 1)}"
        return f"({s})" if p < prec else s
    if t is S.Neg:
        inner = pretty_expr(E.arg, 4)
        if isinstance(E.arg, S.Int) and not inner.startswith("("):
            inner = f"({inner})"
        return f"-{inner}"
    if t is S.TestInt:
        return f"[{pretty_test(E.test)}]"
    if t is S.EdgeLookup:
        return f"G[{pretty_expr(E.src)}][{pretty_expr(E.dst)}]"
    if t is S.Call:
        return f"{E.fn}(" + ", ".join(pretty_expr(a) for a in E.args) + ")"
    if t is S.SVar:
        return f"{E.binder}.{E.name}"
    raise TypeError(f"not an expression: {E!r}")


def pretty_test(b, prec=0):
    t = type(b)
    if t is S.TrueT:
        return "true"
    if t is S.FalseT:
        return "false"
    if t is S.Or:
        s = f"{pretty_test(b.left, 1)} || {pretty_test(b.right, 2)}"
        return f"({s})" if prec > 1 else s
    if t is S.And:
        s = f"{pretty_test(b.left, 2)} && {pretty_test(b.right, 3)}"
        return f"({s})" if prec > 2 else s
    if t is S.Not:
        return "!" + pretty_test(b.arg, 4)
    if t is S.Cmp:
        s = f"{pretty_expr(b.left)} {b.op} {pretty_expr(b.right)}"
        return f"({s})" if prec > 3 else s
    if t is S.Edge:
        return f"G[{pretty_expr(b.src)}][{pretty_expr(b.dst)}]"
    raise TypeError(f"not a test: {b!r}")


def pretty_wexpr(e):
    if isinstance(e, S.Lit):
        return pretty_lit(e.raw)
    return pretty_test(e)


def _sugar_ok(c):
    sg = c.sugar
    if sg is None:
        return False
    k = sg[0]
    try:
        if k == "if":
            return S.if_(sg[1], sg[2], sg[3]) == c
        if k == "pchoice":
            return S.pchoice(sg[1], sg[2], sg[3]) == c
        if k == "while":
            return S.while_(sg[1], sg[2]) == c
        if k == "star":
            return S.star(sg[1]) == c
        if k == "loop":
            return S.ploop(sg[1], sg[2]) == c
        if k == "havoc":
            return S.havoc(sg[1]) == c
        if k == "havoc_in":
            return S.havoc_in(sg[1], sg[2]) == c
    except (TypeError, ValueError):
        return False
    return False


def _ind(s, n):
    pad = "  " * n
    return "\n".join(pad + line if line else line for line in s.split("\n"))


def _blk(c, depth):
    inner = pretty_command(c, depth + 1)
    return "{\n" + _ind(inner, depth + 1) + "\n" + "  " * depth + "}"


def _is_atom(c):
    if isinstance(c, S.Skip) or isinstance(c, S.Assume):
        return True
    if isinstance(c, S.Iter):
        return True
    if isinstance(c, S.Plus) and _sugar_ok(c) and c.sugar[0] == "if":
        return True
    return False


def _operand(c, depth):
    if _is_atom(c):
        return pretty_command(c, depth)
    return "(" + pretty_command(c, depth) + ")"


def pretty_command(c, depth=0):
    """Render a command (nested lines are indented relative to ``depth``)."""
    t = type(c)
    if _sugar_ok(c):
        k = c.sugar[0]
        sg = c.sugar
        if k == "if":
            s = f"if {pretty_test(sg[1])} {_blk(sg[2], 0)}"
            if not (isinstance(sg[3], S.Skip)):
                if _sugar_ok(sg[3]) and sg[3].sugar[0] == "if":
                    s += " else " + pretty_command(sg[3])
                else:
                    s += f" else {_blk(sg[3], 0)}"
            return s
        if k == "pchoice":
            return f"{_operand(sg[2], depth)} +[{_num(sg[1])}] {_operand(sg[3], depth)}"
        if k == "while":
            return f"while {pretty_test(sg[1])} {_blk(sg[2], 0)}"
        if k == "star":
            return f"star {_blk(sg[1], 0)}"
        if k == "loop":
            return f"loop [{_num(sg[1])}] {_blk(sg[2], 0)}"
        if k == "havoc":
            return f"{sg[1]} := *"
        if k == "havoc_in":
            return f"{sg[1]} := * in {{" + ", ".join(str(v) for v in sg[2]) + "}"
    if t is S.Skip:
        return "skip"
    if t is S.Assign:
        return f"{c.var} := {pretty_expr(c.expr)}"
    if t is S.Assume:
        return f"assume({pretty_wexpr(c.e)})"
    if t is S.Seq:
        first = pretty_command(c.first, depth)
        if isinstance(c.first, S.Seq) and not _sugar_ok(c.first):
            first = "{ " + first.replace("\n", "\n  ") + " }"
        return first + ";\n" + pretty_command(c.second, depth)
    if t is S.Plus:
        left = c.left
        if isinstance(left, S.Plus) and not _sugar_ok(left):
            ls = pretty_command(left, depth)
        else:
            ls = _operand(left, depth)
        return f"{ls} + {_operand(c.right, depth)}"
    if t is S.Iter:
        return f"iter [{pretty_wexpr(c.cont)}, {pretty_wexpr(c.exit)}] {_blk(c.body, 0)}"
    raise TypeError(f"not a command: {c!r}")


def pretty_program(prog):
    lines = []
    if prog.vars:
        lines.append("vars " + ", ".join(prog.vars) + ";")
    if prog.graph is not None:
        lines.append(prog.graph.render())
    lines.append(pretty_command(prog.body))
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------ assertions

def pretty_weight(u):
    if isinstance(u, S.Lit):
        return pretty_lit(u.raw)
    if isinstance(u, S.Expr):
        s = pretty_expr(u)
        return s if isinstance(u, (S.Int, S.Var, S.Call)) else f"({s})"
    return pretty_lit(u)


def pretty_domain(d):
    if d.kind == "nat":
        return "nat"
    if d.kind == "set":
        return "{" + ", ".join(pretty_expr(i) if isinstance(i, S.Expr) else str(i) for i in d.items) + "}"
    lo = pretty_expr(d.lo) if isinstance(d.lo, S.Expr) else str(d.lo)
    hi = pretty_expr(d.hi) if isinstance(d.hi, S.Expr) else str(d.hi)
    return f"{lo}..{hi}"


def pretty_assertion(a, prec=0):
    t = type(a)
    if t is A.Top:
        return "true"
    if t is A.Bot:
        return "false"
    if t is A.Named:
        return a.label
    if t is A.Implies:
        s = f"{pretty_assertion(a.left, 1)} => {pretty_assertion(a.right, 0)}"
        return f"({s})" if prec > 0 else s
    if t is A.AOr:
        s = f"{pretty_assertion(a.left, 1)} || {pretty_assertion(a.right, 2)}"
        return f"({s})" if prec > 1 else s
    if t is A.AAnd:
        s = f"{pretty_assertion(a.left, 2)} && {pretty_assertion(a.right, 3)}"
        return f"({s})" if prec > 2 else s
    if t is A.OPlus:
        s = " (+) ".join(pretty_assertion(p, 4) for p in a.parts)
        return f"({s})" if prec > 3 else s
    if t is A.ProbSplit:
        s = f"{pretty_assertion(a.left, 4)} (+)[{pretty_weight(a.p)}] {pretty_assertion(a.right, 4)}"
        return f"({s})" if prec > 3 else s
    if t is A.ScaleL:
        s = f"{pretty_weight(a.weight)} * {pretty_assertion(a.arg, 4)}"
        return f"({s})" if prec > 4 else s
    if t is A.ScaleR:
        s = f"{pretty_assertion(a.arg, 5)} * {pretty_weight(a.weight)}"
        return f"({s})" if prec > 4 else s
    if t is A.ANot:
        return "!" + pretty_assertion(a.arg, 6)
    if t is A.Lift:
        return f"<{pretty_test(a.test)}>@{pretty_weight(a.weight)}"
    if t is A.Sure:
        return f"sure({pretty_test(a.test)})"
    if t is A.Box:
        return f"box({pretty_test(a.test)})"
    if t is A.Diamond:
        return f"dia({pretty_test(a.test)})"
    if t in (A.ExistsVal, A.ForallVal, A.OPlusIndexed):
        kw = {A.ExistsVal: "exists", A.ForallVal: "forall", A.OPlusIndexed: "oplus"}[t]
        s = f"{kw} {a.var} in {pretty_domain(a.domain)}. {pretty_assertion(a.body)}"
        return f"({s})" if prec > 0 else s
    if t in (A.ForallState, A.ExistsState):
        kw = "forall" if t is A.ForallState else "exists"
        s = f"{kw} <{a.binder}>. {pretty_assertion(a.body)}"
        return f"({s})" if prec > 0 else s
    if t is A.HyperTest:
        s = pretty_test(a.test)
        return f"({s})" if prec > 0 and not isinstance(a.test, (S.TrueT, S.FalseT)) else s
    if t is A.Singleton:
        return "{" + a.model.render() + "}"
    raise TypeError(f"not an assertion: {a!r}")
