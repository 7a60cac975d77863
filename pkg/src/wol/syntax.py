"""Abstract syntax for commands, tests and integer expressions.

Sugar (if, while, star, loops, probabilistic choice, havoc) is expanded to
the six core forms when parsed; the original surface form is kept in a
``sugar`` field that does not take part in equality, so the pretty
printer can give back what the user wrote.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .semiring import INF, get_semiring


class UnboundName(KeyError):
    pass


# ---------------------------------------------------------------- expressions

class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Int(Expr):
    value: Any  # int, or Fraction/INF inside weight terms


@dataclass(frozen=True)
class TestInt(Expr):
    """A test used as an integer (1 if it holds, else 0)."""
    test: "Test"


@dataclass(frozen=True)
class BinOp(Expr):
    op: str  # + - * and, in assertion contexts, div mod rdiv pow
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Graph:
    """An adjacency relation on nodes 1..n."""
    n: int
    edges: frozenset

    def has(self, i, j):
        if not (1 <= i <= self.n and 1 <= j <= self.n):
            raise IndexError(f"graph index G[{i}][{j}] outside 1..{self.n}")
        return (i, j) in self.edges

    def render(self):
        body = " ".join(f"{i} -> {j};" for i, j in sorted(self.edges))
        return f"graph {self.n} {{ {body} }}"


@dataclass(frozen=True)
class EdgeLookup(Expr):
    graph: Graph = field(repr=False)
    src: Expr
    dst: Expr


@dataclass(frozen=True)
class Call(Expr):
    """A builtin function call; only allowed in assertion contexts."""
    fn: str
    args: tuple


@dataclass(frozen=True)
class SVar(Expr):
    """sigma(x) inside a hyper-assertion: variable x of a quantified state."""
    binder: str
    name: str


# ---------------------------------------------------------------------- tests

class Test:
    __slots__ = ()


@dataclass(frozen=True)
class TrueT(Test):
    pass


@dataclass(frozen=True)
class FalseT(Test):
    pass


@dataclass(frozen=True)
class And(Test):
    left: Test
    right: Test


@dataclass(frozen=True)
class Or(Test):
    left: Test
    right: Test


@dataclass(frozen=True)
class Not(Test):
    arg: Test


@dataclass(frozen=True)
class Cmp(Test):
    op: str  # = != < <= > >=
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Edge(Test):
    graph: Graph = field(repr=False)
    src: Expr
    dst: Expr


TRUE = TrueT()
FALSE = FalseT()


@dataclass(frozen=True)
class Lit:
    """A weight literal; ``raw`` is coerced into the active semiring."""
    raw: Any


# ------------------------------------------------------------------- commands

class Command:
    __slots__ = ()


@dataclass(frozen=True)
class Skip(Command):
    sugar: Any = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Seq(Command):
    first: Command
    second: Command
    sugar: Any = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Plus(Command):
    left: Command
    right: Command
    sugar: Any = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Assume(Command):
    e: Any  # Test or Lit
    sugar: Any = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Iter(Command):
    body: Command
    cont: Any
    exit: Any
    sugar: Any = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Assign(Command):
    var: str
    expr: Expr
    sugar: Any = field(default=None, compare=False, repr=False)


# -------------------------------------------------------------- sugar helpers

def seq(*cs):
    cs = [c for c in cs if c is not None]
    if not cs:
        return Skip()
    out = cs[-1]
    for c in reversed(cs[:-1]):
        out = Seq(c, out)
    return out


def neg(b: Test) -> Test:
    return Not(b)


def if_(b, c1, c2):
    return Plus(Seq(Assume(b), c1), Seq(Assume(Not(b)), c2), sugar=("if", b, c1, c2))


def pchoice(p, c1, c2):
    p = Fraction(p)
    return Plus(Seq(Assume(Lit(p)), c1), Seq(Assume(Lit(1 - p)), c2), sugar=("pchoice", p, c1, c2))


def while_(b, c):
    return Iter(c, b, Not(b), sugar=("while", b, c))


def star(c):
    return Iter(c, TRUE, TRUE, sugar=("star", c))


def ploop(p, c):
    p = Fraction(p)
    return Iter(c, Lit(p), Lit(1 - p), sugar=("loop", p, c))


def havoc(x):
    """x := * as x := 0 ; (x := x + 1)*."""
    return Seq(Assign(x, Int(0)), star(Assign(x, BinOp("+", Var(x), Int(1)))), sugar=("havoc", x))


def havoc_in(x, values):
    vals = list(values)
    if not vals:
        raise ValueError("havoc over an empty set")
    out = Assign(x, Int(vals[-1]))
    for v in reversed(vals[:-1]):
        out = Plus(Assign(x, Int(v)), out)
    return _with_sugar(out, ("havoc_in", x, tuple(vals)))


def _with_sugar(c, sugar):
    return type(c)(**{**{k: getattr(c, k) for k in c.__dataclass_fields__}, "sugar": sugar})


# ----------------------------------------------------------------- evaluation

_BUILTINS = {}


def builtin(name):
    def deco(fn):
        _BUILTINS[name] = fn
        return fn
    return deco


def register_function(name, fn):
    """Make ``fn`` callable from assertion expressions as ``name(...)``."""
    _BUILTINS[name] = fn


def builtin_names():
    return sorted(_BUILTINS)


@builtin("binom")
def _binom(n, k):
    from math import comb
    return comb(n, k) if 0 <= k <= n else 0


@builtin("min")
def _min(*a):
    return min(a)


@builtin("max")
def _max(*a):
    return max(a)


@builtin("abs")
def _abs(a):
    return abs(a)


def collatz_step(n):
    return n // 2 if n % 2 == 0 else 3 * n + 1


@builtin("collatz")
def _collatz_iter(n, k):
    """f^k(n) for the Collatz step f."""
    for _ in range(k):
        n = collatz_step(n)
    return n


@builtin("stoptime")
def _stoptime(n, bound=10**6):
    """Least i with f^i(n) = 1 (searched up to a bound)."""
    if n <= 0:
        return -1
    i = 0
    while n != 1:
        n = collatz_step(n)
        i += 1
        if i > bound:
            return -1
    return i


def eval_expr(E: Expr, s, env=None):
    """Integer value of E in state s; env holds bound names (checked first)."""
    t = type(E)
    if t is Var:
        if env is not None and E.name in env:
            return env[E.name]
        if s is None:
            raise UnboundName(E.name)
        return s[E.name]
    if t is Int:
        return E.value
    if t is BinOp:
        a = eval_expr(E.left, s, env)
        b = eval_expr(E.right, s, env)
        op = E.op
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            if a == 0 or b == 0:
                return 0
            return a * b
        if op == "div":
            if b == 0:
                raise ZeroDivisionError("division by zero in assertion")
            return a // b
        if op == "mod":
            if b == 0:
                raise ZeroDivisionError("modulo by zero in assertion")
            return a % b
        if op == "rdiv":
            return Fraction(a) / b if a != INF else INF
        if op == "pow":
            return a ** b
        raise ValueError(f"unknown operator {op}")
    if t is Neg:
        return -eval_expr(E.arg, s, env)
    if t is TestInt:
        return 1 if holds(E.test, s, env) else 0
    if t is EdgeLookup:
        return 1 if E.graph.has(eval_expr(E.src, s, env), eval_expr(E.dst, s, env)) else 0
    if t is Call:
        fn = _BUILTINS.get(E.fn)
        if fn is None:
            raise NameError(f"unknown function {E.fn}")
        return fn(*(eval_expr(a, s, env) for a in E.args))
    if t is SVar:
        st = env.get(E.binder) if env else None
        if st is None:
            raise UnboundName(E.binder)
        return st[E.name]
    raise TypeError(f"not an expression: {E!r}")


_CMP = {
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def holds(b: Test, s, env=None) -> bool:
    t = type(b)
    if t is Cmp:
        return _CMP[b.op](eval_expr(b.left, s, env), eval_expr(b.right, s, env))
    if t is And:
        return holds(b.left, s, env) and holds(b.right, s, env)
    if t is Or:
        return holds(b.left, s, env) or holds(b.right, s, env)
    if t is Not:
        return not holds(b.arg, s, env)
    if t is TrueT:
        return True
    if t is FalseT:
        return False
    if t is Edge:
        return b.graph.has(eval_expr(b.src, s, env), eval_expr(b.dst, s, env))
    raise TypeError(f"not a test: {b!r}")


def eval_test(b: Test, s, sr="bool", env=None):
    sr = get_semiring(sr)
    return sr.one if holds(b, s, env) else sr.zero


_LIT_CACHE = {}


def lit_weight(lit: Lit, sr):
    key = (sr.name, type(lit.raw), lit.raw)
    try:
        return _LIT_CACHE[key]
    except KeyError:
        w = _LIT_CACHE[key] = sr.coerce(lit.raw)
        return w
    except TypeError:  # unhashable raw
        return sr.coerce(lit.raw)


def eval_wexpr(e, s, sr, env=None):
    if isinstance(e, Lit):
        return lit_weight(e, sr)
    return sr.one if holds(e, s, env) else sr.zero


# ------------------------------------------------------------------- analysis

def modified_vars(C: Command) -> frozenset:
    t = type(C)
    if t is Assign:
        return frozenset({C.var})
    if t in (Seq,):
        return modified_vars(C.first) | modified_vars(C.second)
    if t is Plus:
        return modified_vars(C.left) | modified_vars(C.right)
    if t is Iter:
        return modified_vars(C.body)
    return frozenset()


def expr_vars(E) -> frozenset:
    t = type(E)
    if t is Var:
        return frozenset({E.name})
    if t is BinOp:
        return expr_vars(E.left) | expr_vars(E.right)
    if t is Neg:
        return expr_vars(E.arg)
    if t is TestInt:
        return free_vars(E.test)
    if t in (EdgeLookup,):
        return expr_vars(E.src) | expr_vars(E.dst)
    if t is Call:
        out = frozenset()
        for a in E.args:
            out |= expr_vars(a)
        return out
    return frozenset()


def free_vars(b) -> frozenset:
    """Syntactic free variables; over-approximates the semantic notion."""
    t = type(b)
    if t is Cmp or t is Edge:
        l, r = (b.left, b.right) if t is Cmp else (b.src, b.dst)
        return expr_vars(l) | expr_vars(r)
    if t in (And, Or):
        return free_vars(b.left) | free_vars(b.right)
    if t is Not:
        return free_vars(b.arg)
    if t is Lit:
        return frozenset()
    return frozenset()


def command_vars(C) -> frozenset:
    t = type(C)
    if t is Assign:
        return frozenset({C.var}) | expr_vars(C.expr)
    if t is Seq:
        return command_vars(C.first) | command_vars(C.second)
    if t is Plus:
        return command_vars(C.left) | command_vars(C.right)
    if t is Iter:
        return command_vars(C.body) | free_vars(C.cont) | free_vars(C.exit)
    if t is Assume:
        return free_vars(C.e)
    return frozenset()


def subst_expr(E, x, repl):
    """E[repl/x]."""
    t = type(E)
    if t is Var:
        return repl if E.name == x else E
    if t is BinOp:
        return BinOp(E.op, subst_expr(E.left, x, repl), subst_expr(E.right, x, repl))
    if t is Neg:
        return Neg(subst_expr(E.arg, x, repl))
    if t is TestInt:
        return TestInt(subst_test(E.test, x, repl))
    if t is EdgeLookup:
        return EdgeLookup(E.graph, subst_expr(E.src, x, repl), subst_expr(E.dst, x, repl))
    if t is Call:
        return Call(E.fn, tuple(subst_expr(a, x, repl) for a in E.args))
    return E


def subst_test(b, x, repl):
    t = type(b)
    if t is Cmp:
        return Cmp(b.op, subst_expr(b.left, x, repl), subst_expr(b.right, x, repl))
    if t is Edge:
        return Edge(b.graph, subst_expr(b.src, x, repl), subst_expr(b.dst, x, repl))
    if t is And:
        return And(subst_test(b.left, x, repl), subst_test(b.right, x, repl))
    if t is Or:
        return Or(subst_test(b.left, x, repl), subst_test(b.right, x, repl))
    if t is Not:
        return Not(subst_test(b.arg, x, repl))
    return b


# -------------------------------------------------------------- compatibility

@dataclass(frozen=True)
class Diagnostic:
    level: str
    message: str
    where: str = ""

    def render(self):
        return f"{self.level}: {self.message}" + (f" [{self.where}]" if self.where else "")


def _guard(C):
    """Leading weight expression of a branch, if it starts with assume."""
    if isinstance(C, Assume):
        return C.e
    if isinstance(C, Seq):
        return _guard(C.first)
    return None


def _compatible_pair(e1, e2, sr):
    if e1 is None or e2 is None:
        return False
    if isinstance(e1, Not) and e1.arg == e2 or isinstance(e2, Not) and e2.arg == e1:
        return True
    if isinstance(e1, Lit) and isinstance(e2, Lit) and sr.name == "prob":
        try:
            return sr.coerce(e1.raw) + sr.coerce(e2.raw) <= 1
        except ValueError:
            return False
    if sr.name == "det" and isinstance(e1, Lit) and isinstance(e2, Lit):
        try:
            return not (sr.coerce(e1.raw) and sr.coerce(e2.raw))
        except ValueError:
            return False
    if isinstance(e1, FalseT) or isinstance(e2, FalseT):
        return True
    return False


def check_compatibility(C: Command, sr) -> list:
    """Static guard check for every Plus and Iter; warnings only."""
    sr = get_semiring(sr)
    out = []
    if sr.add_total:
        return out

    def walk(c):
        t = type(c)
        if t is Plus:
            if not _compatible_pair(_guard(c.left), _guard(c.right), sr):
                out.append(Diagnostic("warning", f"choice guards not statically compatible in {sr.name}",
                                      _short(c)))
            walk(c.left)
            walk(c.right)
        elif t is Iter:
            if not _compatible_pair(c.cont, c.exit, sr):
                out.append(Diagnostic("warning", f"loop guards not statically compatible in {sr.name}",
                                      _short(c)))
            walk(c.body)
        elif t is Seq:
            walk(c.first)
            walk(c.second)

    walk(C)
    return out


def _short(c):
    from .pretty import pretty_command
    s = " ".join(pretty_command(c).split())
    return s if len(s) <= 60 else s[:57] + "..."
