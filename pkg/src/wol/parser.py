"""Recursive-descent parser for programs, assertions and spec/rule files."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import assertion_ast as A
from . import syntax as S
from .semiring import INF, get_semiring


class ParseError(ValueError):
    def __init__(self, msg, line=0, col=0, path=None):
        where = f"{path or '<input>'}:{line}:{col}"
        super().__init__(f"{where}: {msg}")
        self.msg = msg
        self.line = line
        self.col = col


@dataclass
class Tok:
    kind: str  # int, ident, str, op, eof
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<str>"[^"\n]*")
  | (?P<op>\(\+\)|:=|->|\.\.|==|!=|<=|>=|&&|\|\||=>|[;,(){}\[\]+\-*/%^<>=!.@:|])
""", re.VERBOSE)


def tokenize(text, path=None):
    toks = []
    line, col, i = 1, 1, 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if not m:
            raise ParseError(f"unexpected character {text[i]!r}", line, col, path)
        kind = m.lastgroup
        s = m.group()
        if kind == "nl":
            line += 1
            col = 1
        elif kind in ("ws", "comment"):
            col += len(s)
        else:
            toks.append(Tok(kind, s, line, col))
            col += len(s)
        i = m.end()
    toks.append(Tok("eof", "", line, col))
    return toks


@dataclass
class Program:
    vars: tuple
    graph: S.Graph | None
    body: S.Command
    source: str = ""
    path: str | None = None

    def state(self, init=None, **kw):
        from .weighting import State
        vals = dict(init or {})
        vals.update(kw)
        bad = set(vals) - set(self.vars)
        if bad:
            raise KeyError(f"undeclared variables {sorted(bad)}")
        return State.from_dict(self.vars, vals)


KEYWORDS = {"skip", "assume", "if", "else", "while", "iter", "star", "loop", "vars", "graph",
            "true", "false", "inf", "in"}
RESERVED = KEYWORDS | {"sure", "box", "dia", "low", "forall", "exists", "oplus", "nat", "and", "or",
                       "not", "semiring", "triple", "rule", "G"}


class Parser:
    def __init__(self, toks, path=None, vars=(), graph=None, sr=None):
        self.toks = toks
        self.i = 0
        self.path = path
        self.vars = tuple(vars)
        self.graph = graph
        self.sr = get_semiring(sr) if sr is not None else None
        self.bound = []  # value binders in scope
        self.sbound = []  # state binders in scope
        self.mode = "prog"  # prog | assert

    # --- token helpers
    @property
    def tok(self):
        return self.toks[self.i]

    def peek(self, k=1):
        j = min(self.i + k, len(self.toks) - 1)
        return self.toks[j]

    def at(self, *texts):
        t = self.tok
        return t.kind in ("op", "ident") and t.text in texts

    def accept(self, text):
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text):
        if not self.accept(text):
            self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")

    def error(self, msg, tok=None):
        t = tok or self.tok
        raise ParseError(msg, t.line, t.col, self.path)

    def ident(self):
        t = self.tok
        if t.kind != "ident":
            self.error(f"expected identifier, found {t.text or 'end of input'!r}")
        self.i += 1
        return t.text

    def integer(self):
        neg = self.accept("-")
        t = self.tok
        if t.kind != "int":
            self.error("expected integer")
        self.i += 1
        return -int(t.text) if neg else int(t.text)

    # --- headers
    def headers(self):
        while True:
            if self.at("vars") and self.tok.kind == "ident":
                self.i += 1
                names = [self.ident()]
                while self.accept(","):
                    names.append(self.ident())
                self.expect(";")
                for n in names:
                    if n in RESERVED:
                        self.error(f"{n!r} cannot be a variable name")
                self.vars = tuple(dict.fromkeys(self.vars + tuple(names)))
            elif self.at("graph"):
                self.i += 1
                n = self.integer()
                self.expect("{")
                edges = set()
                while not self.accept("}"):
                    a = self.integer()
                    self.expect("->")
                    b = self.integer()
                    self.accept(";")
                    if not (1 <= a <= n and 1 <= b <= n):
                        self.error(f"edge {a} -> {b} outside nodes 1..{n}")
                    edges.add((a, b))
                self.graph = S.Graph(n, frozenset(edges))
            else:
                break

    # --- commands
    def program(self):
        self.headers()
        if self.tok.kind == "eof":
            return S.Skip()
        c = self.stmts()
        if self.tok.kind != "eof":
            self.error(f"unexpected {self.tok.text!r}")
        return c

    def stmts(self, closers=("}", ")")):
        parts = [self.choice()]
        while self.accept(";"):
            if self.tok.kind == "eof" or self.at(*closers):
                break
            parts.append(self.choice())
        return S.seq(*parts)

    def choice(self):
        left = self.catom()
        while self.at("+"):
            self.i += 1
            if self.accept("["):
                p = self.wexpr()
                self.expect("]")
                if not isinstance(p, S.Lit):
                    self.error("probabilistic choice needs a literal weight")
                right = self.catom()
                left = self._pchoice(p, left, right)
            else:
                right = self.catom()
                left = S.Plus(left, right)
        return left

    def _pchoice(self, p, c1, c2):
        try:
            pf = Fraction(p.raw)
        except (TypeError, ValueError):
            self.error("probabilistic choice needs a rational weight")
        if not 0 <= pf <= 1:
            self.error("probability must lie in [0,1]")
        self._check_lit(S.Lit(pf))
        self._check_lit(S.Lit(1 - pf))
        return S.pchoice(pf, c1, c2)

    def block(self):
        self.expect("{")
        if self.accept("}"):
            return S.Skip()
        c = self.stmts()
        self.expect("}")
        return c

    def catom(self):
        t = self.tok
        if self.accept("skip"):
            return S.Skip()
        if self.accept("("):
            c = self.stmts()
            self.expect(")")
            return c
        if self.at("{"):
            return self.block()
        if self.accept("assume"):
            self.expect("(")
            e = self.wexpr()
            self.expect(")")
            return S.Assume(e)
        if self.accept("if"):
            return self.if_rest()
        if self.accept("while"):
            b = self.test()
            return S.while_(b, self.block())
        if self.accept("iter"):
            self.expect("[")
            e1 = self.wexpr()
            self.expect(",")
            e2 = self.wexpr()
            self.expect("]")
            return S.Iter(self.block(), e1, e2)
        if self.accept("star"):
            return S.star(self.block())
        if self.accept("loop"):
            self.expect("[")
            p = self.wexpr()
            self.expect("]")
            if not isinstance(p, S.Lit):
                self.error("loop needs a literal weight")
            pf = Fraction(p.raw)
            self._check_lit(S.Lit(pf))
            self._check_lit(S.Lit(1 - pf))
            return S.ploop(pf, self.block())
        if t.kind == "ident" and self.peek().text == ":=":
            x = self.ident()
            self._check_var(x, t)
            self.i += 1
            if self.accept("*"):
                if self.accept("in"):
                    return S.havoc_in(x, self.value_set())
                return S.havoc(x)
            return S.Assign(x, self.expr())
        self.error(f"expected a command, found {t.text or 'end of input'!r}")

    def value_set(self):
        if self.accept("{"):
            vals = [self.integer()]
            while self.accept(","):
                vals.append(self.integer())
            self.expect("}")
            return vals
        lo = self.integer()
        self.expect("..")
        hi = self.integer()
        if hi < lo:
            self.error("empty havoc range")
        return list(range(lo, hi + 1))

    def if_rest(self):
        b = self.test()
        c1 = self.block()
        if self.accept("else"):
            if self.accept("if"):
                c2 = self.if_rest()
            else:
                c2 = self.block()
        else:
            c2 = S.Skip()
        return S.if_(b, c1, c2)

    # --- weight expressions
    def wexpr(self):
        lit = self.try_weight_literal()
        if lit is not None:
            return lit
        return self.test()

    def try_weight_literal(self):
        t = self.tok
        if t.kind == "int":
            # a bare number (or a/b) not followed by a comparison is a literal
            j = self.i + 1
            if self.toks[j].text == "/" and self.toks[j + 1].kind == "int":
                j += 2
            if self.toks[j].text in ("=", "==", "!=", "<", "<=", ">", ">=", "+", "-", "*", "%"):
                return None
            num = int(t.text)
            if j == self.i + 3:
                den = int(self.toks[self.i + 2].text)
                if den == 0:
                    self.error("zero denominator")
                lit = S.Lit(Fraction(num, den))
            else:
                lit = S.Lit(num)
            self.i = j
            self._check_lit(lit, t)
            return lit
        if self.at("inf"):
            self.i += 1
            lit = S.Lit(INF)
            self._check_lit(lit, t)
            return lit
        if t.text == "{" and self.peek().kind == "str" or (t.text == "{" and self.peek().text == "}"):
            self.i += 1
            strs = []
            if not self.accept("}"):
                strs.append(self._string())
                while self.accept(","):
                    strs.append(self._string())
                self.expect("}")
            lit = S.Lit(frozenset(strs))
            self._check_lit(lit, t)
            return lit
        return None

    def _string(self):
        t = self.tok
        if t.kind != "str":
            self.error("expected a string literal")
        self.i += 1
        return t.text[1:-1]

    def _check_lit(self, lit, tok=None):
        if self.sr is not None:
            try:
                self.sr.coerce(lit.raw)
            except ValueError as e:
                self.error(f"weight literal invalid for {self.sr.name}: {e}", tok)

    # --- tests
    def test(self):
        left = self.test_and()
        while self.accept("||"):
            left = S.Or(left, self.test_and())
        return left

    def test_and(self):
        left = self.test_not()
        while self.accept("&&"):
            left = S.And(left, self.test_not())
        return left

    def test_not(self):
        if self.accept("!"):
            return S.Not(self.test_not())
        return self.test_atom()

    def test_atom(self):
        if self.accept("true"):
            return S.TRUE
        if self.accept("false"):
            return S.FALSE
        if self.at("("):
            save = self.i
            self.i += 1
            try:
                b = self.test()
                self.expect(")")
                if not self._at_cmp() and not self._at_arith():
                    return b
            except ParseError:
                pass
            self.i = save
        if self.at("G") and self.peek().text == "[" and self.graph is not None:
            save = self.i
            e1, e2 = self._edge_args()
            if not self._at_cmp() and not self._at_arith():
                return S.Edge(self.graph, e1, e2)
            self.i = save
        left = self.expr()
        if not self._at_cmp():
            self.error(f"expected a comparison, found {self.tok.text or 'end of input'!r}")
        op = self.tok.text
        self.i += 1
        op = "=" if op == "==" else op
        right = self.expr()
        return S.Cmp(op, left, right)

    def _at_cmp(self):
        return self.tok.kind == "op" and self.tok.text in ("=", "==", "!=", "<", "<=", ">", ">=")

    def _at_arith(self):
        return self.tok.kind == "op" and self.tok.text in ("+", "-", "*", "/", "%", "^")

    def _edge_args(self):
        self.expect("G")
        self.expect("[")
        e1 = self.expr()
        self.expect("]")
        self.expect("[")
        e2 = self.expr()
        self.expect("]")
        return e1, e2

    # --- integer expressions
    def expr(self, weight=False):
        left = self.term(weight)
        while self.at("+", "-"):
            op = self.tok.text
            self.i += 1
            left = S.BinOp(op, left, self.term(weight))
        return left

    def term(self, weight=False):
        left = self.power(weight)
        while self.at("*", "/", "%"):
            op = self.tok.text
            if op in ("/", "%") and self.mode == "prog":
                self.error("division is not an expression form in programs")
            if weight and op == "*" and self._scale_follows():
                break
            self.i += 1
            if op == "/":
                op = "rdiv" if weight else "div"
            elif op == "%":
                op = "mod"
            left = S.BinOp(op, left, self.power(weight))
        return left

    def _scale_follows(self):
        # in 'u * phi' the token after * starts an assertion
        nxt = self.peek()
        return nxt.text in ("<", "sure", "box", "dia", "true", "false", "exists", "forall",
                            "oplus", "low", "not", "!")

    def power(self, weight=False):
        base = self.unary(weight)
        if self.mode != "prog" and self.accept("^"):
            return S.BinOp("pow", base, self.power(weight))
        return base

    def unary(self, weight=False):
        if self.accept("-"):
            if self.tok.kind == "int" and self.peek().text != "^":
                v = int(self.tok.text)
                self.i += 1
                return S.Int(-v)
            return S.Neg(self.unary(weight))
        return self.primary(weight)

    def primary(self, weight=False):
        t = self.tok
        if t.kind == "int":
            self.i += 1
            return S.Int(int(t.text))
        if weight and self.at("inf"):
            self.i += 1
            return S.Int(INF)
        if self.accept("("):
            e = self.expr(weight)
            self.expect(")")
            return e
        if self.accept("["):
            b = self.test()
            self.expect("]")
            return S.TestInt(b)
        if t.kind == "ident":
            if t.text == "G" and self.peek().text == "[" and self.graph is not None:
                e1, e2 = self._edge_args()
                return S.EdgeLookup(self.graph, e1, e2)
            if t.text in KEYWORDS:
                self.error(f"unexpected keyword {t.text!r}")
            self.i += 1
            if self.at(".") and t.text in self.sbound:
                self.i += 1
                x = self.ident()
                self._check_var(x, t, allow_bound=False)
                return S.SVar(t.text, x)
            if self.at("(") and self.mode != "prog":
                self.i += 1
                args = []
                if not self.accept(")"):
                    args.append(self.expr(weight))
                    while self.accept(","):
                        args.append(self.expr(weight))
                    self.expect(")")
                if t.text not in S.builtin_names():
                    self.error(f"unknown function {t.text!r}", t)
                return S.Call(t.text, tuple(args))
            self._check_var(t.text, t)
            return S.Var(t.text)
        self.error(f"expected an expression, found {t.text or 'end of input'!r}")

    def _check_var(self, x, tok, allow_bound=True):
        if allow_bound and x in self.bound:
            return
        if x not in self.vars:
            self.error(f"undeclared variable {x!r}", tok)

    # --- assertions
    def assertion(self):
        left = self.a_or()
        if self.accept("=>"):
            return A.Implies(left, self.assertion())
        return left

    def a_or(self):
        left = self.a_and()
        while self.at("||", "or"):
            self.i += 1
            left = A.AOr(left, self.a_and())
        return left

    def a_and(self):
        left = self.a_oplus()
        while self.at("&&", "and"):
            self.i += 1
            left = A.AAnd(left, self.a_oplus())
        return left

    def a_oplus(self):
        parts = [self.a_scaled()]
        while self.at("(+)"):
            self.i += 1
            if self.accept("["):
                p = self.weight_term()
                self.expect("]")
                right = self.a_scaled()
                left = parts.pop() if len(parts) == 1 else A.OPlus(tuple(parts))
                parts = [A.ProbSplit(left, p, right)]
            else:
                parts.append(self.a_scaled())
        return parts[0] if len(parts) == 1 else A.OPlus(tuple(parts))

    def a_scaled(self):
        # u * phi, with u a weight term
        save = self.i
        if self.tok.kind == "int" or self.at("inf", "(", "{") or (self.tok.kind == "ident"
                                                                and self.tok.text in self.bound):
            try:
                u = self.weight_term()
                if self.at("*") and self._scale_follows() or self.at("*") and self.peek().text == "(":
                    self.i += 1
                    return A.ScaleL(u, self.a_scaled())
            except ParseError:
                pass
            self.i = save
        a = self.a_unary()
        while self.at("*"):
            self.i += 1
            a = A.ScaleR(a, self.weight_term())
        return a

    def a_unary(self):
        if self.at("!", "not"):
            self.i += 1
            return A.ANot(self.a_unary())
        return self.a_atom()

    def weight_term(self):
        lit = self.try_weight_literal_noncheck()
        if lit is not None:
            return lit
        return self.expr(weight=True)

    def try_weight_literal_noncheck(self):
        t = self.tok
        if t.text == "{" and (self.peek().kind == "str" or self.peek().text == "}"):
            return self.try_weight_literal()
        if self.at("true"):
            self.i += 1
            return S.Lit(True)
        if self.at("false"):
            self.i += 1
            return S.Lit(False)
        return None

    def a_atom(self):
        t = self.tok
        if self.accept("true"):
            return A.TOP
        if self.accept("false"):
            return A.BOT
        if self.at("<") and not (self.peek().kind == "ident" and self.peek().text in self.sbound):
            self.i += 1
            P = self.test()
            self.expect(">")
            if self.accept("@"):
                u = self.weight_term()
            else:
                u = S.Lit(True)
            return A.Lift(P, u)
        for kw, cls in (("sure", A.Sure), ("box", A.Box), ("dia", A.Diamond)):
            if self.at(kw) and self.peek().text == "(":
                self.i += 2
                P = self.test()
                self.expect(")")
                return cls(P)
        if self.at("low") and self.peek().text == "(":
            self.i += 2
            x = self.ident()
            self._check_var(x, t, allow_bound=False)
            self.expect(")")
            return low(x)
        if self.at("forall", "exists", "oplus") and self.tok.kind == "ident":
            q = self.tok.text
            self.i += 1
            if self.accept("<"):
                if q == "oplus":
                    self.error("oplus ranges over values, not states")
                b = self.ident()
                self.expect(">")
                self.expect(".")
                self.sbound.append(b)
                try:
                    body = self.assertion()
                finally:
                    self.sbound.pop()
                return A.ForallState(b, body) if q == "forall" else A.ExistsState(b, body)
            v = self.ident()
            self.expect("in")
            dom = self.domain()
            self.expect(".")
            self.bound.append(v)
            try:
                body = self.assertion()
            finally:
                self.bound.pop()
            cls = {"forall": A.ForallVal, "exists": A.ExistsVal, "oplus": A.OPlusIndexed}[q]
            return cls(v, dom, body)
        if self.at("("):
            save = self.i
            self.i += 1
            try:
                a = self.assertion()
                self.expect(")")
                return a
            except ParseError:
                self.i = save
        # hypertest (or a value-level comparison over bound names)
        save = self.i
        try:
            b = self.test()
            return A.HyperTest(b)
        except ParseError:
            self.i = save
        self.error(f"expected an assertion, found {t.text or 'end of input'!r}")

    def domain(self):
        if self.accept("nat"):
            return A.NAT
        if self.accept("{"):
            items = [self.expr()]
            while self.accept(","):
                items.append(self.expr())
            self.expect("}")
            return A.Domain("set", items=tuple(items))
        lo = self.expr()
        self.expect("..")
        hi = self.expr()
        return A.Domain("range", lo, hi)


def low(x):
    """low(x): every pair of outcomes agrees on x."""
    body = A.ForallState("s1", A.ForallState("s2", A.HyperTest(
        S.Cmp("=", S.SVar("s1", x), S.SVar("s2", x)))))
    return A.Named(f"low({x})", body)


# ------------------------------------------------------------------ entry points

def parse_program(text, semiring=None, path=None, vars=(), graph=None) -> Program:
    p = Parser(tokenize(text, path), path=path, vars=vars, graph=graph, sr=semiring)
    body = p.program()
    return Program(p.vars, p.graph, body, text, path)


def load_program(path, semiring=None) -> Program:
    path = Path(path)
    return parse_program(path.read_text(encoding="utf-8"), semiring, str(path))


def _sub(text, vars, graph, path=None, mode="assert", sr=None, bound=()):
    p = Parser(tokenize(text, path), path=path, vars=vars, graph=graph, sr=sr)
    p.mode = mode
    p.bound = list(bound)
    return p


def _finish(p, v):
    if p.tok.kind != "eof":
        p.error(f"unexpected {p.tok.text!r}")
    return v


def parse_test(text, vars, graph=None, bound=(), mode="assert"):
    p = _sub(text, vars, graph, mode=mode, bound=bound)
    return _finish(p, p.test())


def parse_expr(text, vars, graph=None, bound=(), mode="assert"):
    p = _sub(text, vars, graph, mode=mode, bound=bound)
    return _finish(p, p.expr())


def parse_assertion(text, vars, graph=None, bound=()):
    p = _sub(text, vars, graph, bound=bound)
    return _finish(p, p.assertion())


def parse_weight(text, vars=(), bound=()):
    p = _sub(text, vars, None, bound=bound)
    return _finish(p, p.weight_term())


# ------------------------------------------------------------ block files

@dataclass
class Slot:
    name: str
    toks: list
    line: int
    col: int


@dataclass
class Block:
    kind: str  # "triple" or "rule"
    name: str
    slots: dict
    line: int


@dataclass
class BlockFile:
    path: str | None
    vars: tuple
    graph: S.Graph | None
    semiring: str | None
    blocks: list
    base_dir: Path = field(default_factory=Path)


def parse_block_file(text, path=None) -> BlockFile:
    """Split a .wspec/.wrule file into header and blocks of raw slots."""
    toks = tokenize(text, path)
    p = Parser(toks, path=path)
    sr = None
    while True:
        p.headers()
        if p.at("semiring"):
            p.i += 1
            sr = p.ident()
            get_semiring(sr)
            p.expect(";")
            continue
        break
    blocks = []
    while p.tok.kind != "eof":
        t = p.tok
        if not p.at("triple", "rule"):
            p.error(f"expected 'triple' or 'rule', found {t.text!r}")
        kind = t.text
        p.i += 1
        name = p.ident() if p.tok.kind == "ident" else ""
        p.expect("{")
        slots = {}
        while not p.accept("}"):
            st = p.tok
            key = p.ident()
            p.expect(":")
            body = []
            depth = 0
            while True:
                tk = p.tok
                if tk.kind == "eof":
                    p.error("unterminated block")
                if depth == 0 and tk.text in (";", "}"):
                    break
                if tk.text in ("(", "{", "["):
                    depth += 1
                elif tk.text in (")", "}", "]"):
                    depth -= 1
                body.append(tk)
                p.i += 1
            p.accept(";")
            if key in slots:
                p.error(f"duplicate slot {key!r}", st)
            slots[key] = Slot(key, body, st.line, st.col)
        blocks.append(Block(kind, name, slots, t.line))
    base = Path(path).parent if path else Path(".")
    return BlockFile(path, p.vars, p.graph, sr, blocks, base)


def slot_parser(slot: Slot, vars, graph=None, path=None, sr=None, bound=()):
    toks = list(slot.toks)
    last = toks[-1] if toks else Tok("eof", "", slot.line, slot.col)
    toks.append(Tok("eof", "", last.line, last.col + len(last.text)))
    p = Parser(toks, path=path, vars=vars, graph=graph, sr=sr)
    p.mode = "assert"
    p.bound = list(bound)
    if len(toks) == 1:
        p.error(f"empty slot {slot.name!r}", toks[0])
    return p


def slot_text(slot: Slot):
    return " ".join(t.text for t in slot.toks)
