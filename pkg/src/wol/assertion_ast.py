"""Assertion syntax shared by the outcome and hyper fragments."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .semiring import INF
from .syntax import Expr, Lit, Test, eval_expr


class Assertion:
    __slots__ = ()


@dataclass(frozen=True)
class Top(Assertion):
    pass


@dataclass(frozen=True)
class Bot(Assertion):
    pass


@dataclass(frozen=True)
class ANot(Assertion):
    arg: Assertion


@dataclass(frozen=True)
class AAnd(Assertion):
    left: Assertion
    right: Assertion


@dataclass(frozen=True)
class AOr(Assertion):
    left: Assertion
    right: Assertion


@dataclass(frozen=True)
class Implies(Assertion):
    left: Assertion
    right: Assertion


@dataclass(frozen=True)
class Lift(Assertion):
    """<P>_u: mass exactly u and support inside P."""
    test: Test
    weight: Any  # Lit, weight-mode Expr, or an already-coerced weight


@dataclass(frozen=True)
class Sure(Assertion):
    test: Test


@dataclass(frozen=True)
class Box(Assertion):
    test: Test


@dataclass(frozen=True)
class Diamond(Assertion):
    test: Test


@dataclass(frozen=True)
class OPlus(Assertion):
    parts: tuple


@dataclass(frozen=True)
class Domain:
    """A finite quantifier domain (or ``nat``, searched up to a cap)."""
    kind: str  # "range", "set", "nat"
    lo: Any = None
    hi: Any = None
    items: tuple = ()

    def values(self, env=None, nat_cap=10**4):
        if self.kind == "range":
            lo = _ev(self.lo, env)
            hi = _ev(self.hi, env)
            return range(lo, hi + 1)
        if self.kind == "set":
            return [_ev(i, env) for i in self.items]
        return range(0, nat_cap + 1)

    @property
    def capped(self):
        return self.kind == "nat"


def _ev(e, env):
    if isinstance(e, Expr):
        return eval_expr(e, None, env)
    return e


def drange(lo, hi):
    return Domain("range", lo, hi)


def dset(*items):
    return Domain("set", items=tuple(items))


NAT = Domain("nat")


@dataclass(frozen=True)
class OPlusIndexed(Assertion):
    var: str
    domain: Domain
    body: Assertion


@dataclass(frozen=True)
class ScaleL(Assertion):
    weight: Any
    arg: Assertion


@dataclass(frozen=True)
class ScaleR(Assertion):
    arg: Assertion
    weight: Any


@dataclass(frozen=True)
class ExistsVal(Assertion):
    var: str
    domain: Domain
    body: Assertion


@dataclass(frozen=True)
class ForallVal(Assertion):
    var: str
    domain: Domain
    body: Assertion


@dataclass(frozen=True)
class ProbSplit(Assertion):
    left: Assertion
    p: Any
    right: Assertion


@dataclass(frozen=True)
class Singleton(Assertion):
    model: Any  # WeightingFunction


# hyper fragment

@dataclass(frozen=True)
class ForallState(Assertion):
    binder: str
    body: Assertion


@dataclass(frozen=True)
class ExistsState(Assertion):
    binder: str
    body: Assertion


@dataclass(frozen=True)
class HyperTest(Assertion):
    """A test over quantified states; open occurrences make it false."""
    test: Test


@dataclass(frozen=True)
class Named(Assertion):
    """Display wrapper (e.g. low(x)); semantically just ``body``."""
    label: str
    body: Assertion = field(compare=False)


TOP = Top()
BOT = Bot()


def weight_value(u, sr, env=None):
    """Evaluate a weight term to a weight of ``sr``."""
    if isinstance(u, Lit):
        return sr.coerce(u.raw)
    if isinstance(u, Expr):
        v = eval_expr(u, None, env)
        return sr.coerce(v)
    if sr.is_weight(u):
        return u
    return sr.coerce(u)


def one_minus(p):
    """Weight term 1 - p for probabilistic splits."""
    if isinstance(p, Lit):
        return Lit(1 - Fraction(p.raw))
    if isinstance(p, Expr):
        from .syntax import BinOp, Int
        return BinOp("-", Int(1), p)
    return 1 - Fraction(p)


def lift_inf():
    return Lit(INF)
