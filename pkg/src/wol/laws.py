"""Randomized checks of the algebraic laws.

Each ``check_*`` function draws ``n`` random cases from ``rng`` and returns
a list of failure descriptions (empty when every case passes).  Partial
additions (det, prob) are checked in the "if one side is defined, both are
and they agree" sense.
"""
from __future__ import annotations

import random
from fractions import Fraction

from .semiring import INF, get_semiring, is_undefined
from .weighting import State, WeightingFunction, bind, unit

_STATES = [State.from_dict(("x",), {"x": i}) for i in range(4)]


def random_weight(sr, rng: random.Random):
    sr = get_semiring(sr)
    name = sr.name
    if name in ("bool", "det"):
        return rng.random() < 0.5
    if name == "nat":
        r = rng.random()
        return INF if r < 0.05 else (0 if r < 0.2 else rng.randint(1, 6))
    if name == "prob":
        return Fraction(rng.randint(0, 6), 6)
    if name == "trop":
        return INF if rng.random() < 0.15 else Fraction(rng.randint(0, 8), rng.choice((1, 2)))
    if name == "lang":
        words = ["", "a", "b", "ab", "ba", "aa"]
        return frozenset(w for w in words if rng.random() < 0.3)
    raise ValueError(name)


def _eq_partial(a, b):
    """Kleene equality on possibly undefined values."""
    if is_undefined(a) or is_undefined(b):
        return is_undefined(a) and is_undefined(b)
    return a == b


def check_semiring_laws(sr, rng, n=10_000):
    sr = get_semiring(sr)
    add, mul = sr._add, sr._mul
    bad = []

    def opt(f, *args):
        if any(is_undefined(a) for a in args):
            return args[0] if is_undefined(args[0]) else args[1]
        return f(*args)

    for _ in range(n):
        a, b, c = (random_weight(sr, rng) for _ in range(3))
        lhs = opt(add, opt(add, a, b), c)
        rhs = opt(add, a, opt(add, b, c))
        if not _eq_partial(lhs, rhs):
            bad.append(("add-assoc", a, b, c, lhs, rhs))
        if not _eq_partial(add(a, b), add(b, a)):
            bad.append(("add-comm", a, b))
        if add(a, sr.zero) != a or add(sr.zero, a) != a:
            bad.append(("add-zero", a))
        if mul(mul(a, b), c) != mul(a, mul(b, c)):
            bad.append(("mul-assoc", a, b, c))
        if mul(a, sr.one) != a or mul(sr.one, a) != a:
            bad.append(("mul-one", a))
        if mul(a, sr.zero) != sr.zero or mul(sr.zero, a) != sr.zero:
            bad.append(("mul-zero", a))
        bc = add(b, c)
        if not is_undefined(bc):
            l1 = mul(a, bc)
            r1 = opt(add, mul(a, b), mul(a, c))
            if not _eq_partial(l1, r1):
                bad.append(("left-distrib", a, b, c))
            l2 = mul(bc, a)
            r2 = opt(add, mul(b, a), mul(c, a))
            if not _eq_partial(l2, r2):
                bad.append(("right-distrib", a, b, c))
        if sr.mul_commutative and mul(a, b) != mul(b, a):
            bad.append(("mul-comm", a, b))
    return bad


def check_order_laws(sr, rng, n=10_000):
    """The natural order is a partial order with zero at the bottom."""
    sr = get_semiring(sr)
    leq = sr._leq
    bad = []
    for _ in range(n):
        a, b, c = (random_weight(sr, rng) for _ in range(3))
        if not leq(a, a):
            bad.append(("reflexive", a))
        if leq(a, b) and leq(b, a) and a != b:
            bad.append(("antisymmetric", a, b))
        if leq(a, b) and leq(b, c) and not leq(a, c):
            bad.append(("transitive", a, b, c))
        if not leq(sr.zero, a):
            bad.append(("zero-least", a))
        s = sr._add(a, b)
        if not is_undefined(s) and not (leq(a, s) and leq(b, s)):
            bad.append(("below-sum", a, b))
    return bad


def random_wf(sr, rng, states=_STATES):
    """A random weighting function whose mass is defined."""
    sr = get_semiring(sr)
    if sr.name == "det":
        return WeightingFunction(sr, [(rng.choice(states), True)] if rng.random() < 0.8 else [])
    if sr.name == "prob":
        cuts = sorted(rng.randint(0, 12) for _ in range(len(states)))
        ws = [Fraction(hi - lo, 12) for lo, hi in zip([0] + cuts, cuts)]
        return WeightingFunction(sr, [(s, w) for s, w in zip(states, ws) if w])
    return WeightingFunction(sr, [(s, w) for s in states
                                  if (w := random_weight(sr, rng)) != sr.zero])


def random_kernel(sr, rng, states=_STATES):
    table = {s: random_wf(sr, rng, states) for s in states}
    return lambda s: table[s]


def check_kleisli_laws(sr, rng, n=10_000):
    """Unit laws and associativity of bind on a four-state space."""
    sr = get_semiring(sr)
    bad = []
    for _ in range(n):
        m = random_wf(sr, rng)
        f = random_kernel(sr, rng)
        g = random_kernel(sr, rng)
        s = rng.choice(_STATES)
        if bind(lambda x: unit(sr, x), m) != m:
            bad.append(("right-unit", m))
        if bind(f, unit(sr, s)) != f(s):
            bad.append(("left-unit", s))
        if bind(g, bind(f, m)) != bind(lambda x: bind(g, f(x)), m):
            bad.append(("assoc", m))
    return bad


__all__ = ["random_weight", "random_wf", "random_kernel", "check_semiring_laws",
           "check_order_laws", "check_kleisli_laws"]
