"""Random programs over small finite state spaces.

Used by the property tests and the acceptance suite.  Every variable stays
inside ``0..size-1`` (increments wrap around through an explicit ``if``), so
the reachable state space is bounded by ``size ** len(vars)``.  Generated
programs only use surface syntax, so they print and parse back.
"""
from __future__ import annotations

import itertools
import random
from fractions import Fraction

from . import assertion_ast as A
from . import syntax as S
from .semantics import Evaluator, unroll_partial_sums
from .semiring import get_semiring
from .weighting import State


def all_states(vars, size):
    return [State.from_dict(vars, dict(zip(vars, vals)))
            for vals in itertools.product(range(size), repeat=len(vars))]


class ProgramGen:
    """Random commands over ``vars`` with values in ``0..size-1``."""

    def __init__(self, rng: random.Random, vars=("x", "y"), size=4):
        self.rng = rng
        self.vars = tuple(vars)
        self.size = size

    # --- pieces
    def expr(self):
        r = self.rng
        if r.random() < 0.5:
            return S.Int(r.randrange(self.size))
        return S.Var(r.choice(self.vars))

    def bump(self, x, k=None):
        """x := x + k, wrapping around at size."""
        n = self.size
        k = self.rng.randint(1, n - 1) if k is None else k
        up = S.BinOp("+", S.Var(x), S.Int(k))
        return S.if_(S.Cmp("<", S.Var(x), S.Int(n - k)), S.Assign(x, up),
                     S.Assign(x, S.BinOp("-", S.Var(x), S.Int(n - k))))

    def test(self, depth=1):
        r = self.rng
        if depth > 0 and r.random() < 0.25:
            op = r.choice((S.And, S.Or))
            return op(self.test(depth - 1), self.test(depth - 1))
        if depth > 0 and r.random() < 0.15:
            return S.Not(self.test(depth - 1))
        return S.Cmp(r.choice(("=", "!=", "<", "<=")), S.Var(r.choice(self.vars)),
                     S.Int(r.randrange(self.size)))

    def assign(self):
        x = self.rng.choice(self.vars)
        if self.rng.random() < 0.3:
            return self.bump(x)
        return S.Assign(x, self.expr())

    # --- boolean (nondeterministic) programs
    def bool_cmd(self, depth=3):
        r = self.rng
        if depth <= 0:
            return self.assign() if r.random() < 0.8 else S.Assume(self.test())
        k = r.randrange(7)
        if k == 0:
            return self.assign()
        if k == 1:
            return S.Seq(self.bool_cmd(depth - 1), self.bool_cmd(depth - 1))
        if k == 2:
            return S.Plus(self.bool_cmd(depth - 1), self.bool_cmd(depth - 1))
        if k == 3:
            return S.if_(self.test(), self.bool_cmd(depth - 1), self.bool_cmd(depth - 1))
        if k == 4:
            return S.while_(self.test(), self.bool_cmd(depth - 1))
        if k == 5:
            return S.star(self.bool_cmd(depth - 1))
        return S.Assume(self.test())

    # --- guarded programs (if / while / biased coin only)
    def guarded_cmd(self, sr, depth=3):
        """Programs built from the total sugar forms of the language."""
        r = self.rng
        if depth <= 0:
            return self.assign()
        k = r.randrange(5)
        if k == 0:
            return self.assign()
        if k == 1:
            return S.Seq(self.guarded_cmd(sr, depth - 1), self.guarded_cmd(sr, depth - 1))
        if k == 2:
            return S.if_(self.test(), self.guarded_cmd(sr, depth - 1),
                         self.guarded_cmd(sr, depth - 1))
        if k == 3:
            return S.while_(self.test(), self.guarded_cmd(sr, depth - 1))
        if get_semiring(sr).name == "prob":
            p = Fraction(r.randint(0, 4), 4)
            return S.pchoice(p, self.guarded_cmd(sr, depth - 1), self.guarded_cmd(sr, depth - 1))
        return S.if_(self.test(), self.assign(), S.Skip())


def random_bool_program(rng, vars=("x", "y"), size=4, depth=3):
    """A nondeterministic program over at most size**len(vars) states."""
    return ProgramGen(rng, vars, size).bool_cmd(depth)


# ------------------------------------------------------------ hyper-assertions

class HyperGen:
    """Random closed hyper-assertions (at most three binders in scope at once)."""

    def __init__(self, rng, vars=("x", "y"), size=3):
        self.rng = rng
        self.vars = tuple(vars)
        self.size = size

    def term(self, binders, vals):
        r = self.rng
        opts = [S.Int(r.randrange(self.size))]
        opts += [S.SVar(b, r.choice(self.vars)) for b in binders]
        opts += [S.Var(v) for v in vals]
        t = r.choice(opts)
        if r.random() < 0.2:
            t = S.BinOp("+", t, S.Int(1))
        return t

    def test(self, binders, vals):
        return S.Cmp(self.rng.choice(("=", "!=", "<")), self.term(binders, vals), self.term(binders, vals))

    def phi(self, depth=3, binders=(), vals=()):
        r = self.rng
        k = r.randrange(8) if depth > 0 else 0
        if k <= 1 or len(binders) + len(vals) >= 3 and k < 5:
            if not binders and not vals:
                return r.choice((A.TOP, A.BOT))
            return A.HyperTest(self.test(binders, vals))
        if k == 2:
            return A.AAnd(self.phi(depth - 1, binders, vals), self.phi(depth - 1, binders, vals))
        if k == 3:
            return A.AOr(self.phi(depth - 1, binders, vals), self.phi(depth - 1, binders, vals))
        if k == 4:
            return A.ANot(self.phi(depth - 1, binders, vals))
        if k == 5:
            v = f"v{len(vals)}"
            q = r.choice((A.ForallVal, A.ExistsVal))
            return q(v, A.drange(0, self.size - 1), self.phi(depth - 1, binders, vals + (v,)))
        b = f"s{len(binders)}"
        q = r.choice((A.ForallState, A.ExistsState))
        return q(b, self.phi(depth - 1, binders + (b,), vals))


# ------------------------------------------------------ Iter programs per semiring

def _counter_body(g: ProgramGen, sr):
    """Loop body that strictly increases the counter x (used where cycles diverge)."""
    r = g.rng
    step = lambda k: S.Assign("x", S.BinOp("+", S.Var("x"), S.Int(k)))
    if sr.name in ("nat", "lang", "trop") and r.random() < 0.6:
        left, right = step(1), step(r.randint(1, 2))
        if sr.name == "lang":
            left = S.Seq(S.Assume(S.Lit(frozenset({"a"}))), left)
            right = S.Seq(S.Assume(S.Lit(frozenset({"b"}))), right)
        if sr.name == "trop":
            left = S.Seq(S.Assume(S.Lit(r.randint(0, 3))), left)
        return S.Plus(left, right)
    if sr.name == "nat" and r.random() < 0.5:
        return S.Seq(S.Assume(S.Lit(r.randint(1, 3))), step(1))
    return step(r.randint(1, 2))


def _cyclic_body(g: ProgramGen, sr):
    """Loop body over x in 0..size-1 that may revisit states."""
    r = g.rng
    move = g.bump("x")
    if sr.name == "prob":
        p = r.choice((Fraction(1, 4), Fraction(1, 3), Fraction(1, 2), Fraction(2, 3)))
        return S.pchoice(p, move, S.Assign("x", g.expr()))
    if sr.name == "det":
        return S.if_(g.test(0), move, S.Assign("x", g.expr()))
    if sr.name == "trop":
        return S.Plus(S.Seq(S.Assume(S.Lit(r.randint(1, 4))), move),
                      S.Seq(S.Assume(S.Lit(r.randint(1, 4))), S.Assign("x", g.expr())))
    return S.Plus(move, S.Assign("x", g.expr()))  # bool


def random_iter_program(rng, sr, size=8):
    """An Iter command over the single variable x with at most ``size`` states.

    Returns (C, start_state).  Loops that could revisit a state are only
    generated where that still yields a finite fixpoint (bool, det, trop) or
    a geometric tail (prob, with exit weight at least 1/3 per round); the
    other loops strictly increase x.
    """
    sr = get_semiring(sr)
    g = ProgramGen(rng, ("x",), size)
    bound = rng.randint(1, size - 1)
    stay = S.Cmp("<", S.Var("x"), S.Int(bound))
    if sr.name in ("nat", "lang"):
        C = S.Iter(_counter_body(g, sr), stay, S.Not(stay))
    elif sr.name == "prob":
        if rng.random() < 0.5:
            p = rng.choice((Fraction(1, 4), Fraction(1, 3), Fraction(1, 2), Fraction(2, 3)))
            C = S.Iter(_cyclic_body(g, sr), S.Lit(p), S.Lit(1 - p))
        else:
            # a guard loop must terminate: move strictly upwards
            q = rng.choice((Fraction(1, 3), Fraction(1, 2)))
            body = S.pchoice(q, S.Assign("x", S.BinOp("+", S.Var("x"), S.Int(1))),
                             S.Assign("x", S.BinOp("+", S.Var("x"), S.Int(2))))
            C = S.Iter(body, stay, S.Not(stay))
    elif sr.name == "trop" and rng.random() < 0.5:
        C = S.Iter(_cyclic_body(g, sr), S.Lit(rng.randint(0, 2)), S.Lit(rng.randint(0, 2)))
    elif sr.name == "bool" and rng.random() < 0.5:
        C = S.star(_cyclic_body(g, sr))
    elif sr.name == "trop":
        C = S.Iter(_counter_body(g, sr), stay, S.Not(stay))
    else:
        C = S.Iter(_cyclic_body(g, sr), stay, S.Not(stay))
    s = State.from_dict(("x",), {"x": rng.randrange(size)})
    return C, s


def _l1(sr, m1, m2):
    keys = set(m1.support()) | set(m2.support())
    return sum(abs(m1(k) - m2(k)) for k in keys)


def fixpoint_vs_unroll(C: S.Iter, s, sr, policy=None, max_n=400):
    """Compare the loop engine with the plain unrolled sum.

    Returns (ok, n, detail): ``n`` is the first unrolling index at which the
    sum matches the converged result (exactly, or within the policy epsilon
    in prob).  ``ok`` is False if the engine did not converge or no index up
    to ``max_n`` matches.
    """
    sr = get_semiring(sr)
    ev = Evaluator(sr, policy)
    res = ev.run(C, s)
    if not res.converged:
        return False, None, "engine did not converge"
    eps = ev.policy.epsilon if sr.name == "prob" else 0
    sums = unroll_partial_sums(C.body, C.cont, C.exit, s, sr, policy)
    for n, u in zip(range(max_n + 1), sums):
        if sr.name == "prob":
            if _l1(sr, u, res.wf) <= eps and abs(u.mass() - res.wf.mass()) <= eps:
                return True, n, ""
        elif u == res.wf:
            return True, n, ""
    return False, None, f"no unrolling up to {max_n} matches {res.wf.render()}"
