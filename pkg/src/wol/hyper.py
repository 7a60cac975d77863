"""Hyper-assertions: state quantifiers, hypertests and syntactic transformers.

Satisfaction is shared with :mod:`wol.assertions` (state quantifiers range
over the support of the model).  This module adds negation normal form and
the three weakest-precondition style transformers

* ``transform_assign(phi, x, E)``   for ``x := E``
* ``transform_assume(phi, b)``      for ``assume b``
* ``transform_havoc(phi, x, S)``    for a nondeterministic choice of x in S

plus rule wrappers that package them as triples.
"""
from __future__ import annotations

import dataclasses
import itertools

from . import assertion_ast as A
from . import syntax as S
from .assertions import satisfies

FRAGMENT = (A.Top, A.Bot, A.AAnd, A.AOr, A.ANot, A.ForallVal, A.ExistsVal,
            A.ForallState, A.ExistsState, A.HyperTest, A.Named)


class ScopeError(ValueError):
    pass


def hyper_satisfies(m, phi, env=None):
    """m |= phi for a hyper-assertion; state binders range over supp(m)."""
    check_fragment(phi)
    return satisfies(m, phi, env)


def check_fragment(phi):
    if not isinstance(phi, FRAGMENT):
        raise TypeError(f"{type(phi).__name__} is outside the hyper-assertion fragment")
    for c in _children(phi):
        check_fragment(c)


def _children(phi):
    t = type(phi)
    if t in (A.AAnd, A.AOr, A.Implies):
        return [phi.left, phi.right]
    if t is A.ANot:
        return [phi.arg]
    if t in (A.ForallVal, A.ExistsVal, A.ForallState, A.ExistsState, A.Named):
        return [phi.body]
    return []


def check_scope(phi, bound=frozenset()):
    """Raise ScopeError if some s.x refers to an unbound state binder."""
    t = type(phi)
    if t is A.HyperTest:
        for b in _svar_binders(phi.test):
            if b not in bound:
                raise ScopeError(f"state binder <{b}> is not in scope")
        return
    if t in (A.ForallState, A.ExistsState):
        check_scope(phi.body, bound | {phi.binder})
        return
    for c in _children(phi):
        check_scope(c, bound)


# ------------------------------------------------------------ term rewriting

def _rewrite(node, f):
    """Bottom-up rewrite of expression/test trees; f returns a node or None."""
    if isinstance(node, (S.Expr, S.Test)):
        r = f(node)
        if r is not None:
            return r
        changes = {}
        for fld in dataclasses.fields(node):
            v = getattr(node, fld.name)
            nv = _rewrite(v, f)
            if nv is not v:
                changes[fld.name] = nv
        return dataclasses.replace(node, **changes) if changes else node
    if isinstance(node, tuple):
        new = tuple(_rewrite(v, f) for v in node)
        return new if any(a is not b for a, b in zip(new, node)) else node
    return node


def _svar_binders(t):
    out = set()

    def f(n):
        if isinstance(n, S.SVar):
            out.add(n.binder)
        return None
    _rewrite(t, f)
    return out


def _names(node):
    """All identifiers appearing in a hyper-assertion (for fresh names)."""
    out = set()

    def f(n):
        if isinstance(n, S.Var):
            out.add(n.name)
        elif isinstance(n, S.SVar):
            out.add(n.binder)
            out.add(n.name)
        return None

    def walk(phi):
        t = type(phi)
        if t is A.HyperTest:
            _rewrite(phi.test, f)
            return
        if t in (A.ForallVal, A.ExistsVal):
            out.add(phi.var)
        if t in (A.ForallState, A.ExistsState):
            out.add(phi.binder)
        for c in _children(phi):
            walk(c)
    walk(node)
    return out


def _fresh(base, avoid):
    for i in itertools.count(1):
        n = f"{base}{i}"
        if n not in avoid:
            avoid.add(n)
            return n


def lift_expr(E, sigma):
    """E[sigma]: every program variable x becomes sigma(x)."""
    return _rewrite(E, lambda n: S.SVar(sigma, n.name) if isinstance(n, S.Var) else None)


def lift_test(b, sigma):
    return lift_expr(b, sigma)


def _subst_svar(phi, sigma, x, repl):
    """phi[repl / sigma(x)], stopping under a re-binding of sigma."""
    t = type(phi)
    if t is A.HyperTest:
        return A.HyperTest(_rewrite(
            phi.test, lambda n: repl if (isinstance(n, S.SVar) and n.binder == sigma and n.name == x) else None))
    if t in (A.ForallState, A.ExistsState):
        if phi.binder == sigma:
            return phi
        return t(phi.binder, _subst_svar(phi.body, sigma, x, repl))
    return _map_children(phi, lambda c: _subst_svar(c, sigma, x, repl))


def _map_children(phi, g):
    t = type(phi)
    if t in (A.AAnd, A.AOr, A.Implies):
        return t(g(phi.left), g(phi.right))
    if t is A.ANot:
        return A.ANot(g(phi.arg))
    if t in (A.ForallVal, A.ExistsVal):
        return t(phi.var, phi.domain, g(phi.body))
    if t in (A.ForallState, A.ExistsState):
        return t(phi.binder, g(phi.body))
    if t is A.Named:
        return g(phi.body)
    return phi


# ----------------------------------------------------------------------- NNF

def nnf(phi):
    """Push negations down to hypertests; drops display wrappers."""
    t = type(phi)
    if t is A.Named:
        return nnf(phi.body)
    if t is A.Implies:
        return nnf(A.AOr(A.ANot(phi.left), phi.right))
    if t is not A.ANot:
        return _map_children(phi, nnf)
    a = phi.arg
    ta = type(a)
    if ta is A.Named:
        return nnf(A.ANot(a.body))
    if ta is A.ANot:
        return nnf(a.arg)
    if ta is A.Top:
        return A.BOT
    if ta is A.Bot:
        return A.TOP
    if ta is A.AAnd:
        return A.AOr(nnf(A.ANot(a.left)), nnf(A.ANot(a.right)))
    if ta is A.AOr:
        return A.AAnd(nnf(A.ANot(a.left)), nnf(A.ANot(a.right)))
    if ta is A.Implies:
        return A.AAnd(nnf(a.left), nnf(A.ANot(a.right)))
    if ta is A.ForallVal:
        return A.ExistsVal(a.var, a.domain, nnf(A.ANot(a.body)))
    if ta is A.ExistsVal:
        return A.ForallVal(a.var, a.domain, nnf(A.ANot(a.body)))
    if ta is A.ForallState:
        return A.ExistsState(a.binder, nnf(A.ANot(a.body)))
    if ta is A.ExistsState:
        return A.ForallState(a.binder, nnf(A.ANot(a.body)))
    if ta is A.HyperTest:
        return A.HyperTest(S.neg(a.test))
    raise TypeError(f"cannot normalize negation of {ta.__name__}")


# --------------------------------------------------------------- transformers

def transform_assign(phi, x, E):
    """A_x^E: models m with [[x := E]](m) |= phi."""
    phi = nnf(phi)

    def go(p):
        t = type(p)
        if t in (A.ForallState, A.ExistsState):
            body = _subst_svar(p.body, p.binder, x, lift_expr(E, p.binder))
            return t(p.binder, go(body))
        return _map_children(p, go)
    return go(phi)


def transform_assume(phi, b):
    """Pi_b: models m with [[assume b]](m) |= phi."""
    phi = nnf(phi)

    def go(p):
        t = type(p)
        if t is A.ForallState:
            guard = A.HyperTest(S.neg(lift_test(b, p.binder)))
            return A.ForallState(p.binder, A.AOr(guard, go(p.body)))
        if t is A.ExistsState:
            guard = A.HyperTest(lift_test(b, p.binder))
            return A.ExistsState(p.binder, A.AAnd(guard, go(p.body)))
        return _map_children(p, go)
    return go(phi)


def transform_havoc(phi, x, domain):
    """H_x^S: x receives some value of ``domain`` in every execution."""
    phi = nnf(phi)
    if not isinstance(domain, A.Domain):
        domain = A.dset(*[S.Int(v) for v in domain])
    avoid = _names(phi) | {x}

    def go(p):
        t = type(p)
        if t in (A.ForallState, A.ExistsState):
            v = _fresh("v", avoid)
            body = go(_subst_svar(p.body, p.binder, x, S.Var(v)))
            q = A.ForallVal if t is A.ForallState else A.ExistsVal
            return t(p.binder, q(v, domain, body))
        return _map_children(p, go)
    return go(phi)


# -------------------------------------------------------------- rule wrappers

def assign_triple(phi, x, E):
    """(A_x^E[phi], x := E, phi)."""
    return transform_assign(phi, x, E), S.Assign(x, E), phi


def assume_triple(phi, b):
    """(Pi_b[phi], assume b, phi)."""
    return transform_assume(phi, b), S.Assume(b), phi


def havoc2_triple(phi, x, a, b):
    """(H_x^{a,b}[phi], (x := a) + (x := b), phi)."""
    dom = A.dset(S.Int(a), S.Int(b))
    return transform_havoc(phi, x, dom), S.Plus(S.Assign(x, S.Int(a)), S.Assign(x, S.Int(b))), phi


def havocN_triple(phi, x):
    """(H_x^N[phi], x := *, phi); syntactic only, nat quantifiers are capped."""
    return transform_havoc(phi, x, A.NAT), S.havoc(x), phi


def low(x):
    """Sugar: x has the same value in every execution."""
    return A.Named(f"low({x})", A.ForallState("s1", A.ForallState(
        "s2", A.HyperTest(S.Cmp("=", S.SVar("s1", x), S.SVar("s2", x))))))
