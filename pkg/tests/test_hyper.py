import itertools
import random

import pytest
from hypothesis import given, strategies as st

from wol import assertion_ast as A
from wol import syntax as S
from wol.assertions import Status, satisfies
from wol.hyper import (ScopeError, check_fragment, check_scope, havoc2_triple, havocN_triple,
                       hyper_satisfies, low, nnf, transform_assign, transform_assume,
                       transform_havoc)
from wol.randprog import HyperGen
from wol.semantics import eval_on
from wol.triples import Explicit, TripleSpec, check_triple, load_specs
from wol.weighting import State, make_wf, zero_wf

V = ("x", "y")
STATES = [State.from_dict(V, {"x": x, "y": y}) for x in range(3) for y in range(3)]


def bool_model(states):
    return make_wf("bool", [(s, True) for s in states])


def models(max_support=3):
    return [bool_model(c) for k in range(max_support + 1) for c in itertools.combinations(STATES, k)]


ALL = models()


def hyper_phis(n, seed):
    g = HyperGen(random.Random(seed), V)
    return [g.phi() for _ in range(n)]


def agree(pre, post_of, phi, sample):
    for m in sample:
        lhs = satisfies(m, pre).status
        rhs = satisfies(post_of(m), phi).status
        assert lhs == rhs, (phi, m.render())


# ---------------------------------------------------------------- examples

def test_forall_value_example():
    m = bool_model([s for s in STATES if s["x"] == 2])
    phi = A.ForallState("s", A.HyperTest(S.Cmp("=", S.SVar("s", "x"), S.Int(2))))
    assert hyper_satisfies(m, phi).ok
    assert hyper_satisfies(zero_wf("bool"), A.ForallState("s", A.BOT)).ok


def test_low_fails_with_pair_witness():
    a = State.from_dict(("l",), {"l": 0})
    b = State.from_dict(("l",), {"l": 1})
    v = hyper_satisfies(bool_model([a, b]), low("l"))
    assert v.status is Status.FAILS and v.witness is not None


def test_open_hypertest_is_false():
    phi = A.HyperTest(S.Cmp("=", S.SVar("s", "x"), S.SVar("s", "x")))
    with pytest.raises(ScopeError):
        check_scope(phi)
    assert satisfies(bool_model(STATES[:1]), phi).failed


def test_fragment_check():
    check_fragment(low("x"))
    with pytest.raises(TypeError):
        check_fragment(A.Sure(S.TRUE))


def test_assign_on_not_low():
    h1 = S.BinOp("+", S.Var("h"), S.Int(1))
    got = transform_assign(A.ANot(low("l")), "l", h1)
    lift = lambda b: S.BinOp("+", S.SVar(b, "h"), S.Int(1))
    want = A.ExistsState("s1", A.ExistsState("s2", A.HyperTest(
        S.Not(S.Cmp("=", lift("s1"), lift("s2"))))))
    assert got == want


def test_assign_leaves_state_free_parts():
    for p in (A.TOP, A.BOT, A.AAnd(A.TOP, A.BOT)):
        assert transform_assign(p, "x", S.Int(1)) == p


def test_havoc_example_shape():
    phi = A.ForallState("s", A.ExistsState("t", A.HyperTest(
        S.Cmp("!=", S.SVar("s", "x"), S.SVar("t", "x")))))
    got = transform_havoc(phi, "x", [1, 2])
    assert isinstance(got, A.ForallState) and isinstance(got.body, A.ForallVal)
    inner = got.body.body
    assert isinstance(inner, A.ExistsState) and isinstance(inner.body, A.ExistsVal)
    v, w = got.body.var, inner.body.var
    assert inner.body.body == A.HyperTest(S.Cmp("!=", S.Var(v), S.Var(w)))
    # the transformed assertion is closed: every model decides it
    assert satisfies(bool_model(STATES[:2]), got).ok


def test_nnf_double_negation():
    for phi in hyper_phis(300, 1):
        assert nnf(A.ANot(A.ANot(phi))) == nnf(phi)


def test_nnf_preserves_meaning():
    for phi in hyper_phis(100, 2):
        for m in ALL[::7]:
            assert satisfies(m, nnf(phi)).status == satisfies(m, phi).status


# ------------------------------------------------------- transformer oracles

@pytest.mark.parametrize("seed", range(4))
def test_assign_transformer(seed):
    rng = random.Random(seed)
    for phi in hyper_phis(40, seed):
        x = rng.choice(V)
        E = rng.choice([S.Int(rng.randrange(3)), S.Var(rng.choice(V)),
                        S.BinOp("+", S.Var(rng.choice(V)), S.Int(1))])
        agree(transform_assign(phi, x, E), lambda m: eval_on(S.Assign(x, E), m).wf,
              phi, rng.sample(ALL, 25))


@pytest.mark.parametrize("seed", range(4))
def test_assume_transformer(seed):
    rng = random.Random(100 + seed)
    for phi in hyper_phis(40, 100 + seed):
        b = S.Cmp(rng.choice(("=", "<")), S.Var(rng.choice(V)), S.Int(rng.randrange(3)))
        agree(transform_assume(phi, b), lambda m: eval_on(S.Assume(b), m).wf,
              phi, rng.sample(ALL, 25))


def test_assume_true_is_identity():
    for phi in hyper_phis(60, 7):
        for m in ALL[::11]:
            assert satisfies(m, transform_assume(phi, S.TRUE)).status == satisfies(m, phi).status


@pytest.mark.parametrize("seed", range(4))
def test_havoc_transformer(seed):
    rng = random.Random(200 + seed)
    for phi in hyper_phis(40, 200 + seed):
        x = rng.choice(V)
        dom = sorted(rng.sample(range(3), rng.randint(1, 3)))
        C = S.havoc_in(x, dom)
        agree(transform_havoc(phi, x, dom), lambda m: eval_on(C, m).wf,
              phi, rng.sample(ALL, 25))


# ------------------------------------------------------------ rule wrappers

def test_havoc2_wrapper_validates():
    phi = A.ExistsState("s", A.ExistsState("t", A.HyperTest(
        S.Cmp("!=", S.SVar("s", "x"), S.SVar("t", "x")))))
    pre, C, post = havoc2_triple(phi, "x", 1, 2)
    spec = TripleSpec(pre, C, post, Explicit(ALL[1:40]), "bool", V)
    assert check_triple(spec).status is Status.HOLDS


def test_havocN_wrapper_is_syntactic():
    pre, C, post = havocN_triple(low("x"), "x")
    assert post == low("x")
    assert isinstance(pre.body, A.ForallVal) and pre.body.domain == A.NAT


def test_noninterference_pair(cases):
    specs = {s.name: s for s in load_specs(cases / "specs" / "noninterference.wspec")}
    assert check_triple(specs["secure"]).status is Status.HOLDS
    assert check_triple(specs["leak"]).status is Status.HOLDS
