import itertools
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from wol.laws import check_kleisli_laws, random_kernel, random_wf
from wol.semiring import INF, PartialityError, SemiringMismatch, get_semiring
from wol.weighting import (State, Undefined, WeightingFunction, bind, make_wf, mass, restrict,
                           scale_left, scale_right, unit, wf_add, wf_leq, wf_sum, zero_wf)

s0 = State.of(x=0)
s1 = State.of(x=1)
s2 = State.of(x=2)
ALL = ["bool", "det", "nat", "prob", "trop", "lang"]


def wf(sr, **kw):
    return WeightingFunction(sr, [(State.of(x=int(k[1:])), v) for k, v in kw.items()])


def test_states_interned_and_ordered():
    assert State.of(x=1, y=2) is State.of(x=1, y=2)
    assert State.of(x=1) < State.of(x=2)
    assert s1.set("x", 0) is s0
    assert s0.render() == "(x=0)"


@pytest.mark.parametrize("name", ALL)
def test_unit(name):
    sr = get_semiring(name)
    m = unit(sr, s0)
    assert m.as_dict() == {s0: sr.one}
    assert mass(m) == sr.one


def test_unit_values():
    assert unit("trop", s0)(s0) == 0
    assert unit("prob", s0)(s0) == 1


def test_no_zero_entries():
    m = WeightingFunction("nat", [(s0, 0), (s1, 3)])
    assert m.support() == [s1] or list(m.support()) == [s1]
    assert m(s0) == 0


def test_det_support_and_prob_mass_enforced():
    with pytest.raises(PartialityError):
        WeightingFunction("det", [(s0, True), (s1, True)])
    with pytest.raises(PartialityError):
        WeightingFunction("prob", [(s0, F(2, 3)), (s1, F(2, 3))])


def test_bind_example():
    m = WeightingFunction("nat", [(s0, 2)])
    f = lambda s: WeightingFunction("nat", [(s1, 3)])
    assert bind(f, m).as_dict() == {s1: 6}


def test_wf_add():
    assert wf_add(unit("bool", s0), unit("bool", s1)).as_dict() == {s0: True, s1: True}
    r = wf_add(unit("det", s0), unit("det", s0))
    assert isinstance(r, Undefined) and r.witness == s0
    with pytest.raises(SemiringMismatch):
        wf_add(unit("bool", s0), unit("nat", s0))


def test_scale_lang_sides_differ():
    m = WeightingFunction("lang", [(s0, frozenset({"a"}))])
    u = frozenset({"b"})
    assert scale_left(u, m)(s0) == frozenset({"ba"})
    assert scale_right(m, u)(s0) == frozenset({"ab"})


def test_mass_and_leq():
    m = WeightingFunction("prob", [(s0, F(1, 2)), (s1, F(1, 4))])
    assert mass(m) == F(3, 4)
    assert wf_leq(zero_wf("prob"), m)
    assert not wf_leq(m, zero_wf("prob"))


def test_render_canonical():
    m = WeightingFunction("nat", [(s2, 1), (s0, 4)])
    assert m.render() == "{(x=0) ↦ 4, (x=2) ↦ 1} (mass = 5)"


def test_make_wf_and_restrict():
    m = make_wf("prob", [(s0, F(1, 3)), (s1, F(2, 3))])
    assert m(s1) == F(2, 3)
    assert restrict(m, lambda s: s["x"] == 0).as_dict() == {s0: F(1, 3)}


def test_wf_sum_undefined():
    assert isinstance(wf_sum("det", [unit("det", s0), unit("det", s1)]), Undefined)


@pytest.mark.parametrize("name", ALL)
def test_kleisli_laws(name):
    assert check_kleisli_laws(name, random.Random(21), n=300) == []


@pytest.mark.parametrize("name", ALL)
def test_bind_support_and_mass(name):
    sr = get_semiring(name)
    rng = random.Random(8)
    for _ in range(200):
        m = random_wf(sr, rng)
        f = random_kernel(sr, rng)
        b = bind(f, m)
        allowed = set()
        for s in m.support():
            allowed |= set(f(s).support())
        assert set(b.support()) <= allowed
        expect = sr.zero
        for s, w in m.items():
            expect = sr._add(expect, sr._mul(w, f(s).mass()))
        assert b.mass() == expect


def _brute_leq(sr, m1, m2, values):
    """exists m' with m1 + m' = m2, searching m' over the given weights."""
    states = sorted(set(m1.support()) | set(m2.support()))
    for ws in itertools.product(values, repeat=len(states)):
        try:
            extra = WeightingFunction(sr, list(zip(states, ws)))
        except PartialityError:
            continue
        r = wf_add(m1, extra)
        if not isinstance(r, Undefined) and r == m2:
            return True
    return False


@given(st.lists(st.integers(0, 3), min_size=3, max_size=3),
       st.lists(st.integers(0, 3), min_size=3, max_size=3))
def test_leq_matches_witness_search_nat(a, b):
    sts = [s0, s1, s2]
    m1 = WeightingFunction("nat", list(zip(sts, a)))
    m2 = WeightingFunction("nat", list(zip(sts, b)))
    assert wf_leq(m1, m2) == _brute_leq(get_semiring("nat"), m1, m2, range(4))


@given(st.lists(st.sampled_from([0, 1, 2, 4]), min_size=2, max_size=2),
       st.lists(st.sampled_from([0, 1, 2, 4]), min_size=2, max_size=2))
def test_leq_matches_witness_search_prob(a, b):
    sts = [s0, s1]
    mk = lambda xs: [F(v, 8) for v in xs]
    m1 = WeightingFunction("prob", list(zip(sts, mk(a))))
    m2 = WeightingFunction("prob", list(zip(sts, mk(b))))
    vals = [F(k, 8) for k in range(9)]
    assert wf_leq(m1, m2) == _brute_leq(get_semiring("prob"), m1, m2, vals)


def test_trop_leq_brute():
    sr = get_semiring("trop")
    vals = [INF] + [F(k) for k in range(4)]
    for a, b in itertools.product(vals, repeat=2):
        m1 = WeightingFunction(sr, [(s0, a)])
        m2 = WeightingFunction(sr, [(s0, b)])
        assert wf_leq(m1, m2) == _brute_leq(sr, m1, m2, vals)
