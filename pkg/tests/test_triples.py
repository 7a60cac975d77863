import random

import pytest

from wol import assertion_ast as A
from wol import syntax as S
from wol.assertions import Status
from wol.parser import ParseError, parse_block_file, parse_program, parse_test
from wol.randprog import ProgramGen, all_states
from wol.triples import (Explicit, SpecError, SubsetsGen, TripleSpec, check_hoare, check_lisbon,
                         check_triple, specs_from_blockfile, states, wlp_oracle, wpp_oracle)
from wol.weighting import State, make_wf

V = ("x", "y")
STATES = all_states(V, 4)


def prog(text):
    return parse_program(f"vars x, y;\n{text}").body


def T(text):
    return parse_test(text, V)


def specs(text):
    return specs_from_blockfile(parse_block_file(text, "<test>"))


def test_skip_preserves_any_assertion():
    from wol.assertions import satisfies
    from wol.parser import parse_assertion
    ms = [make_wf("nat", [(s, 1 + i % 2) for s in STATES[i:i + 2]]) for i in range(0, 16, 3)]
    ms += [make_wf("nat", [(s, 1)]) for s in STATES] + [make_wf("nat", [(STATES[0], 1), (STATES[1], 2)])]
    for text in ["sure(x = 1)", "box(y > 0)", "dia(x = 0) (+) <y = 1>@1", "<x < 3>@3"]:
        phi = parse_assertion(text, V)
        good = tuple(m for m in ms if satisfies(m, phi).ok)
        assert good
        rep = check_triple(TripleSpec(phi, S.Skip(), phi, Explicit(good), "nat", V))
        assert rep.status is Status.HOLDS


def test_hoare_holds_vacuously_on_divergence():
    C = prog("while true { skip }")
    assert check_hoare(S.TRUE, C, S.FALSE, STATES).status is Status.HOLDS
    assert check_lisbon(S.TRUE, C, S.TRUE, STATES).status is Status.FAILS


def test_lisbon_needs_one_outcome():
    C = prog("(x := 1) + (x := 2)")
    assert check_lisbon(S.TRUE, C, T("x = 2"), STATES).status is Status.HOLDS
    rep = check_hoare(S.TRUE, C, T("x = 2"), STATES)
    assert rep.status is Status.FAILS and rep.verdict.witness is not None


def test_oracle_examples():
    Q = T("x < 2")
    assert wlp_oracle(S.Skip(), Q, STATES) == {s for s in STATES if s["x"] < 2}
    assert wlp_oracle(prog("while true { skip }"), Q, STATES) == set(STATES)
    assert wpp_oracle(prog("(x := 1) + (x := 2)"), T("x = 2"), STATES) == set(STATES)
    assert wpp_oracle(prog("while true { skip }"), Q, STATES) == set()


def _check_against_oracles(C, P, Q):
    Pst = {s for s in STATES if S.holds(P, s)}
    wlp, wpp = wlp_oracle(C, Q, STATES), wpp_oracle(C, Q, STATES)
    assert wlp.complete and wpp.complete
    assert (check_hoare(P, C, Q, STATES).status is Status.HOLDS) == (Pst <= wlp)
    assert (check_lisbon(P, C, Q, STATES).status is Status.HOLDS) == (Pst <= wpp)


def test_subsumption_on_random_programs():
    rng = random.Random(17)
    for _ in range(150):
        g = ProgramGen(rng)
        _check_against_oracles(g.bool_cmd(3), g.test(1), g.test(1))


def test_subsumption_with_exact_preconditions():
    # P = wlp (resp. wpp) itself is the boundary case
    rng = random.Random(23)
    for _ in range(60):
        g = ProgramGen(rng)
        C, Q = g.bool_cmd(3), g.test(1)
        for oracle, check in ((wlp_oracle, check_hoare), (wpp_oracle, check_lisbon)):
            good = oracle(C, Q, STATES)
            ms = tuple(make_wf("bool", [(s, True)]) for s in good)
            post = A.Box(Q) if check is check_hoare else A.Diamond(Q)
            assert check_triple(TripleSpec(A.TOP, C, post, Explicit(ms))).status is Status.HOLDS
            bad = [s for s in STATES if s not in good]
            for s in bad[:3]:
                spec = TripleSpec(A.TOP, C, post, Explicit((make_wf("bool", [(s, True)]),)))
                assert check_triple(spec).status is Status.FAILS


def test_box_and_diamond_lift_to_general_models():
    rng = random.Random(29)
    for _ in range(60):
        g = ProgramGen(rng, V, 3)
        C, P, Q = g.bool_cmd(2), g.test(1), g.test(1)
        pst = [s for s in all_states(V, 3) if S.holds(P, s)]
        if not pst:
            continue
        sub = tuple(make_wf("nat", [(s, rng.randint(1, 3)) for s in rng.sample(pst, min(3, len(pst)))])
                    for _ in range(10))
        if check_hoare(P, C, Q, pst, "nat").status is Status.HOLDS:
            spec = TripleSpec(A.Box(P), C, A.Box(Q), Explicit(sub), "nat", V)
            assert check_triple(spec).status is Status.HOLDS
        if check_lisbon(P, C, Q, pst, "nat").status is Status.HOLDS:
            spec = TripleSpec(A.Diamond(P), C, A.Diamond(Q), Explicit(sub), "nat", V)
            assert check_triple(spec).status is Status.HOLDS


def test_python_states_helper():
    gen = states(x=range(2), y=[3])
    assert [s.as_dict() for s in gen.states(V)] == [{"x": 0, "y": 3}, {"x": 1, "y": 3}]
    assert len(SubsetsGen(2, gen).models(__import__("wol").get_semiring("nat"), V)) == 3


SPEC = """
vars x, y;
semiring nat;
triple inc {
  pre: sure(x >= 0);
  gen: states(x in 0..3);
  prog: { x := x + 1 };
  post: sure(x >= 1);
  expect: Holds;
}
"""


def test_spec_file_inline_program():
    (spec,) = specs(SPEC)
    assert spec.name == "inc" and spec.expect == "Holds"
    rep = check_triple(spec)
    assert rep.status is Status.HOLDS and len(rep.records) == 4
    assert "Holds over 4 generated model(s)" in rep.summary()


def test_spec_model_generators():
    (spec,) = specs(SPEC.replace("states(x in 0..3)", "model { (x = 1) -> 2, (x = 2, y = 1) -> 3 }")
                    .replace("sure(x >= 0)", "<x >= 0>@5").replace("sure(x >= 1)", "<x >= 2>@5"))
    rep = check_triple(spec)
    assert rep.status is Status.HOLDS and rep.records[0].input.mass() == 5


def test_generated_model_outside_pre_is_an_error():
    (spec,) = specs(SPEC.replace("sure(x >= 0)", "sure(x >= 1)"))
    with pytest.raises(SpecError):
        check_triple(spec)


def test_where_pre_filters():
    (spec,) = specs(SPEC.replace("sure(x >= 0)", "sure(x >= 1)").replace("0..3)", "0..3) where pre"))
    rep = check_triple(spec)
    assert rep.status is Status.HOLDS and len(rep.records) == 3
    assert rep.notes and "1 generated model" in rep.notes[0]


def test_failing_triple_reports_input():
    (spec,) = specs(SPEC.replace("sure(x >= 1)", "sure(x >= 2)"))
    rep = check_triple(spec)
    assert rep.status is Status.FAILS
    assert rep.verdict.witness == make_wf("nat", [(State.from_dict(V, {"x": 0, "y": 0}), 1)])


def test_malformed_specs():
    with pytest.raises(ParseError):
        specs(SPEC.replace("  post: sure(x >= 1);\n", ""))
    with pytest.raises(ParseError):
        specs(SPEC.replace("expect:", "colour: red; expect:"))
    with pytest.raises(ParseError):
        specs(SPEC.replace("states(x in 0..3)", "shuffle(x)"))


def test_nonconverged_loop_is_undecided():
    spec = TripleSpec(A.TOP, prog("loop [1/2] { x := x + 1 }"), A.TOP,
                      Explicit((make_wf("prob", [(STATES[0], 1)]),)), "prob", V)
    from wol.semiring import default_policy
    assert check_triple(spec, default_policy("prob", cap=4)).status is Status.UNDECIDED
