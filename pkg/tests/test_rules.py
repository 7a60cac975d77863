import random
from fractions import Fraction as F

import pytest

from wol import assertion_ast as A
from wol import syntax as S
from wol.assertions import Status, satisfies
from wol.parser import ParseError, parse_assertion, parse_block_file, parse_program, parse_test
from wol.randprog import ProgramGen
from wol.rules import (OBLIGATION_KINDS, RULE_IDS, SCHEMAS, Derivation, RuleInstance, SchemaError,
                       apply_rule, characteristic, check_soundness_sample, derive_loop_free,
                       instances_from_blockfile, load_instances, meets_expectation, parse_expect)
from wol.semantics import eval_on
from wol.semiring import PartialityError
from wol.triples import states
from wol.weighting import State, make_wf

GOLDEN = {
    "Skip", "Seq", "Plus", "Assume", "Iter", "False", "True", "Scale", "Disj", "Conj", "Choice",
    "Exists", "Consequence", "Assign", "Constancy", "If", "If1", "If2", "While", "Invariant",
    "Variant", "SeqHoare", "SeqLisbon", "IfHoare", "IfLisbon", "LisbonVariant", "AssumeHHL",
    "Havoc2", "HavocN",
}
V = ("x", "y")


def units(sr, xs=range(3)):
    return [make_wf(sr, [(State.from_dict(V, {"x": x, "y": 0}), 1 if sr != "bool" else True)])
            for x in xs]


def P(text):
    return parse_assertion(text, V)


def cmd(text, sr=None):
    return parse_program(f"vars x, y;\n{text}", sr).body


def corpus(cases):
    for f in sorted((cases / "rules").glob("*.wrule")):
        for inst in load_instances(f):
            yield f.name, inst


def test_registry_matches_golden_list():
    assert set(RULE_IDS) == GOLDEN == set(SCHEMAS)
    assert len(RULE_IDS) == 29


def test_skip_has_no_obligations():
    res = apply_rule(RuleInstance("Skip", {"phi": P("sure(x = 0)")}, units("bool")))
    assert res.accepted and res.obligations == []
    assert res.conclusion.cmd == S.Skip()


def test_corpus_meets_expectations_and_is_sound(cases):
    seen = 0
    for fname, inst in corpus(cases):
        res = apply_rule(inst)
        assert meets_expectation(res), (fname, inst.name, res.summary())
        if res.accepted:
            seen += 1
            assert check_soundness_sample(res).status is Status.HOLDS, (fname, inst.name)
    assert seen >= 25


def test_broken_instances_name_their_obligation(cases):
    insts = {i.name: i for i in load_instances(cases / "rules" / "broken.wrule")}
    want = {"bad_assume": "entails-weight", "bad_seq": "shape", "bad_invariant": "premise"}
    for name, kind in want.items():
        res = apply_rule(insts[name])
        assert res.status == "Rejected"
        assert kind in {o.kind for o in res.failed()}
        assert all(o.kind in OBLIGATION_KINDS for o in res.obligations)


def test_parse_expect():
    assert parse_expect("Accepted") == ("Accepted", None)
    assert parse_expect("Rejected( shape )") == ("Rejected", "shape")


def test_seq_midpoint_must_match():
    slots = {"phi": P("sure(x = 0)"), "C1": cmd("x := 1"), "theta": P("sure(x = 1)"),
             "theta2": P("sure(x = 1)"), "C2": cmd("x := 2"), "psi": P("sure(x = 2)")}
    assert apply_rule(RuleInstance("Seq", slots, units("bool"))).accepted
    slots["theta2"] = P("box(x = 1)")
    res = apply_rule(RuleInstance("Seq", slots, units("bool")))
    assert [o.kind for o in res.failed()] == ["shape"]


def test_prob_plus_with_incompatible_guards():
    c1 = cmd("assume(2/3); x := 1", "prob")
    c2 = cmd("assume(2/3); x := 2", "prob")
    slots = {"phi": P("sure(true)"), "C1": c1, "psi1": P("<x = 1>@2/3"),
             "phi2": P("sure(true)"), "C2": c2, "psi2": P("<x = 2>@2/3")}
    res = apply_rule(RuleInstance("Plus", slots, units("prob"), "prob"))
    assert res.accepted  # the premises are fine in isolation
    with pytest.raises(PartialityError):
        check_soundness_sample(res)


def test_schema_errors():
    with pytest.raises(SchemaError):
        apply_rule(RuleInstance("Skip", {}, []))
    with pytest.raises(SchemaError):
        apply_rule(RuleInstance("Skip", {"phi": P("sure(x = 0)"), "C": S.Skip()}, []))
    with pytest.raises(SchemaError):
        apply_rule(RuleInstance("Frobnicate", {}, []))
    with pytest.raises(SchemaError):
        apply_rule(RuleInstance("Skip", {"phi": S.TRUE}, []))


def test_assign_outside_substitution_fragment():
    m = units("bool")[0]
    with pytest.raises(SchemaError):
        apply_rule(RuleInstance("Assign", {"phi": A.Singleton(m), "x": "x", "E": S.Int(1)},
                                units("bool")))


def test_assign_uses_substitution():
    res = apply_rule(RuleInstance("Assign", {"phi": P("sure(x >= 5)"), "x": "x",
                                             "E": S.BinOp("+", S.Var("y"), S.Int(1))}, units("bool")))
    assert res.accepted and res.conclusion.pre == P("sure(y + 1 >= 5)")


def test_constancy_side_condition():
    slots = {"phi": P("sure(x = 0)"), "C": cmd("x := 1"), "psi": P("sure(x = 1)"),
             "P": parse_test("y = 0", V)}
    assert apply_rule(RuleInstance("Constancy", slots, units("bool"))).accepted
    slots["C"] = cmd("x := 1; y := 1")
    slots["psi"] = P("sure(x = 1 && y = 1)")
    res = apply_rule(RuleInstance("Constancy", slots, units("bool")))
    assert "shape" in {o.kind for o in res.failed()}


def test_rule_file_errors():
    base = "vars x;\nrule r {\n%s\n}\n"
    with pytest.raises(ParseError):
        instances_from_blockfile(parse_block_file(base % "phi: sure(x = 0);", "<t>"))
    with pytest.raises(ParseError):
        instances_from_blockfile(parse_block_file(base % "schema: Skip; phi: sure(x = 0); z: 1;", "<t>"))
    with pytest.raises(ParseError):
        instances_from_blockfile(parse_block_file(base % "schema: Seq; phi: sure(x = 0);", "<t>"))
    (inst,) = instances_from_blockfile(parse_block_file(
        "vars x;\nrule Skip { phi: sure(x = 0); models: states(x in 0..1); }", "<t>"))
    assert inst.rule == "Skip" and len(inst.models) == 2


# ------------------------------------------------------------- derivations

def test_characteristic_assertion():
    s0, s1 = (State.from_dict(V, {"x": i, "y": 0}) for i in range(2))
    m = make_wf("nat", [(s0, 2), (s1, 3)])
    assert satisfies(m, characteristic(m)).ok
    assert not satisfies(make_wf("nat", [(s0, 3), (s1, 2)]), characteristic(m)).ok
    assert satisfies(make_wf("nat", []), characteristic(make_wf("nat", []))).ok


@pytest.mark.parametrize("sr", ["bool", "nat", "trop", "lang"])
def test_derive_loop_free_random(sr):
    rng = random.Random(41)
    sts = [State.from_dict(V, {"x": x, "y": y}) for x in range(3) for y in range(2)]
    one = {"bool": True, "nat": 1, "trop": 0, "lang": frozenset({""})}[sr]
    for _ in range(15):
        g = ProgramGen(rng, V, 3)
        C = S.Skip()
        for _ in range(rng.randint(1, 3)):
            C = S.Seq(C, rng.choice([g.assign(), S.Assume(g.test(0)),
                                     S.Plus(g.assign(), g.assign())]))
        m = make_wf(sr, [(s, one) for s in rng.sample(sts, 2)])
        d = derive_loop_free(C, m)
        assert isinstance(d, Derivation)
        assert d.accepted, d.render()
        assert d.conclusion.pre == characteristic(m)
        assert d.conclusion.post == characteristic(eval_on(C, m).wf)


def test_derive_weighted_assume_uses_choice():
    s0, s1 = (State.from_dict(V, {"x": i, "y": 0}) for i in range(2))
    m = make_wf("nat", [(s0, 1), (s1, 1)])
    C = S.Seq(S.Assume(parse_test("x = 0", V)), S.Assign("y", S.Int(1)))
    d = derive_loop_free(C, m)
    assert d.accepted
    assert "Choice" in {n.result.instance.rule for n in d.nodes()}


def test_derive_rejects_loops():
    with pytest.raises(SchemaError):
        derive_loop_free(cmd("while x < 2 { x := x + 1 }"), units("bool")[0])
