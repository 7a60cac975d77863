"""Every shipped spec and rule file, checked against its ``expect`` slot."""
import pytest

from wol.rules import apply_rule, load_instances, meets_expectation
from wol.triples import check_triple, load_specs

from conftest import CASES

SPECS = sorted((CASES / "specs").glob("*.wspec"))
RULES = sorted((CASES / "rules").glob("*.wrule"))


def test_manifest_is_complete():
    names = {p.stem for p in SPECS}
    assert {"div", "collatz", "prob_evenodd", "walk", "shortest_path", "noninterference"} <= names
    assert {"basic", "broken", "collatz", "div", "hyper"} <= {p.stem for p in RULES}


@pytest.mark.parametrize("path", SPECS, ids=lambda p: p.stem)
def test_spec_file(path):
    for spec in load_specs(path):
        rep = check_triple(spec)
        assert spec.expect is not None
        assert rep.status.value == spec.expect, rep.summary()


@pytest.mark.parametrize("path", RULES, ids=lambda p: p.stem)
def test_rule_file(path):
    for inst in load_instances(path):
        res = apply_rule(inst)
        assert inst.expect is not None
        assert meets_expectation(res), res.summary()
