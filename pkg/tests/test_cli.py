import subprocess
import sys

import pytest

from wol.cli import (EXIT_FAIL, EXIT_OK, EXIT_PARSE, EXIT_PARTIAL, EXIT_UNDECIDED, ConfigError,
                     RunConfig, main, parse_epsilon, parse_init)


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def progs(cases):
    return cases / "programs"


def test_parse_init():
    assert parse_init("x=0, y=3") == {"x": 0, "y": 3}
    assert parse_init("n=m=2") == {"n": 2, "m": 2}
    assert parse_init("") == {}
    for bad in ("x", "x=", "x=a"):
        with pytest.raises(ConfigError):
            parse_init(bad)


def test_epsilon_config():
    assert parse_epsilon("1/1000").denominator == 1000
    with pytest.raises(ConfigError):
        parse_epsilon("-1")
    with pytest.raises(ConfigError):
        RunConfig(epsilon=parse_epsilon("1/10")).validate("nat")


def test_run_walk(capsys, progs):
    code, out, _ = run(capsys, "run", progs / "walk.wprog", "--semiring", "nat", "--init", "n=m=2")
    assert code == EXIT_OK
    assert out.splitlines()[0] == "{(x=2, y=2, n=2, m=2) ↦ 6} (mass = 6)"
    assert "converged after" in out


def test_run_collatz(capsys, progs):
    code, out, _ = run(capsys, "run", progs / "collatz.wprog", "--semiring", "det",
                       "--init", "a=3,n=3")
    assert code == EXIT_OK and "i=7" in out


def test_run_prob_reports_residual(capsys, progs):
    code, out, _ = run(capsys, "run", progs / "prob_evenodd.wprog", "--semiring", "prob")
    assert code == EXIT_OK and "residual" in out


def test_trace(capsys, progs):
    code, out, _ = run(capsys, "run", progs / "div.wprog", "--semiring", "det",
                       "--init", "a=7,b=2", "--trace")
    assert code == EXIT_OK and "approximant 0:" in out


def test_iteration_cap_gives_undecided(capsys, progs, monkeypatch):
    monkeypatch.setenv("WOL_MAX_ITER", "3")
    code, out, _ = run(capsys, "run", progs / "prob_evenodd.wprog", "--semiring", "prob")
    assert code == EXIT_UNDECIDED and "not converged" in out


def test_config_errors(capsys, progs):
    code, _, err = run(capsys, "run", progs / "walk.wprog", "--semiring", "nat", "--epsilon", "1/10")
    assert code == EXIT_PARSE and "epsilon" in err
    code, _, err = run(capsys, "run", progs / "walk.wprog", "--semiring", "reals")
    assert code == EXIT_PARSE
    code, _, _ = run(capsys, "run", progs / "nope.wprog")
    assert code == EXIT_PARSE


def test_parse_error_exit(capsys, tmp_path):
    f = tmp_path / "bad.wprog"
    f.write_text("vars x;\nx := y\n")
    code, _, err = run(capsys, "run", f)
    assert code == EXIT_PARSE and "bad.wprog:2" in err


def test_partiality_exit(capsys, tmp_path):
    f = tmp_path / "p.wprog"
    f.write_text("vars x;\n(x := 1) + (x := 2)\n")
    code, _, err = run(capsys, "run", f, "--semiring", "det")
    assert code == EXIT_PARTIAL and "partiality" in err


def test_check_specs(capsys, cases):
    code, out, _ = run(capsys, "check", cases / "specs" / "div.wspec")
    assert code == EXIT_OK and "Holds" in out


def test_check_failing_spec(capsys, tmp_path):
    f = tmp_path / "f.wspec"
    f.write_text("vars x;\ntriple t { pre: sure(true); gen: states(x in 0..2); "
                 "prog: { x := x + 1 }; post: sure(x = 1); }\n")
    code, out, _ = run(capsys, "check", f)
    assert code == EXIT_FAIL and "Fails" in out and "witness" in out


def test_rule_commands(capsys, cases):
    code, out, _ = run(capsys, "rule", "check", cases / "rules" / "basic.wrule", "--soundness")
    assert code == EXIT_OK and "Rejected" not in out
    assert "soundness: skip: Holds" in out and "Fails" not in out
    code, out, _ = run(capsys, "rule", cases / "rules" / "broken.wrule")
    assert code == EXIT_FAIL
    assert "entails-weight" in out and "shape" in out and "premise" in out


def test_spost(capsys, tmp_path):
    f = tmp_path / "c.wprog"
    f.write_text("vars x;\nskip + (x := x + 1)\n")
    code, out, _ = run(capsys, "spost", f, "states(x in 0..2)")
    assert code == EXIT_OK
    assert out.splitlines()[-1] == "3 distinct output model(s) from 3 input(s)"


def test_records_are_stable(capsys, cases):
    argv = ["check", cases / "specs" / "walk.wspec", "--format", "records"]
    first = run(capsys, *argv)
    second = run(capsys, *argv)
    assert first == second
    assert all("\t" in line for line in first[1].splitlines())
    code, out, _ = run(capsys, "run", cases / "programs" / "walk.wprog", "--semiring", "nat",
                       "--init", "n=1,m=1", "--format", "records")
    lines = out.splitlines()
    assert lines[0].startswith("run\tsemiring=nat\tconverged=true")
    assert lines[1] == "out\tx=1\ty=1\tn=1\tm=1\tweight=2"


def test_console_entry_point(cases):
    r = subprocess.run([sys.executable, "-m", "wol.cli", "run", str(cases / "programs" / "div.wprog"),
                        "--semiring", "det", "--init", "a=7,b=2"], capture_output=True, text=True)
    assert r.returncode == 0 and "q=3" in r.stdout and "r=1" in r.stdout
