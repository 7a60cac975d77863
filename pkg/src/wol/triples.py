"""Semantic validation of outcome triples over finite model sets.

A triple is checked extensionally: every generated precondition model is
run through the program and the output is tested against the
postcondition.  The claim is therefore about the generated models only.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import assertion_ast as A
from . import syntax as S
from .assertions import HOLDS, Status, Verdict, satisfies
from .parser import (ParseError, Parser, load_program, parse_block_file, slot_parser,
                     slot_text, tokenize)
from .semantics import Evaluator
from .semiring import default_policy, get_semiring
from .weighting import State, WeightingFunction


class SpecError(ValueError):
    """Ill-formed triple specification (e.g. a generated model violates pre)."""


# ----------------------------------------------------------------- generators

@dataclass(frozen=True)
class StatesGen:
    """Unit models of all states in a product of value ranges.

    ``entries`` are (name, Domain) pairs; ``derived`` are (name, Expr)
    evaluated in order.  Names that are not program variables act as
    helpers and are dropped; unmentioned program variables are 0.
    """
    entries: tuple
    derived: tuple = ()

    def states(self, vars):
        out = []
        seen = set()

        def rec(i, env):
            if i == len(self.entries):
                env2 = dict(env)
                for n, e in self.derived:
                    env2[n] = S.eval_expr(e, None, env2)
                st = State.from_dict(vars, {k: v for k, v in env2.items() if k in vars})
                if st not in seen:
                    seen.add(st)
                    out.append(st)
                return
            n, dom = self.entries[i]
            for v in dom.values(env):
                env[n] = v
                rec(i + 1, env)
            env.pop(n, None)

        rec(0, {})
        return out

    def models(self, sr, vars):
        return [WeightingFunction._raw(sr, {s: sr.one}) for s in self.states(vars)]


@dataclass(frozen=True)
class SubsetsGen:
    """Models supported on up to k states of an inner generator.

    Weights are one, except in prob where each subset gets the uniform
    distribution.
    """
    k: int
    inner: StatesGen

    def models(self, sr, vars):
        sts = self.inner.states(vars)
        out = []
        for r in range(1, self.k + 1):
            for sub in itertools.combinations(sts, r):
                w = Fraction(1, r) if sr.name == "prob" else sr.one
                out.append(WeightingFunction(sr, {s: w for s in sub}))
        return out


@dataclass(frozen=True)
class ModelGen:
    """An explicit weighting function: ((assignments), weight term) pairs."""
    entries: tuple

    def models(self, sr, vars):
        d = {}
        for assign, w in self.entries:
            st = State.from_dict(vars, dict(assign))
            wv = A.weight_value(w, sr)
            if st in d:
                raise SpecError(f"state {st.render()} listed twice in a model")
            d[st] = wv
        return [WeightingFunction(sr, d)]


@dataclass(frozen=True)
class ListGen:
    gens: tuple

    def models(self, sr, vars):
        out = []
        for g in self.gens:
            out.extend(g.models(sr, vars))
        return out


@dataclass(frozen=True)
class Explicit:
    """Already-built weighting functions."""
    items: tuple

    def models(self, sr, vars):
        return list(self.items)


@dataclass(frozen=True)
class Filtered:
    """Marks a generator whose models are filtered by the precondition."""
    inner: object

    def models(self, sr, vars):
        return self.inner.models(sr, vars)


def states(**ranges):
    """Python-side helper: ``states(a=range(0, 21), b=[1, 2])``."""
    ents = tuple((n, A.Domain("set", items=tuple(v))) for n, v in ranges.items())
    return StatesGen(ents)


# ---------------------------------------------------------------- triple spec

@dataclass
class TripleSpec:
    pre: object
    cmd: S.Command
    post: object
    gen: object
    sr: object = "bool"
    vars: tuple = ()
    name: str = ""
    expect: str | None = None
    graph: object = None

    def models(self):
        return self.gen.models(get_semiring(self.sr), self.vars)


@dataclass
class ModelRecord:
    input: WeightingFunction
    output: WeightingFunction | None
    verdict: Verdict
    converged: bool = True
    residual: object = 0


@dataclass
class TripleReport:
    verdict: Verdict
    records: list = field(default_factory=list)
    name: str = ""
    notes: list = field(default_factory=list)

    @property
    def status(self):
        return self.verdict.status

    def summary(self):
        n = len(self.records)
        s = f"{self.name + ': ' if self.name else ''}{self.verdict.render()} over {n} generated model(s)"
        tol = max((r.residual for r in self.records if isinstance(r.residual, Fraction)), default=0)
        if self.verdict.ok and tol:
            s += f", within {tol}"
        return s


def combine(verdicts):
    """Fails if any fails; else Undecided if any; else Holds."""
    und = None
    for v in verdicts:
        if v.failed:
            return v
        if v.undecided_ and und is None:
            und = v
    return und or HOLDS


def check_triple(spec: TripleSpec, policy=None, models=None, evaluator=None, options=None) -> TripleReport:
    """Validate <pre> cmd <post> on every generated model."""
    sr = get_semiring(spec.sr)
    pol = policy or default_policy(sr)
    ev = evaluator or Evaluator(sr, pol)
    models = spec.models() if models is None else list(models)
    filtering = isinstance(spec.gen, Filtered)
    records = []
    skipped = 0
    for m in models:
        pv = satisfies(m, spec.pre, options=options)
        if pv.failed and filtering:
            skipped += 1
            continue
        if pv.failed:
            raise SpecError(f"generated model {m.render()} violates the precondition: {pv.reason}")
        if pv.undecided_:
            records.append(ModelRecord(m, None, Verdict.undecided(f"precondition: {pv.reason}")))
            continue
        r = ev.run_on(spec.cmd, m)
        if not r.converged:
            v = Verdict.undecided("loop evaluation hit the iteration cap")
        else:
            tol = r.residual if (sr.name == "prob" and r.residual) else 0
            v = satisfies(r.wf, spec.post, tol=tol, options=options)
            if v.failed and v.witness is None:
                v = Verdict.fails(m, v.reason)
        records.append(ModelRecord(m, r.wf, v, r.converged, r.residual))
    verdict = combine([r.verdict for r in records])
    if verdict.failed:
        bad = next(r for r in records if r.verdict.failed)
        verdict = Verdict.fails(bad.input, _fail_reason(bad))
    notes = [f"{skipped} generated model(s) outside the precondition skipped"] if skipped else []
    return TripleReport(verdict, records, spec.name, notes)


def _fail_reason(rec):
    out = rec.output.render() if rec.output is not None else "?"
    r = rec.verdict.reason
    return f"output {out}" + (f": {r}" if r else "")


def check_hoare(P, C, Q, states, sr="bool", policy=None) -> TripleReport:
    """<sure P> C <box Q> on unit models of the P-states."""
    return _check_modal(P, C, Q, states, sr, policy, A.Box)


def check_lisbon(P, C, Q, states, sr="bool", policy=None) -> TripleReport:
    """<sure P> C <dia Q> on unit models of the P-states."""
    return _check_modal(P, C, Q, states, sr, policy, A.Diamond)


def _check_modal(P, C, Q, states, sr, policy, post):
    sr = get_semiring(sr)
    sts = [s for s in states if S.holds(P, s)]
    ms = tuple(WeightingFunction._raw(sr, {s: sr.one}) for s in sts)
    spec = TripleSpec(A.Sure(P), C, post(Q), Explicit(ms), sr)
    return check_triple(spec, policy)


# --------------------------------------------------------------------- oracles

class OracleSet(frozenset):
    """A state set with a flag telling whether every loop was fully explored."""
    complete = True


def relational_post(C, s, cap=10_000):
    """Set of final states of C from s, ignoring weights (reachability)."""
    flag = [True]
    return frozenset(_rel(C, s, cap, flag)), flag[0]


def _guard(e, s):
    if isinstance(e, S.Lit):
        return bool(e.raw)
    return S.holds(e, s)


def _rel(C, s, cap, flag):
    t = type(C)
    if t is S.Skip:
        return {s}
    if t is S.Assign:
        return {s.set(C.var, S.eval_expr(C.expr, s))}
    if t is S.Assume:
        return {s} if _guard(C.e, s) else set()
    if t is S.Seq:
        out = set()
        for x in _rel(C.first, s, cap, flag):
            out |= _rel(C.second, x, cap, flag)
        return out
    if t is S.Plus:
        return _rel(C.left, s, cap, flag) | _rel(C.right, s, cap, flag)
    if t is S.Iter:
        reach = {s}
        todo = [s]
        steps = 0
        while todo:
            steps += 1
            if steps > cap:
                flag[0] = False
                break
            x = todo.pop()
            if not _guard(C.cont, x):
                continue
            for y in _rel(C.body, x, cap, flag):
                if y not in reach:
                    reach.add(y)
                    todo.append(y)
        return {x for x in reach if _guard(C.exit, x)}
    raise TypeError(f"not a command: {C!r}")


def wlp_oracle(C, Q, states, cap=10_000) -> OracleSet:
    """States all of whose outcomes satisfy Q."""
    out, complete = set(), True
    for s in states:
        post, ok = relational_post(C, s, cap)
        complete = complete and ok
        if all(S.holds(Q, t) for t in post):
            out.add(s)
    r = OracleSet(out)
    r.complete = complete
    return r


def wpp_oracle(C, Q, states, cap=10_000) -> OracleSet:
    """States with at least one outcome satisfying Q."""
    out, complete = set(), True
    for s in states:
        post, ok = relational_post(C, s, cap)
        complete = complete and ok
        if any(S.holds(Q, t) for t in post):
            out.add(s)
    r = OracleSet(out)
    r.complete = complete
    return r


# ------------------------------------------------------------------ spec files

def parse_generator(p: Parser):
    """gen := item (',' item)* ['where' 'pre']

    Items are states(..), subsets(k, states(..)), model {..} and
    models("file").  A trailing ``where pre`` keeps only the models that
    satisfy the precondition instead of treating others as spec errors.
    """
    gens = [_gen_item(p)]
    while p.accept(","):
        gens.append(_gen_item(p))
    g = gens[0] if len(gens) == 1 else ListGen(tuple(gens))
    if p.tok.kind == "ident" and p.tok.text == "where":
        p.i += 1
        if not (p.tok.kind == "ident" and p.tok.text == "pre"):
            p.error("expected 'pre' after 'where'")
        p.i += 1
        g = Filtered(g)
    return g


def _gen_item(p: Parser):
    t = p.tok
    name = p.ident()
    if name == "states":
        p.expect("(")
        g = _states_body(p)
        p.expect(")")
        return g
    if name == "subsets":
        p.expect("(")
        k = p.integer()
        p.expect(",")
        if p.ident() != "states":
            p.error("subsets expects states(...)")
        p.expect("(")
        g = _states_body(p)
        p.expect(")")
        p.expect(")")
        return SubsetsGen(k, g)
    if name == "model":
        return _model_body(p)
    if name == "models":
        p.expect("(")
        s = p.tok
        if s.kind != "str":
            p.error("models expects a file name")
        p.i += 1
        p.expect(")")
        return _ModelsFile(s.text[1:-1], p.path, p.vars)
    p.error(f"unknown generator {name!r}", t)


def _states_body(p: Parser):
    entries, derived = [], []
    saved = list(p.bound)
    while True:
        n = p.ident()
        if p.accept("in"):
            entries.append((n, p.domain()))
        else:
            p.expect("=")
            derived.append((n, p.expr()))
        p.bound.append(n)
        if not (p.accept(",") or p.accept(";")):
            break
    p.bound = saved
    return StatesGen(tuple(entries), tuple(derived))


def _model_body(p: Parser):
    p.expect("{")
    entries = []
    while not p.accept("}"):
        p.expect("(")
        assign = []
        if not p.accept(")"):
            while True:
                x = p.ident()
                p._check_var(x, p.tok, allow_bound=False)
                p.expect("=")
                assign.append((x, p.integer()))
                if p.accept(")"):
                    break
                p.expect(",")
        p.expect("->")
        entries.append((tuple(assign), p.weight_term()))
        p.accept(",")
    return ModelGen(tuple(entries))


@dataclass(frozen=True)
class _ModelsFile:
    file: str
    spec_path: str | None
    vars: tuple

    def models(self, sr, vars):
        base = Path(self.spec_path).parent if self.spec_path else Path(".")
        path = base / self.file
        p = Parser(tokenize(path.read_text(encoding="utf-8"), str(path)), path=str(path), vars=vars)
        p.mode = "assert"
        g = parse_generator(p)
        if p.tok.kind != "eof":
            p.error(f"unexpected {p.tok.text!r}")
        return g.models(sr, vars)


def _program_slot(slot, bf, sr):
    toks = slot.toks
    if len(toks) == 1 and toks[0].kind == "str":
        path = bf.base_dir / toks[0].text[1:-1]
        prog = load_program(path, sr)
        return prog.body, prog.vars, prog.graph
    p = slot_parser(slot, bf.vars, bf.graph, bf.path, sr)
    p.mode = "prog"
    if not p.at("{"):
        p.error("prog expects a file name or a { block }")
    body = p.block()
    if p.tok.kind != "eof":
        p.error(f"unexpected {p.tok.text!r}")
    return body, bf.vars, bf.graph


def _assertion_slot(slot, vars, graph, path, sr):
    p = slot_parser(slot, vars, graph, path, sr)
    a = p.assertion()
    if p.tok.kind != "eof":
        p.error(f"unexpected {p.tok.text!r}")
    return a


def specs_from_blockfile(bf, semiring=None):
    """TripleSpecs for every ``triple`` block of a parsed spec file."""
    out = []
    for b in bf.blocks:
        if b.kind != "triple":
            continue
        for k in ("pre", "gen", "prog", "post"):
            if k not in b.slots:
                raise ParseError(f"triple {b.name or '?'} lacks a {k!r} slot", b.line, 1, bf.path)
        extra = set(b.slots) - {"pre", "gen", "prog", "post", "semiring", "expect"}
        if extra:
            raise ParseError(f"unknown slot(s) {sorted(extra)}", b.line, 1, bf.path)
        srname = semiring
        if srname is None and "semiring" in b.slots:
            srname = slot_text(b.slots["semiring"])
        srname = srname or bf.semiring or "bool"
        sr = get_semiring(srname)
        cmd, vars, graph = _program_slot(b.slots["prog"], bf, sr)
        if bf.vars and set(bf.vars) - set(vars):
            vars = tuple(dict.fromkeys(vars + bf.vars))
        graph = graph or bf.graph
        pre = _assertion_slot(b.slots["pre"], vars, graph, bf.path, sr)
        post = _assertion_slot(b.slots["post"], vars, graph, bf.path, sr)
        gp = slot_parser(b.slots["gen"], vars, graph, bf.path, sr)
        gen = parse_generator(gp)
        if gp.tok.kind != "eof":
            gp.error(f"unexpected {gp.tok.text!r}")
        expect = slot_text(b.slots["expect"]) if "expect" in b.slots else None
        out.append(TripleSpec(pre, cmd, post, gen, sr, vars, b.name, expect, graph))
    return out


def load_specs(path, semiring=None):
    path = Path(path)
    bf = parse_block_file(path.read_text(encoding="utf-8"), str(path))
    return specs_from_blockfile(bf, semiring)


STATUS_BY_NAME = {s.value: s for s in Status}
