"""Proof-rule instance checking.

A rule instance fills the named slots of a rule schema.  ``apply_rule``
builds the schema's conclusion and a list of obligations:

* ``shape``: syntactic agreement between slots (e.g. the Seq midpoint),
  and syntactic side conditions such as free/modified variables;
* ``entails-weight``: a guard has a fixed weight on every model;
* ``implication-on-models``: one assertion implies another on the models
  at hand (Consequence);
* ``premise``: a premise triple, validated on the instance's models;
* ``family-premise-at-n``: a premise of an indexed family, for n up to a cap;
* ``convergence``: partial sums of witness sequences satisfy the limit.

An instance is accepted iff every obligation holds.  Semantic obligations
are checked on the supplied model universe (plus the unit models of its
states), so acceptance is evidence on that universe, not a proof.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import assertion_ast as A
from . import syntax as S
from .assertions import (HOLDS, SatOptions, UnsupportedSubstitution, Verdict, assertion_free_vars,
                         satisfies, substitute)
from .hyper import FRAGMENT, check_fragment, transform_assign, transform_assume, transform_havoc
from .parser import ParseError, load_program, parse_block_file, slot_parser, slot_text
from .semantics import Evaluator
from .semiring import default_policy, get_semiring
from .triples import Explicit, TripleSpec, check_triple, combine, parse_generator
from .weighting import WeightingFunction, wf_add

RULE_IDS = (
    "Skip", "Seq", "Plus", "Assume", "Iter", "False", "True", "Scale", "Disj", "Conj",
    "Choice", "Exists", "Consequence", "Assign", "Constancy", "If", "If1", "If2", "While",
    "Invariant", "Variant", "SeqHoare", "SeqLisbon", "IfHoare", "IfLisbon", "LisbonVariant",
    "AssumeHHL", "Havoc2", "HavocN",
)

OBLIGATION_KINDS = ("shape", "entails-weight", "implication-on-models", "premise",
                    "family-premise-at-n", "convergence")

# slot kinds: assert, template (assertion in the index var), test, ttemplate (test in the
# index var), cmd, wexpr, weight, var, expr, int, domain
SCHEMAS = {
    "Skip": {"phi": "assert"},
    "Seq": {"phi": "assert", "C1": "cmd", "theta": "assert", "theta2": "assert", "C2": "cmd",
            "psi": "assert"},
    "Plus": {"phi": "assert", "C1": "cmd", "psi1": "assert", "phi2": "assert", "C2": "cmd",
             "psi2": "assert"},
    "Assume": {"phi": "assert", "e": "wexpr", "u": "weight"},
    "Iter": {"C": "cmd", "e": "wexpr", "e2": "wexpr", "phi_n": "template", "psi_n": "template",
             "psi_inf": "assert"},
    "False": {"C": "cmd", "phi": "assert"},
    "True": {"phi": "assert", "C": "cmd"},
    "Scale": {"u": "weight", "phi": "assert", "C": "cmd", "psi": "assert"},
    "Disj": {"phi1": "assert", "psi1": "assert", "phi2": "assert", "psi2": "assert", "C": "cmd"},
    "Conj": {"phi1": "assert", "psi1": "assert", "phi2": "assert", "psi2": "assert", "C": "cmd"},
    "Choice": {"t": "var", "T": "domain", "phi": "template", "C": "cmd", "psi": "template"},
    "Exists": {"t": "var", "T": "domain", "phi": "template", "C": "cmd", "psi": "template"},
    "Consequence": {"phi1": "assert", "phi": "assert", "C": "cmd", "psi": "assert",
                    "psi1": "assert"},
    "Assign": {"phi": "assert", "x": "var", "E": "expr"},
    "Constancy": {"phi": "assert", "C": "cmd", "psi": "assert", "P": "test"},
    "If": {"b": "test", "phi1": "assert", "C1": "cmd", "psi1": "assert", "phi2": "assert",
           "C2": "cmd", "psi2": "assert"},
    "If1": {"b": "test", "phi": "assert", "C1": "cmd", "C2": "cmd", "psi": "assert"},
    "If2": {"b": "test", "phi": "assert", "C1": "cmd", "C2": "cmd", "psi": "assert"},
    "While": {"b": "test", "C": "cmd", "phi_n": "template", "psi_n": "template",
              "psi_inf": "assert"},
    "Invariant": {"P": "test", "b": "test", "C": "cmd"},
    "Variant": {"b": "test", "C": "cmd", "phi_n": "template"},
    "SeqHoare": {"P": "test", "C1": "cmd", "Q": "test", "Q2": "test", "C2": "cmd", "R": "test"},
    "SeqLisbon": {"P": "test", "C1": "cmd", "Q": "test", "Q2": "test", "C2": "cmd", "R": "test"},
    "IfHoare": {"P": "test", "b": "test", "C1": "cmd", "C2": "cmd", "Q": "test"},
    "IfLisbon": {"P": "test", "b": "test", "C1": "cmd", "C2": "cmd", "Q": "test"},
    "LisbonVariant": {"b": "test", "C": "cmd", "P_n": "ttemplate"},
    "AssumeHHL": {"phi": "assert", "b": "test"},
    "Havoc2": {"phi": "assert", "x": "var", "a": "int", "b2": "int"},
    "HavocN": {"phi": "assert", "x": "var"},
}

INDEX = "n"
# "body" is accepted for the single command slot of loop rules
SLOT_ALIASES = {"body": "C"}
DEFAULT_CAP = 32


class SchemaError(ValueError):
    """Instance slots do not match the rule's schema."""


@dataclass(frozen=True)
class Triple:
    pre: object
    cmd: object
    post: object

    def render(self):
        from .pretty import pretty_assertion, pretty_command
        c = " ".join(pretty_command(self.cmd).split())
        return f"<{pretty_assertion(self.pre)}> {c} <{pretty_assertion(self.post)}>"


@dataclass
class Obligation:
    kind: str
    what: str
    verdict: Verdict

    def render(self):
        return f"[{self.kind}] {self.what}: {self.verdict.render()}"


@dataclass
class RuleInstance:
    rule: str
    slots: dict
    models: list = field(default_factory=list)
    sr: object = "bool"
    name: str = ""
    cap: int = DEFAULT_CAP
    witnesses: list = field(default_factory=list)  # user-supplied convergence witness sequences
    claimed: Triple | None = None
    expect: str | None = None


@dataclass
class RuleResult:
    instance: RuleInstance
    conclusion: Triple
    obligations: list

    @property
    def accepted(self):
        return all(o.verdict.ok for o in self.obligations)

    @property
    def status(self):
        if self.accepted:
            return "Accepted"
        if any(o.verdict.failed for o in self.obligations):
            return "Rejected"
        return "Undecided"

    def failed(self):
        return [o for o in self.obligations if not o.verdict.ok]

    def summary(self):
        s = f"{self.instance.name + ': ' if self.instance.name else ''}{self.instance.rule} {self.status}"
        bad = self.failed()
        if bad:
            s += " (" + "; ".join(f"{o.kind}: {o.what}" for o in bad) + ")"
        return s


# --------------------------------------------------------------- obligations

class _Ctx:
    def __init__(self, inst: RuleInstance, policy=None, options=None):
        self.inst = inst
        self.sr = get_semiring(inst.sr)
        self.policy = policy or default_policy(self.sr)
        self.ev = Evaluator(self.sr, self.policy)
        base = list(inst.models)
        units = []
        seen = set(base)
        for m in inst.models:
            for s in m.support():
                u = WeightingFunction._raw(self.sr, {s: self.sr.one})
                if u not in seen:
                    seen.add(u)
                    units.append(u)
        self.universe = base + units
        self.opts = options or SatOptions(nat_cap=inst.cap, pool=tuple(self.universe))

    def sat(self, m, phi, env=None, tol=0):
        return satisfies(m, phi, env, tol, self.opts)

    def models_for(self, phi, env=None, extra=()):
        out, seen = [], set()
        for m in list(self.universe) + list(extra):
            if m in seen or m.sr is not self.sr:
                continue
            seen.add(m)
            if self.sat(m, phi, env).ok:
                out.append(m)
        return out

    def premise(self, kind, what, pre, cmd, post, env_pre=None, env_post=None, extra=()):
        models = self.models_for(pre, env_pre, extra)
        if not models:
            return Obligation(kind, what, Verdict.holds(reason="vacuous on the supplied models"))
        vs = []
        for m in models:
            r = self.ev.run_on(cmd, m)
            if not r.converged:
                vs.append(Verdict.undecided("evaluation hit the iteration cap"))
                continue
            tol = r.residual if (self.sr.name == "prob" and r.residual) else 0
            v = self.sat(r.wf, post, env_post if env_post is not None else env_pre, tol)
            if v.failed:
                v = Verdict.fails(m, f"output {r.wf.render()} {v.reason}".strip())
            vs.append(v)
        return Obligation(kind, what, combine(vs))

    def entails(self, what, phi, e, u, env=None, extra=()):
        models = self.models_for(phi, env, extra)
        for m in models:
            for s in m.support():
                got = S.eval_wexpr(e, s, self.sr)
                if got != u:
                    return Obligation("entails-weight", what, Verdict.fails(
                        s, f"guard weighs {self.sr.render(got)}, expected {self.sr.render(u)}"))
        return Obligation("entails-weight", what, HOLDS)

    def implies(self, what, phi, psi, models):
        vs = []
        for m in models:
            v = self.sat(m, phi)
            if not v.ok:
                continue
            w = self.sat(m, psi)
            if w.failed:
                return Obligation("implication-on-models", what,
                                  Verdict.fails(m, "antecedent holds but consequent fails"))
            vs.append(w)
        return Obligation("implication-on-models", what, combine(vs))

    def weight(self, u):
        return A.weight_value(u, self.sr)

    def spost(self, cmd, phi):
        outs = []
        for m in self.models_for(phi):
            r = self.ev.run_on(cmd, m)
            if r.converged:
                outs.append(r.wf)
        return outs


def _shape(what, a, b):
    if a == b:
        return Obligation("shape", what, HOLDS)
    from .pretty import pretty_assertion, pretty_test
    rend = lambda x: pretty_test(x) if isinstance(x, S.Test) else (
        pretty_assertion(x) if isinstance(x, A.Assertion) else repr(x))
    return Obligation("shape", what, Verdict.fails(None, f"{rend(a)} differs from {rend(b)}"))


def _env(k):
    return {INDEX: k}


def _restrict(m, b):
    d = {s: w for s, w in m.items() if S.holds(b, s)}
    return WeightingFunction._raw(m.sr, d)


def _mass_frac(m):
    v = m.mass()
    return v if isinstance(v, Fraction) else Fraction(0)


def _convergence(ctx, starts, step, split, psi_n, psi_inf, cap):
    """Check sum of natural witnesses against psi_inf.

    ``step`` maps the running part to the next one, ``split`` maps a part
    to (continuing, exiting).  Returns (Obligation, chain models per n).
    """
    sr = ctx.sr
    chains = {}
    if not starts and not ctx.inst.witnesses:
        return Obligation("convergence", "psi_n converges to psi_inf",
                          Verdict.undecided("no witness sequences")), chains
    vs = []
    for m in starts:
        total = WeightingFunction._raw(sr, {})
        f = m
        ok_family = True
        exact = False
        for k in range(cap + 1):
            chains.setdefault(k, []).append(f)
            cont, ex = split(f, k)
            if not ctx.sat(ex, psi_n, _env(k)).ok:
                ok_family = False
            total = wf_add(total, ex)
            if cont.is_zero():
                exact = True
                break
            f = step(cont)
            if f.is_zero():
                exact = True
                break
        if not ok_family:
            vs.append(Verdict.undecided("natural witnesses leave the psi family"))
            continue
        if exact:
            v = ctx.sat(total, psi_inf)
        elif sr.name == "prob":
            v = ctx.sat(total, psi_inf, tol=_mass_frac(f))
        else:
            v = Verdict.undecided(f"witness sequence still running after {cap} steps")
        if v.failed:
            v = Verdict.fails(m, f"partial sum {total.render()} misses the limit")
        vs.append(v)
    for seq in ctx.inst.witnesses:
        total = WeightingFunction._raw(sr, {})
        good = True
        for k, w in enumerate(seq):
            if not ctx.sat(w, psi_n, _env(k)).ok:
                good = False
                break
            total = wf_add(total, w)
        if good:
            v = ctx.sat(total, psi_inf)
            vs.append(v if not v.failed else Verdict.fails(total, "supplied witnesses miss the limit"))
    return Obligation("convergence", "psi_n converges to psi_inf", combine(vs)), chains


# ------------------------------------------------------------------ schemas

def _check_slots(inst):
    if inst.rule not in SCHEMAS:
        raise SchemaError(f"unknown rule {inst.rule!r}")
    want = set(SCHEMAS[inst.rule])
    have = set(inst.slots)
    if want - have:
        raise SchemaError(f"{inst.rule}: missing slot(s) {sorted(want - have)}")
    if have - want:
        raise SchemaError(f"{inst.rule}: unexpected slot(s) {sorted(have - want)}")
    for k, kind in SCHEMAS[inst.rule].items():
        v = inst.slots[k]
        ok = {
            "assert": isinstance(v, A.Assertion), "template": isinstance(v, A.Assertion),
            "test": isinstance(v, S.Test), "ttemplate": isinstance(v, S.Test),
            "cmd": isinstance(v, S.Command), "wexpr": isinstance(v, (S.Test, S.Lit)),
            "var": isinstance(v, str), "expr": isinstance(v, S.Expr), "int": isinstance(v, int),
            "domain": isinstance(v, A.Domain), "weight": True,
        }[kind]
        if not ok:
            raise SchemaError(f"{inst.rule}: slot {k!r} should be a {kind}, got {type(v).__name__}")


def apply_rule(inst: RuleInstance, policy=None, options=None) -> RuleResult:
    """Conclusion and obligations of a rule instance."""
    _check_slots(inst)
    ctx = _Ctx(inst, policy, options)
    g = inst.slots
    sr = ctx.sr
    obs = []
    r = inst.rule
    P = ctx.premise

    if r == "Skip":
        concl = Triple(g["phi"], S.Skip(), g["phi"])
    elif r == "Seq":
        obs.append(_shape("midpoint theta = theta2", g["theta"], g["theta2"]))
        obs.append(P("premise", "<phi> C1 <theta>", g["phi"], g["C1"], g["theta"]))
        obs.append(P("premise", "<theta2> C2 <psi>", g["theta2"], g["C2"], g["psi"]))
        concl = Triple(g["phi"], S.Seq(g["C1"], g["C2"]), g["psi"])
    elif r == "Plus":
        obs.append(_shape("shared precondition phi = phi2", g["phi"], g["phi2"]))
        obs.append(P("premise", "<phi> C1 <psi1>", g["phi"], g["C1"], g["psi1"]))
        obs.append(P("premise", "<phi2> C2 <psi2>", g["phi2"], g["C2"], g["psi2"]))
        concl = Triple(g["phi"], S.Plus(g["C1"], g["C2"]), A.OPlus((g["psi1"], g["psi2"])))
    elif r == "Assume":
        u = ctx.weight(g["u"])
        obs.append(ctx.entails("phi |= e = u", g["phi"], g["e"], u))
        concl = Triple(g["phi"], S.Assume(g["e"]), A.ScaleR(g["phi"], g["u"]))
    elif r == "Iter":
        concl, more = _iter(ctx, g)
        obs.extend(more)
    elif r == "False":
        concl = Triple(A.BOT, g["C"], g["phi"])
    elif r == "True":
        concl = Triple(g["phi"], g["C"], A.TOP)
    elif r == "Scale":
        obs.append(P("premise", "<phi> C <psi>", g["phi"], g["C"], g["psi"]))
        concl = Triple(A.ScaleL(g["u"], g["phi"]), g["C"], A.ScaleL(g["u"], g["psi"]))
    elif r in ("Disj", "Conj"):
        obs.append(P("premise", "<phi1> C <psi1>", g["phi1"], g["C"], g["psi1"]))
        obs.append(P("premise", "<phi2> C <psi2>", g["phi2"], g["C"], g["psi2"]))
        op = A.AOr if r == "Disj" else A.AAnd
        concl = Triple(op(g["phi1"], g["phi2"]), g["C"], op(g["psi1"], g["psi2"]))
    elif r in ("Choice", "Exists"):
        t, T = g["t"], g["T"]
        if T.capped:
            obs.append(Obligation("family-premise-at-n", f"for all {t} in nat",
                                  Verdict.undecided("index domain must be finite")))
        else:
            for val in T.values():
                obs.append(P("family-premise-at-n", f"{t} = {val}", g["phi"], g["C"], g["psi"],
                             {t: val}))
        q = A.OPlusIndexed if r == "Choice" else A.ExistsVal
        concl = Triple(q(t, T, g["phi"]), g["C"], q(t, T, g["psi"]))
    elif r == "Consequence":
        obs.append(ctx.implies("phi' => phi", g["phi1"], g["phi"], ctx.universe))
        obs.append(P("premise", "<phi> C <psi>", g["phi"], g["C"], g["psi"]))
        outs = ctx.spost(g["C"], g["phi"])
        obs.append(ctx.implies("psi => psi'", g["psi"], g["psi1"], outs))
        concl = Triple(g["phi1"], g["C"], g["psi1"])
    elif r == "Assign":
        phi, x, E = g["phi"], g["x"], g["E"]
        try:
            pre = substitute(phi, E, x)
        except UnsupportedSubstitution as exc:
            # the hyper transformer is only meaningful on its own fragment
            try:
                check_fragment(phi)
            except TypeError:
                raise SchemaError(f"Assign: {exc}") from None
            pre = transform_assign(phi, x, E)
        concl = Triple(pre, S.Assign(x, E), phi)
    elif r == "Constancy":
        clash = S.free_vars(g["P"]) & S.modified_vars(g["C"])
        obs.append(Obligation("shape", "free(P) and mod(C) are disjoint",
                              HOLDS if not clash else Verdict.fails(
                                  sorted(clash), f"P reads modified variable(s) {sorted(clash)}")))
        obs.append(P("premise", "<phi> C <psi>", g["phi"], g["C"], g["psi"]))
        boxP = A.Box(g["P"])
        concl = Triple(A.AAnd(g["phi"], boxP), g["C"], A.AAnd(g["psi"], boxP))
    elif r == "If":
        b = g["b"]
        obs.append(ctx.entails("phi1 |= b", g["phi1"], b, sr.one))
        obs.append(ctx.entails("phi2 |= !b", g["phi2"], S.Not(b), sr.one))
        obs.append(P("premise", "<phi1> C1 <psi1>", g["phi1"], g["C1"], g["psi1"]))
        obs.append(P("premise", "<phi2> C2 <psi2>", g["phi2"], g["C2"], g["psi2"]))
        concl = Triple(A.OPlus((g["phi1"], g["phi2"])), S.if_(b, g["C1"], g["C2"]),
                       A.OPlus((g["psi1"], g["psi2"])))
    elif r in ("If1", "If2"):
        b = g["b"]
        guard = b if r == "If1" else S.Not(b)
        branch = g["C1"] if r == "If1" else g["C2"]
        obs.append(ctx.entails("phi |= " + ("b" if r == "If1" else "!b"), g["phi"], guard, sr.one))
        obs.append(P("premise", "<phi> branch <psi>", g["phi"], branch, g["psi"]))
        concl = Triple(g["phi"], S.if_(b, g["C1"], g["C2"]), g["psi"])
    elif r == "While":
        concl, more = _while(ctx, g)
        obs.extend(more)
    elif r == "Invariant":
        Pt, b, C = g["P"], g["b"], g["C"]
        obs.append(P("premise", "<sure(P && b)> C <box(P)>", A.Sure(S.And(Pt, b)), C, A.Box(Pt)))
        concl = Triple(A.Sure(Pt), S.while_(b, C), A.Box(S.And(Pt, S.Not(b))))
    elif r == "Variant":
        concl, more = _variant(ctx, g)
        obs.extend(more)
    elif r in ("SeqHoare", "SeqLisbon"):
        mod = A.Box if r == "SeqHoare" else A.Diamond
        obs.append(_shape("midpoint Q = Q2", g["Q"], g["Q2"]))
        obs.append(P("premise", "<sure(P)> C1 <Q>", A.Sure(g["P"]), g["C1"], mod(g["Q"])))
        obs.append(P("premise", "<sure(Q2)> C2 <R>", A.Sure(g["Q2"]), g["C2"], mod(g["R"])))
        concl = Triple(A.Sure(g["P"]), S.Seq(g["C1"], g["C2"]), mod(g["R"]))
    elif r in ("IfHoare", "IfLisbon"):
        mod = A.Box if r == "IfHoare" else A.Diamond
        Pt, b = g["P"], g["b"]
        obs.append(P("premise", "<sure(P && b)> C1 <Q>", A.Sure(S.And(Pt, b)), g["C1"], mod(g["Q"])))
        obs.append(P("premise", "<sure(P && !b)> C2 <Q>", A.Sure(S.And(Pt, S.Not(b))), g["C2"],
                     mod(g["Q"])))
        concl = Triple(A.Sure(Pt), S.if_(b, g["C1"], g["C2"]), mod(g["Q"]))
    elif r == "LisbonVariant":
        b, C, Pn = g["b"], g["C"], g["P_n"]
        sure_n = A.Sure(Pn)
        obs.append(ctx.entails("sure(P_0) |= !b", sure_n, S.Not(b), sr.one, _env(0)))
        for k in range(inst.cap):
            obs.append(ctx.entails(f"sure(P_{k + 1}) |= b", sure_n, b, sr.one, _env(k + 1)))
            obs.append(P("family-premise-at-n", f"<sure(P_{k + 1})> C <dia(P_{k})>", sure_n, C,
                         A.Diamond(Pn), _env(k + 1), _env(k)))
        concl = Triple(A.ExistsVal(INDEX, A.NAT, sure_n), S.while_(b, C),
                       A.Diamond(_inst_test(Pn, 0)))
    elif r == "AssumeHHL":
        concl = Triple(transform_assume(g["phi"], g["b"]), S.Assume(g["b"]), g["phi"])
    elif r == "Havoc2":
        a, b = g["a"], g["b2"]
        concl = Triple(transform_havoc(g["phi"], g["x"], A.dset(S.Int(a), S.Int(b))),
                       S.Plus(S.Assign(g["x"], S.Int(a)), S.Assign(g["x"], S.Int(b))), g["phi"])
    elif r == "HavocN":
        concl = Triple(transform_havoc(g["phi"], g["x"], A.NAT), S.havoc(g["x"]), g["phi"])
    else:  # pragma: no cover - guarded by _check_slots
        raise SchemaError(r)

    if inst.claimed is not None:
        obs.append(_shape("claimed precondition", inst.claimed.pre, concl.pre))
        obs.append(_shape("claimed command", inst.claimed.cmd, concl.cmd))
        obs.append(_shape("claimed postcondition", inst.claimed.post, concl.post))
    return RuleResult(inst, concl, obs)


def _inst_test(b, k):
    """Substitute the index variable by a constant in a test template."""
    return S.subst_test(b, INDEX, S.Int(k))


def _inst(phi, k):
    """phi_k as a closed assertion (used for the displayed conclusion)."""
    return A.ExistsVal(INDEX, A.Domain("set", items=(S.Int(k),)), phi)


def _iter(ctx, g):
    C, e, e2 = g["C"], g["e"], g["e2"]
    phi, psi, psi_inf = g["phi_n"], g["psi_n"], g["psi_inf"]
    cap = ctx.inst.cap
    step_cmd = S.Seq(S.Assume(e), C)
    exit_cmd = S.Assume(e2)
    starts = ctx.models_for(phi, _env(0))

    def split(f, k):
        return f, ctx.ev.run_on(exit_cmd, f).wf

    def step(f):
        return ctx.ev.run_on(step_cmd, f).wf

    conv, chains = _convergence(ctx, starts, step, split, psi, psi_inf, cap)
    obs = []
    for k in range(cap):
        extra = chains.get(k, [])
        obs.append(ctx.premise("family-premise-at-n", f"<phi_{k}> assume e; C <phi_{k + 1}>", phi,
                               step_cmd, phi, _env(k), _env(k + 1), extra))
        obs.append(ctx.premise("family-premise-at-n", f"<phi_{k}> assume e' <psi_{k}>", phi,
                               exit_cmd, psi, _env(k), _env(k), extra))
    obs.append(conv)
    concl = Triple(_inst(phi, 0), S.Iter(C, e, e2), psi_inf)
    return concl, obs


def _while(ctx, g):
    b, C = g["b"], g["C"]
    phi, psi, psi_inf = g["phi_n"], g["psi_n"], g["psi_inf"]
    cap = ctx.inst.cap
    sr = ctx.sr
    pre0 = A.OPlus((phi, psi))
    starts = ctx.models_for(pre0, _env(0))

    def split(f, k):
        return _restrict(f, b), _restrict(f, S.Not(b))

    def step(f):
        return ctx.ev.run_on(C, f).wf

    conv, chains = _convergence(ctx, starts, step, split, psi, psi_inf, cap)
    obs = []
    for k in range(cap):
        extra = [_restrict(f, b) for f in chains.get(k, [])]
        obs.append(ctx.premise("family-premise-at-n", f"<phi_{k}> C <phi_{k + 1} (+) psi_{k + 1}>",
                               phi, C, A.OPlus((phi, psi)), _env(k), _env(k + 1), extra))
        obs.append(ctx.entails(f"phi_{k} |= b", phi, b, sr.one, _env(k), extra))
        ex = [_restrict(f, S.Not(b)) for f in chains.get(k, [])]
        obs.append(ctx.entails(f"psi_{k} |= !b", psi, S.Not(b), sr.one, _env(k), ex))
    obs.append(conv)
    concl = Triple(_inst(pre0, 0), S.while_(b, C), psi_inf)
    return concl, obs


def _variant(ctx, g):
    b, C, phi = g["b"], g["C"], g["phi_n"]
    sr = ctx.sr
    obs = [ctx.entails("phi_0 |= !b", phi, S.Not(b), sr.one, _env(0))]
    for k in range(ctx.inst.cap):
        obs.append(ctx.entails(f"phi_{k + 1} |= b", phi, b, sr.one, _env(k + 1)))
        obs.append(ctx.premise("family-premise-at-n", f"<phi_{k + 1}> C <phi_{k}>", phi, C, phi,
                               _env(k + 1), _env(k)))
    concl = Triple(A.ExistsVal(INDEX, A.NAT, phi), S.while_(b, C), _inst(phi, 0))
    return concl, obs


def parse_expect(text):
    """'Accepted' -> ('Accepted', None); 'Rejected(shape)' -> ('Rejected', 'shape')."""
    text = "".join(text.split())
    if "(" in text and text.endswith(")"):
        status, kind = text[:-1].split("(", 1)
        return status, kind
    return text, None


def meets_expectation(result: RuleResult):
    """Does the result match the instance's ``expect`` slot (if any)?"""
    if result.instance.expect is None:
        return True
    status, kind = parse_expect(result.instance.expect)
    if status != result.status:
        return False
    return kind is None or any(o.kind == kind for o in result.failed())


# -------------------------------------------------------------- soundness

def check_soundness_sample(result: RuleResult, models=None, policy=None):
    """Validate the conclusion on the models satisfying its precondition."""
    inst = result.instance
    sr = get_semiring(inst.sr)
    ctx = _Ctx(inst, policy)
    pool = ctx.universe if models is None else list(models)
    pre = result.conclusion.pre
    chosen = [m for m in pool if ctx.sat(m, pre).ok]
    spec = TripleSpec(pre, result.conclusion.cmd, result.conclusion.post, Explicit(tuple(chosen)), sr,
                      name=inst.name)
    return check_triple(spec, policy, options=ctx.opts)


# ------------------------------------------------- loop-free derivations

@dataclass
class Derivation:
    """A rule result together with the derivations of its premises."""
    result: RuleResult
    children: list = field(default_factory=list)
    # pairs (premise triple of this node, index of the child proving it)
    links: list = field(default_factory=list)

    @property
    def conclusion(self):
        return self.result.conclusion

    def nodes(self):
        yield self
        for c in self.children:
            yield from c.nodes()

    def broken_links(self):
        out = []
        for d in self.nodes():
            for want, i in d.links:
                if d.children[i].conclusion != want:
                    out.append((d, want, d.children[i].conclusion))
        return out

    def open_obligations(self):
        """Obligations not discharged; premises linked to a child count as proved."""
        out = []
        for d in self.nodes():
            for o in d.result.obligations:
                if o.verdict.ok or (o.kind == "premise" and d.links):
                    continue
                out.append((d, o))
        return out

    @property
    def accepted(self):
        return not self.open_obligations() and not self.broken_links()

    def render(self, depth=0):
        lines = ["  " * depth + f"{self.result.instance.rule}: {self.conclusion.render()}"]
        for c in self.children:
            lines.append(c.render(depth + 1))
        return "\n".join(lines)


def characteristic(m):
    """An assertion satisfied by m (and, as a split, by nothing else)."""
    sr = m.sr
    if m.is_zero():
        return A.Box(S.FALSE)
    parts = []
    for st, w in m.items():
        test = None
        for name, v in zip(st.names, st.values):
            c = S.Cmp("=", S.Var(name), S.Int(v))
            test = c if test is None else S.And(test, c)
        parts.append(A.Lift(test or S.TRUE, S.Lit(w)))
    return parts[0] if len(parts) == 1 else A.OPlus(tuple(parts))


def derive_loop_free(C, m, policy=None, index="k"):
    """Derivation of <char(m)> C <char([[C]](m))> for a loop-free C.

    This follows the completeness construction: every intermediate
    assertion is the characteristic assertion of the intermediate model.
    Nodes are checked on the models they mention; Seq, Plus and Consequence
    premises are additionally linked to the conclusions of their children
    (``Derivation.broken_links``).
    """
    sr = m.sr
    ev = Evaluator(sr, policy)

    def run(c, x):
        return ev.run_on(c, x).wf

    def node(rule, slots, models, children=(), links=()):
        inst = RuleInstance(rule, slots, list(models), sr)
        return Derivation(apply_rule(inst, policy), list(children), list(links))

    def consequence(child, pre, post, models):
        c = child.conclusion
        links = [(Triple(c.pre, c.cmd, c.post), 0)]
        return node("Consequence", {"phi1": pre, "phi": c.pre, "C": c.cmd, "psi": c.post,
                                    "psi1": post}, models, [child], links)

    def go(c, x):
        t = type(c)
        pre = characteristic(x)
        y = run(c, x)
        post = characteristic(y)
        if t is S.Skip:
            return node("Skip", {"phi": pre}, [x])
        if t is S.Seq:
            d1 = go(c.first, x)
            mid = d1.conclusion.post
            d2 = go(c.second, run(c.first, x))
            return node("Seq", {"phi": pre, "C1": c.first, "theta": mid, "theta2": mid,
                                "C2": c.second, "psi": d2.conclusion.post}, [x], [d1, d2],
                        [(d1.conclusion, 0), (d2.conclusion, 1)])
        if t is S.Plus:
            d1, d2 = go(c.left, x), go(c.right, x)
            plus = node("Plus", {"phi": pre, "C1": c.left, "psi1": d1.conclusion.post,
                                 "phi2": pre, "C2": c.right, "psi2": d2.conclusion.post},
                        [x], [d1, d2], [(d1.conclusion, 0), (d2.conclusion, 1)])
            return consequence(plus, pre, post, [x])
        if t is S.Assign:
            a = node("Assign", {"phi": post, "x": c.var, "E": c.expr}, [x])
            return consequence(a, pre, post, [x])
        if t is S.Assume:
            groups = {}
            for st, w in x.items():
                groups.setdefault(S.eval_wexpr(c.e, st, sr), {})[st] = w
            if len(groups) <= 1:
                u = next(iter(groups), sr.one)
                a = node("Assume", {"phi": pre, "e": c.e, "u": S.Lit(u)}, [x])
                return consequence(a, pre, post, [x])
            # split by guard weight and recombine with the indexed choice rule
            keys = sorted(groups, key=sr.sort_key)
            parts = [WeightingFunction._raw(sr, groups[u]) for u in keys]
            kids = [go(c, p) for p in parts]

            def family(asserts):
                out = None
                for i, a in enumerate(asserts):
                    g = A.AAnd(A.HyperTest(S.Cmp("=", S.Var(index), S.Int(i))), a)
                    out = g if out is None else A.AOr(out, g)
                return out
            dom = A.drange(S.Int(0), S.Int(len(parts) - 1))
            phi_t = family([characteristic(p) for p in parts])
            psi_t = family([d.conclusion.post for d in kids])
            ch = node("Choice", {"t": index, "T": dom, "phi": phi_t, "C": c, "psi": psi_t},
                      [x] + parts, kids)
            return consequence(ch, pre, post, [x])
        raise SchemaError(f"derive_loop_free: {t.__name__} is not loop-free")

    return go(C, m)


# -------------------------------------------------------------- rule files

def _parse_slot(slot, kind, bf, sr, bound):
    if kind == "cmd":
        toks = slot.toks
        if len(toks) == 1 and toks[0].kind == "str":
            return load_program(bf.base_dir / toks[0].text[1:-1], sr).body
        p = slot_parser(slot, bf.vars, bf.graph, bf.path, sr)
        p.mode = "prog"
        if p.at("{"):
            v = p.block()
        else:
            v = p.stmts(closers=())
    else:
        p = slot_parser(slot, bf.vars, bf.graph, bf.path, sr, bound)
        if kind in ("assert", "template"):
            if kind == "template":
                p.bound = list(bound) + [INDEX]
            v = p.assertion()
        elif kind in ("test", "ttemplate"):
            if kind == "ttemplate":
                p.bound = list(bound) + [INDEX]
            v = p.test()
        elif kind == "wexpr":
            v = p.wexpr()
        elif kind == "weight":
            v = p.weight_term()
        elif kind == "var":
            v = p.ident()
        elif kind == "expr":
            p.mode = "prog"
            v = p.expr()
        elif kind == "int":
            v = p.integer()
        elif kind == "domain":
            v = p.domain()
        else:  # pragma: no cover
            raise ValueError(kind)
    if p.tok.kind != "eof":
        p.error(f"unexpected {p.tok.text!r} in slot {slot.name!r}")
    return v


def instances_from_blockfile(bf, semiring=None):
    out = []
    for b in bf.blocks:
        if b.kind != "rule":
            continue
        if "schema" in b.slots:
            rule = slot_text(b.slots["schema"])
        elif b.name in SCHEMAS:
            rule = b.name
        else:
            raise ParseError(f"rule block {b.name or '?'} lacks a 'schema' slot", b.line, 1, bf.path)
        for alias, canon in SLOT_ALIASES.items():
            if alias in b.slots and canon in SCHEMAS[rule] and canon not in b.slots:
                b.slots[canon] = b.slots.pop(alias)
        if rule not in SCHEMAS:
            raise ParseError(f"unknown rule {rule!r}", b.line, 1, bf.path)
        srname = semiring or (slot_text(b.slots["semiring"]) if "semiring" in b.slots else None) \
            or bf.semiring or "bool"
        sr = get_semiring(srname)
        meta = {"schema", "semiring", "models", "cap", "expect"}
        schema = SCHEMAS[rule]
        unknown = set(b.slots) - meta - set(schema)
        if unknown:
            raise ParseError(f"{rule}: unexpected slot(s) {sorted(unknown)}", b.line, 1, bf.path)
        missing = set(schema) - set(b.slots)
        if missing:
            raise ParseError(f"{rule}: missing slot(s) {sorted(missing)}", b.line, 1, bf.path)
        bound = []
        if rule in ("Choice", "Exists"):
            bound = [slot_text(b.slots["t"])]
        slots = {k: _parse_slot(b.slots[k], kind, bf, sr, bound) for k, kind in schema.items()}
        models = []
        if "models" in b.slots:
            gp = slot_parser(b.slots["models"], bf.vars, bf.graph, bf.path, sr)
            gen = parse_generator(gp)
            if gp.tok.kind != "eof":
                gp.error(f"unexpected {gp.tok.text!r}")
            models = gen.models(sr, bf.vars)
        cap = int(slot_text(b.slots["cap"])) if "cap" in b.slots else DEFAULT_CAP
        expect = "".join(slot_text(b.slots["expect"]).split()) if "expect" in b.slots else None
        out.append(RuleInstance(rule, slots, models, sr, b.name, cap, expect=expect))
    return out


def load_instances(path, semiring=None):
    path = Path(path)
    bf = parse_block_file(path.read_text(encoding="utf-8"), str(path))
    return instances_from_blockfile(bf, semiring)


__all__ = ["RULE_IDS", "SCHEMAS", "OBLIGATION_KINDS", "RuleInstance", "RuleResult", "Obligation",
           "Triple", "SchemaError", "apply_rule", "Derivation", "derive_loop_free", "characteristic", "parse_expect", "meets_expectation", "check_soundness_sample", "load_instances",
           "instances_from_blockfile", "FRAGMENT", "assertion_free_vars"]
