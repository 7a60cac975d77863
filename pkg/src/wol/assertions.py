"""Satisfaction of outcome assertions by weighting functions.

Verdicts are three-valued.  ``Undecided`` is only produced when a search
cap is hit or a question cannot be settled finitely, so a ``Fails`` is
always backed by a witness.

Outcome conjunctions (the (+) connective) go through a split solver:

* each disjunct gets a *region*, a test over-approximating the support of
  its models; a state in exactly one region must go entirely to that part;
* lists of atoms (``<P>@u``, ``sure``, ``box``, ``dia``, ``true``) are
  decided exactly: by closed forms in the idempotent semirings (Bool,
  Tropical, Lang) and by integer flow feasibility in Prob and Nat;
* anything else is decided by enumerating the splits of overlap states
  (Bool, DetBool, Nat, Lang), within width and overlap caps.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from math import lcm

from . import assertion_ast as A
from . import syntax as S
from .semiring import INF, SemiringMismatch, get_semiring, is_undefined
from .weighting import WeightingFunction, Undefined, wf_add, zero_wf


class Status(Enum):
    HOLDS = "Holds"
    FAILS = "Fails"
    UNDECIDED = "Undecided"


@dataclass(frozen=True)
class Verdict:
    status: Status
    witness: object = None
    reason: str = ""
    certificate: object = field(default=None, compare=False)

    @staticmethod
    def holds(certificate=None, reason=""):
        return Verdict(Status.HOLDS, None, reason, certificate)

    @staticmethod
    def fails(witness=None, reason=""):
        return Verdict(Status.FAILS, witness, reason)

    @staticmethod
    def undecided(reason):
        return Verdict(Status.UNDECIDED, None, reason)

    @property
    def ok(self):
        return self.status is Status.HOLDS

    @property
    def failed(self):
        return self.status is Status.FAILS

    @property
    def undecided_(self):
        return self.status is Status.UNDECIDED

    def render(self):
        s = self.status.value
        if self.reason:
            s += f" ({self.reason})"
        if self.witness is not None:
            w = self.witness
            s += " witness " + (w.render() if hasattr(w, "render") else repr(w))
        return s


HOLDS = Verdict.holds()


def v_and(vs):
    und = None
    for v in vs:
        if v.failed:
            return v
        if v.undecided_ and und is None:
            und = v
    return und or HOLDS


def v_or(vs, witness=None):
    und = None
    last = None
    for v in vs:
        if v.ok:
            return v
        if v.undecided_ and und is None:
            und = v
        last = v
    if und:
        return und
    return Verdict.fails(witness if witness is not None else (last.witness if last else None),
                         last.reason if last else "")


def v_not(v, witness=None):
    if v.ok:
        return Verdict.fails(witness, "negated assertion holds")
    if v.failed:
        return HOLDS
    return v


@dataclass(frozen=True)
class SatOptions:
    nat_cap: int = 10**4  # search bound for exists/forall over nat
    width_cap: int = 6  # max disjuncts in one (+)
    overlap_cap: int = 12  # max states shared by several disjunct regions
    enum_cap: int = 200_000  # max candidate splits tried
    alt_cap: int = 4096  # max alternatives from distributing or/exists over (+)
    # candidate models tried when only the existence of some model matters (phi * 0)
    pool: tuple = ()


DEFAULT_OPTIONS = SatOptions()


class AssertionError_(ValueError):
    """Ill-formed assertion for the given semiring."""


def satisfies(m: WeightingFunction, phi, env=None, tol=0, options: SatOptions | None = None) -> Verdict:
    """Decide m |= phi.

    ``tol`` (prob only) relaxes mass equalities to ``[u - tol, u]``; it is
    used when m is an approximation from below of the true output.
    """
    return _Checker(m.sr, options or DEFAULT_OPTIONS).sat(m, phi, dict(env or {}), Fraction(tol))


class _Checker:
    def __init__(self, sr, opts):
        self.sr = sr
        self.o = opts

    # ------------------------------------------------------------ helpers
    def weight(self, u, env):
        try:
            return A.weight_value(u, self.sr, env)
        except ValueError as e:
            raise AssertionError_(str(e)) from None

    def mass_ok(self, mass, w, tol):
        sr = self.sr
        if tol and sr.name == "prob":
            return w - tol <= mass <= w
        return mass == w

    def test(self, P, s, env):
        return S.holds(P, s, env)

    # ------------------------------------------------------------ dispatch
    def sat(self, m, a, env, tol):
        sr = self.sr
        if m.sr is not sr:
            raise SemiringMismatch("model and checker use different semirings")
        t = type(a)
        if t is A.Top:
            return HOLDS
        if t is A.Bot:
            return Verdict.fails(m, "false has no models")
        if t is A.Named:
            return self.sat(m, a.body, env, tol)
        if t is A.ANot:
            return v_not(self.sat(m, a.arg, env, tol), m)
        if t is A.AAnd:
            v = self.sat(m, a.left, env, tol)
            if v.failed:
                return v
            return v_and([v, self.sat(m, a.right, env, tol)])
        if t is A.AOr:
            v = self.sat(m, a.left, env, tol)
            if v.ok:
                return v
            return v_or([v, self.sat(m, a.right, env, tol)], m)
        if t is A.Implies:
            v = self.sat(m, a.left, env, tol)
            if v.failed:
                return HOLDS
            w = self.sat(m, a.right, env, tol)
            if v.ok:
                return w
            return w if w.ok else Verdict.undecided(v.reason)
        if t is A.Lift or t is A.Sure:
            w = sr.one if t is A.Sure else self.weight(a.weight, env)
            for s in m._d:
                if not self.test(a.test, s, env):
                    return Verdict.fails(s, "support state outside the lifted test")
            if not self.mass_ok(m.mass(), w, tol):
                return Verdict.fails(m, f"mass {sr.render(m.mass())} differs from {sr.render(w)}")
            return HOLDS
        if t is A.Box:
            for s in m._d:
                if not self.test(a.test, s, env):
                    return Verdict.fails(s, "outcome outside the box test")
            return HOLDS
        if t is A.Diamond:
            for s in m._d:
                if self.test(a.test, s, env):
                    return HOLDS
            return Verdict.fails(m, "no outcome satisfies the diamond test")
        if t in (A.OPlus, A.OPlusIndexed, A.ProbSplit):
            return self.oplus(m, [a], env, tol)
        if t is A.ScaleL or t is A.ScaleR:
            return self.scale(m, a, env, tol)
        if t is A.ExistsVal or t is A.ForallVal:
            return self.quant(m, a, env, tol)
        if t is A.Singleton:
            if a.model.sr is not sr:
                raise SemiringMismatch("singleton model from another semiring")
            return HOLDS if a.model == m else Verdict.fails(m, "model differs from the singleton")
        if t is A.ForallState or t is A.ExistsState:
            vs = []
            for s in sorted(m._d):
                env2 = dict(env)
                env2[a.binder] = s
                v = self.sat(m, a.body, env2, tol)
                if t is A.ForallState and v.failed:
                    return Verdict.fails(v.witness if v.witness is not None else s, v.reason or "forall-state fails")
                if t is A.ExistsState and v.ok:
                    return v
                vs.append(v)
            if t is A.ForallState:
                return v_and(vs)
            return v_or(vs, m)
        if t is A.HyperTest:
            try:
                ok = S.holds(a.test, None, env)
            except S.UnboundName:
                ok = False
            return HOLDS if ok else Verdict.fails(_env_witness(env) or m, "hypertest is false")
        raise TypeError(f"not an assertion: {a!r}")

    # --------------------------------------------------------- quantifiers
    def quant(self, m, a, env, tol):
        vs = []
        capped = a.domain.capped
        for val in a.domain.values(env, self.o.nat_cap):
            env2 = dict(env)
            env2[a.var] = val
            v = self.sat(m, a.body, env2, tol)
            if isinstance(a, A.ExistsVal) and v.ok:
                return Verdict.holds(certificate={a.var: val})
            if isinstance(a, A.ForallVal) and v.failed:
                return Verdict.fails(v.witness, f"{a.var} = {val}: {v.reason}")
            if v.undecided_:
                vs.append(v)
        if vs:
            return vs[0]
        if capped:
            return Verdict.undecided(f"quantifier over nat searched to {self.o.nat_cap}")
        if isinstance(a, A.ExistsVal):
            return Verdict.fails(m, f"no value of {a.var} works")
        return HOLDS

    # --------------------------------------------------------------- scale
    def scale(self, m, a, env, tol):
        sr = self.sr
        left = isinstance(a, A.ScaleL)
        c = self.weight(a.weight, env)
        if c == sr.one:
            return self.sat(m, a.arg, env, tol)
        if c == sr.zero:
            if not m.is_zero():
                return Verdict.fails(m, "scaled by zero but model is nonzero")
            v = self.sat(m, a.arg, env, tol)
            if v.ok:
                return v
            for w in self.o.pool:
                if w.sr is sr and self.sat(w, a.arg, env, 0).ok:
                    return Verdict.holds(certificate=w)
            return Verdict.undecided("cannot decide whether the scaled assertion has any model")
        pre = self.preimages(m, c, left)
        if pre is None:
            return Verdict.undecided("too many preimages under scaling")
        if not pre:
            return Verdict.fails(m, "model is not a multiple of the scaling weight")
        tol2 = tol / c if (tol and sr.name == "prob") else tol
        vs = []
        for mp in pre:
            v = self.sat(mp, a.arg, env, tol2)
            if v.ok:
                return Verdict.holds(certificate=mp)
            vs.append(v)
        return v_or(vs, m)

    def preimages(self, m, c, left):
        """All m' with c*m' = m (left) or m'*c = m; None if too many."""
        sr = self.sr
        name = sr.name
        if name in ("bool", "det"):
            return [m] if c else []
        if name == "prob":
            d = {}
            for s, w in m._d.items():
                q = w / c
                if q > 1:
                    return []
                d[s] = q
            if sum(d.values(), Fraction(0)) > 1:
                return []
            return [WeightingFunction._raw(sr, d)]
        if name == "trop":
            d = {}
            for s, w in m._d.items():
                if w == INF:
                    continue
                if w < c:
                    return []
                d[s] = w - c
            return [WeightingFunction._raw(sr, d)]
        if name == "nat":
            if c == INF:
                if any(w != INF for w in m._d.values()):
                    return []
                return None if m._d else [m]
            d = {}
            for s, w in m._d.items():
                if w == INF:
                    d[s] = INF
                elif w % c:
                    return []
                else:
                    d[s] = w // c
            return [WeightingFunction._raw(sr, d)]
        if name == "lang":
            per = []
            for s, w in sorted(m._d.items()):
                cands = self._lang_quotients(w, c, left)
                if cands is None:
                    return None
                if not cands:
                    return []
                per.append([(s, x) for x in cands])
            total = 1
            for p in per:
                total *= len(p)
                if total > self.o.enum_cap:
                    return None
            return [WeightingFunction._raw(sr, dict(combo)) for combo in itertools.product(*per)]
        raise ValueError(name)

    def _lang_quotients(self, w, c, left):
        sr = self.sr
        cand = set()
        for s in w:
            for k in range(len(s) + 1):
                t = s[k:] if left else s[:k]
                if left:
                    ok = all((x + t) in w for x in c)
                else:
                    ok = all((t + x) in w for x in c)
                if ok:
                    cand.add(t)
        cand = sorted(cand)
        if len(cand) > 10:
            return None
        out = []
        for r in range(1, len(cand) + 1):
            for sub in itertools.combinations(cand, r):
                X = frozenset(sub)
                prod = sr._mul(c, X) if left else sr._mul(X, c)
                if prod == w:
                    out.append(X)
        return out

    # --------------------------------------------------------------- oplus
    def flatten(self, parts, env):
        """Expand nested (+) forms and distribute or/exists.

        Returns a list of alternatives; each alternative is a list of
        (assertion, env) pairs, or None if a cap was hit.
        """
        sr = self.sr
        alts = [[]]
        for p in parts:
            opts = self._expand(p, env)
            if opts is None:
                return None
            new = []
            for a in alts:
                for o in opts:
                    new.append(a + o)
                    if len(new) > self.o.alt_cap:
                        return None
            alts = new
        return alts

    def _expand(self, p, env):
        """Alternatives for one (+) operand: list of lists of (assertion, env)."""
        t = type(p)
        if t is A.Named:
            return self._expand(p.body, env)
        if t is A.OPlus:
            return self._expand_seq(p.parts, env)
        if t is A.ProbSplit:
            if self.sr.name != "prob":
                raise AssertionError_("probabilistic split needs the prob semiring")
            q = A.one_minus(p.p)
            return self._expand_seq((A.ScaleL(p.p, p.left), A.ScaleL(q, p.right)), env)
        if t is A.OPlusIndexed:
            if p.domain.capped:
                return None
            items = []
            for val in p.domain.values(env):
                env2 = dict(env)
                env2[p.var] = val
                items.append((p.body, env2))
            return self._expand_pairs(items)
        if t is A.AOr:
            l = self._expand(p.left, env)
            r = self._expand(p.right, env)
            if l is None or r is None:
                return None
            return l + r
        if t is A.ExistsVal and not p.domain.capped:
            out = []
            for val in p.domain.values(env):
                env2 = dict(env)
                env2[p.var] = val
                e = self._expand(p.body, env2)
                if e is None:
                    return None
                out.extend(e)
                if len(out) > self.o.alt_cap:
                    return None
            return out
        return [[(p, env)]]

    def _expand_seq(self, parts, env):
        return self._expand_pairs([(p, env) for p in parts])

    def _expand_pairs(self, pairs):
        alts = [[]]
        for p, e in pairs:
            opts = self._expand(p, e)
            if opts is None:
                return None
            alts = [a + o for a in alts for o in opts]
            if len(alts) > self.o.alt_cap:
                return None
        return alts

    def oplus(self, m, parts, env, tol):
        alts = self.flatten(parts, env)
        if alts is None:
            return Verdict.undecided("too many alternatives in outcome conjunction")
        vs = []
        for alt in alts:
            v = self.split(m, alt, tol)
            if v.ok:
                return v
            vs.append(v)
        return v_or(vs, m)

    def atom(self, p, env):
        """Classify a disjunct as an atom (kind, test, weight) or None."""
        sr = self.sr
        t = type(p)
        if t is A.Sure:
            return ("lift", p.test, sr.one)
        if t is A.Lift:
            return ("lift", p.test, self.weight(p.weight, env))
        if t is A.Box:
            return ("box", p.test, None)
        if t is A.Diamond:
            return ("dia", p.test, None)
        if t is A.Top:
            return ("box", S.TRUE, None)
        if t in (A.ScaleL, A.ScaleR):
            c = self.weight(p.weight, env)
            if c == sr.one:
                return self.atom(p.arg, env)
            inner = self.atom(p.arg, env)
            if inner is None or inner[0] != "lift":
                return None
            if sr.name in ("prob", "trop") and c != sr.zero:
                w = sr._mul(c, inner[2]) if t is A.ScaleL else sr._mul(inner[2], c)
                return ("lift", inner[1], w)
            return None
        return None

    def region(self, p, env):
        """Predicate (state -> bool) containing every model's support, or None."""
        t = type(p)
        if t in (A.Lift, A.Sure, A.Box):
            P = p.test
            return lambda s: S.holds(P, s, env)
        if t is A.Named:
            return self.region(p.body, env)
        if t is A.Bot:
            return lambda s: False
        if t in (A.ScaleL, A.ScaleR):
            return self.region(p.arg, env)
        if t is A.AAnd:
            r1 = self.region(p.left, env)
            r2 = self.region(p.right, env)
            if r1 is None:
                return r2
            if r2 is None:
                return r1
            return lambda s: r1(s) and r2(s)
        if t is A.AOr:
            r1 = self.region(p.left, env)
            r2 = self.region(p.right, env)
            if r1 is None or r2 is None:
                return None
            return lambda s: r1(s) or r2(s)
        if t is A.Singleton:
            supp = p.model.support()
            return lambda s: s in supp
        if t is A.OPlus:
            rs = [self.region(q, env) for q in p.parts]
            if any(r is None for r in rs):
                return None
            return lambda s: any(r(s) for r in rs)
        return None

    def split(self, m, pairs, tol):
        sr = self.sr
        if len(pairs) > self.o.width_cap:
            return Verdict.undecided(f"more than {self.o.width_cap} disjuncts")
        for p, e in pairs:
            if isinstance(p, A.Bot):
                return Verdict.fails(m, "a disjunct is false")
        atoms = [self.atom(p, e) for p, e in pairs]
        if all(a is not None for a in atoms):
            if sr.name == "bool":
                return self._bool_atoms(m, pairs, atoms, tol)
            if sr.name == "trop":
                return self._trop_atoms(m, pairs, atoms)
            if sr.name == "lang":
                return self._lang_atoms(m, pairs, atoms)
            if sr.name in ("prob", "nat"):
                v = self._flow_atoms(m, pairs, atoms, tol)
                if v is not None:
                    return v
        return self._enumerate(m, pairs, tol)

    def _finish(self, m, pairs, partmaps, tol):
        sr = self.sr
        parts = [WeightingFunction._raw(sr, d) for d in partmaps]
        total = zero_wf(sr)
        for q in parts:
            total = wf_add(total, q)
            if isinstance(total, Undefined):
                return None
        if total != m:
            return None
        vs = [self.sat(q, p, e, tol) for q, (p, e) in zip(parts, pairs)]
        v = v_and(vs)
        if v.ok:
            return Verdict.holds(certificate=parts)
        return v

    def _covers(self, atoms, pairs, s):
        return [i for i, (a, (p, e)) in enumerate(zip(atoms, pairs)) if S.holds(a[1], s, e)]

    def _bool_atoms(self, m, pairs, atoms, tol):
        sr = self.sr
        supp = sorted(m._d)
        partmaps = []
        for (kind, P, w), (p, e) in zip(atoms, pairs):
            inside = [s for s in supp if S.holds(P, s, e)]
            if kind == "lift":
                if not w:
                    partmaps.append({})
                    continue
                if not inside:
                    return Verdict.fails(m, "a lifted disjunct has no state of the model in its test")
                partmaps.append({s: True for s in inside})
            elif kind == "box":
                partmaps.append({s: True for s in inside})
            else:  # dia
                if not inside:
                    return Verdict.fails(m, "a diamond disjunct has no witness")
                partmaps.append({s: True for s in supp})
        for s in supp:
            if not any(s in d for d in partmaps):
                return Verdict.fails(s, "state not covered by any disjunct")
        v = self._finish(m, pairs, partmaps, tol)
        return v if v is not None else Verdict.undecided("internal split check")

    def _trop_atoms(self, m, pairs, atoms):
        supp = sorted(m._d)
        partmaps = []
        for (kind, P, w), (p, e) in zip(atoms, pairs):
            inside = [s for s in supp if S.holds(P, s, e)]
            if kind == "lift":
                if w == INF:
                    partmaps.append({})
                    continue
                if not any(m._d[s] <= w for s in inside):
                    return Verdict.fails(m, f"no state can carry cost {w} for a lifted disjunct")
                partmaps.append({s: max(m._d[s], w) for s in inside})
            elif kind == "box":
                partmaps.append({s: m._d[s] for s in inside})
            else:
                if not inside:
                    return Verdict.fails(m, "a diamond disjunct has no witness")
                partmaps.append(dict(m._d))
        for s in supp:
            if not any(d.get(s) == m._d[s] for d in partmaps):
                return Verdict.fails(s, "state not covered at its weight by any disjunct")
        v = self._finish(m, pairs, partmaps, 0)
        return v if v is not None else Verdict.undecided("internal split check")

    def _lang_atoms(self, m, pairs, atoms):
        supp = sorted(m._d)
        partmaps = []
        for (kind, P, w), (p, e) in zip(atoms, pairs):
            inside = [s for s in supp if S.holds(P, s, e)]
            if kind == "lift":
                d = {s: m._d[s] & w for s in inside if m._d[s] & w}
                got = frozenset().union(*d.values()) if d else frozenset()
                if got != w:
                    return Verdict.fails(m, "a lifted disjunct's language is not available")
                partmaps.append(d)
            elif kind == "box":
                partmaps.append({s: m._d[s] for s in inside})
            else:
                if not inside:
                    return Verdict.fails(m, "a diamond disjunct has no witness")
                partmaps.append(dict(m._d))
        for s in supp:
            got = frozenset().union(*(d.get(s, frozenset()) for d in partmaps))
            if got != m._d[s]:
                return Verdict.fails(s, "strings not covered by any disjunct")
        v = self._finish(m, pairs, partmaps, 0)
        return v if v is not None else Verdict.undecided("internal split check")

    def _flow_atoms(self, m, pairs, atoms, tol):
        """Exact feasibility of a transport problem; None means 'use enumeration'."""
        import networkx as nx

        sr = self.sr
        supp = sorted(m._d)
        vals = list(m._d.values()) + [a[2] for a in atoms if a[0] == "lift"]
        if any(v == INF for v in vals):
            return None
        dias = [i for i, a in enumerate(atoms) if a[0] == "dia"]
        if len(dias) > 1:
            return None
        if sr.name == "prob":
            dens = [Fraction(v).denominator for v in vals] + [Fraction(tol).denominator]
            L = lcm(*dens)
        else:
            L = 1
            tol = 0
        T = int(tol * L)
        scale = lambda v: int(Fraction(v) * L)
        lifts = [i for i, a in enumerate(atoms) if a[0] == "lift"]
        frees = [i for i, a in enumerate(atoms) if a[0] in ("box", "dia")]
        freereg = {}
        for s in supp:
            freereg[s] = [i for i in frees
                          if atoms[i][0] == "dia" or S.holds(atoms[i][1], s, pairs[i][1])]

        def solve(witness):
            G = nx.DiGraph()
            total_supply = 0
            for s in supp:
                G.add_node(("s", s), demand=-scale(m._d[s]))
                total_supply += scale(m._d[s])
            lift_need = 0
            for i in lifts:
                w = scale(atoms[i][2])
                G.add_node(("a", i), demand=w)
                lift_need += w
            G.add_node("F", demand=0)
            G.add_node("T", demand=0)
            ghost = T * len(lifts)
            G.add_node("G", demand=-ghost)
            for i in lifts:
                if T:
                    G.add_edge("G", ("a", i), capacity=T, weight=0)
            G.add_edge("G", "T", weight=0)
            G.add_edge("F", "T", weight=0)
            for s in supp:
                for i in lifts:
                    if S.holds(atoms[i][1], s, pairs[i][1]):
                        G.add_edge(("s", s), ("a", i), weight=0)
                if freereg[s]:
                    G.add_edge(("s", s), "F", weight=0)
            G.nodes["T"]["demand"] = total_supply + ghost - lift_need
            if witness is not None:
                if not freereg[witness]:
                    return None
                G.nodes[("s", witness)]["demand"] += 1
                G.nodes["F"]["demand"] -= 1
            if G.nodes["T"]["demand"] < 0:
                return None
            try:
                _, flow = nx.network_simplex(G)
            except (nx.NetworkXUnfeasible, nx.NetworkXError):
                return None
            return flow

        if dias:
            i = dias[0]
            cands = [s for s in supp if S.holds(atoms[i][1], s, pairs[i][1])]
            if len(cands) > self.o.overlap_cap:
                return Verdict.undecided("too many diamond witness candidates")
            flow, wit = None, None
            for c in cands:
                flow = solve(c)
                if flow is not None:
                    wit = c
                    break
        else:
            flow, wit = solve(None), None
        if flow is None:
            return Verdict.fails(m, "no split of the weights meets the disjuncts' masses")
        conv = (lambda k: Fraction(k, L)) if sr.name == "prob" else (lambda k: k)
        partmaps = [dict() for _ in atoms]
        for s in supp:
            out = flow.get(("s", s), {})
            for i in lifts:
                k = out.get(("a", i), 0)
                if k:
                    partmaps[i][s] = conv(k)
            left = out.get("F", 0) + (1 if s == wit else 0)
            if left:
                tgt = dias[0] if (s == wit) else freereg[s][0]
                partmaps[tgt][s] = partmaps[tgt].get(s, sr.zero) + conv(left)
        v = self._finish(m, pairs, partmaps, tol)
        return v if v is not None else Verdict.undecided("internal split check")

    def _enumerate(self, m, pairs, tol):
        sr = self.sr
        if sr.name in ("prob", "trop"):
            continuous = True
        else:
            continuous = False
        regions = [self.region(p, e) for p, e in pairs]
        k = len(pairs)
        fixed = [dict() for _ in range(k)]
        overlap = []
        for s in sorted(m._d):
            cands = [i for i in range(k) if regions[i] is None or regions[i](s)]
            if not cands:
                return Verdict.fails(s, "state fits no disjunct")
            if len(cands) == 1:
                fixed[cands[0]][s] = m._d[s]
            else:
                overlap.append((s, cands))
        if overlap and continuous:
            return Verdict.undecided("overlapping disjuncts need a continuous split")
        if len(overlap) > self.o.overlap_cap:
            return Verdict.undecided(f"more than {self.o.overlap_cap} overlap states")
        choices = []
        count = 1
        for s, cands in overlap:
            opts = self._splits(m._d[s], cands)
            if opts is None:
                return Verdict.undecided("weight cannot be split finitely")
            choices.append([(s, o) for o in opts])
            count *= max(1, len(opts))
            if count > self.o.enum_cap:
                return Verdict.undecided("split search cap")
        und = None
        for combo in itertools.product(*choices):
            partmaps = [dict(d) for d in fixed]
            for s, assign in combo:
                for i, w in assign:
                    partmaps[i][s] = w
            try:
                v = self._finish(m, pairs, partmaps, tol)
            except (ValueError, ArithmeticError):
                continue
            if v is None:
                continue
            if v.ok:
                return v
            if v.undecided_ and und is None:
                und = v
        return und or Verdict.fails(m, "no split satisfies every disjunct")

    def _splits(self, w, cands):
        """Ways to write w as a sum over the candidate parts (zero parts omitted)."""
        sr = self.sr
        name = sr.name
        k = len(cands)
        if name == "bool":
            out = []
            for r in range(1, k + 1):
                for sub in itertools.combinations(cands, r):
                    out.append([(i, True) for i in sub])
            return out
        if name == "det":
            return [[(i, w)] for i in cands]
        if name == "nat":
            if w == INF:
                return None
            out = []
            for comp in _compositions(w, k):
                out.append([(cands[j], c) for j, c in enumerate(comp) if c])
                if len(out) > self.o.enum_cap:
                    return None
            return out
        if name == "lang":
            strs = sorted(w)
            subsets = [sub for r in range(1, k + 1) for sub in itertools.combinations(cands, r)]
            if len(subsets) ** len(strs) > self.o.enum_cap:
                return None
            out = []
            for pick in itertools.product(subsets, repeat=len(strs)):
                acc = {}
                for x, sub in zip(strs, pick):
                    for i in sub:
                        acc.setdefault(i, set()).add(x)
                out.append([(i, frozenset(v)) for i, v in acc.items()])
            return out
        return None


def _compositions(n, k):
    if k == 1:
        yield (n,)
        return
    for i in range(n + 1):
        for rest in _compositions(n - i, k - 1):
            yield (i,) + rest


def _env_witness(env):
    sts = {k: v for k, v in env.items() if hasattr(v, "render")}
    if not sts:
        return None
    return tuple(sorted(sts.values()))


# ---------------------------------------------------------------- entailment

def entails_weight(models, e, u, sr=None, env=None) -> Verdict:
    """Every support state of every model evaluates e to u."""
    models = list(models)
    if not models:
        return HOLDS
    sr = get_semiring(sr) if sr is not None else models[0].sr
    uw = A.weight_value(u, sr, env) if not sr.is_weight(u) else u
    for m in models:
        for s in sorted(m._d):
            got = S.eval_wexpr(e, s, sr, env)
            if got != uw:
                return Verdict.fails(s, f"guard evaluates to {sr.render(got)}, not {sr.render(uw)}")
    return HOLDS


# ------------------------------------------------------------------- spost

@dataclass
class SpostResult:
    models: list
    converged: bool
    residual: object = 0


def spost(C, models, policy=None, evaluator=None) -> SpostResult:
    """Image of a model set under the program, deduplicated."""
    from .semantics import Evaluator
    models = list(models)
    if not models:
        return SpostResult([], True)
    ev = evaluator or Evaluator(models[0].sr, policy)
    seen = {}
    conv = True
    res = 0
    for m in models:
        r = ev.run_on(C, m)
        conv = conv and r.converged
        res = max(res, r.residual) if isinstance(r.residual, (int, Fraction)) else res
        seen.setdefault(r.wf, None)
    out = sorted(seen, key=lambda w: [(s, w.sr.sort_key(v)) for s, v in w.items()])
    return SpostResult(out, conv, res)


# -------------------------------------------------------------- substitution

class UnsupportedSubstitution(ValueError):
    pass


def substitute(phi, E, x):
    """phi[E/x]: push the substitution into the tests of lifted atoms."""
    t = type(phi)
    if t in (A.Top, A.Bot):
        return phi
    if t is A.Lift:
        return A.Lift(S.subst_test(phi.test, x, E), phi.weight)
    if t in (A.Sure, A.Box, A.Diamond):
        return t(S.subst_test(phi.test, x, E))
    if t is A.ANot:
        return A.ANot(substitute(phi.arg, E, x))
    if t in (A.AAnd, A.AOr, A.Implies):
        return t(substitute(phi.left, E, x), substitute(phi.right, E, x))
    if t is A.OPlus:
        return A.OPlus(tuple(substitute(p, E, x) for p in phi.parts))
    if t is A.ProbSplit:
        return A.ProbSplit(substitute(phi.left, E, x), phi.p, substitute(phi.right, E, x))
    if t is A.ScaleL:
        return A.ScaleL(phi.weight, substitute(phi.arg, E, x))
    if t is A.ScaleR:
        return A.ScaleR(substitute(phi.arg, E, x), phi.weight)
    if t in (A.ExistsVal, A.ForallVal, A.OPlusIndexed):
        if phi.var == x or phi.var in S.expr_vars(E):
            raise UnsupportedSubstitution(f"binder {phi.var} clashes with the substitution")
        return t(phi.var, phi.domain, substitute(phi.body, E, x))
    if t is A.Named:
        return substitute(phi.body, E, x)
    raise UnsupportedSubstitution(f"cannot substitute into {type(phi).__name__}")


def assertion_free_vars(phi) -> frozenset:
    """Program variables read by the tests inside phi."""
    t = type(phi)
    if t in (A.Lift, A.Sure, A.Box, A.Diamond):
        return S.free_vars(phi.test)
    if t is A.HyperTest:
        return S.free_vars(phi.test)
    out = frozenset()
    for f in getattr(phi, "__dataclass_fields__", {}):
        v = getattr(phi, f)
        if isinstance(v, A.Assertion):
            out |= assertion_free_vars(v)
        elif isinstance(v, tuple):
            for q in v:
                if isinstance(q, A.Assertion):
                    out |= assertion_free_vars(q)
    return out


# re-exports for convenience
Top, Bot, Lift, Sure, Box, Diamond, OPlus = A.Top, A.Bot, A.Lift, A.Sure, A.Box, A.Diamond, A.OPlus
ScaleL, ScaleR, ExistsVal, ProbSplit, Singleton = A.ScaleL, A.ScaleR, A.ExistsVal, A.ProbSplit, A.Singleton
