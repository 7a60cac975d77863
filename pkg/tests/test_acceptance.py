"""Acceptance criteria 1-10.

Each test records a one-line verdict; the lines are printed in the pytest
terminal summary (and by running this file directly).
"""
import heapq
import random
import time
from fractions import Fraction as F
from math import comb

import pytest

from wol import syntax as S
from wol.assertions import Status, satisfies
from wol.hyper import low, transform_assign, transform_assume, transform_havoc
from wol.laws import check_kleisli_laws, check_order_laws, check_semiring_laws
from wol.parser import load_program, parse_program
from wol.randprog import (HyperGen, ProgramGen, all_states, fixpoint_vs_unroll,
                          random_iter_program)
from wol.rules import apply_rule, check_soundness_sample, load_instances, meets_expectation
from wol.semantics import evaluate, eval_on, unroll_sum
from wol.semiring import INF, get_semiring
from wol.triples import TripleSpec, check_hoare, check_lisbon, check_triple, load_specs, states
from wol.triples import wlp_oracle, wpp_oracle
from wol.weighting import State, make_wf

from conftest import CASES

SEMIRINGS = ["bool", "det", "nat", "prob", "trop", "lang"]
RESULTS = {}


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def record(n, ok, detail):
    RESULTS[n] = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(RESULTS[n])
    assert ok, detail


def spec_by_name(fname, name):
    return {s.name: s for s in load_specs(CASES / "specs" / fname)}[name]


# --------------------------------------------------------------------- 1

def test_criterion_1_div():
    spec = spec_by_name("div.wspec", "div")
    spec.gen = states(a=range(0, 21), b=range(1, 11))
    with Timer() as t:
        rep = check_triple(spec)
    # independent check of every output against Python's divmod
    exact = True
    for rec in rep.records:
        (s,) = rec.input.support()
        exact &= [(o["q"], o["r"]) for o in rec.output.support()] == [divmod(s["a"], s["b"])]
    ok = rep.status is Status.HOLDS and exact and len(rep.records) == 210 and t.elapsed < 1
    record(1, ok, f"div {rep.status.value} on {len(rep.records)} inputs, "
                  f"divmod agrees: {exact}, {t.elapsed:.2f}s")


# --------------------------------------------------------------------- 2

def test_criterion_2_collatz():
    with Timer() as t:
        p = load_program(CASES / "programs" / "collatz.wprog", "det")
        got = []
        for a in (1, 2, 3):
            res = evaluate(p.body, p.state({"a": a, "n": a}), "det")
            (out,) = res.wf.support()
            got.append(out["i"])
        (inst,) = load_instances(CASES / "rules" / "collatz.wrule")
        res = apply_rule(inst)
        ns = sorted({m.items()[0][0]["n"] for m in inst.models})
    ok = (got == [0, 1, 7] and res.accepted and all(o.verdict.ok for o in res.obligations)
          and ns == [1, 2, 3, 4, 5, 6] and t.elapsed < 1)
    record(2, ok, f"stopping times {got}, invariant {res.status} with "
                  f"{len(res.obligations)} obligations on n in 1..6, {t.elapsed:.2f}s")


# --------------------------------------------------------------------- 3

def test_criterion_3_prob_evenodd():
    eps = F(1, 10**9)
    with Timer() as t:
        rep = check_triple(spec_by_name("prob_evenodd.wspec", "prob_evenodd"))
        out = rep.records[0].output
        even = sum(w for s, w in out.items() if s["r"] == 0)
        odd = sum(w for s, w in out.items() if s["r"] == 1)
        # plain unrolling with 2^-N <= eps, independent of the loop engine
        p = load_program(CASES / "programs" / "prob_evenodd.wprog", "prob")
        init, loop = p.body.first, p.body.second
        while isinstance(loop, S.Seq):
            init, loop = S.Seq(init, loop.first), loop.second
        (s0,) = evaluate(init, p.state(), "prob").wf.support()
        N = 30
        u = unroll_sum(loop.body, loop.cont, loop.exit, s0, N, "prob")
        ue = sum(w for s, w in u.items() if s["r"] == 0)
        uo = sum(w for s, w in u.items() if s["r"] == 1)
    close = lambda a, b: abs(a - b) <= eps
    ok = (rep.status is Status.HOLDS and F(1, 2**N) <= eps and close(even, F(2, 3))
          and close(odd, F(1, 3)) and close(ue, F(2, 3)) and close(uo, F(1, 3)) and t.elapsed < 2)
    record(3, ok, f"{rep.status.value}; even {float(even):.12f}, odd {float(odd):.12f}; "
                  f"unrolled N={N} agrees; {t.elapsed:.2f}s")


# --------------------------------------------------------------------- 4

def walk_paths(x, y, n, m, path=()):
    """Enumerate the runs of the walk program as explicit move sequences."""
    if not (x < n or y < m):
        yield path
        return
    if x < n and y < m:
        yield from walk_paths(x + 1, y, n, m, path + ("x",))
        yield from walk_paths(x, y + 1, n, m, path + ("y",))
    elif x >= n:
        yield from walk_paths(x, y + 1, n, m, path + ("y",))
    else:
        yield from walk_paths(x + 1, y, n, m, path + ("x",))


def test_criterion_4_walk():
    p = load_program(CASES / "programs" / "walk.wprog", "nat")
    bad = []
    with Timer() as t:
        for n in range(7):
            for m in range(7):
                res = evaluate(p.body, p.state({"n": n, "m": m}), "nat")
                target = p.state({"x": n, "y": m, "n": n, "m": m})
                w = res.wf(target)
                paths = set(walk_paths(0, 0, n, m))
                if not (res.converged and res.wf.support() == {target}
                        and w == comb(n + m, n) == len(paths)):
                    bad.append((n, m, w))
    ok = not bad and t.elapsed < 5
    record(4, ok, f"49 (N, M) pairs, binomial and path enumeration agree, "
                  f"{len(bad)} mismatches, {t.elapsed:.2f}s")


# --------------------------------------------------------------------- 5

SP_BODY = "\n".join(line for line in (CASES / "programs" / "shortest_path.wprog").read_text().splitlines()
                    if not line.startswith(("graph", "vars", "//")))


def dijkstra(n, edges, s):
    dist = {v: INF for v in range(1, n + 1)}
    dist[s] = 0
    heap = [(0, s)]
    while heap:
        d, v = heapq.heappop(heap)
        if d > dist[v]:
            continue
        for a, b in edges:
            if a == v and d + 1 < dist[b]:
                dist[b] = d + 1
                heapq.heappush(heap, (d + 1, b))
    return dist


def random_graph(rng):
    n = rng.randint(1, 8)
    p = rng.choice((0.15, 0.3, 0.5))
    edges = sorted({(a, b) for a in range(1, n + 1) for b in range(1, n + 1)
                    if a != b and rng.random() < p})
    return n, edges


def test_criterion_5_shortest_paths():
    rng = random.Random(5)
    trop = get_semiring("trop")
    bad, pairs, unreachable = [], 0, 0
    with Timer() as t:
        for _ in range(100):
            n, edges = random_graph(rng)
            head = f"vars pos, next, t, n;\ngraph {n} {{ " + "".join(f"{a} -> {b}; " for a, b in edges) + "}\n"
            prog = parse_program(head + SP_BODY, trop)
            for s in range(1, n + 1):
                dist = dijkstra(n, edges, s)
                for tgt in range(1, n + 1):
                    res = evaluate(prog.body, prog.state({"pos": s, "t": tgt, "n": n}), trop)
                    at_t = min((w for st, w in res.wf.items() if st["pos"] == tgt), default=INF)
                    pairs += 1
                    unreachable += dist[tgt] == INF
                    if not res.converged or at_t != dist[tgt]:
                        bad.append((n, edges, s, tgt, at_t, dist[tgt]))
    ok = not bad and unreachable > 0 and t.elapsed < 10
    record(5, ok, f"100 graphs, {pairs} source/target pairs ({unreachable} unreachable), "
                  f"{len(bad)} mismatches with Dijkstra, {t.elapsed:.2f}s")


# --------------------------------------------------------------------- 6

def test_criterion_6_fixpoint_unrolling():
    rng = random.Random(6)
    bad = []
    with Timer() as t:
        for sr in SEMIRINGS:
            for _ in range(200):
                C, s = random_iter_program(rng, sr)
                ok, n, detail = fixpoint_vs_unroll(C, s, sr)
                if not ok:
                    bad.append((sr, C, s, detail))
    ok = not bad and t.elapsed < 30
    record(6, ok, f"{200 * len(SEMIRINGS)} Iter programs over <= 8 states, "
                  f"{len(bad)} mismatches, {t.elapsed:.2f}s")


# --------------------------------------------------------------------- 7

def test_criterion_7_laws():
    rng = random.Random(7)
    fails = {}
    with Timer() as t:
        for sr in SEMIRINGS:
            for name, check in (("semiring", check_semiring_laws), ("order", check_order_laws),
                                ("kleisli", check_kleisli_laws)):
                bad = check(sr, rng, n=10_000)
                if bad:
                    fails[(sr, name)] = bad[:3]
    record(7, not fails, f"semiring/order/Kleisli laws, 10^4 cases x {len(SEMIRINGS)} semirings, "
                         f"{len(fails)} failing suites, {t.elapsed:.1f}s")


# --------------------------------------------------------------------- 8

def test_criterion_8_hoare_lisbon():
    rng = random.Random(8)
    sts = all_states(("x", "y"), 4)
    bad = 0
    with Timer() as t:
        for _ in range(200):
            g = ProgramGen(rng, ("x", "y"), 4)
            C, P, Q = g.bool_cmd(3), g.test(1), g.test(1)
            pst = {s for s in sts if S.holds(P, s)}
            wlp, wpp = wlp_oracle(C, Q, sts), wpp_oracle(C, Q, sts)
            h = check_hoare(P, C, Q, sts).status is Status.HOLDS
            l = check_lisbon(P, C, Q, sts).status is Status.HOLDS
            if not (wlp.complete and wpp.complete) or h != (pst <= wlp) or l != (pst <= wpp):
                bad += 1
    record(8, bad == 0, f"200 Bool programs over 16 states, {bad} disagreements with "
                        f"wlp/wpp oracles, {t.elapsed:.2f}s")


# --------------------------------------------------------------------- 9

def test_criterion_9_hyper():
    import itertools
    V = ("x", "y")
    sts = all_states(V, 3)
    models = [make_wf("bool", [(s, True) for s in c]) for k in range(4)
              for c in itertools.combinations(sts, k)]
    rng = random.Random(9)
    gen = HyperGen(rng, V, 3)
    bad = checked = 0
    with Timer() as t:
        for _ in range(90):
            phi = gen.phi()
            x = rng.choice(V)
            kind = rng.randrange(3)
            if kind == 0:
                E = rng.choice([S.Int(rng.randrange(3)), S.Var(rng.choice(V)),
                                S.BinOp("+", S.Var(rng.choice(V)), S.Int(1))])
                pre, C = transform_assign(phi, x, E), S.Assign(x, E)
            elif kind == 1:
                b = S.Cmp(rng.choice(("=", "<")), S.Var(rng.choice(V)), S.Int(rng.randrange(3)))
                pre, C = transform_assume(phi, b), S.Assume(b)
            else:
                dom = sorted(rng.sample(range(3), rng.randint(1, 3)))
                pre, C = transform_havoc(phi, x, dom), S.havoc_in(x, dom)
            for m in rng.sample(models, 40):
                checked += 1
                if satisfies(m, pre).status != satisfies(eval_on(C, m).wf, phi).status:
                    bad += 1
        ni = {s.name: check_triple(s).status for s in load_specs(CASES / "specs" / "noninterference.wspec")}
    ok = bad == 0 and ni == {"secure": Status.HOLDS, "leak": Status.HOLDS}
    record(9, ok, f"{checked} transformer/post-image checks, {bad} disagreements; "
                  f"noninterference secure={ni['secure'].value} leak={ni['leak'].value}, {t.elapsed:.2f}s")


# -------------------------------------------------------------------- 10

def test_criterion_10_rule_soundness():
    accepted = sound = 0
    problems = []
    with Timer() as t:
        for f in sorted((CASES / "rules").glob("*.wrule")):
            for inst in load_instances(f):
                res = apply_rule(inst)
                if not meets_expectation(res):
                    problems.append(f"{f.stem}/{inst.name}: {res.summary()}")
                if res.accepted:
                    accepted += 1
                    if check_soundness_sample(res).status is Status.HOLDS:
                        sound += 1
                    else:
                        problems.append(f"{f.stem}/{inst.name}: conclusion does not hold")
        broken = {i.name: apply_rule(i) for i in load_instances(CASES / "rules" / "broken.wrule")}
        want = {"bad_assume": "entails-weight", "bad_seq": "shape", "bad_invariant": "premise"}
        for name, kind in want.items():
            r = broken[name]
            if r.status != "Rejected" or kind not in {o.kind for o in r.failed()}:
                problems.append(f"{name}: expected rejection on {kind}, got {r.summary()}")
    ok = not problems and accepted == sound > 0
    record(10, ok, f"{sound}/{accepted} accepted instances sound; broken instances rejected as "
                   f"{', '.join(want.values())}; {t.elapsed:.2f}s" + ("; " + "; ".join(problems) if problems else ""))


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q", "-s"]))
