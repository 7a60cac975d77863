"""Denotational evaluator for commands over a chosen semiring.

Loops are evaluated by forward frontier propagation.  After k steps the
accumulated result is exactly the k-th Kleene approximant, i.e. the sum of
the first k unrollings ``(assume e; C)^n; assume e'``.  The iteration stops
when

* the frontier is empty (the approximants are final);
* in idempotent semirings, every frontier entry is absorbed by weight
  already propagated from the same state (nothing new can be added);
* in Nat/DetBool/Prob, the frontier repeats exactly.  Zero exits in the
  period means the approximants are final; otherwise Nat sends the exiting
  states to infinity and the partial semirings report a partiality error;
* in Prob, the frontier mass drops to epsilon or below;
* the iteration cap is reached (result flagged as not converged).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from . import syntax as S
from .semiring import INF, PartialityError, default_policy, get_semiring, is_undefined
from .weighting import State, WeightingFunction, bind, wf_add, Undefined


@dataclass
class EvalResult:
    wf: WeightingFunction
    converged: bool = True
    iterations: int = 0
    residual: object = 0  # upper bound on mass lost to truncation (prob) or last frontier mass
    stops: frozenset = frozenset()

    @property
    def sr(self):
        return self.wf.sr


class Evaluator:
    """Evaluates commands in one semiring, memoizing (command, state) pairs."""

    def __init__(self, sr, policy=None, trace=None):
        self.sr = get_semiring(sr)
        self.policy = policy or default_policy(self.sr)
        self.trace = trace
        self.memo = {}
        self.iterations = 0
        self.stops = set()
        self._keep = []  # keeps memoized commands alive so ids stay unique

    # results are (dict, converged, residual)
    def run(self, C, s: State) -> EvalResult:
        d, conv, res = self._ev(C, s)
        return EvalResult(WeightingFunction._raw(self.sr, d), conv, self.iterations, res,
                          frozenset(self.stops))

    def run_on(self, C, m: WeightingFunction) -> EvalResult:
        if m.sr is not self.sr:
            raise ValueError("model and evaluator use different semirings")
        sr = self.sr
        acc = {}
        conv = True
        res = Fraction(0) if sr.name == "prob" else sr.zero
        for x, w in m._d.items():
            d, c, r = self._ev(C, x)
            conv = conv and c
            if sr.name == "prob":
                res += w * r
            for y, v in d.items():
                p = sr._mul(w, v)
                if p == sr.zero:
                    continue
                if y in acc:
                    q = sr._add(acc[y], p)
                    if is_undefined(q):
                        raise PartialityError(f"outputs clash at {y.render()}", acc[y], p, where=y)
                    acc[y] = q
                else:
                    acc[y] = p
        wf = WeightingFunction._raw(sr, acc)
        return EvalResult(wf, conv, self.iterations, res, frozenset(self.stops))

    def _zero_res(self):
        return Fraction(0) if self.sr.name == "prob" else 0

    def _ev(self, C, s):
        key = (id(C), s)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        sr = self.sr
        t = type(C)
        if t is S.Assign:
            v = S.eval_expr(C.expr, s)
            out = ({s.set(C.var, v): sr.one}, True, self._zero_res())
        elif t is S.Skip:
            out = ({s: sr.one}, True, self._zero_res())
        elif t is S.Assume:
            w = S.eval_wexpr(C.e, s, sr)
            out = ({s: w} if w != sr.zero else {}, True, self._zero_res())
        elif t is S.Seq:
            out = self._seq(C, s)
        elif t is S.Plus:
            out = self._plus(C, s)
        elif t is S.Iter:
            out = self._iter(C, s)
        else:
            raise TypeError(f"not a command: {C!r}")
        self.memo[key] = out
        self._keep.append(C)
        return out

    def _seq(self, C, s):
        sr = self.sr
        d1, c1, r1 = self._ev(C.first, s)
        acc = {}
        conv = c1
        res = r1
        for x, w in d1.items():
            d2, c2, r2 = self._ev(C.second, x)
            conv = conv and c2
            if sr.name == "prob":
                res = res + w * r2
            for y, v in d2.items():
                p = sr._mul(w, v)
                if p == sr.zero:
                    continue
                if y in acc:
                    q = sr._add(acc[y], p)
                    if is_undefined(q):
                        raise PartialityError(
                            f"undefined sum at {y.render()} in sequence", acc[y], p, where=y)
                    acc[y] = q
                else:
                    acc[y] = p
        return acc, conv, res

    def _plus(self, C, s):
        sr = self.sr
        d1, c1, r1 = self._ev(C.left, s)
        d2, c2, r2 = self._ev(C.right, s)
        acc = dict(d1)
        for y, v in d2.items():
            if y in acc:
                q = sr._add(acc[y], v)
                if is_undefined(q):
                    raise PartialityError(
                        f"branches clash at {y.render()}: {sr.render(acc[y])} + {sr.render(v)}",
                        acc[y], v, where=_loc(C))
                acc[y] = q
            else:
                acc[y] = v
        # the total mass must be defined too (prob: at most 1)
        m = sr.zero
        for v in acc.values():
            m = sr._add(m, v)
            if is_undefined(m):
                raise PartialityError(f"choice mass undefined in {sr.name}", d1, d2, where=_loc(C))
        res = r1 + r2 if sr.name == "prob" else self._zero_res()
        return acc, c1 and c2, res

    def _iter(self, C, s0):
        sr = self.sr
        pol = self.policy
        prob = sr.name == "prob"
        idem = sr.idempotent
        result = {}
        frontier = {s0: sr.one}
        seen = {}
        history = {}
        exits_log = []
        conv = True
        res = Fraction(0) if prob else 0
        k = 0
        stop = None
        while True:
            # exit contributions of this step
            ex = {}
            for x, w in frontier.items():
                e2 = S.eval_wexpr(C.exit, x, sr)
                if e2 == sr.zero:
                    continue
                p = sr._mul(w, e2)
                if p == sr.zero:
                    continue
                ex[x] = p
                if x in result:
                    q = sr._add(result[x], p)
                    if is_undefined(q):
                        raise PartialityError(
                            f"loop outcomes clash at {x.render()} after {k} iterations",
                            result[x], p, where=_loc(C))
                    result[x] = q
                else:
                    result[x] = p
            _check_mass(sr, result, C)
            if self.trace is not None:
                self.trace(C, k, WeightingFunction._raw(sr, dict(result)))
            if not frontier:
                stop = "exhausted"
                break
            if prob and pol.mode == "epsilon":
                fm = sum(frontier.values(), Fraction(0))
                if fm <= pol.epsilon:
                    res += fm
                    stop = "epsilon"
                    break
            if not idem:
                key = frozenset(frontier.items())
                j = history.get(key)
                if j is not None:
                    period = exits_log[j:]
                    live = {x for e in period for x in e}
                    if not live:
                        stop = "periodic"
                        break
                    if sr.name == "nat":
                        for x in live:
                            result[x] = INF
                        stop = "periodic-inf"
                        break
                    raise PartialityError(
                        f"loop repeats with outcomes forever (period {k - j}); sum undefined in {sr.name}",
                        where=_loc(C))
                history[key] = k
                exits_log.append(ex)
            if k >= pol.cap:
                conv = False
                stop = "cap"
                if prob:
                    res += sum(frontier.values(), Fraction(0))
                else:
                    m = sr.zero
                    for w in frontier.values():
                        m = sr._add(m, w)
                    res = m
                break
            # step the frontier
            nf = {}
            for x, w in frontier.items():
                c = S.eval_wexpr(C.cont, x, sr)
                if c == sr.zero:
                    continue
                wc = sr._mul(w, c)
                if wc == sr.zero:
                    continue
                d, cb, rb = self._ev(C.body, x)
                conv = conv and cb
                if prob:
                    res += wc * rb
                for y, v in d.items():
                    p = sr._mul(wc, v)
                    if p == sr.zero:
                        continue
                    if y in nf:
                        q = sr._add(nf[y], p)
                        if is_undefined(q):
                            raise PartialityError(
                                f"loop paths clash at {y.render()} in iteration {k + 1}",
                                nf[y], p, where=_loc(C))
                        nf[y] = q
                    else:
                        nf[y] = p
            if idem:
                kept = {}
                for y, v in nf.items():
                    old = seen.get(y)
                    if old is None:
                        seen[y] = v
                        kept[y] = v
                    else:
                        new = sr._add(old, v)
                        if new != old:
                            seen[y] = new
                            kept[y] = v
                nf = kept
            frontier = nf
            k += 1
            self.iterations += 1
        self.stops.add(stop)
        return result, conv, res


def _check_mass(sr, d, C):
    if sr.add_total:
        return
    m = sr.zero
    for v in d.values():
        m = sr._add(m, v)
        if is_undefined(m):
            raise PartialityError(f"loop result mass undefined in {sr.name}", where=_loc(C))


def _loc(C):
    from .pretty import pretty_command
    s = " ".join(pretty_command(C).split())
    return s if len(s) <= 60 else s[:57] + "..."


def evaluate(C, s: State, sr, policy=None, trace=None) -> EvalResult:
    """Run C from state s."""
    return Evaluator(sr, policy, trace).run(C, s)


def eval_on(C, m: WeightingFunction, policy=None, trace=None, evaluator=None) -> EvalResult:
    """Run C on every state of m and combine: the Kleisli extension of C."""
    ev = evaluator or Evaluator(m.sr, policy, trace)
    return ev.run_on(C, m)


def unroll_partial_sums(C, e, e2, s: State, sr, policy=None):
    """Yield sum over n <= N of [[(assume e; C)^n ; assume e2]](s) for N = 0, 1, ...

    The loop is unrolled directly, without the loop engine; only loops
    nested inside C go through :class:`Evaluator`.
    """
    sr = get_semiring(sr)
    ev = Evaluator(sr, policy)

    def step(x):
        c = S.eval_wexpr(e, x, sr)
        if c == sr.zero:
            return WeightingFunction._raw(sr, {})
        d, _, _ = ev._ev(C, x)
        return WeightingFunction._raw(
            sr, {y: sr._mul(c, v) for y, v in d.items() if sr._mul(c, v) != sr.zero})

    def last(x):
        w = S.eval_wexpr(e2, x, sr)
        return WeightingFunction._raw(sr, {x: w} if w != sr.zero else {})

    total = WeightingFunction._raw(sr, {})
    m = WeightingFunction._raw(sr, {s: sr.one})
    n = 0
    while True:
        total = wf_add(total, bind(last, m))
        if isinstance(total, Undefined):
            raise PartialityError(f"unrolled sum undefined at n={n}", where=total.witness)
        yield total
        m = bind(step, m)
        n += 1


def unroll_sum(C, e, e2, s: State, N: int, sr, policy=None) -> WeightingFunction:
    """Sum over n <= N of [[(assume e; C)^n ; assume e2]](s)."""
    for n, total in enumerate(unroll_partial_sums(C, e, e2, s, sr, policy)):
        if n == N:
            return total


def approximants(C: S.Iter, s: State, sr, policy=None):
    """List of the loop's successive approximants at s (for tracing/tests)."""
    out = []
    ev = Evaluator(sr, policy, trace=lambda c, k, wf: out.append(wf) if c is C else None)
    ev.run(C, s)
    return out
