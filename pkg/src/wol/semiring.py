"""Six semirings behind one interface.

Weights are plain Python values (bool, int, Fraction, ``INF``, frozenset of
str).  Each semiring validates its own carrier, so passing a weight from a
different semiring raises :class:`SemiringMismatch` rather than computing
nonsense.  Addition is partial: it returns the :data:`UNDEFINED` sentinel
instead of raising.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

INF = math.inf


class SemiringMismatch(TypeError):
    """A weight does not belong to the semiring it was used with."""


class PartialityError(ArithmeticError):
    """A partial addition was undefined where a value was required."""

    def __init__(self, msg, left=None, right=None, where=None):
        super().__init__(msg)
        self.left = left
        self.right = right
        self.where = where


class LangOverflow(ArithmeticError):
    """A Lang string exceeded the configured length cap."""


class _Undefined:
    __slots__ = ()

    def __repr__(self):
        return "undefined"

    def __bool__(self):
        return False


UNDEFINED = _Undefined()


def is_undefined(x) -> bool:
    return x is UNDEFINED or isinstance(x, _Undefined)


class Semiring:
    """Base class. Subclasses fill in the carrier and the two operations."""

    name = "?"
    zero = None
    one = None
    top = None
    add_total = True
    mul_commutative = True
    zero_unique_annihilator = True
    idempotent = False

    def is_weight(self, u) -> bool:
        raise NotImplementedError

    def check(self, u):
        if not self.is_weight(u):
            raise SemiringMismatch(f"{u!r} is not a {self.name} weight")
        return u

    # raw ops assume validated inputs; public ops validate
    def _add(self, u, v):
        raise NotImplementedError

    def _mul(self, u, v):
        raise NotImplementedError

    def add(self, u, v):
        return self._add(self.check(u), self.check(v))

    def mul(self, u, v):
        return self._mul(self.check(u), self.check(v))

    def natural_leq(self, u, v) -> bool:
        self.check(u)
        self.check(v)
        return self._leq(u, v)

    def _leq(self, u, v) -> bool:
        raise NotImplementedError

    def is_zero(self, u) -> bool:
        return u == self.zero

    def coerce(self, raw):
        """Turn a parsed literal into a weight, or raise ValueError."""
        raise NotImplementedError

    def render(self, u) -> str:
        return str(u)

    def sort_key(self, u):
        return u

    def __repr__(self):
        return f"<semiring {self.name}>"


class BoolSemiring(Semiring):
    name = "bool"
    zero = False
    one = True
    top = True
    idempotent = True

    def is_weight(self, u):
        return isinstance(u, bool)

    def _add(self, u, v):
        return u or v

    def _mul(self, u, v):
        return u and v

    def _leq(self, u, v):
        return (not u) or v

    def coerce(self, raw):
        if isinstance(raw, bool):
            return raw
        if isinstance(raw, int) and raw in (0, 1):
            return bool(raw)
        raise ValueError(f"{_show_raw(raw)} is not a bool weight")

    def render(self, u):
        return "1" if u else "0"


class DetBoolSemiring(BoolSemiring):
    """Booleans where 1+1 is undefined: deterministic programs."""

    name = "det"
    add_total = False
    idempotent = False

    def _add(self, u, v):
        if u and v:
            return UNDEFINED
        return u or v


class NatSemiring(Semiring):
    """Naturals with a saturating infinity."""

    name = "nat"
    zero = 0
    one = 1
    top = INF

    def __init__(self, ceiling: int = 2**62):
        self.ceiling = ceiling

    def is_weight(self, u):
        if isinstance(u, bool):
            return False
        if isinstance(u, int):
            return u >= 0
        return u == INF

    def _sat(self, x):
        return INF if x >= self.ceiling else x

    def _add(self, u, v):
        return self._sat(u + v)

    def _mul(self, u, v):
        if u == 0 or v == 0:
            return 0
        return self._sat(u * v)

    def _leq(self, u, v):
        return u <= v

    def coerce(self, raw):
        if isinstance(raw, bool):
            return int(raw)
        if raw == INF:
            return INF
        if isinstance(raw, Fraction) and raw.denominator == 1:
            raw = int(raw)
        if isinstance(raw, int) and raw >= 0:
            return self._sat(raw)
        raise ValueError(f"{_show_raw(raw)} is not a nat weight")

    def render(self, u):
        return "inf" if u == INF else str(u)


class ProbSemiring(Semiring):
    """Exact rationals in [0,1]; sums above 1 are undefined."""

    name = "prob"
    zero = Fraction(0)
    one = Fraction(1)
    top = Fraction(1)
    add_total = False

    def is_weight(self, u):
        return isinstance(u, Fraction) and 0 <= u <= 1

    def _add(self, u, v):
        s = u + v
        return UNDEFINED if s > 1 else s

    def _mul(self, u, v):
        return u * v

    def _leq(self, u, v):
        return u <= v

    def coerce(self, raw):
        if isinstance(raw, bool):
            return Fraction(int(raw))
        if isinstance(raw, (int, Fraction)) and 0 <= raw <= 1:
            return Fraction(raw)
        raise ValueError(f"{_show_raw(raw)} is not a prob weight")

    def render(self, u):
        return str(u)


class TropicalSemiring(Semiring):
    """min-plus over [0, inf]; the natural order is the reversed numeric one."""

    name = "trop"
    zero = INF
    one = Fraction(0)
    top = Fraction(0)
    idempotent = True

    def is_weight(self, u):
        if isinstance(u, bool):
            return False
        if isinstance(u, Fraction):
            return u >= 0
        return u == INF

    def _add(self, u, v):
        return u if u <= v else v

    def _mul(self, u, v):
        if u == INF or v == INF:
            return INF
        return u + v

    def _leq(self, u, v):
        return u >= v

    def coerce(self, raw):
        if isinstance(raw, bool):
            return self.one if raw else INF
        if raw == INF:
            return INF
        if isinstance(raw, (int, Fraction)) and raw >= 0:
            return Fraction(raw)
        raise ValueError(f"{_show_raw(raw)} is not a tropical weight")

    def render(self, u):
        return "inf" if u == INF else str(u)


class LangSemiring(Semiring):
    """Finite languages of finite strings: union and concatenation."""

    name = "lang"
    zero = frozenset()
    one = frozenset({""})
    top = None  # the set of all strings has no finite representation
    mul_commutative = False
    idempotent = True

    def __init__(self, max_len: int = 64):
        self.max_len = max_len

    def is_weight(self, u):
        return isinstance(u, frozenset) and all(isinstance(s, str) for s in u)

    def _add(self, u, v):
        return u | v

    def _mul(self, u, v):
        if not u or not v:
            return self.zero
        out = frozenset(s + t for s in u for t in v)
        for s in out:
            if len(s) > self.max_len:
                raise LangOverflow(f"string longer than {self.max_len}: {s[:16]}...")
        return out

    def _leq(self, u, v):
        return u <= v

    def coerce(self, raw):
        if isinstance(raw, bool):
            return self.one if raw else self.zero
        if isinstance(raw, frozenset) and all(isinstance(s, str) for s in raw):
            return raw
        raise ValueError(f"{_show_raw(raw)} is not a lang weight")

    def render(self, u):
        return "{" + ",".join(f'"{s}"' for s in sorted(u)) + "}"

    def sort_key(self, u):
        return tuple(sorted(u))


def _show_raw(raw):
    if raw == INF:
        return "inf"
    if isinstance(raw, frozenset):
        return "{" + ",".join(f'"{s}"' for s in sorted(raw)) + "}"
    return str(raw)


BOOL = BoolSemiring()
DET = DetBoolSemiring()
NAT = NatSemiring()
PROB = ProbSemiring()
TROP = TropicalSemiring()
LANG = LangSemiring()

SEMIRINGS = {s.name: s for s in (BOOL, DET, NAT, PROB, TROP, LANG)}
_ALIASES = {"detbool": "det", "tropical": "trop", "natural": "nat"}


def get_semiring(name) -> Semiring:
    if isinstance(name, Semiring):
        return name
    key = str(name).lower()
    key = _ALIASES.get(key, key)
    try:
        return SEMIRINGS[key]
    except KeyError:
        raise ValueError(f"unknown semiring {name!r}; pick one of {sorted(SEMIRINGS)}") from None


@dataclass(frozen=True)
class ConvergencePolicy:
    """How loops and infinite sums are cut off.

    mode is "exact" (stop at an exact fixpoint), "epsilon" (stop once the
    remaining mass is at most ``epsilon``) or "cap" (just the cap).
    """

    mode: str = "exact"
    epsilon: Fraction = Fraction(1, 10**9)
    cap: int = 10**5

    def __post_init__(self):
        if self.mode not in ("exact", "epsilon", "cap"):
            raise ValueError(f"bad policy mode {self.mode!r}")
        if self.cap < 0:
            raise ValueError("cap must be non-negative")
        object.__setattr__(self, "epsilon", Fraction(self.epsilon))


def default_policy(sr, cap: int | None = None, epsilon=None) -> ConvergencePolicy:
    sr = get_semiring(sr)
    cap = 10**5 if cap is None else cap
    if sr.name == "prob":
        eps = Fraction(1, 10**9) if epsilon is None else Fraction(epsilon)
        return ConvergencePolicy("epsilon", eps, cap)
    if epsilon is not None:
        raise ValueError("epsilon only applies to the prob semiring")
    return ConvergencePolicy("exact", Fraction(1, 10**9), cap)


def sum_stream(sr, ws: Iterable, policy: ConvergencePolicy | None = None):
    """Sum a (possibly infinite) stream of weights.

    Returns ``(total, converged)``.  Finite streams always converge.  In
    epsilon mode the sum stops once a term is at most epsilon.  When the cap
    is hit in Nat with the stream still producing nonzero terms, the
    supremum of the partial sums is reported as INF.
    """
    sr = get_semiring(sr)
    policy = policy or default_policy(sr)
    total = sr.zero
    last = sr.zero
    for i, w in enumerate(ws):
        if i >= policy.cap:
            if sr.name == "nat" and last != 0:
                return INF, False
            return total, False
        nxt = sr.add(total, w)
        if is_undefined(nxt):
            raise PartialityError(
                f"partial sum undefined at prefix length {i + 1}", total, w, where=i + 1)
        total, last = nxt, w
        if policy.mode == "epsilon" and sr.name == "prob" and w <= policy.epsilon:
            return total, True
        if sr.name == "nat" and total == INF:
            return INF, True
    return total, True


def weight_sum(sr, ws: Iterable):
    """Finite sum; UNDEFINED if any prefix is undefined."""
    total = sr.zero
    for w in ws:
        total = sr._add(total, w)
        if is_undefined(total):
            return UNDEFINED
    return total
