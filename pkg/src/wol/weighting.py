"""Program states and finite-support weighting functions."""
from __future__ import annotations

from typing import Callable, Iterable, Mapping

from .semiring import (
    UNDEFINED, PartialityError, SemiringMismatch, Semiring, get_semiring, is_undefined)


class State:
    """An immutable total map from declared variables to integers.

    States are interned, so equal states are usually the same object and
    hashing is cheap.  Ordering is by the value tuple.
    """

    __slots__ = ("names", "values", "_hash", "_index")
    _pool: dict = {}

    def __new__(cls, names, values):
        names = tuple(names)
        values = tuple(values)
        key = (names, values)
        hit = cls._pool.get(key)
        if hit is not None:
            return hit
        if len(names) != len(values):
            raise ValueError("names/values length mismatch")
        self = object.__new__(cls)
        self.names = names
        self.values = values
        self._hash = hash(key)
        self._index = {n: i for i, n in enumerate(names)}
        if len(cls._pool) < 2_000_000:
            cls._pool[key] = self
        return self

    @classmethod
    def of(cls, **kw):
        return cls(tuple(kw), tuple(kw.values()))

    @classmethod
    def from_dict(cls, names, d: Mapping, default=0):
        return cls(names, tuple(d.get(n, default) for n in names))

    def __getitem__(self, x):
        try:
            return self.values[self._index[x]]
        except KeyError:
            raise KeyError(f"undeclared variable {x!r}") from None

    def get(self, x, default=None):
        i = self._index.get(x)
        return default if i is None else self.values[i]

    def __contains__(self, x):
        return x in self._index

    def set(self, x, v):
        i = self._index.get(x)
        if i is None:
            raise KeyError(f"undeclared variable {x!r}")
        vals = list(self.values)
        vals[i] = v
        return State(self.names, vals)

    def as_dict(self):
        return dict(zip(self.names, self.values))

    def __eq__(self, other):
        if self is other:
            return True
        return isinstance(other, State) and self.names == other.names and self.values == other.values

    def __hash__(self):
        return self._hash

    def __lt__(self, other):
        return (self.values, self.names) < (other.values, other.names)

    def __reduce__(self):
        return (State, (self.names, self.values))

    def render(self):
        return "(" + ", ".join(f"{n}={v}" for n, v in zip(self.names, self.values)) + ")"

    __repr__ = render


class Undefined:
    """Result of an undefined pointwise sum, naming where it broke."""

    def __init__(self, witness=None, left=None, right=None):
        self.witness = witness
        self.left = left
        self.right = right

    def __bool__(self):
        return False

    def __repr__(self):
        return f"undefined at {self.witness!r}: {self.left!r} + {self.right!r}"


class WeightingFunction:
    """A sparse map State -> weight with no zero entries and a defined mass."""

    __slots__ = ("sr", "_d", "_mass", "_hash")

    def __init__(self, sr, entries: Mapping | Iterable = (), check=True):
        sr = get_semiring(sr)
        self.sr = sr
        items = entries.items() if isinstance(entries, Mapping) else entries
        d = {}
        for s, w in items:
            if check:
                sr.check(w)
                if not isinstance(s, State):
                    raise TypeError(f"expected State, got {s!r}")
                if s in d:
                    raise ValueError(f"duplicate state {s!r}")
            if w != sr.zero:
                d[s] = w
        self._d = d
        self._hash = None
        mass = sr.zero
        for w in d.values():
            mass = sr._add(mass, w)
            if is_undefined(mass):
                raise PartialityError(f"mass undefined in {sr.name}", where=None)
        self._mass = mass

    @classmethod
    def _raw(cls, sr, d: dict, mass=None):
        # trusted constructor: d already has no zero entries
        self = object.__new__(cls)
        self.sr = sr
        self._d = d
        self._hash = None
        if mass is None:
            mass = sr.zero
            for w in d.values():
                mass = sr._add(mass, w)
                if is_undefined(mass):
                    raise PartialityError(f"mass undefined in {sr.name}")
        self._mass = mass
        return self

    # mapping-ish interface
    def __call__(self, s):
        return self._d.get(s, self.sr.zero)

    def __getitem__(self, s):
        return self._d.get(s, self.sr.zero)

    def items(self):
        return sorted(self._d.items(), key=lambda kv: kv[0])

    def support(self):
        return frozenset(self._d)

    def __len__(self):
        return len(self._d)

    def __iter__(self):
        return iter(sorted(self._d))

    def mass(self):
        return self._mass

    def is_zero(self):
        return not self._d

    def as_dict(self):
        return dict(self._d)

    def __eq__(self, other):
        return (isinstance(other, WeightingFunction) and self.sr is other.sr
                and self._d == other._d)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.sr.name, frozenset(self._d.items())))
        return self._hash

    def render(self):
        r = self.sr.render
        body = ", ".join(f"{s.render()} ↦ {r(w)}" for s, w in self.items())
        return "{" + body + "} (mass = " + r(self._mass) + ")"

    def __repr__(self):
        return self.render()


def _same(m1, m2):
    if m1.sr is not m2.sr:
        raise SemiringMismatch(f"cannot mix {m1.sr.name} and {m2.sr.name}")
    return m1.sr


def zero_wf(sr):
    return WeightingFunction._raw(get_semiring(sr), {}, get_semiring(sr).zero)


def unit(sr, s: State) -> WeightingFunction:
    sr = get_semiring(sr)
    return WeightingFunction._raw(sr, {s: sr.one}, sr.one)


def bind(f: Callable[[State], WeightingFunction], m: WeightingFunction) -> WeightingFunction:
    """Kleisli extension: f+(m)(y) = sum_x m(x) * f(x)(y)."""
    sr = m.sr
    acc = {}
    for x, w in m._d.items():
        fx = f(x)
        if fx.sr is not sr:
            raise SemiringMismatch("bind across semirings")
        for y, v in fx._d.items():
            p = sr._mul(w, v)
            if p == sr.zero:
                continue
            if y in acc:
                q = sr._add(acc[y], p)
                if is_undefined(q):
                    raise PartialityError(f"bind: undefined sum at {y!r}", acc[y], p, where=y)
                acc[y] = q
            else:
                acc[y] = p
    return WeightingFunction._raw(sr, {k: v for k, v in acc.items() if v != sr.zero})


def wf_add(m1: WeightingFunction, m2: WeightingFunction):
    """Pointwise sum, or an :class:`Undefined` naming a clashing state."""
    sr = _same(m1, m2)
    d = dict(m1._d)
    for s, w in m2._d.items():
        if s in d:
            q = sr._add(d[s], w)
            if is_undefined(q):
                return Undefined(s, d[s], w)
            d[s] = q
        else:
            d[s] = w
    mass = sr._add(m1._mass, m2._mass)
    if is_undefined(mass):
        return Undefined(None, m1._mass, m2._mass)
    return WeightingFunction._raw(sr, d)


def scale_left(u, m: WeightingFunction) -> WeightingFunction:
    sr = m.sr
    sr.check(u)
    d = {}
    for s, w in m._d.items():
        p = sr._mul(u, w)
        if p != sr.zero:
            d[s] = p
    return WeightingFunction._raw(sr, d)


def scale_right(m: WeightingFunction, u) -> WeightingFunction:
    sr = m.sr
    sr.check(u)
    d = {}
    for s, w in m._d.items():
        p = sr._mul(w, u)
        if p != sr.zero:
            d[s] = p
    return WeightingFunction._raw(sr, d)


def mass(m: WeightingFunction):
    return m.mass()


def wf_leq(m1: WeightingFunction, m2: WeightingFunction) -> bool:
    sr = _same(m1, m2)
    for s, w in m1._d.items():
        if not sr._leq(w, m2._d.get(s, sr.zero)):
            return False
    return True


def wf_sum(sr, ms: Iterable[WeightingFunction]):
    sr = get_semiring(sr)
    out = zero_wf(sr)
    for m in ms:
        out = wf_add(out, m)
        if isinstance(out, Undefined):
            return out
    return out


def restrict(m: WeightingFunction, pred) -> WeightingFunction:
    return WeightingFunction._raw(m.sr, {s: w for s, w in m._d.items() if pred(s)})


def make_wf(sr, pairs) -> WeightingFunction:
    """Build a weighting function from (state, raw-literal) pairs."""
    sr = get_semiring(sr)
    return WeightingFunction(sr, [(s, sr.coerce(w)) for s, w in pairs])


__all__ = [
    "State", "Undefined", "WeightingFunction", "unit", "bind", "wf_add", "scale_left",
    "scale_right", "mass", "wf_leq", "wf_sum", "zero_wf", "restrict", "make_wf", "UNDEFINED",
]
