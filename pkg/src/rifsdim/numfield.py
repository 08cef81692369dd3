"""Exact arithmetic in Q(rho) for a real algebraic number rho.

A :class:`NumberField` is a monic integer polynomial together with a
rational interval isolating one of its real roots.  Elements are stored as
reduced coefficient vectors, so equality is decided exactly; order is
decided by evaluating the difference on a Sturm-verified isolating interval
and bisecting that interval until the sign is certain.
"""

from __future__ import annotations

import threading
import warnings
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath

from .errors import DivByZero, FieldMismatch, NonMonic, NotIsolating

# ---------------------------------------------------------------------------
# dense polynomials over Q, coefficient lists low -> high
# ---------------------------------------------------------------------------


def _trim(p: list) -> list:
    while p and p[-1] == 0:
        p.pop()
    return p


def _polyval(p: Sequence[Fraction], x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(p):
        acc = acc * x + c
    return acc


def _polyderiv(p: Sequence[Fraction]) -> list:
    return _trim([i * p[i] for i in range(1, len(p))])


def _polydivmod(a: Sequence[Fraction], b: Sequence[Fraction]):
    a = list(a)
    b = _trim(list(b))
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 1)
    lead = b[-1]
    while len(_trim(a)) >= len(b):
        shift = len(a) - len(b)
        f = a[-1] / lead
        q[shift] = f
        for i, c in enumerate(b):
            a[shift + i] -= f * c
        a.pop()
    return _trim(q), a


def _polymul(a: Sequence[Fraction], b: Sequence[Fraction]) -> list:
    if not a or not b:
        return []
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def _polysub(a: Sequence[Fraction], b: Sequence[Fraction]) -> list:
    n = max(len(a), len(b))
    return _trim([(a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0)
                  for i in range(n)])


def sturm_sequence(p: Sequence[Fraction]) -> list:
    seq = [_trim(list(p)), _polyderiv(p)]
    while seq[-1]:
        _, r = _polydivmod(seq[-2], seq[-1])
        r = [-c for c in _trim(r)]
        if not r:
            break
        seq.append(r)
    return [s for s in seq if s]


def _sign_changes(seq, x: Fraction) -> int:
    signs = [v for v in (_polyval(s, x) for s in seq) if v != 0]
    return sum(1 for u, v in zip(signs, signs[1:]) if (u > 0) != (v > 0))


def count_roots(p: Sequence[Fraction], lo: Fraction, hi: Fraction) -> int:
    """Number of distinct real roots of ``p`` in the closed interval [lo, hi]."""
    seq = sturm_sequence(p)
    n = _sign_changes(seq, lo) - _sign_changes(seq, hi)
    if _polyval(p, lo) == 0:
        n += 1
    return n


def _interval_eval(p: Sequence[Fraction], lo: Fraction, hi: Fraction):
    """Enclosure of p([lo, hi]) by interval Horner evaluation."""
    a = b = Fraction(0)
    for c in reversed(p):
        prods = (a * lo, a * hi, b * lo, b * hi)
        a = min(prods) + c
        b = max(prods) + c
    return a, b


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, float):
        raise TypeError("floats are not accepted as exact inputs; use 'p/q' strings")
    return Fraction(x)


# ---------------------------------------------------------------------------
# field and elements
# ---------------------------------------------------------------------------


class NumberField:
    """Q(rho), rho the unique root of ``minpoly`` inside ``interval``.

    ``minpoly`` is given as integer coefficients ``[c0, c1, ..., cg]`` with
    ``cg == 1``.  Degree one gives plain rational arithmetic.
    """

    def __init__(self, minpoly: Sequence[int], interval: Sequence):
        try:
            exact = [_as_fraction(c) for c in minpoly]
        except (TypeError, ValueError) as exc:
            raise NonMonic(f"bad minimal polynomial {minpoly!r}") from exc
        if any(c.denominator != 1 for c in exact):
            raise NonMonic("minimal polynomial must have integer coefficients")
        coeffs = _trim([int(c) for c in exact])
        if len(coeffs) < 2:
            raise NonMonic("minimal polynomial must have degree >= 1")
        if coeffs[-1] != 1:
            raise NonMonic(f"minimal polynomial {coeffs} is not monic")
        lo, hi = (_as_fraction(x) for x in interval)
        if lo > hi:
            raise NotIsolating(f"empty interval ({lo}, {hi})")
        self.minpoly = tuple(coeffs)
        self.degree = len(coeffs) - 1
        self._poly = [Fraction(c) for c in coeffs]
        n = count_roots(self._poly, lo, hi)
        if n != 1:
            raise NotIsolating(
                f"interval [{lo}, {hi}] contains {n} roots of {list(coeffs)}")
        self._lock = threading.Lock()
        self._exact = None  # rational value of rho when it is one
        for end in (lo, hi):
            if _polyval(self._poly, end) == 0:
                self._exact = end
        if self._exact is None and self.degree > 1:
            # cheap reducibility probe: rational roots are integer divisors of c0
            c0 = abs(coeffs[0])
            cands = {0} if c0 == 0 else {d for d in range(1, min(c0, 10**6) + 1) if c0 % d == 0}
            if any(_polyval(self._poly, Fraction(s * d)) == 0 for d in cands for s in (1, -1)):
                warnings.warn(f"minimal polynomial {list(coeffs)} has a rational root; "
                              "irreducibility is assumed but does not hold", stacklevel=2)
        if self.degree == 1:
            self._exact = Fraction(-coeffs[0])
        self._interval = (lo, hi) if self._exact is None else (self._exact, self._exact)
        self._mp_cache = {}
        self.zero = FieldScalar(self, (Fraction(0),) * self.degree)
        self.one = self(1)

    # -- construction of elements ------------------------------------------------
    def __call__(self, value) -> "FieldScalar":
        if isinstance(value, FieldScalar):
            if value.field is not self and value.field != self:
                raise FieldMismatch("element belongs to a different field")
            return value
        if isinstance(value, (list, tuple)):
            return self.from_coeffs(value)
        return FieldScalar(self, (_as_fraction(value),) + (Fraction(0),) * (self.degree - 1))

    def from_coeffs(self, coeffs: Iterable) -> "FieldScalar":
        return FieldScalar(self, self._reduce([_as_fraction(c) for c in coeffs]))

    @property
    def generator(self) -> "FieldScalar":
        return self.from_coeffs([0, 1])

    @property
    def is_rational(self) -> bool:
        return self.degree == 1

    def _reduce(self, p: list) -> tuple:
        p = list(p)
        g = self.degree
        mp = self._poly
        for top in range(len(p) - 1, g - 1, -1):
            c = p[top]
            if c:
                for i in range(g):
                    p[top - g + i] -= c * mp[i]
        p = p[:g] + [Fraction(0)] * (g - len(p))
        return tuple(p)

    # -- root location --------------------------------------------------------------
    @property
    def interval(self):
        return self._interval

    def _refine(self):
        lo, hi = self._interval
        mid = (lo + hi) / 2
        fl = _polyval(self._poly, lo)
        fm = _polyval(self._poly, mid)
        with self._lock:
            if fm == 0:
                self._exact = mid
                self._interval = (mid, mid)
            elif (fm > 0) == (fl > 0):
                self._interval = (mid, hi)
            else:
                self._interval = (lo, mid)

    def sign_of(self, coeffs: Sequence[Fraction]) -> int:
        """Sign of sum(coeffs[i] * rho**i), decided exactly."""
        if not any(coeffs):
            return 0
        if self._exact is not None:
            v = _polyval(coeffs, self._exact)
            return (v > 0) - (v < 0)
        while True:
            lo, hi = self._interval
            a, b = _interval_eval(coeffs, lo, hi)
            if a > 0:
                return 1
            if b < 0:
                return -1
            self._refine()
            if self._exact is not None:
                v = _polyval(coeffs, self._exact)
                return (v > 0) - (v < 0)

    def rho_mpf(self, ctx=mpmath.mp):
        """rho to the working precision of ``ctx``."""
        prec = ctx.prec
        hit = self._mp_cache.get(prec)
        if hit is not None:
            return ctx.mpf(hit)
        if self._exact is not None:
            val = ctx.mpf(self._exact.numerator) / self._exact.denominator
        else:
            target = Fraction(1, 2 ** (prec + 8))
            while self._interval[1] - self._interval[0] > target:
                self._refine()
                if self._exact is not None:
                    break
            lo, hi = self._interval
            mid = (lo + hi) / 2
            val = ctx.mpf(mid.numerator) / mid.denominator
        self._mp_cache[prec] = val
        return val

    # -- identity ---------------------------------------------------------------------
    def to_json(self) -> dict:
        lo, hi = self._initial_interval_str()
        return {"minpoly": list(self.minpoly), "interval": [lo, hi]}

    def _initial_interval_str(self):
        return getattr(self, "_json_interval", (str(self._interval[0]), str(self._interval[1])))

    def __eq__(self, other):
        return isinstance(other, NumberField) and self.minpoly == other.minpoly and \
            self._same_root(other)

    def _same_root(self, other) -> bool:
        lo = max(self._interval[0], other._interval[0])
        hi = min(self._interval[1], other._interval[1])
        return lo <= hi and count_roots(self._poly, lo, hi) == 1

    def __hash__(self):
        return hash(self.minpoly)

    def __repr__(self):
        return f"NumberField(minpoly={list(self.minpoly)}, interval={self._interval})"


def field_make(minpoly: Sequence[int], interval: Sequence) -> NumberField:
    f = NumberField(minpoly, interval)
    f._json_interval = tuple(str(_as_fraction(x)) for x in interval)
    return f


class FieldScalar:
    """Element of a :class:`NumberField`, immutable, canonical coefficients."""

    __slots__ = ("field", "coeffs", "_hash")

    def __init__(self, field: NumberField, coeffs: tuple):
        self.field = field
        self.coeffs = coeffs
        self._hash = None

    # -- coercion ---------------------------------------------------------------------
    def _other(self, other) -> "FieldScalar":
        if isinstance(other, FieldScalar):
            if other.field is not self.field and other.field != self.field:
                raise FieldMismatch("operands belong to different fields")
            return other
        if isinstance(other, (int, Fraction)):
            return self.field(other)
        return NotImplemented

    # -- arithmetic ------------------------------------------------------------------
    def __add__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return FieldScalar(self.field, tuple(a + b for a, b in zip(self.coeffs, o.coeffs)))

    __radd__ = __add__

    def __sub__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return FieldScalar(self.field, tuple(a - b for a, b in zip(self.coeffs, o.coeffs)))

    def __rsub__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return o - self

    def __neg__(self):
        return FieldScalar(self.field, tuple(-a for a in self.coeffs))

    def __mul__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        if self.field.degree == 1:
            return FieldScalar(self.field, (self.coeffs[0] * o.coeffs[0],))
        return FieldScalar(self.field, self.field._reduce(_polymul(self.coeffs, o.coeffs)))

    __rmul__ = __mul__

    def inverse(self) -> "FieldScalar":
        if not any(self.coeffs):
            raise DivByZero("division by zero in number field")
        if self.field.degree == 1:
            return FieldScalar(self.field, (1 / self.coeffs[0],))
        # extended Euclid: s*a + t*m = 1 (a and m coprime as m is irreducible)
        m = list(self.field._poly)
        a = _trim(list(self.coeffs))
        r0, r1 = m, a
        s0, s1 = [], [Fraction(1)]
        while _trim(list(r1)):
            q, r = _polydivmod(r0, r1)
            r0, r1 = r1, _trim(r)
            s0, s1 = s1, _polysub(s0, _polymul(q, s1))
        if len(r0) != 1:
            raise DivByZero("element is not invertible: minimal polynomial is reducible")
        inv = [c / r0[0] for c in s0]
        return FieldScalar(self.field, self.field._reduce(inv))

    def __truediv__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        if self.field.degree == 1:
            if o.coeffs[0] == 0:
                raise DivByZero("division by zero")
            return FieldScalar(self.field, (self.coeffs[0] / o.coeffs[0],))
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return o / self

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        out, base = self.field.one, self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    # -- comparison ------------------------------------------------------------------
    def sign(self) -> int:
        if self.field.degree == 1:
            c = self.coeffs[0]
            return (c > 0) - (c < 0)
        return self.field.sign_of(self.coeffs)

    def compare(self, other) -> int:
        o = self._other(other)
        if self.field.degree == 1:
            a, b = self.coeffs[0], o.coeffs[0]
            return (a > b) - (a < b)
        if self.coeffs == o.coeffs:
            return 0
        return (self - o).sign()

    def __eq__(self, other):
        if isinstance(other, FieldScalar):
            return (other.field is self.field or other.field == self.field) and \
                self.coeffs == other.coeffs
        if isinstance(other, (int, Fraction)):
            return self.coeffs[0] == other and not any(self.coeffs[1:])
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            if not any(self.coeffs[1:]):
                self._hash = hash(self.coeffs[0])
            else:
                self._hash = hash(self.coeffs)
        return self._hash

    def __lt__(self, other):
        return self.compare(other) < 0

    def __le__(self, other):
        return self.compare(other) <= 0

    def __gt__(self, other):
        return self.compare(other) > 0

    def __ge__(self, other):
        return self.compare(other) >= 0

    def __bool__(self):
        return any(self.coeffs)

    # -- conversion ------------------------------------------------------------------
    def is_rational(self) -> bool:
        return not any(self.coeffs[1:])

    def as_fraction(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self} is not rational")
        return self.coeffs[0]

    def to_mpf(self, ctx=mpmath.mp):
        if self.is_rational():
            c = self.coeffs[0]
            return ctx.mpf(c.numerator) / c.denominator
        with ctx.workprec(ctx.prec + 32):
            rho = self.field.rho_mpf(ctx)
            acc = ctx.mpf(0)
            for c in reversed(self.coeffs):
                acc = acc * rho + ctx.mpf(c.numerator) / c.denominator
        return +acc

    def __float__(self):
        return float(self.to_mpf())

    def to_json(self) -> dict:
        return {"coeffs": [str(c) for c in self.coeffs]}

    def key(self) -> tuple:
        return self.coeffs

    def __repr__(self):
        if self.is_rational():
            return str(self.coeffs[0])
        terms = []
        for i, c in enumerate(self.coeffs):
            if c:
                terms.append(str(c) if i == 0 else f"{c}*rho" + (f"^{i}" if i > 1 else ""))
        return " + ".join(terms)


def field_arith(a: FieldScalar, b: FieldScalar, op: str) -> FieldScalar:
    if a.field is not b.field and a.field != b.field:
        raise FieldMismatch("operands belong to different fields")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown operation {op!r}")


def field_compare(a: FieldScalar, b: FieldScalar) -> str:
    c = a.compare(b)
    return {-1: "less", 0: "equal", 1: "greater"}[c]


def scalar_from_json(field: NumberField, obj) -> FieldScalar:
    """Accepts ``{"coeffs": [...]}``, a ``"p/q"`` string or an integer."""
    if isinstance(obj, dict):
        return field.from_coeffs(obj["coeffs"])
    if isinstance(obj, (str, int)):
        return field(_as_fraction(obj))
    raise TypeError(f"cannot read a field element from {obj!r}")


RATIONALS = field_make([0, 1], ["-1", "1"])
