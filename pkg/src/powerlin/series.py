"""Sparse truncated multivariate power series with exact coefficients.

A :class:`Series` stores finitely many nonzero coefficients together with a
*validity* ``T``: every coefficient of weight ``L.alpha <= T`` is exact, and
nothing beyond ``T`` is stored.  Exact polynomials carry ``T = INF``.

Exponents are packed into a single int (first variable in the high bits), so
exponent addition is integer addition and integer comparison is lex order.
"""

import math
import re
from fractions import Fraction
from typing import NamedTuple

from .errors import fail
from .ring import QQ, Nil, Ring, as_rational, format_coeff, parse_ring

INF = math.inf
BITS = 24
MASK = (1 << BITS) - 1


def pack(alpha):
    key = 0
    for a in alpha:
        if a < 0 or a > MASK:
            raise ValueError(f"exponent out of range: {alpha!r}")
        key = (key << BITS) | a
    return key


def unpack(key, n):
    out = [0] * n
    for i in range(n - 1, -1, -1):
        out[i] = key & MASK
        key >>= BITS
    return tuple(out)


def unit_key(i, n):
    return 1 << (BITS * (n - 1 - i))


def _rat(x):
    return x if x == INF else as_rational(x)


def _norm_L(L, n):
    if L is None:
        return (1,) * n
    if hasattr(L, "weights"):
        L = L.weights
    L = tuple(as_rational(w) for w in L)
    if len(L) != n:
        raise ValueError("weight vector length does not match nvars")
    if any(w <= 0 for w in L):
        raise ValueError("weights must be positive")
    return L


class AtLeast:
    """Lower bound marker: the true value is at least ``value``."""

    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value

    @staticmethod
    def _v(x):
        return x.value if isinstance(x, AtLeast) else x

    def __eq__(self, other):
        return isinstance(other, AtLeast) and other.value == self.value

    def __hash__(self):
        return hash(("AtLeast", self.value))

    def __lt__(self, other):
        return self.value < self._v(other)

    def __le__(self, other):
        return self.value <= self._v(other)

    def __gt__(self, other):
        return self.value > self._v(other)

    def __ge__(self, other):
        return self.value >= self._v(other)

    def __repr__(self):
        return f"AtLeast({self.value})"


def bound_value(x):
    """Numeric value of an order, whether exact or an AtLeast bound."""
    return x.value if isinstance(x, AtLeast) else x


class RefinedOrder(NamedTuple):
    w: object
    p: int


class LinearForm(NamedTuple):
    weights: tuple

    def weight(self, alpha):
        return sum(w * a for w, a in zip(self.weights, alpha))


class Series:
    """Truncated power series in ``nvars`` variables; treat as immutable."""

    __slots__ = ("n", "L", "ring", "validity", "_t", "_wt", "_sorted")

    def __init__(self, terms=None, nvars=1, validity=INF, L=None, ring=QQ):
        self.n = nvars
        self.L = _norm_L(L, nvars)
        self.ring = ring
        self.validity = _rat(validity)
        t = {}
        for alpha, c in (terms or {}).items():
            if isinstance(alpha, int):
                alpha = (alpha,)
            if len(alpha) != nvars:
                raise ValueError(f"exponent {alpha!r} has wrong length")
            c = ring.coerce(c)
            k = pack(alpha)
            t[k] = t[k] + c if k in t else c
        self._t, self._wt = _clean(t, None, self.n, self.L, ring, self.validity)
        self._sorted = None

    # construction helpers
    @classmethod
    def _raw(cls, n, L, ring, validity, t, wt):
        s = object.__new__(cls)
        s.n, s.L, s.ring, s.validity = n, L, ring, validity
        s._t, s._wt, s._sorted = t, wt, None
        return s

    def _like(self, t, wt, validity, clean=True):
        if clean:
            t, wt = _clean(t, wt, self.n, self.L, self.ring, validity)
        return Series._raw(self.n, self.L, self.ring, validity, t, wt)

    @classmethod
    def from_list(cls, coeffs, validity=None, ring=QQ):
        """Univariate series from a coefficient list; default validity len-1."""
        if validity is None:
            validity = len(coeffs) - 1
        return cls({(i,): c for i, c in enumerate(coeffs)}, 1, validity, None, ring)

    def zero_like(self, validity=None):
        v = self.validity if validity is None else validity
        return Series._raw(self.n, self.L, self.ring, v, {}, {})

    # inspection
    def items(self):
        """Sorted list of (weight, packed key, coefficient)."""
        if self._sorted is None:
            self._sorted = sorted((self._wt[k], k, c) for k, c in self._t.items())
        return self._sorted

    def terms(self):
        """List of (exponent tuple, coefficient) in (L, lex) order."""
        return [(unpack(k, self.n), c) for _, k, c in self.items()]

    @property
    def coeffs(self):
        return dict(self.terms())

    def coeff(self, alpha):
        if isinstance(alpha, int):
            alpha = (alpha,)
        k = pack(alpha)
        if k in self._t:
            return self._t[k]
        if _weight(alpha, self.L) > self.validity:
            fail("DOMAIN_MISMATCH", f"coefficient {alpha} beyond validity {self.validity}")
        return self.ring.zero()

    def __len__(self):
        return len(self._t)

    def is_zero(self):
        return not self._t

    @property
    def is_exact(self):
        return self.validity == INF

    def min_weight(self):
        return min(self.L)

    def order(self):
        if not self._t:
            return AtLeast(self.validity + min(self.L))
        return self.items()[0][0]

    def order_bound(self):
        """Lower bound on the order usable by the validity calculus."""
        if not self._t:
            return self.validity
        lam = self.ring.eps_weight
        if lam and not self.ring.is_field:
            return min(w + lam * c.pow for w, _, c in self.items())
        return self.items()[0][0]

    def refined_order(self):
        N = self.ring.nil_index
        if not self._t:
            return RefinedOrder(AtLeast(self.validity + min(self.L)), N)
        items = self.items()
        w = items[0][0]
        p = min(self.ring.pow_of(c) for ww, _, c in items if ww == w)
        return RefinedOrder(w, p)

    def constant_term(self):
        return self._t.get(0, self.ring.zero())

    def is_unit(self):
        return self.ring.is_unit(self.constant_term())

    # arithmetic
    def _check(self, other):
        if not isinstance(other, Series):
            raise TypeError("expected Series")
        if other.n != self.n or other.L != self.L:
            fail("DOMAIN_MISMATCH", "series over different variables or weights")
        if other.ring.nil_index != self.ring.nil_index:
            fail("DOMAIN_MISMATCH", "series over different rings")

    def _unify(self, other):
        """Promote a rational series to the other operand's test ring."""
        if isinstance(other, Series) and other.ring.nil_index != self.ring.nil_index:
            if self.ring.is_field:
                return self.with_ring(other.ring), other
            if other.ring.is_field:
                return self, other.with_ring(self.ring)
        return self, other

    def add(self, other, T=None, sign=1):
        if other.ring.nil_index != self.ring.nil_index:
            a, b = self._unify(other)
            return a.add(b, T, sign)
        self._check(other)
        v = min(self.validity, other.validity)
        if T is not None:
            v = min(v, T)
        t = dict(self._t)
        wt = dict(self._wt)
        for k, c in other._t.items():
            if k in t:
                t[k] = t[k] + c if sign > 0 else t[k] - c
            else:
                t[k] = c if sign > 0 else -c
                wt[k] = other._wt[k]
        return self._like(t, wt, v)

    def __add__(self, other):
        if isinstance(other, (int, Fraction, Nil)):
            other = self.const(other)
        return self.add(other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (int, Fraction, Nil)):
            other = self.const(other)
        return self.add(other, sign=-1)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return self._like({k: -c for k, c in self._t.items()}, self._wt, self.validity, False)

    def scale(self, c):
        c = self.ring.coerce(c)
        return self._like({k: v * c for k, v in self._t.items()}, self._wt, self.validity)

    def mul(self, other, T=None):
        if other.ring.nil_index != self.ring.nil_index:
            a, b = self._unify(other)
            return a.mul(b, T)
        self._check(other)
        v = min(self.validity + other.order_bound(), other.validity + self.order_bound())
        if T is not None:
            v = min(v, T)
        A, B = self.items(), other.items()
        if len(A) > len(B):
            A, B = B, A
        t, wt = {}, {}
        if B and self.ring.is_field:
            return self._like(*_mul_rational(A, B, v), v)
        if B:
            b0 = B[0][0]
            for w1, k1, c1 in A:
                lim = v - w1
                if b0 > lim:
                    break
                for w2, k2, c2 in B:
                    if w2 > lim:
                        break
                    k = k1 + k2
                    if k in t:
                        t[k] = t[k] + c1 * c2
                    else:
                        t[k] = c1 * c2
                        wt[k] = w1 + w2
        return self._like(t, wt, v)

    def __mul__(self, other):
        if isinstance(other, Series):
            return self.mul(other)
        if isinstance(other, (int, Fraction, Nil)):
            return self.scale(other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction, Nil)):
            return self.scale(other)
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction, Nil)):
            return self.scale(self.ring.inv(self.ring.coerce(other)))
        if isinstance(other, Series):
            return self.mul(other.inverse())
        return NotImplemented

    def __pow__(self, k):
        return self.power(k)

    def power(self, k, T=None):
        if k < 0:
            return self.inverse().power(-k, T)
        result = self.const(1)
        if T is not None:
            result = result.truncate(T)
        base = self
        while k:
            if k & 1:
                result = result.mul(base, T)
            k >>= 1
            if k:
                base = base.mul(base, T)
        return result

    def const(self, c):
        c = self.ring.coerce(c)
        t = {0: c} if c else {}
        return Series._raw(self.n, self.L, self.ring, INF, t, {0: 0} if c else {})

    def inverse(self, T=None):
        """Multiplicative inverse of a unit series, valid to min(validity, T)."""
        c0 = self.constant_term()
        if not self.ring.is_unit(c0):
            fail("NOT_REGULAR", "series is not a unit")
        inv0 = self.ring.inv(c0)
        v = self.validity if T is None else min(self.validity, T)
        m = self.scale(inv0) - 1  # zero constant term
        if m.is_zero() and m.validity == INF:
            return self.const(inv0)
        if v == INF:
            fail("DOMAIN_MISMATCH", "inverse of a non-constant exact series needs a target validity")
        acc = self.const(1).truncate(v)
        term = acc
        step = -m
        while True:
            term = term.mul(step, v)
            if term.is_zero():
                break
            acc = acc + term
        return acc.scale(inv0)

    def truncate(self, T):
        """Drop everything above weight ``T``; validity becomes min(T, validity)."""
        T = _rat(T)
        v = min(T, self.validity)
        if v == self.validity:
            return self
        return self._like(dict(self._t), self._wt, v)

    def shift(self, alpha):
        """Multiply by the monomial x^alpha."""
        if isinstance(alpha, int):
            alpha = (alpha,)
        dk = pack(alpha)
        dw = _weight(alpha, self.L)
        t = {k + dk: c for k, c in self._t.items()}
        wt = {k + dk: w + dw for k, w in self._wt.items()}
        return Series._raw(self.n, self.L, self.ring, self.validity + dw, t, wt)

    def shift_down(self, alpha):
        """Divide by the monomial x^alpha; every term must be divisible."""
        if isinstance(alpha, int):
            alpha = (alpha,)
        dk = pack(alpha)
        dw = _weight(alpha, self.L)
        t, wt = {}, {}
        for k, c in self._t.items():
            e = unpack(k, self.n)
            if any(x < y for x, y in zip(e, alpha)):
                fail("DOMAIN_MISMATCH", f"term {e} is not divisible by {alpha}")
            t[k - dk] = c
            wt[k - dk] = self._wt[k] - dw
        return Series._raw(self.n, self.L, self.ring, self.validity - dw, t, wt)

    def derivative(self, i):
        step = unit_key(i, self.n)
        t, wt = {}, {}
        for k, c in self._t.items():
            a = (k >> (BITS * (self.n - 1 - i))) & MASK
            if a:
                t[k - step] = c * a
                wt[k - step] = self._wt[k] - self.L[i]
        return self._like(t, wt, self.validity - self.L[i])

    def integral(self, i=0):
        """Antiderivative in x_i with zero constant of integration."""
        step = unit_key(i, self.n)
        t, wt = {}, {}
        for k, c in self._t.items():
            a = (k >> (BITS * (self.n - 1 - i))) & MASK
            t[k + step] = c * Fraction(1, a + 1)
            wt[k + step] = self._wt[k] + self.L[i]
        return self._like(t, wt, self.validity + self.L[i])

    def map_coeffs(self, fn, ring=None):
        ring = ring or self.ring
        t = {k: ring.coerce(fn(c)) for k, c in self._t.items()}
        return Series._raw(self.n, self.L, ring, self.validity, *_clean(t, self._wt, self.n, self.L, ring, self.validity))

    def with_ring(self, ring):
        return self.map_coeffs(lambda c: c, ring)

    def with_L(self, L):
        L = _norm_L(L, self.n)
        wt = {k: _weight(unpack(k, self.n), L) for k in self._t}
        v = self.validity
        if v != INF and L != self.L:
            # keep only what is certainly exact under the new weights
            ratio = min(a / b for a, b in zip(L, self.L))
            v = v * ratio
        return Series._raw(self.n, L, self.ring, v, *_clean(dict(self._t), wt, self.n, L, self.ring, v))

    def residue(self):
        """Reduce coefficients modulo the nilpotent ideal."""
        return self.map_coeffs(self.ring.residue, Ring(1))

    def split_by(self, pred):
        """(terms whose exponent satisfies pred, the rest), same validity."""
        a, b = {}, {}
        for k, c in self._t.items():
            (a if pred(unpack(k, self.n)) else b)[k] = c
        return self._like(a, self._wt, self.validity, False), self._like(b, self._wt, self.validity, False)

    # comparisons
    def __eq__(self, other):
        if not isinstance(other, Series):
            return NotImplemented
        return (self.n == other.n and self.L == other.L and self.validity == other.validity
                and self.ring == other.ring and self._t == other._t)

    def __hash__(self):
        return hash((self.n, self.L, self.validity, frozenset(self._t.items())))

    def agrees(self, other, T=None):
        """Equal coefficientwise up to the shared validity (and ``T``)."""
        if other.ring.nil_index != self.ring.nil_index:
            a, b = self._unify(other)
            return a.agrees(b, T)
        self._check(other)
        v = min(self.validity, other.validity)
        if T is not None:
            v = min(v, T)
        d = self.add(other, v, sign=-1)
        return d.is_zero()

    def __repr__(self):
        v = "inf" if self.validity == INF else str(self.validity)
        return f"Series({format_series(self)!r}, validity={v})"

    def __str__(self):
        return format_series(self)


def _weight(alpha, L):
    return sum(w * a for w, a in zip(L, alpha))


def _scaled_ints(items):
    den = 1
    for _, _, c in items:
        if type(c) is not int:
            den = math.lcm(den, c.denominator)
    if den == 1:
        return items, 1
    return [(w, k, int(c * den)) for w, k, c in items], den


def _mul_rational(A, B, v):
    """Product of sorted rational term lists up to weight v in integer arithmetic."""
    A, da = _scaled_ints(A)
    B, db = _scaled_ints(B)
    t, wt = {}, {}
    b0 = B[0][0]
    for w1, k1, c1 in A:
        lim = v - w1
        if b0 > lim:
            break
        for w2, k2, c2 in B:
            if w2 > lim:
                break
            k = k1 + k2
            if k in t:
                t[k] += c1 * c2
            else:
                t[k] = c1 * c2
                wt[k] = w1 + w2
    den = da * db
    if den != 1:
        for k, c in t.items():
            q = Fraction(c, den)
            t[k] = q.numerator if q.denominator == 1 else q
    return t, wt


def _clean(t, wt, n, L, ring, validity):
    """Drop zeros and everything beyond validity; fill in missing weights."""
    out, owt = {}, {}
    lam = ring.eps_weight if not ring.is_field else 0
    for k, c in t.items():
        if not c:
            continue
        w = wt[k] if wt is not None and k in wt else _weight(unpack(k, n), L)
        if w > validity:
            continue
        if lam and validity != INF and isinstance(c, Nil) and w + lam * (c.n - 1) > validity:
            comps = [a if w + lam * i <= validity else 0 for i, a in enumerate(c.c)]
            c = Nil(comps)
            if not c:
                continue
        out[k] = c
        owt[k] = w
    return out, owt


# module-level API


def order(s, L=None):
    if L is not None and tuple(_norm_L(L, s.n)) != s.L:
        s = s.with_L(L) if s.validity == INF else Series._raw(
            s.n, _norm_L(L, s.n), s.ring, s.validity,
            dict(s._t), {k: _weight(unpack(k, s.n), _norm_L(L, s.n)) for k in s._t})
    return s.order()


def refined_order(s):
    return s.refined_order()


def mul(a, b, T=None):
    return a.mul(b, T)


def var(i, nvars, L=None, ring=QQ):
    alpha = [0] * nvars
    alpha[i] = 1
    return Series({tuple(alpha): 1}, nvars, INF, L, ring)


def const(c, nvars=1, L=None, ring=QQ):
    return Series({(0,) * nvars: c}, nvars, INF, L, ring)


def monomial(alpha, c=1, L=None, ring=QQ):
    return Series({tuple(alpha): c}, len(alpha), INF, L, ring)


def zero(nvars=1, validity=INF, L=None, ring=QQ):
    return Series({}, nvars, validity, L, ring)


def derivative(s, i):
    return s.derivative(i)


def d_op(a):
    """Formal derivative of a univariate series: a -> ((i+1) a_{i+1})."""
    if a.n != 1:
        raise ValueError("d_op expects a univariate series")
    return a.derivative(0)


class SeriesVec:
    """A vector of series sharing variables, weights and ring."""

    __slots__ = ("comps",)

    def __init__(self, comps):
        comps = tuple(comps)
        if not comps:
            raise ValueError("SeriesVec needs at least one component")
        n, L, ring = comps[0].n, comps[0].L, comps[0].ring
        for c in comps[1:]:
            if c.n != n or c.L != L or c.ring.nil_index != ring.nil_index:
                fail("DOMAIN_MISMATCH", "components over different variables")
        self.comps = comps

    @classmethod
    def zeros(cls, m, nvars, validity=INF, L=None, ring=QQ):
        return cls([zero(nvars, validity, L, ring) for _ in range(m)])

    @property
    def n(self):
        return self.comps[0].n

    @property
    def L(self):
        return self.comps[0].L

    @property
    def ring(self):
        return self.comps[0].ring

    @property
    def validity(self):
        return min(c.validity for c in self.comps)

    def __len__(self):
        return len(self.comps)

    def __iter__(self):
        return iter(self.comps)

    def __getitem__(self, i):
        return self.comps[i]

    def order(self):
        vals = [c.order() for c in self.comps]
        exact = [v for v in vals if not isinstance(v, AtLeast)]
        if exact:
            return min(exact)
        return AtLeast(self.validity + min(self.L))

    def order_bound(self):
        return min(c.order_bound() for c in self.comps)

    def refined_order(self):
        N = self.ring.nil_index
        ws = [c.order() for c in self.comps if not c.is_zero()]
        if not ws:
            return RefinedOrder(AtLeast(self.validity + min(self.L)), N)
        w = min(ws)
        p = N
        for c in self.comps:
            for ww, _, coef in c.items():
                if ww > w:
                    break
                p = min(p, self.ring.pow_of(coef))
        return RefinedOrder(w, p)

    def truncate(self, T):
        return SeriesVec(c.truncate(T) for c in self.comps)

    def is_zero(self):
        return all(c.is_zero() for c in self.comps)

    def __add__(self, other):
        _same_len(self, other)
        return SeriesVec(a + b for a, b in zip(self.comps, other.comps))

    def __sub__(self, other):
        _same_len(self, other)
        return SeriesVec(a - b for a, b in zip(self.comps, other.comps))

    def __neg__(self):
        return SeriesVec(-a for a in self.comps)

    def scale(self, c):
        return SeriesVec(a.scale(c) for a in self.comps)

    def __mul__(self, c):
        if isinstance(c, Series):
            return SeriesVec(a * c for a in self.comps)
        return self.scale(c)

    __rmul__ = __mul__

    def map(self, fn):
        return SeriesVec(fn(a) for a in self.comps)

    def __eq__(self, other):
        return isinstance(other, SeriesVec) and self.comps == other.comps

    def __hash__(self):
        return hash(self.comps)

    def agrees(self, other, T=None):
        _same_len(self, other)
        v = min(self.validity, other.validity)
        if T is not None:
            v = min(v, T)
        return all(a.agrees(b, v) for a, b in zip(self.comps, other.comps))

    def __repr__(self):
        return "SeriesVec([" + ", ".join(repr(c) for c in self.comps) + "])"

    def __str__(self):
        return "(" + ", ".join(str(c) for c in self.comps) + ")"


def _same_len(a, b):
    if len(a) != len(b):
        fail("DOMAIN_MISMATCH", f"vector lengths {len(a)} and {len(b)} differ")


def as_vec(a):
    return a if isinstance(a, SeriesVec) else SeriesVec([a])


# substitution


def substitute_partial(F, a, nbase, T=None, check_order=True):
    """Evaluate F(x, a) where F has ``nbase`` base variables then len(a) more.

    Base variables are kept; the remaining ones are replaced by the series in
    ``a`` (which live in the base variables).  Returns a Series.
    """
    a = as_vec(a)
    p = len(a)
    if F.n != nbase + p:
        fail("DOMAIN_MISMATCH", f"expected {nbase + p} variables, got {F.n}")
    if nbase and a.n != nbase:
        fail("DOMAIN_MISMATCH", "substituted series live in the wrong variables")
    if nbase and a.L != F.L[:nbase]:
        fail("DOMAIN_MISMATCH", "base weights of F and the substituted series differ")
    n, L, ring = a.n, a.L, a.ring
    if F.ring.nil_index != ring.nil_index:
        if not F.ring.is_field:
            fail("DOMAIN_MISMATCH", "series over different rings")
        F = F.with_ring(ring)
    if check_order and F.validity != INF:
        for comp in a:
            if comp.constant_term():
                fail("ORDER_ZERO_INPUT", "substituted series must have positive order")
    # tail bound from the truncation of F
    v = INF
    if F.validity != INF:
        ratio = min([Fraction(1)] * bool(nbase) + [Fraction(comp.order_bound()) / F.L[nbase + i]
                                                  for i, comp in enumerate(a)])
        v = F.validity * ratio
    if T is not None:
        v = min(v, T)
    proto = a[0]
    one = proto.const(1)
    cache = {}

    def power(i, e):
        key = (i, e)
        if key not in cache:
            if e == 0:
                cache[key] = one
            elif e == 1:
                cache[key] = a[i].truncate(v) if v != INF else a[i]
            else:
                half = power(i, e // 2)
                r = half.mul(half, None if v == INF else v)
                if e & 1:
                    r = r.mul(a[i], None if v == INF else v)
                cache[key] = r
        return cache[key]

    acc_t, acc_v = {}, v
    for _, k, c in F.items():
        alpha = unpack(k, F.n)
        base, ys = alpha[:nbase], alpha[nbase:]
        term = None
        for i, e in enumerate(ys):
            if e:
                pw = power(i, e)
                term = pw if term is None else term.mul(pw, None if v == INF else v)
        if term is None:
            term = one
        if nbase and any(base):
            term = term.shift(base)
        if c != 1:
            term = term.scale(c)
        acc_v = min(acc_v, term.validity)
        for kk, cc in term._t.items():
            acc_t[kk] = acc_t[kk] + cc if kk in acc_t else cc
    return Series._raw(n, L, ring, acc_v, *_clean(acc_t, None, n, L, ring, acc_v))


def substitute(g, a, T=None):
    """Substitute the vector ``a`` for the variables of ``g``.

    ``g`` may be a Series or a SeriesVec; the result has the same shape.
    Exact polynomials accept inputs with constant terms; truncated series
    require every input to have positive order.
    """
    if isinstance(g, SeriesVec):
        return SeriesVec(substitute_partial(c, a, 0, T) for c in g)
    return substitute_partial(g, a, 0, T)


def taylor_expand(F, a, max_y_deg, nbase=None):
    """Coefficients of F(x, a + z) in powers of z up to total degree max_y_deg.

    Returns a dict mapping each z-exponent (tuple) to a Series, or to a
    SeriesVec when F is a SeriesVec.
    """
    a = as_vec(a)
    p = len(a)
    if isinstance(F, SeriesVec):
        parts = [taylor_expand(c, a, max_y_deg, nbase) for c in F]
        return {nu: SeriesVec(part[nu] for part in parts) for nu in parts[0]}
    if nbase is None:
        nbase = F.n - p
    out = {}
    for nu in _exponents(p, max_y_deg):
        D = F
        scale = 1
        for i, e in enumerate(nu):
            for _ in range(e):
                D = D.derivative(nbase + i)
            scale *= math.factorial(e)
        val = substitute_partial(D, a, nbase, check_order=False)
        out[nu] = val.scale(Fraction(1, scale)) if scale != 1 else val
    return out


def _exponents(p, d):
    """All exponent tuples of length p and total degree <= d, graded then lex."""
    res = []
    for total in range(d + 1):
        level = []
        _compositions(p, total, [], level)
        res.extend(sorted(level))
    return res


def _compositions(p, total, prefix, out):
    if p == 0:
        if total == 0:
            out.append(())
        return
    if len(prefix) == p - 1:
        out.append(tuple(prefix + [total]))
        return
    for e in range(total + 1):
        _compositions(p, total - e, prefix + [e], out)


# text format


def default_names(n):
    return ["t"] if n == 1 else [f"x{i + 1}" for i in range(n)]


def _format_mono(alpha, names):
    parts = []
    for e, name in zip(alpha, names):
        if e == 1:
            parts.append(name)
        elif e > 1:
            parts.append(f"{name}^{e}")
    return "*".join(parts)


def format_series(s, names=None):
    names = names or default_names(s.n)
    if s.is_zero():
        return "0"
    out = ""
    for alpha, c in s.terms():
        mono = _format_mono(alpha, names)
        cs = format_coeff(c)
        neg = cs.startswith("-")
        if neg:
            cs = cs[1:]
        if mono:
            body = mono if cs == "1" else f"{cs}*{mono}"
        else:
            body = cs
        if not out:
            out = ("-" if neg else "") + body
        else:
            out += (" - " if neg else " + ") + body
    return out


_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\S))")


def _natural_key(name):
    m = re.match(r"([A-Za-z_]+)(\d*)$", name)
    if not m:
        return (name, 0)
    return (m.group(1), int(m.group(2) or 0))


def detect_names(*texts):
    """Variable names used in the given expressions, naturally sorted."""
    names = set()
    for text in texts:
        for num, ident, _ in _TOKEN.findall(text):
            if ident and ident != "e":
                names.add(ident)
    return sorted(names, key=_natural_key)


class _Parser:
    def __init__(self, text, names, ring, L):
        self.toks = []
        pos = 0
        text = text.strip()
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                break
            pos = m.end()
            num, ident, op = m.groups()
            if num:
                self.toks.append(("num", int(num)))
            elif ident:
                self.toks.append(("id", ident))
            elif op:
                self.toks.append(("op", op))
        self.i = 0
        self.names = list(names)
        self.index = {nm: k for k, nm in enumerate(self.names)}
        self.ring = ring
        self.L = L
        self.n = len(self.names)

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def err(self, msg):
        fail("PARSE_ERROR", msg)

    def parse(self):
        if not self.toks:
            self.err("empty expression")
        r = self.expr()
        if self.i != len(self.toks):
            self.err(f"unexpected token {self.peek()[1]!r}")
        return r

    def const(self, c):
        return Series({(0,) * self.n: c}, self.n, INF, self.L, self.ring)

    def expr(self):
        r = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            rhs = self.term()
            r = r + rhs if op == "+" else r - rhs
        return r

    def term(self):
        r = self.unary()
        while True:
            kind, val = self.peek()
            if kind == "op" and val == "*":
                self.take()
                r = r * self.unary()
            elif kind == "op" and val == "/":
                self.take()
                d = self.unary()
                if any(k != 0 for k in d._t) or d.is_zero():
                    self.err("division only by nonzero constants")
                r = r.scale(self.ring.inv(d.constant_term()))
            elif kind in ("num", "id") or (kind == "op" and val == "("):
                r = r * self.unary()
            else:
                return r

    def unary(self):
        kind, val = self.peek()
        if kind == "op" and val in "+-":
            self.take()
            r = self.unary()
            return -r if val == "-" else r
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            kind, val = self.take()
            if kind != "num":
                self.err("exponent must be a natural number")
            return base.power(val)
        return base

    def atom(self):
        kind, val = self.take()
        if kind == "num":
            return self.const(val)
        if kind == "id":
            if val == "e":
                if self.ring.is_field:
                    self.err("nilpotent e used over the rationals")
                return self.const(self.ring.eps())
            if val not in self.index:
                self.err(f"unknown variable {val!r}")
            alpha = [0] * self.n
            alpha[self.index[val]] = 1
            return Series({tuple(alpha): 1}, self.n, INF, self.L, self.ring)
        if kind == "op" and val == "(":
            r = self.expr()
            if self.take() != ("op", ")"):
                self.err("missing ')'")
            return r
        self.err(f"unexpected token {val!r}")


def parse_poly(text, names=None, ring=QQ, L=None):
    """Parse a polynomial expression into an exact Series."""
    if names is None:
        names = detect_names(text) or ["t"]
    L = _norm_L(L, len(names))
    return _Parser(text, names, ring, L).parse()


def parse_series(text, names=None, validity=INF, ring=QQ, L=None):
    return parse_poly(text, names, ring, L).truncate(validity)


def _fmt_num(x):
    return "inf" if x == INF else str(x)


def dump_series(obj):
    """Serialize a Series or SeriesVec in the line-based file format."""
    vec = as_vec(obj)
    first = vec[0]
    header = (f"nvars={first.n} L={','.join(str(w) for w in first.L)} "
              f"validity={_fmt_num(vec.validity)} ring={first.ring.name()}")
    if isinstance(obj, SeriesVec):
        header += f" comps={len(vec)}"
    lines = [header]
    for j, comp in enumerate(vec):
        for alpha, c in comp.terms():
            key = ",".join(str(a) for a in alpha)
            if isinstance(obj, SeriesVec):
                key += f",{j}"
            lines.append(f"{key}: {format_coeff(c)}")
    return "\n".join(lines) + "\n"


def load_series(text):
    """Inverse of :func:`dump_series`."""
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        fail("PARSE_ERROR", "empty series file")
    fields = {}
    for part in lines[0].split():
        if "=" not in part:
            fail("PARSE_ERROR", f"bad header field {part!r}")
        k, v = part.split("=", 1)
        fields[k] = v
    try:
        n = int(fields["nvars"])
        L = [Fraction(w) for w in fields.get("L", ",".join(["1"] * n)).split(",")]
        vt = fields.get("validity", "inf")
        validity = INF if vt == "inf" else Fraction(vt)
        ring = parse_ring(fields.get("ring", "Q"))
        m = int(fields["comps"]) if "comps" in fields else None
    except (KeyError, ValueError) as exc:
        fail("PARSE_ERROR", f"bad header: {exc}")
    comps = {}
    for ln in lines[1:]:
        if ":" not in ln:
            fail("PARSE_ERROR", f"bad line {ln!r}")
        key, coef = ln.split(":", 1)
        try:
            idx = [int(x) for x in key.split(",")]
        except ValueError:
            fail("PARSE_ERROR", f"bad exponent {key!r}")
        if len(idx) == n + 1:
            j, alpha = idx[n], tuple(idx[:n])
            m = m if m is not None else 0
        elif len(idx) == n:
            j, alpha = 0, tuple(idx)
        else:
            fail("PARSE_ERROR", f"exponent {key!r} has wrong length")
        c = parse_poly(coef.strip(), [], ring).constant_term() if coef.strip() else 0
        comps.setdefault(j, {})[alpha] = c
    if m is None:
        return Series(comps.get(0, {}), n, validity, L, ring)
    m = max(m, max(comps, default=-1) + 1)
    return SeriesVec(Series(comps.get(j, {}), n, validity, L, ring) for j in range(m))
