"""Exact coefficient rings: the rationals, or Q[e]/(e^N) with one nilpotent e.

Rational coefficients are plain ``int``/``Fraction`` values.  Elements of the
nilpotent ring are :class:`Nil` instances holding ``N`` rational components.
"""

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

from .errors import fail


def as_rational(x):
    """Coerce ``x`` to int or Fraction, keeping ints as ints."""
    if isinstance(x, bool):
        return int(x)
    if isinstance(x, int):
        return x
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else x
    if isinstance(x, Rational):
        return Fraction(x.numerator, x.denominator)
    if isinstance(x, str):
        f = Fraction(x)
        return f.numerator if f.denominator == 1 else f
    raise TypeError(f"not an exact rational: {x!r}")


class Nil:
    """Element ``c0 + c1 e + ... + c_{N-1} e^{N-1}`` of Q[e]/(e^N)."""

    __slots__ = ("c",)

    def __init__(self, comps):
        self.c = tuple(comps)

    @property
    def n(self):
        return len(self.c)

    def _lift(self, other):
        if isinstance(other, Nil):
            if other.n != self.n:
                raise ValueError("mixing nilpotent rings of different index")
            return other.c
        if isinstance(other, (int, Fraction)):
            return (other,) + (0,) * (self.n - 1)
        return None

    def __add__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return Nil(a + b for a, b in zip(self.c, o))

    __radd__ = __add__

    def __sub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return Nil(a - b for a, b in zip(self.c, o))

    def __rsub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return Nil(b - a for a, b in zip(self.c, o))

    def __neg__(self):
        return Nil(-a for a in self.c)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return Nil(a * other for a in self.c)
        o = self._lift(other)
        if o is None:
            return NotImplemented
        n = self.n
        out = [0] * n
        for i, a in enumerate(self.c):
            if a:
                for j in range(n - i):
                    b = o[j]
                    if b:
                        out[i + j] += a * b
        return Nil(out)

    __rmul__ = __mul__

    def inverse(self):
        a0 = self.c[0]
        if not a0:
            raise ZeroDivisionError("nilpotent element has no inverse")
        # (a0 (1 + m))^-1 = a0^-1 (1 - m + m^2 - ...), m nilpotent
        m = Nil((0,) + tuple(Fraction(a) / a0 for a in self.c[1:]))
        acc = Nil((1,) + (0,) * (self.n - 1))
        term = acc
        for _ in range(1, self.n):
            term = term * (-m)
            acc = acc + term
        return acc * (Fraction(1) / a0)

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return Nil(Fraction(a) / other for a in self.c)
        if isinstance(other, Nil):
            return self * other.inverse()
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.inverse() * other
        return NotImplemented

    def __pow__(self, k):
        acc = Nil((1,) + (0,) * (self.n - 1))
        for _ in range(k):
            acc = acc * self
        return acc

    def __bool__(self):
        return any(self.c)

    def __eq__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return all(a == b for a, b in zip(self.c, o))

    def __hash__(self):
        if not any(self.c[1:]):
            return hash(self.c[0])
        return hash(self.c)

    @property
    def pow(self):
        """Largest i with the element in (e^i); N for zero."""
        for i, a in enumerate(self.c):
            if a:
                return i
        return self.n

    def __repr__(self):
        return f"Nil({list(self.c)!r})"

    def __str__(self):
        return format_coeff(self)


@dataclass(frozen=True)
class Ring:
    """Coefficient ring descriptor.

    ``nil_index`` is the smallest N with e^N = 0 (1 means the rationals).
    ``eps_weight`` optionally grades validity by the nilpotent: component
    e^k of a coefficient at weight w counts as weight ``w + eps_weight*k``.
    """

    nil_index: int = 1
    eps_weight: Fraction = Fraction(0)

    def __post_init__(self):
        if self.nil_index < 1:
            raise ValueError("nil_index must be positive")
        object.__setattr__(self, "eps_weight", as_rational(self.eps_weight))

    @property
    def is_field(self):
        return self.nil_index == 1

    @property
    def kind(self):
        return "rationals" if self.is_field else "test_ring"

    def coerce(self, x):
        if isinstance(x, Nil):
            if self.is_field:
                if any(x.c[1:]):
                    fail("DOMAIN_MISMATCH", "nilpotent coefficient in rational ring")
                return as_rational(x.c[0])
            if x.n != self.nil_index:
                fail("DOMAIN_MISMATCH", "nilpotent index mismatch")
            return x
        x = as_rational(x)
        if self.is_field:
            return x
        return Nil((x,) + (0,) * (self.nil_index - 1))

    def zero(self):
        return self.coerce(0)

    def one(self):
        return self.coerce(1)

    def eps(self, k=1):
        if self.is_field:
            fail("DOMAIN_MISMATCH", "rationals have no nilpotent")
        c = [0] * self.nil_index
        if k < self.nil_index:
            c[k] = 1
        return Nil(c)

    def pow_of(self, c):
        if isinstance(c, Nil):
            return c.pow
        return 0 if c else self.nil_index

    def is_unit(self, c):
        if isinstance(c, Nil):
            return bool(c.c[0])
        return bool(c)

    def inv(self, c):
        if isinstance(c, Nil):
            return c.inverse()
        if not c:
            raise ZeroDivisionError("zero has no inverse")
        return as_rational(Fraction(1) / c)

    def residue(self, c):
        """Image in the residue field Q."""
        return as_rational(c.c[0]) if isinstance(c, Nil) else c

    def name(self):
        return "Q" if self.is_field else f"Q[e]/e^{self.nil_index}"

    def with_eps_weight(self, w):
        return Ring(self.nil_index, w)


QQ = Ring(1)


def parse_ring(text):
    text = text.strip().replace(" ", "")
    if text in ("Q", "QQ"):
        return QQ
    for prefix in ("Q[e]/e^", "Q[e]/(e^"):
        if text.startswith(prefix):
            body = text[len(prefix):].rstrip(")")
            try:
                return Ring(int(body))
            except ValueError:
                break
    fail("PARSE_ERROR", f"unknown ring {text!r}")


def format_rational(q):
    q = as_rational(q)
    return str(q)


def format_coeff(c):
    if not isinstance(c, Nil):
        return format_rational(c)
    parts = []
    for k, a in enumerate(c.c):
        if not a:
            continue
        if k == 0:
            parts.append(format_rational(a))
        else:
            mono = "e" if k == 1 else f"e^{k}"
            if a == 1:
                parts.append(mono)
            elif a == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{format_rational(a)}*{mono}")
    if not parts:
        return "0"
    if len(parts) == 1:
        return parts[0]
    s = parts[0]
    for p in parts[1:]:
        s += " - " + p[1:] if p.startswith("-") else " + " + p
    return f"({s})"
