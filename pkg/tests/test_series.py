from fractions import Fraction
from math import factorial

import pytest
import hypothesis.strategies as st
from hypothesis import given, settings

from powerlin.errors import PowerlinError
from powerlin.ring import QQ, Nil, Ring
from powerlin.series import (
    INF, AtLeast, RefinedOrder, Series, SeriesVec, d_op, derivative, dump_series,
    load_series, monomial, order, parse_poly, refined_order, substitute,
    taylor_expand, var,
)

from oracles import dmul, dsubst, nil_mul, series_dict
from strategies import polynomials, ring_elements, series

R3 = Ring(3)
t = var(0, 1)


# orders

def test_order_examples():
    assert order(t**3 + t**5) == 3
    assert order(monomial((1, 2)), (1, 2)) == 5
    z = Series({}, 1, 10)
    assert order(z) == AtLeast(11)


def test_refined_order_examples():
    e = R3.eps()
    s = Series({(2,): e * e, (3,): 1}, 1, 10, ring=R3)
    assert refined_order(s) == (2, 2)
    assert refined_order(t) == (1, 0)
    assert refined_order(Series({}, 1, 8, ring=R3)) == RefinedOrder(AtLeast(9), 3)


# multiplication

def test_mul_examples():
    assert (1 + t) * (1 - t) == 1 - t**2
    N = 7
    geo = Series.from_list([1] * (N + 1), validity=INF)
    assert geo * (1 - t) == 1 - t**(N + 1)
    e = R3.eps()
    a = Series({(0,): e}, 1, ring=R3)
    b = Series({(0,): e * e}, 1, ring=R3)
    assert (a * b).is_zero()


def test_mul_validity_rule():
    a = Series({(2,): 1, (3,): 5}, 1, 6)
    b = Series({(1,): 2}, 1, 4)
    p = a * b
    assert p.validity == min(6 + 1, 4 + 2)


@settings(deadline=None)
@given(series(n=2, validity=5), series(n=2, validity=5))
def test_mul_matches_oracle(a, b):
    p = a * b
    want = dmul(series_dict(a), series_dict(b), p.validity, (1, 1))
    assert series_dict(p) == want


@settings(deadline=None)
@given(series(n=2, validity=4), series(n=2, validity=4), series(n=2, validity=4))
def test_ring_laws(a, b, c):
    assert (a + b).agrees(b + a)
    assert (a * b).agrees(b * a)
    assert ((a * b) * c).agrees(a * (b * c))
    assert (a * (b + c)).agrees(a * b + a * c)
    assert (a - a).is_zero()


@settings(deadline=None)
@given(series(n=1, validity=8, ring=R3), series(n=1, validity=8, ring=R3),
       series(n=1, validity=8, ring=R3))
def test_ring_laws_test_ring(a, b, c):
    assert ((a * b) * c).agrees(a * (b * c))
    assert (a * (b + c)).agrees(a * b + a * c)


@settings(deadline=None)
@given(series(n=2, validity=6, min_order=1), series(n=2, validity=6, min_order=1),
       st.integers(2, 6))
def test_truncation_coherence(a, b, T):
    full = (a * b).truncate(T)
    # orders >= 1 mean T-1 on each factor suffices to reach T
    part = a.truncate(T - 1) * b.truncate(T - 1)
    assert part.validity >= min(full.validity, T)
    assert full.agrees(part, min(full.validity, T))


@settings(deadline=None)
@given(ring_elements(R3), ring_elements(R3))
def test_pow_subadditive(x, y):
    assert R3.pow_of(x * y) >= min(3, R3.pow_of(x) + R3.pow_of(y))
    assert list((x * y).c) == nil_mul(x.c, y.c, 3)


@settings(deadline=None)
@given(series(n=1, validity=8, ring=R3))
def test_inverse_of_units(s):
    u = s + 1 if not s.is_unit() else s
    assert (u * u.inverse()).agrees(u.const(1))


# substitution

def test_substitute_examples():
    x, y = var(0, 2), var(1, 2)
    g = x + x * y
    assert substitute(g, SeriesVec([t, t**2])) == t + t**3
    assert substitute(var(0, 1), SeriesVec([t])) == t
    assert substitute(var(0, 1)**2, SeriesVec([t + t**2])) == t**2 + 2 * t**3 + t**4


def test_substitute_rejects_constant_terms():
    g = Series({(1,): 1, (2,): 1}, 1, 5)
    with pytest.raises(PowerlinError) as ei:
        substitute(g, SeriesVec([1 + t]))
    assert ei.value.code == "ORDER_ZERO_INPUT"


@settings(deadline=None)
@given(polynomials(2, max_deg=3), series(n=1, validity=7, min_order=1),
       series(n=1, validity=7, min_order=1))
def test_substitute_matches_oracle(g, a1, a2):
    r = substitute(g, SeriesVec([a1, a2]))
    want = dsubst(series_dict(g), [series_dict(a1), series_dict(a2)], r.validity, (1,), 1)
    assert series_dict(r) == want


@settings(deadline=None)
@given(polynomials(2, max_deg=3, min_deg=1), polynomials(1, max_deg=2, min_deg=1),
       polynomials(1, max_deg=2, min_deg=1), series(n=1, validity=8, min_order=1))
def test_substitution_functorial(g, a1, a2, b):
    inner = SeriesVec([a1, a2])
    lhs = substitute(substitute(g, inner), SeriesVec([b]))
    rhs = substitute(g, SeriesVec([substitute(a1, SeriesVec([b])), substitute(a2, SeriesVec([b]))]))
    assert lhs.agrees(rhs)


# derivatives

def test_derivative_examples():
    assert d_op(t**3) == 3 * t**2
    x1, x2 = var(0, 2), var(1, 2)
    assert derivative(x1 * x2**2, 1) == 2 * x1 * x2
    ex = Series.from_list([Fraction(1, factorial(i)) for i in range(11)], validity=10)
    d = d_op(ex)
    assert d.validity == 9
    assert d == ex.truncate(9)


@settings(deadline=None)
@given(series(n=2, validity=6), series(n=2, validity=6), st.integers(0, 1))
def test_leibniz(a, b, i):
    lhs = derivative(a * b, i)
    rhs = derivative(a, i) * b + a * derivative(b, i)
    assert lhs.agrees(rhs)


# Taylor expansion

def test_taylor_examples():
    F = var(1, 2)**2
    out = taylor_expand(F, SeriesVec([t]), 2)
    assert out == {(0,): t**2, (1,): 2 * t, (2,): t.const(1)}
    out = taylor_expand(var(1, 2), SeriesVec([t.zero_like(INF)]), 1)
    assert out[(0,)].is_zero() and out[(1,)] == t.const(1)
    x, y = var(0, 2), var(1, 2)
    out = taylor_expand(y**2 + x * y, SeriesVec([t**2]), 2)
    assert out == {(0,): t**4 + t**3, (1,): 2 * t**2 + t, (2,): t.const(1)}


@settings(deadline=None)
@given(polynomials(2, max_deg=3), series(n=1, validity=6, min_order=1))
def test_taylor_reassembles(F, a):
    out = taylor_expand(F, SeriesVec([a]), 3)
    assert out[(0,)].agrees(substitute(F, SeriesVec([t, a])))


# text formats

def test_parser():
    p = parse_poly("y^2 - x1^3 + 1/2*x1*x2", ["x1", "x2", "y"])
    assert p.coeff((0, 0, 2)) == 1
    assert p.coeff((3, 0, 0)) == -1
    assert p.coeff((1, 1, 0)) == Fraction(1, 2)
    assert parse_poly("2t(1+t)", ["t"]) == 2 * t + 2 * t**2
    q = parse_poly("e*t + e^3", ["t"], R3)
    assert q.coeff((1,)) == R3.eps() and q.coeff((0,)) == 0


@pytest.mark.parametrize("text", ["x +", "x ^ y", "1/x", "(x", "q"])
def test_parser_errors(text):
    with pytest.raises(PowerlinError) as ei:
        parse_poly(text, ["x"])
    assert ei.value.code == "PARSE_ERROR"


@settings(deadline=None)
@given(series(n=2, validity=5, L=(1, Fraction(3, 2))), series(n=2, validity=5, L=(1, Fraction(3, 2))))
def test_file_roundtrip(a, b):
    assert load_series(dump_series(a)) == a
    v = SeriesVec([a, b])
    assert load_series(dump_series(v)) == v


@settings(deadline=None)
@given(series(n=1, validity=6, ring=R3))
def test_file_roundtrip_test_ring(a):
    assert load_series(dump_series(a)) == a
