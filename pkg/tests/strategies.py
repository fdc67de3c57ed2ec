"""Hypothesis strategies shared across test modules."""

from fractions import Fraction

import hypothesis.strategies as st

from powerlin.ring import QQ, Nil, Ring
from powerlin.series import Series

small_rationals = st.builds(Fraction, st.integers(-5, 5), st.integers(1, 3))


@st.composite
def ring_elements(draw, ring=QQ, unit=False):
    if ring.is_field:
        c = draw(small_rationals)
        if unit and c == 0:
            c = Fraction(1)
        return c
    comps = [draw(small_rationals) for _ in range(ring.nil_index)]
    if unit and comps[0] == 0:
        comps[0] = Fraction(1)
    return Nil(comps)


@st.composite
def exponents(draw, n, max_deg):
    return tuple(draw(st.integers(0, max_deg)) for _ in range(n))


@st.composite
def series(draw, n=1, validity=6, min_order=0, ring=QQ, L=None, max_terms=6):
    L = L or (1,) * n
    k = draw(st.integers(0, max_terms))
    terms = {}
    for _ in range(k):
        alpha = draw(exponents(n, int(validity)))
        w = sum(a * b for a, b in zip(alpha, L))
        if w < min_order or w > validity:
            continue
        terms[alpha] = draw(ring_elements(ring))
    return Series(terms, n, validity, L, ring)


@st.composite
def polynomials(draw, n, max_deg=3, max_terms=4, min_deg=0, ring=QQ):
    terms = {}
    for _ in range(draw(st.integers(1, max_terms))):
        alpha = draw(exponents(n, max_deg))
        if min_deg <= sum(alpha) <= max_deg:
            terms[alpha] = draw(ring_elements(ring))
    return Series(terms, n, ring=ring)
