"""Independent reference arithmetic used to produce expected values.

Dense dictionaries keyed by exponent tuples, no packing, no validity
calculus: everything is truncated explicitly at a caller-given weight.
"""

from fractions import Fraction
from itertools import product


def weight(alpha, L):
    return sum(Fraction(w) * a for w, a in zip(L, alpha))


def dmul(a, b, T, L):
    out = {}
    for (ea, ca), (eb, cb) in product(a.items(), b.items()):
        e = tuple(x + y for x, y in zip(ea, eb))
        if weight(e, L) <= T:
            out[e] = out.get(e, 0) + ca * cb
    return {e: c for e, c in out.items() if c != 0}


def dadd(a, b, sign=1):
    out = dict(a)
    for e, c in b.items():
        out[e] = out.get(e, 0) + sign * c
    return {e: c for e, c in out.items() if c != 0}


def dtrunc(a, T, L):
    return {e: c for e, c in a.items() if weight(e, L) <= T}


def dpow(a, k, T, L, n):
    out = {(0,) * n: 1}
    for _ in range(k):
        out = dmul(out, a, T, L)
    return out


def dsubst(g, args, T, L, n):
    """g: dict over len(args) variables; args: list of dicts over n variables."""
    out = {}
    for beta, c in g.items():
        term = {(0,) * n: c}
        for a, k in zip(args, beta):
            term = dmul(term, dpow(a, k, T, L, n), T, L)
        out = dadd(out, term)
    return dtrunc(out, T, L)


def series_dict(s):
    return dict(s.terms())


def nil_mul(a, b, N):
    """Multiply coefficient lists modulo e^N."""
    out = [Fraction(0)] * N
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            if i + j < N:
                out[i + j] += x * y
    return out


def ode_oracle(P, q, init, N):
    """Coefficients of x with x^(q) = P(x, .., x^(q-1)), by dense recursion.

    P: list of dicts over q*n variables (values first, then derivatives);
    init: n rows of q derivative values at 0.
    """
    from math import factorial

    n = len(P)
    c = [[Fraction(v) / factorial(j) for j, v in enumerate(row)] for row in init]
    for k in range(N - q + 1):
        args = []
        for l in range(q):
            for i in range(n):
                # l-th derivative of the known coefficients, truncated at degree k
                args.append({(m,): c[i][m + l] * factorial(m + l) / factorial(m)
                             for m in range(len(c[i]) - l) if m <= k and c[i][m + l]})
        for i in range(n):
            val = dsubst(P[i], args, k, (1,), 1).get((k,), 0)
            c[i].append(Fraction(val) * factorial(k) / factorial(k + q))
    return [row[:N + 1] for row in c]


def binomial_series(alpha, N):
    """Coefficients of (1 + u)^alpha up to u^N."""
    out, c = [], Fraction(1)
    for k in range(N + 1):
        out.append(c)
        c = c * (alpha - k) / (k + 1)
    return out
