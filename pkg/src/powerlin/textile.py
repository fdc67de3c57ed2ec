"""Textile maps: order-local evaluators on vectors of power series.

A :class:`TextileMap` bundles an evaluator with a certified contraction
offset ``kappa``: output coefficients up to weight T only depend on input
coefficients up to weight ``T - kappa``, and
``w(f(a) - f(b)) >= w(a - b) + kappa`` on the domain ``m^l * C^m``.
"""

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .errors import fail
from .ring import QQ, Nil, Ring
from .series import (
    INF, AtLeast, Series, SeriesVec, as_vec, bound_value, substitute_partial, unpack,
)


def lift_vec(a, ring):
    return SeriesVec(c.with_ring(ring) for c in as_vec(a))


def eps_part(a):
    """Coefficient of e in a vector over Q[e]/(e^2)."""
    return SeriesVec(c.map_coeffs(lambda x: x.c[1], QQ) for c in a)


@dataclass
class TextileMap:
    arity_in: int
    arity_out: int
    fn: Callable
    kappa: object
    domain_order: object = 1
    kind: str = "general"
    nvars: Optional[int] = None
    poly: Optional[SeriesVec] = None
    nbase: int = 0
    matrix: Optional[list] = None
    name: str = ""
    _lifted: dict = field(default_factory=dict, repr=False)

    @property
    def domain_orders(self):
        l = self.domain_order
        return tuple(l) if isinstance(l, (tuple, list)) else (l,) * self.arity_in

    @property
    def min_domain_order(self):
        return min(self.domain_orders)

    def __call__(self, a, T=None):
        a = as_vec(a)
        if len(a) != self.arity_in:
            fail("DOMAIN_MISMATCH", f"{self.name or 'map'} expects {self.arity_in} inputs, got {len(a)}")
        if self.nvars is not None and a.n != self.nvars:
            fail("DOMAIN_MISMATCH", "input lives in the wrong number of variables")
        if T is None:
            T = a.validity + self.kappa if self.kappa != INF else a.validity
        if self.kappa != INF and T != INF:
            need = T - self.kappa
            if need < a.validity:
                a = a.truncate(need)
        out = as_vec(self.fn(a, T))
        if len(out) != self.arity_out:
            fail("DOMAIN_MISMATCH", "evaluator returned the wrong number of outputs")
        return out.truncate(T) if T != INF else out

    def poly_over(self, ring):
        if self.poly is None or self.poly.ring.nil_index == ring.nil_index:
            return self.poly
        key = ring.nil_index
        if key not in self._lifted:
            if not self.poly.ring.is_field:
                fail("DOMAIN_MISMATCH", "cannot move a test-ring polynomial to another ring")
            self._lifted[key] = lift_vec(self.poly, ring)
        return self._lifted[key]

    def jacobian_apply(self, a, v, T=None):
        """Symbolic tangent sum_i d_i g(a) v_i (tactile maps only)."""
        if self.kind != "tactile":
            fail("UNSUPPORTED", "symbolic Jacobian needs polynomial data")
        a, v = as_vec(a), as_vec(v)
        poly = self.poly_over(a.ring)
        out = []
        for comp in poly:
            acc = None
            for i in range(self.arity_in):
                d = substitute_partial(comp.derivative(self.nbase + i), a, self.nbase, check_order=False)
                term = d.mul(v[i], T)
                acc = term if acc is None else acc + term
            out.append(acc)
        return SeriesVec(out)


def _rule_kappa(alpha_y, beta, orders, L_base):
    S = sum(a * p for a, p in zip(alpha_y, orders))
    top = max(p for a, p in zip(alpha_y, orders) if a)
    return sum(w * b for w, b in zip(L_base, beta)) + S - top


def tactile_kappa(poly, nbase, domain_orders):
    """Monomial rule: kappa = L.beta + sum a_i p_i - max_{a_i > 0} p_i, minimized."""
    best = INF
    for comp in poly:
        L_base = comp.L[:nbase]
        for alpha, _ in comp.terms():
            beta, ay = alpha[:nbase], alpha[nbase:]
            if not any(ay):
                continue
            best = min(best, _rule_kappa(ay, beta, domain_orders, L_base))
    return best


def tactile_from_poly(g, domain_order=1, nbase=0, name="tactile"):
    """Tactile map a -> g(x, a) from polynomial data over (x, y)."""
    g = as_vec(g)
    m = g.n - nbase
    orders = domain_order if isinstance(domain_order, (tuple, list)) else (domain_order,) * m
    if any(o < 1 for o in orders):
        fail("DOMAIN_MISMATCH", "tactile domains need order at least 1")
    kappa = tactile_kappa(g, nbase, orders)
    holder = {}

    def fn(a, T):
        poly = holder["map"].poly_over(a.ring)
        return SeriesVec(substitute_partial(c, a, nbase, None if T == INF else T, check_order=False)
                         for c in poly)

    tm = TextileMap(m, len(g), fn, kappa, tuple(orders) if len(set(orders)) > 1 else orders[0],
                    "tactile", nbase or None, g, nbase, name=name)
    holder["map"] = tm
    return tm


def linear_map(A, domain_order=1, name="linear"):
    """a -> A a for a p x m matrix of Series; kappa = least entry order."""
    rows = len(A)
    cols = len(A[0])
    orders = [bound_value(e.order()) for row in A for e in row if not e.is_zero()]
    kappa = min(orders) if orders else INF
    n = A[0][0].n
    holder = {}

    def fn(a, T):
        M = holder["map"].matrix_over(a.ring)
        out = []
        for row in M:
            acc = a[0].zero_like(INF)
            for e, x in zip(row, a):
                if e.is_zero() and e.validity == INF:
                    continue
                acc = acc + e.mul(x, None if T == INF else T)
            out.append(acc)
        return SeriesVec(out)

    tm = TextileMap(cols, rows, fn, kappa, domain_order, "linear", n, matrix=A, name=name)
    holder["map"] = tm
    return tm


def _matrix_over(self, ring):
    if self.matrix[0][0].ring.nil_index == ring.nil_index:
        return self.matrix
    key = ("matrix", ring.nil_index)
    if key not in self._lifted:
        self._lifted[key] = [[e.with_ring(ring) for e in row] for row in self.matrix]
    return self._lifted[key]


TextileMap.matrix_over = _matrix_over


def general_map(fn, arity_in, arity_out, kappa, domain_order=1, nvars=None, linear=False, name="general"):
    return TextileMap(arity_in, arity_out, fn, kappa, domain_order,
                      "linear" if linear else "general", nvars, name=name)


def identity_map(m, domain_order=1, nvars=None):
    return TextileMap(m, m, lambda a, T: a, 0, domain_order, "linear", nvars, name="id")


def from_recursion(template, d, name="recursion"):
    """Univariate map a -> (a_0, .., a_{d-1}, a_i - f_i(a_{i-1}, .., a_{i-d}), ...).

    ``template`` is an exact polynomial in d variables (y_1 = a_{i-1}, ...),
    a list of such polynomials indexed from i = d, or a callable i -> poly.
    """
    def poly_for(i):
        if callable(template):
            return template(i)
        if isinstance(template, (list, tuple)):
            return template[i - d] if i - d < len(template) else template[-1]
        return template

    def fn(a, T):
        s = a[0]
        top = min(T, s.validity)
        if top == INF:
            fail("DOMAIN_MISMATCH", "recursion maps need a finite validity")
        coeffs = {}
        vals = [s.coeff((i,)) for i in range(int(top) + 1)]
        for i, ai in enumerate(vals):
            if i < d:
                coeffs[(i,)] = ai
            else:
                point = [vals[i - k] for k in range(1, d + 1)]
                coeffs[(i,)] = ai - evaluate_poly(poly_for(i), point)
        return SeriesVec([Series(coeffs, 1, top, s.L, s.ring)])

    return TextileMap(1, 1, fn, 0, 0, "general", 1, name=name)


def evaluate_poly(p, point):
    """Value of an exact polynomial at a point of ring elements."""
    total = 0
    for alpha, c in p.terms():
        term = c
        for e, x in zip(alpha, point):
            if e:
                term = term * x ** e
        total = total + term
    return total


def compose(f, g):
    """f o g with kappa(f o g) = kappa(f) + kappa(g)."""
    if g.arity_out != f.arity_in:
        fail("DOMAIN_MISMATCH", f"cannot compose: {g.arity_out} outputs into {f.arity_in} inputs")
    if f.nvars is not None and g.nvars is not None and f.nvars != g.nvars:
        fail("DOMAIN_MISMATCH", "maps over different variables")
    lf, lg = f.min_domain_order, g.min_domain_order
    if lf > 0 and g.nvars is not None:
        probe = SeriesVec.zeros(g.arity_in, g.nvars)
        g0 = g(probe, lf)
        w0 = bound_value(g0.order())
        reach = lg + g.kappa if g.kappa != INF else INF
        if min(w0 if not g0.is_zero() else INF, reach) < lf:
            fail("DOMAIN_MISMATCH", "image of the inner map leaves the domain of the outer map")
    kappa = f.kappa + g.kappa if INF not in (f.kappa, g.kappa) else INF

    def fn(a, T):
        inner_T = T - f.kappa if (T != INF and f.kappa != INF) else T
        return f(g(a, inner_T), T)

    kind = "linear" if f.kind == g.kind == "linear" else "general"
    return TextileMap(g.arity_in, f.arity_out, fn, kappa, g.domain_order, kind,
                      g.nvars if g.nvars is not None else f.nvars, name=f"{f.name}o{g.name}")


def add_maps(f, g, sign=1):
    if (f.arity_in, f.arity_out) != (g.arity_in, g.arity_out):
        fail("DOMAIN_MISMATCH", "maps of different shapes")
    kappa = min(f.kappa, g.kappa)

    def fn(a, T):
        x, y = f(a, T), g(a, T)
        return x + y if sign > 0 else x - y

    kind = "linear" if f.kind == g.kind == "linear" else "general"
    return TextileMap(f.arity_in, f.arity_out, fn, kappa, f.domain_order, kind,
                      f.nvars if f.nvars is not None else g.nvars, name=f"{f.name}+{g.name}")


def tangent_apply(f, a, v, method="auto", T=None):
    """T_a f . v, via evaluation over Q[e]/(e^2) or the symbolic Jacobian."""
    a, v = as_vec(a), as_vec(v)
    if f.kind == "linear" and method == "auto":
        return f(v, T)
    base = a.ring
    if not base.is_field:
        if method == "nilpotent":
            fail("RING_BUSY", "base ring already carries a nilpotent")
        if f.kind == "tactile":
            return f.jacobian_apply(a, v, T)
        fail("UNSUPPORTED", "tangents of general maps over test rings")
    if method == "jacobian":
        return f.jacobian_apply(a, v, T)
    R2 = Ring(2)
    eps = Series({(0,) * a.n: R2.eps()}, a.n, INF, a.L, R2)
    lifted = SeriesVec(x.with_ring(R2) + eps * y.with_ring(R2) for x, y in zip(a, v))
    return eps_part(f(lifted, T))


def chain_rule_check(f, g, a, v):
    """T_a(f o g) v == T_{g(a)} f (T_a g v) within the shared validity."""
    a, v = as_vec(a), as_vec(v)
    lhs = tangent_apply(compose(f, g), a, v)
    rhs = tangent_apply(f, g(a), tangent_apply(g, a, v))
    return lhs.agrees(rhs)


@dataclass
class AuditReport:
    passed: bool
    trials: int
    checked: int
    inconclusive: int
    witness: Optional[tuple] = None

    def __bool__(self):
        return self.passed


def random_series(rng, n, low, validity, L=None, ring=QQ, density=0.6, span=3):
    """Random series of order >= low valid to ``validity`` (for audits/probes)."""
    from .series import _exponents

    terms = {}
    top = int(validity)
    for alpha in _exponents(n, top):
        w = sum(alpha) if L is None else sum(x * y for x, y in zip(alpha, L))
        if w < low or w > validity:
            continue
        if rng.random() < density:
            c = Fraction(rng.randint(-span, span), rng.randint(1, 2))
            if ring.is_field:
                terms[alpha] = c
            else:
                comps = [c] + [Fraction(rng.randint(-span, span)) for _ in range(ring.nil_index - 1)]
                terms[alpha] = Nil(comps)
    return Series(terms, n, validity, L, ring)


def contraction_audit(h, gamma, trials=20, seed=0, validity=10, nvars=None, ring=QQ,
                      refined=False):
    """Sampled check of w(h(a) - h(b)) >= w(a - b) + gamma on h's domain.

    With ``refined`` the test-ring variant W(h(a) - h(b)) > W(a - b) is used.
    """
    rng = random.Random(seed)
    n = nvars or h.nvars or 1
    orders = h.domain_orders
    checked = inconclusive = 0
    for _ in range(trials):
        a = SeriesVec(random_series(rng, n, orders[i], validity, ring=ring) for i in range(h.arity_in))
        shift = rng.randint(0, 2)
        b = SeriesVec(
            x + random_series(rng, n, orders[i] + shift, validity, ring=ring, density=0.4)
            for i, x in enumerate(a))
        d_in = a - b
        if d_in.is_zero():
            continue
        T = validity + gamma if not refined else validity
        T = min(T, validity + h.kappa) if h.kappa != INF else T
        d_out = h(a, T) - h(b, T)
        if refined:
            W_in, W_out = d_in.refined_order(), d_out.refined_order()
            if isinstance(W_out.w, AtLeast):
                if W_out.w.value > W_in.w:
                    checked += 1
                else:
                    inconclusive += 1
                continue
            ok = (W_out.w, W_out.p) > (W_in.w, W_in.p)
        else:
            w_in = d_in.order()
            w_out = d_out.order()
            if isinstance(w_out, AtLeast):
                if w_out.value >= w_in + gamma:
                    checked += 1
                else:
                    inconclusive += 1
                continue
            ok = w_out >= w_in + gamma
        checked += 1
        if not ok:
            return AuditReport(False, trials, checked, inconclusive, (a, b, d_in, d_out))
    return AuditReport(True, trials, checked, inconclusive)
