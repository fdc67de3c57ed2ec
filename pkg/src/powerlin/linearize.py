"""Fixed-point inversion of id + h and linearization of textile maps.

A map f = ell + h with a scission sigma of ell is straightened by the
automorphisms u = id + sigma h (source) and v (target) so that
v f u^{-1} = ell.  Every bundle is probed on random inputs when it is
built; a failed probe is reported with its witness.
"""

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .division import DivisionContext, gh_divide
from .errors import fail
from .ring import QQ
from .series import INF, AtLeast, Series, SeriesVec, _exponents, as_vec, bound_value
from .textile import (
    TextileMap,
    add_maps,
    compose,
    contraction_audit,
    general_map,
    linear_map,
    random_series,
    tactile_from_poly,
)


def _vec_min_order(b):
    out = INF
    for c in b:
        out = min(out, c.order_bound())
    return out


def _distinct_weights(n, L, top):
    L = L or (1,) * n
    ws = set()
    for alpha in _exponents(n, int(math.floor(top / min(L))) if top != INF else 0):
        w = sum(x * y for x, y in zip(alpha, L))
        if w <= top:
            ws.add(w)
    return len(ws)


@dataclass
class InversionStats:
    iterations: int = 0
    mode: str = "field"


def invert_id_plus_h(h, b, N=None, mode=None, audit=False, stats=None):
    """g(b) with (id + h)(g(b)) = b to validity N.

    In field mode (kappa(h) > 0) the iterates g_{j+1} = b - h(g_j) are
    computed with a precision that grows by kappa per step, followed by one
    full-precision step that must reproduce the result.  In test-ring mode
    iteration runs at full precision until two iterates agree.
    """
    b = as_vec(b)
    if N is None:
        N = b.validity
    N = min(N, b.validity)
    if N == INF:
        fail("DOMAIN_MISMATCH", "an explicit target validity is required for exact input")
    if mode is None:
        mode = "field" if (h.kappa != INF and h.kappa > 0) or b.ring.is_field else "test_ring"
    if stats is None:
        stats = InversionStats()
    stats.mode = mode
    if h.kappa == INF:
        return b.truncate(N)
    if audit:
        rep = contraction_audit(h, h.kappa if mode == "field" else 0, trials=8,
                                validity=min(int(N), 8), nvars=b.n, ring=b.ring,
                                refined=(mode != "field"))
        if not rep:
            fail("NOT_CONTRACTIVE", "sampled contraction audit failed", witness=rep.witness)
    w0 = _vec_min_order(b)
    lmin = h.min_domain_order
    if w0 < lmin:
        fail("DOMAIN_MISMATCH", f"right-hand side of order {w0} lies outside the domain m^{lmin}")
    if mode == "field":
        gamma = h.kappa
        if gamma <= 0:
            fail("NOT_CONTRACTIVE", f"contraction degree {gamma} is not positive")
        if w0 == INF or w0 > N:
            return b.truncate(N)
        # g - b = -h(g) has order >= w0 + gamma, so b is the first iterate
        V = min(N, max(w0, w0 - 1 + gamma))
        g = b.truncate(V)
        stats.iterations += 1
        while V < N:
            V = min(N, V + gamma)
            g = b.truncate(V) - h(g, V)
            stats.iterations += 1
        check = b - h(g, N)
        stats.iterations += 1
        if not check.agrees(g, N):
            fail("NOT_CONTRACTIVE", "fixed point moved after the final step", witness=(g, check))
        return g
    # test-ring mode: the refined order of the differences strictly increases
    budget = _distinct_weights(b.n, b.L, N) * b.ring.nil_index + 2
    g = b.truncate(N)
    for _ in range(budget):
        nxt = b - h(g, N)
        stats.iterations += 1
        if nxt.agrees(g, N):
            return nxt.truncate(N)
        g = nxt.truncate(N)
    fail("BUDGET_EXCEEDED", f"no fixed point after {budget} steps", witness=g)


def as_map(sigma, nvars=None, name="sigma"):
    """Wrap a scission evaluator (callable (b, T) with .kappa) as a TextileMap."""
    if isinstance(sigma, TextileMap):
        return sigma
    return TextileMap(sigma.arity_in, sigma.arity_out, lambda b, T: sigma(b, T), sigma.kappa,
                      0, "linear", nvars, name=name)


def principal_scission(generator, arity_in, index=0, domain_order=0):
    """Scission of a -> generator * a_index (other inputs ignored).

    For univariate series the domain restriction a_index in m^l is honoured:
    sigma(b) = t^l * (b div t^l generator).  In several variables only the
    unrestricted division by the (normalized) generator is used.
    """
    gen = generator
    n = gen.n
    items = gen.items()
    if not items:
        fail("ZERO_SERIES", "cannot divide by zero")
    c0 = items[0][2]
    ring = gen.ring
    inv = ring.inv(c0)
    shift = domain_order if n == 1 else 0
    lead_gen = gen.scale(inv)
    divisor = lead_gen.shift((shift,)) if shift else lead_gen
    ctx = DivisionContext([divisor])
    wd = ctx.max_order

    def fn(b, T):
        b = as_vec(b)
        top = min(b.validity, T + wd - shift if T != INF else INF)
        if top == INF:
            fail("DOMAIN_MISMATCH", "an explicit target validity is required")
        q = gh_divide(SeriesVec([b[0]]), ctx, top).quotients[0]
        q = q.scale(inv)
        if shift:
            q = q.shift((shift,))
        comps = [q.zero_like(q.validity) for _ in range(arity_in)]
        comps[index] = q
        return SeriesVec(comps)

    kappa = -(wd - shift)
    return TextileMap(1, arity_in, fn, kappa, 0, "linear", n, name="principal-scission")


def tangent_at_zero(f):
    """Linear part T_0 f as a linear TextileMap."""
    if f.kind == "linear":
        return f
    if f.kind != "tactile":
        fail("UNSUPPORTED", "tangent at zero needs tactile data or an explicit linear part")
    nb, m = f.nbase, f.arity_in
    rows = []
    for comp in f.poly:
        row = []
        for j in range(m):
            terms = {}
            for alpha, c in comp.terms():
                ay = alpha[nb:]
                if sum(ay) == 1 and ay[j] == 1:
                    terms[alpha[:nb]] = terms.get(alpha[:nb], 0) + c
            row.append(Series(terms, nb, INF, comp.L[:nb], comp.ring))
        rows.append(row)
    if nb == 0:
        return scalar_linear_map([[r.constant_term() for r in row] for row in rows], f.domain_order)
    return linear_map(rows, f.domain_order, name="T0f")


def scalar_linear_map(M, domain_order=1, name="T0f"):
    """a -> M a for a matrix of ring constants (any number of variables)."""
    nz = any(c for row in M for c in row)

    def fn(a, T):
        out = []
        for row in M:
            acc = a[0].zero_like(INF)
            for c, x in zip(row, a):
                if c:
                    acc = acc + x.scale(c)
            out.append(acc)
        return SeriesVec(out)

    tm = TextileMap(len(M[0]), len(M), fn, 0 if nz else INF, domain_order, "linear", None,
                    name=name)
    tm.scalars = M
    return tm


def nonlinear_part(f):
    """f - T_0 f as a tactile map (tactile f) with its own kappa."""
    if f.kind != "tactile":
        fail("UNSUPPORTED", "split an explicit linear part off general maps")
    nb = f.nbase
    comps = []
    for comp in f.poly:
        keep = {alpha: c for alpha, c in comp.terms() if sum(alpha[nb:]) != 1}
        comps.append(Series(keep, comp.n, comp.validity, comp.L, comp.ring))
    return tactile_from_poly(SeriesVec(comps), f.domain_order, nb, name="h")


@dataclass
class LinearizationBundle:
    f: TextileMap
    ell: TextileMap
    sigma: TextileMap
    h: TextileMap
    sigma_h: TextileMap
    mode: str
    domain_order: object
    rank_evidence: str
    probe_validity: int = 12
    probe_results: list = field(default_factory=list)

    def u(self, a, T=None):
        a = as_vec(a)
        return a + self.sigma_h(a, T if T is not None else a.validity)

    def u_inv(self, y, N=None):
        return invert_id_plus_h(self.sigma_h, y, N, mode=self.inv_mode)

    @property
    def inv_mode(self):
        return "field" if self.sigma_h.kappa > 0 else "test_ring"

    def _h_tilde_sigma(self, b, T):
        # h~ = f u^{-1} - ell, evaluated on sigma(b)
        s = self.sigma(b, T - self.f.kappa if self.f.kappa != INF else T)
        top = min(T, s.validity + self.f.kappa)
        fu = self.f(self.u_inv(s), top)
        return fu - self.ell(s, top)

    def v(self, b, T=None):
        b = as_vec(b)
        if self.rank_evidence == "quasi_submersion":
            return b
        T = b.validity if T is None else T
        return b - self._h_tilde_sigma(b, T)

    def v_inv(self, b, T=None):
        b = as_vec(b)
        if self.rank_evidence == "quasi_submersion":
            return b
        T = b.validity if T is None else T
        return b + self._h_tilde_sigma(b, T)

    def probe(self, y):
        """(v f u^{-1})(y) and ell(y)."""
        a = self.u_inv(y)
        lhs = self.v(self.f(a))
        return lhs, self.ell(y)


EVIDENCE = ("quasi_submersion", "injective_tangent", "sampled_pointwise")


def build_bundle(f, sigma, rank_evidence, ell=None, h=None, probes=3, probe_validity=12,
                 seed=0, mode=None):
    """Linearizing automorphisms for f = ell + h and a scission sigma of ell."""
    if rank_evidence not in EVIDENCE:
        raise ValueError(f"unknown rank evidence {rank_evidence!r}")
    if ell is None:
        ell = tangent_at_zero(f)
    if h is None:
        h = nonlinear_part(f) if f.kind == "tactile" else add_maps(f, ell, -1)
    n = f.nvars or ell.nvars or 1
    sigma = as_map(sigma, n)
    sigma_h = compose(sigma, h)
    ring_is_field = True
    if mode is None:
        mode = "field" if sigma_h.kappa > 0 else "test_ring"
    if mode == "field" and not sigma_h.kappa > 0:
        fail("ORDER_CONDITION_FAILED", f"kappa(sigma h) = {sigma_h.kappa} is not positive")
    if mode == "test_ring":
        from .ring import Ring

        rep = contraction_audit(sigma_h, 0, trials=10, seed=seed, validity=6, nvars=n,
                                ring=Ring(2), refined=True)
        if not rep:
            fail("ORDER_CONDITION_FAILED", "sigma h is not refined-order contractive",
                 witness=rep.witness)
    bundle = LinearizationBundle(f, ell, sigma, h, sigma_h, mode, f.domain_order,
                                 rank_evidence, probe_validity)
    rng = random.Random(seed)
    for k in range(probes):
        lhs, rhs, y = _probe_once(bundle, rng, n, probe_validity)
        ok = lhs.agrees(rhs)
        bundle.probe_results.append(ok)
        if not ok:
            fail("LINEARIZATION_PROBE_FAILED", "v f u^{-1} differs from the linear part",
                 witness=(y, lhs, rhs))
    return bundle


def _probe_once(bundle, rng, n, target):
    orders = bundle.f.domain_orders
    V = target
    for _ in range(6):
        y = SeriesVec(random_series(rng, n, orders[i], V, density=0.5)
                      for i in range(bundle.f.arity_in))
        lhs, rhs = bundle.probe(y)
        if min(lhs.validity, rhs.validity) >= target:
            return lhs, rhs, y
        V += max(1, int(math.ceil(target - min(lhs.validity, rhs.validity))))
    return lhs, rhs, y


@dataclass
class LinearSolution:
    particular: Optional[SeriesVec]
    kernel_basis: list
    obstruction: Optional[SeriesVec] = None
    obstruction_order: object = None

    def with_kernel(self, bundle, k, N=None):
        """Another solution u^{-1}(sigma v(b) + k) for a kernel element k."""
        return bundle.u_inv(self._y + as_vec(k), N)


def solve_via_linearization(bundle, b, N, kernel_probe=True):
    """Solve f(a) = b through ell(u(a)) = v(b)."""
    b = as_vec(b)
    c = bundle.v(b, N)
    top = min(N, c.validity)
    y = bundle.sigma(c, top - bundle.ell.kappa if bundle.ell.kappa != INF else top)
    rem = c - bundle.ell(y, top)
    rem = rem.truncate(top)
    if not rem.is_zero():
        sol = LinearSolution(None, [], rem, rem.order())
        return sol
    dom = bundle.f.domain_orders
    y = SeriesVec(comp.truncate(min(comp.validity, N)) for comp in y)
    a = bundle.u_inv(y, min(N, y.validity))
    basis = _kernel_basis(bundle, N, y) if kernel_probe else []
    sol = LinearSolution(a, basis)
    sol._y = y
    return sol


def _kernel_basis(bundle, N, y):
    """Independent vectors z - sigma ell z for coordinate probes (univariate only)."""
    if y.n != 1:
        return []
    m = bundle.f.arity_in
    orders = bundle.f.domain_orders
    pivots = {}
    out = []
    for j in range(m):
        for k in range(int(math.ceil(orders[j])), int(N) + 1):
            comps = [Series({}, 1, N, y.L, y.ring) for _ in range(m)]
            comps[j] = Series({(k,): 1}, 1, N, y.L, y.ring)
            z = SeriesVec(comps)
            lz = bundle.ell(z, INF if bundle.ell.kappa == INF else N + bundle.ell.kappa)
            pz = z - bundle.sigma(lz, N)
            pz = pz.truncate(N)
            vec = {}
            for i, comp in enumerate(pz):
                for w, key, c in comp.items():
                    vec[(w, key, i)] = c
            red = _reduce(vec, pivots)
            if red:
                lead = min(red)
                inv = 1 / Fraction(red[lead]) if y.ring.is_field else y.ring.inv(red[lead])
                pivots[lead] = {k2: v * inv for k2, v in red.items()}
                out.append(pz)
    return out


def _reduce(vec, pivots):
    vec = dict(vec)
    while vec:
        lead = min(vec)
        if lead not in pivots:
            return vec
        c = vec[lead]
        for k, v in pivots[lead].items():
            nv = vec.get(k, 0) - c * v
            if nv:
                vec[k] = nv
            else:
                vec.pop(k, None)
    return vec


@dataclass
class RankProbeReport:
    passed: bool
    samples: int
    reference: frozenset
    mismatches: list = field(default_factory=list)

    def __bool__(self):
        return self.passed


def initial_exponents(generators, domain_orders, V):
    """Initial exponents (weight <= V) of the module sum_j generators_j * m^{l_j}.

    An element's initial exponent at weight w only involves generators of
    order <= w, so echelon reduction of the truncated products is exact.
    """
    pivots = {}
    for j, gen in enumerate(generators):
        gen = as_vec(gen)
        n, L = gen.n, gen.L
        go = min(c.order_bound() for c in gen)
        if go > V:
            continue
        top = V - go
        for beta in _exponents(n, int(math.floor(top / min(L))) if top >= 0 else -1):
            wb = sum(x * y for x, y in zip(beta, L))
            if wb < domain_orders[j] or wb > top:
                continue
            vec = {}
            for i, comp in enumerate(gen):
                sh = comp.shift(beta).truncate(V)
                for w, key, c in sh.items():
                    vec[(w, key, i)] = c
            red = _reduce(vec, pivots)
            if red:
                lead = min(red)
                inv = red[lead]
                inv = 1 / Fraction(inv) if not hasattr(inv, "inverse") else inv.inverse()
                pivots[lead] = {k: v * inv for k, v in red.items()}
    return frozenset(pivots)


def tangent_generators(f, a):
    """Columns d_j g(x, a) of the tangent map of a tactile f at a."""
    a = as_vec(a)
    if f.kind == "linear" and getattr(f, "scalars", None) is not None:
        return [SeriesVec([Series({(0,) * a.n: row[j]} if row[j] else {}, a.n, INF, a.L, a.ring)
                           for row in f.scalars]) for j in range(f.arity_in)]
    if f.kind == "linear" and f.matrix is not None:
        return [SeriesVec([row[j] for row in f.matrix]) for j in range(f.arity_in)]
    if f.kind != "tactile":
        fail("UNSUPPORTED", "pointwise rank probe needs tactile data")
    from .series import substitute_partial

    a = as_vec(a)
    out = []
    for j in range(f.arity_in):
        comps = []
        for comp in f.poly_over(a.ring):
            d = comp.derivative(f.nbase + j)
            comps.append(substitute_partial(d, a, f.nbase, check_order=False))
        out.append(SeriesVec(comps))
    return out


def pointwise_rank_probe(f, samples=8, seed=0, validity=8, sample_points=None):
    """Compare in(im T_a f) with in(im T_0 f) up to weight ``validity``."""
    n = f.nvars or 1
    orders = f.domain_orders
    zero = SeriesVec.zeros(f.arity_in, n, INF, None)
    ref = initial_exponents(tangent_generators(f, zero), orders, validity)
    rng = random.Random(seed)
    points = list(sample_points or [])
    while len(points) < samples:
        points.append(SeriesVec(random_series(rng, n, orders[i], validity, density=0.5)
                                for i in range(f.arity_in)))
    mismatches = []
    for a in points:
        got = initial_exponents(tangent_generators(f, a), orders, validity)
        if got != ref:
            mismatches.append((a, sorted(got ^ ref)[:4]))
    return RankProbeReport(not mismatches, len(points), ref, mismatches)
