"""Applications of the linearization machinery.

Each procedure builds a concrete map f = ell + h, a scission of ell and the
linearizing automorphisms, then reads a solution off the linear equation:

* polynomial ODE systems x^(q) = P(x, .., x^(q-1)) with an initial block;
* Tougeron's implicit function theorem via a structured scission;
* Wavrik-type approximation of plane curve solutions;
* inversion of f o u = b for a germ f of generic rank n;
* deformations of an arc over a test ring (Weierstrass splitting by q).
"""

import math
import random
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .division import adjugate_scission, weierstrass_divide
from .errors import PowerlinError, fail
from .linalg import det
from .linearize import (
    LinearizationBundle,
    _probe_once,
    as_map,
    build_bundle,
    invert_id_plus_h,
    nonlinear_part,
    principal_scission,
    solve_via_linearization,
    tangent_at_zero,
)
from .ring import QQ, as_rational
from .series import INF, AtLeast, Series, SeriesVec, as_vec, parse_poly, substitute_partial
from .textile import add_maps, general_map, random_series, tactile_from_poly


def _var(i, n, ring=QQ):
    alpha = [0] * n
    alpha[i] = 1
    return Series({tuple(alpha): 1}, n, INF, ring=ring)


def _embed(s, n_total, offset=0):
    """View a series in s.n variables as one in n_total variables (starting at offset)."""
    pad_l, pad_r = offset, n_total - offset - s.n
    terms = {(0,) * pad_l + alpha + (0,) * pad_r: c for alpha, c in s.terms()}
    return Series(terms, n_total, s.validity, ring=s.ring)


def _low_terms(s, bound):
    return [alpha for alpha, _ in s.terms() if sum(alpha) < bound]


# ODE systems


def ode_variable_names(n, q):
    """x1..xn for the values, then x1_l..xn_l for the l-th derivatives."""
    names = [f"x{i + 1}" for i in range(n)]
    for l in range(1, q):
        names += [f"x{i + 1}_{l}" for i in range(n)]
    return names


@dataclass
class OdeSystem:
    q: int
    P: list
    init: list

    def __post_init__(self):
        n = len(self.P)
        if any(p.n != self.q * n for p in self.P):
            fail("DOMAIN_MISMATCH", f"right-hand sides must use {self.q * n} variables")
        if len(self.init) != n or any(len(row) != self.q for row in self.init):
            fail("DOMAIN_MISMATCH", f"initial block must be {n} rows of {self.q} values")
        self.init = [[as_rational(c) for c in row] for row in self.init]

    @property
    def n(self):
        return len(self.P)

    def initial_arcs(self):
        return SeriesVec(Series({(j,): Fraction(c) / math.factorial(j) for j, c in enumerate(row) if c},
                                1) for row in self.init)

    @classmethod
    def parse(cls, text, init):
        lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        if not lines or not lines[0].startswith("order="):
            raise ValueError("system file must start with order=<q>")
        q = int(lines[0].split("=", 1)[1])
        n = len(lines) - 1
        names = ode_variable_names(n, q)
        P = [parse_poly(ln.split("=", 1)[1] if "=" in ln else ln, names) for ln in lines[1:]]
        flat = list(init)
        if len(flat) != n * q:
            raise ValueError(f"expected {n * q} initial values")
        return cls(q, P, [flat[i * q:(i + 1) * q] for i in range(n)])


def _derivative_stack(x, q):
    out = []
    cur = list(x)
    for l in range(q):
        out += cur
        cur = [c.derivative(0) for c in cur]
    return SeriesVec(out)


def _ode_rhs(sys, x, T):
    stack = _derivative_stack(x, sys.q)
    return SeriesVec(substitute_partial(p, stack, 0, T, check_order=False) for p in sys.P)


def _dq(x, q):
    for _ in range(q):
        x = SeriesVec(c.derivative(0) for c in x)
    return x


def _integrate(b, q):
    for _ in range(q):
        b = SeriesVec(c.integral(0) for c in b)
    return b


def ode_bundle(sys, probes=1, probe_validity=10, seed=0):
    """Linearization of y -> D^q y - (p(x0 + y) - p(x0)) on m^q A^n."""
    q, n = sys.q, sys.n
    x0 = sys.initial_arcs()
    p0 = _ode_rhs(sys, x0, INF)
    ell = general_map(lambda y, T: _dq(y, q), n, n, -q, q, 1, linear=True, name="D^q")

    def h_fn(y, T):
        return _ode_rhs(sys, x0 + y, T) - p0.truncate(T)

    h = general_map(lambda y, T: -h_fn(y, T), n, n, -(q - 1), q, 1, name="ode-h")
    sigma = general_map(lambda b, T: _integrate(b, q), n, n, q, 0, 1, linear=True,
                        name="integrate")
    f = add_maps(ell, h)
    return build_bundle(f, sigma, "injective_tangent", ell=ell, h=h, probes=probes,
                        probe_validity=probe_validity, seed=seed)


def solve_ode(sys, N, probes=1, seed=0):
    """x with D^q x = P(x, .., D^{q-1} x) to validity N - q and the given initial block."""
    q = sys.q
    x0 = sys.initial_arcs()
    bundle = ode_bundle(sys, probes=probes, seed=seed)
    # f(x0 + y) = 0  <=>  f-hat(y) = -(D^q x0 - p(x0))
    rhs = -(_dq(x0, q) - _ode_rhs(sys, x0, N - q))
    sol = solve_via_linearization(bundle, rhs.truncate(N - q), N, kernel_probe=False)
    if sol.particular is None:
        fail("OBSTRUCTED", "linearized ODE has no solution", witness=sol.obstruction)
    return (x0 + sol.particular).truncate(N)


def ode_recursion_oracle(sys, N):
    """Coefficients from (k+q)!/k! c_{k+q} = [t^k] P(x, .., x^(q-1))."""
    q, n = sys.q, sys.n
    coeffs = [[Fraction(c) / math.factorial(j) for j, c in enumerate(row)] for row in sys.init]
    for k in range(N - q + 1):
        x = SeriesVec(Series({(j,): c for j, c in enumerate(row) if c}, 1, k + q - 1) for row in coeffs)
        val = _ode_rhs(sys, x, k)
        for i in range(n):
            coeffs[i].append(val[i].coeff((k,)) * Fraction(math.factorial(k), math.factorial(k + q)))
    return [row[:N + 1] for row in coeffs]


# Tougeron


@dataclass
class TougeronInstance:
    F: Series
    n: int
    rep: dict
    B: list = field(default_factory=list)

    @property
    def p(self):
        return self.F.n - self.n

    def deltas(self):
        zero = SeriesVec([Series({}, self.n)] * self.p)
        return [substitute_partial(self.F.derivative(self.n + i), zero, self.n, check_order=False)
                for i in range(self.p)]

    def F0(self):
        zero = SeriesVec([Series({}, self.n)] * self.p)
        return substitute_partial(self.F, zero, self.n, check_order=False)

    @classmethod
    def parse(cls, F_text, rep_text, x_names=None, y_names=None):
        """Representation file: lines 'c[i,j] = expr' (1-based) and 'B = g1, g2'."""
        x_names, y_names = _split_names(F_text, rep_text, x_names, y_names)
        F = parse_poly(F_text, x_names + y_names)
        rep, B = {}, []
        for ln in rep_text.splitlines():
            ln = ln.strip()
            if not ln or ln.startswith("#"):
                continue
            m = re.match(r"c\[(\d+)\s*,\s*(\d+)\]\s*=\s*(.+)$", ln)
            if m:
                rep[(int(m.group(1)) - 1, int(m.group(2)) - 1)] = parse_poly(m.group(3), x_names)
            elif ln.startswith("B"):
                B = [parse_poly(g, x_names) for g in ln.split("=", 1)[1].split(",")]
            else:
                raise ValueError(f"cannot read representation line {ln!r}")
        return cls(F, len(x_names), rep, B)


def _split_names(F_text, rep_text, x_names, y_names):
    from .series import detect_names

    names = detect_names(F_text, re.sub(r"c\[[^\]]*\]|B\s*=", " ", rep_text))
    if y_names is None:
        y_names = [nm for nm in names if nm.startswith("y")]
    if x_names is None:
        x_names = [nm for nm in names if nm not in y_names]
    return list(x_names), list(y_names)


@dataclass
class TougeronResult:
    y: SeriesVec
    membership: Optional[bool]
    bundle: object


def _is_monomial(s):
    return len(list(s.terms())) == 1


def _monomial_membership(y, gens):
    exps = [next(iter(g.terms()))[0] for g in gens]
    for comp in y:
        for alpha, _ in comp.terms():
            if not any(all(a >= b for a, b in zip(alpha, e)) for e in exps):
                return False
    return True


def tougeron_lift(inst, N, probes=2, seed=0):
    """y(x) with F(x, y(x)) = 0 from F(x, 0) = sum c_ij delta_i delta_j."""
    n, p = inst.n, inst.p
    r = p
    deltas = inst.deltas()
    F0 = inst.F0()
    total = None
    for (i, j), c in inst.rep.items():
        term = c * deltas[i] * deltas[j]
        total = term if total is None else total + term
    if total is None:
        total = Series({}, n)
    if not (total - F0).truncate(N + 2).is_zero():
        fail("REPRESENTATION_INVALID", "sum c_ij delta_i delta_j differs from F(x, 0)",
             witness=total - F0)
    nz = n + r * p
    zvars = [_var(n + k, nz) for k in range(r * p)]
    dl = [_embed(d, nz) for d in deltas]
    Y = []
    for i in range(p):
        acc = Series({}, nz)
        for j in range(r):
            acc = acc + dl[j] * zvars[i * r + j]
        Y.append(acc)
    # h = sum delta_j delta_k h_jk: split two y-factors off every term of degree >= 2
    hcomp = [Series({}, nz) for _ in range(r * p)]
    lin = Series({}, nz)
    full = Series({}, nz)
    for alpha, c in inst.F.terms():
        ax, ay = alpha[:n], alpha[n:]
        deg = sum(ay)
        if deg == 0:
            continue
        base = Series({ax + (0,) * (r * p): c}, nz)
        if deg == 1:
            k = ay.index(1)
            lin = lin + base * Y[k]
            full = full + base * Y[k]
            continue
        rest = list(ay)
        a = next(k for k in range(p) if rest[k])
        rest[a] -= 1
        b = next(k for k in range(p) if rest[k])
        rest[b] -= 1
        mono = base
        for k, e in enumerate(rest):
            if e:
                mono = mono * Y[k].power(e)
        for j in range(r):
            for k in range(r):
                hcomp[j * r + k] = hcomp[j * r + k] + mono * zvars[a * r + j] * zvars[b * r + k]
        full = full + mono * Y[a] * Y[b]
    g = tactile_from_poly(SeriesVec([full]), 1, nbase=n, name="g")
    ell = tactile_from_poly(SeriesVec([lin]), 1, nbase=n, name="ell")
    ell = tangent_at_zero(ell)
    h = nonlinear_part(g)
    sigma_h = tactile_from_poly(SeriesVec(hcomp), 1, nbase=n, name="structured-sigma-h")
    if not sigma_h.kappa > 0:
        fail("ORDER_CONDITION_FAILED", f"kappa(sigma h) = {sigma_h.kappa}")
    bundle = LinearizationBundle(g, ell, None, h, sigma_h, "field", 1, "quasi_submersion",
                                 N if N < 10 else 10)
    rng = random.Random(seed)
    for _ in range(probes):
        lhs, rhs, yprobe = _probe_once(bundle, rng, n, min(N, 8))
        ok = lhs.agrees(rhs)
        bundle.probe_results.append(ok)
        if not ok:
            fail("LINEARIZATION_PROBE_FAILED", "g u^{-1} differs from ell", witness=(yprobe, lhs, rhs))
    z0 = [Series({}, n, N) for _ in range(r * p)]
    for (i, j), c in inst.rep.items():
        z0[i * r + j] = z0[i * r + j] - c.truncate(N)
    z0 = SeriesVec(z0)
    if _low_terms_vec(z0, 1):
        fail("DOMAIN_MISMATCH", "representation coefficients must vanish at the origin")
    z = bundle.u_inv(z0, N)
    y = []
    for i in range(p):
        acc = Series({}, n, N)
        for j in range(r):
            acc = acc + deltas[j].mul(z[i * r + j], N)
        y.append(acc.truncate(N))
    y = SeriesVec(y)
    membership = None
    gens = [b * d for b in inst.B for d in deltas if not d.is_zero()]
    if inst.B and all(_is_monomial(gn) for gn in gens):
        membership = _monomial_membership(y, gens)
    return TougeronResult(y, membership, bundle)


def _low_terms_vec(v, bound):
    return [a for comp in v for a in _low_terms(comp, bound)]


# Wavrik


@dataclass
class WavrikResult:
    y: Series
    e: int
    agreement: int
    discriminant_order: object


def _y_degree(F):
    return max((alpha[1] for alpha, _ in F.terms()), default=0)


def _coeffs_in_y(F):
    """Polynomial coefficients of F in y (as series in x)."""
    m = _y_degree(F)
    out = [dict() for _ in range(m + 1)]
    for (a, b), c in F.terms():
        out[b][(a,)] = c
    return [Series(t, 1) for t in out]


def discriminant_order(F):
    """Order in x of the resultant of F and dF/dy with respect to y."""
    f = _coeffs_in_y(F)
    g = _coeffs_in_y(F.derivative(1))
    m, k = len(f) - 1, len(g) - 1
    if m < 1 or k < 0:
        return INF
    size = m + k
    zero = Series({}, 1)
    rows = []
    for i in range(k):
        rows.append([zero] * i + list(reversed(f)) + [zero] * (size - m - 1 - i))
    for i in range(m):
        rows.append([zero] * i + list(reversed(g)) + [zero] * (size - k - 1 - i))
    D = det(rows)
    return INF if D.is_zero() else D.order()


def wavrik_lift(F, ybar, q_agree, N, probes=1):
    """Exact-to-validity y(x) with F(x, y) = 0 and y = ybar mod x^q_agree."""
    ybar = ybar if isinstance(ybar, Series) else as_vec(ybar)[0]
    dF = substitute_partial(F.derivative(1), SeriesVec([ybar]), 1, check_order=False)
    if dF.is_zero():
        fail("PRECONDITION_GAP", "dF/dy vanishes along the approximation", witness=ybar)
    e = dF.order()
    Fy = substitute_partial(F, SeriesVec([ybar]), 1, check_order=False)
    ordF = INF if Fy.is_zero() else Fy.order()
    d = discriminant_order(F)
    if ordF == INF:
        if q_agree > N + 1:
            fail("PRECONDITION_GAP", "requested agreement beyond the validity")
        return WavrikResult(ybar.truncate(N), e, N + 1, d)
    if ordF < 2 * e + 1:
        fail("PRECONDITION_GAP", f"ord F(x, ybar) = {ordF} < 2e + 1 = {2 * e + 1}", witness=Fy)
    guaranteed = ordF - e
    if q_agree > guaranteed:
        fail("PRECONDITION_GAP", f"agreement {q_agree} exceeds the guaranteed {guaranteed}")
    # g(z) = F(x, ybar + z) - F(x, ybar) on m^{e+1}
    shifted = substitute_partial(
        F, SeriesVec([_var(0, 2), _embed(ybar, 2) + _var(1, 2)]), 0, check_order=False)
    ghat = Series({a: c for a, c in shifted.terms() if a[1]}, 2)
    g = tactile_from_poly(SeriesVec([ghat]), e + 1, nbase=1, name="wavrik-g")
    sigma = principal_scission(dF, 1, 0, e + 1)
    bundle = build_bundle(g, sigma, "quasi_submersion", probes=probes, probe_validity=2 * e + 6)
    c = SeriesVec([(-Fy).truncate(N + e)])
    z = bundle.sigma(c, N)
    rem = (c - bundle.ell(z, N + e)).truncate(N + e)
    if not rem.is_zero():
        fail("OBSTRUCTED", "F(x, ybar) is not in the image of the linear part", witness=rem)
    corr = bundle.u_inv(SeriesVec([z[0].truncate(N)]), N)
    return WavrikResult((ybar.truncate(N) + corr[0]).truncate(N), e, guaranteed, d)


# germ inversion


@dataclass
class GermInversion:
    u: SeriesVec
    bundle: object


def _linear_arcs(lam, n):
    return [sum((_var(j, n).scale(as_rational(lam[i][j])) for j in range(n) if lam[i][j]),
                Series({}, n)) for i in range(n)]


def invert_germ(f, b, lam, N, probes=1, seed=0):
    """u = lam x + v with f(u) = b to validity N and v in m^2.

    The scission loses precision, so the work runs at a raised bound until
    u is valid to N (or b runs out of known terms).
    """
    f, b = as_vec(f), as_vec(b)
    work = N
    while True:
        res = _invert_germ_at(f, b, lam, work, probes, seed)
        v = res.u.validity
        if v >= N or b.validity <= work or work > 4 * N + 8:
            return GermInversion(res.u.truncate(min(v, N)), res.bundle)
        work += max(1, N - v)


def _invert_germ_at(f, b, lam, N, probes, seed):
    n = len(f)
    if f.n != n:
        fail("DOMAIN_MISMATCH", "germ must map n variables to n components")
    lx = _linear_arcs(lam, n)
    nn = 2 * n
    comps = [_embed(lx[i], nn) + _var(n + i, nn) for i in range(n)]
    G = []
    for fi in f:
        full = substitute_partial(fi, SeriesVec(comps), 0, check_order=False)
        G.append(Series({a: c for a, c in full.terms() if any(a[n:])}, nn, full.validity))
    Gmap = tactile_from_poly(SeriesVec(G), 2, nbase=n, name="G")
    ell = tangent_at_zero(Gmap)
    h = nonlinear_part(Gmap)
    sigma = as_map(adjugate_scission(ell.matrix), n)
    bundle = build_bundle(Gmap, sigma, "injective_tangent", ell=ell, h=h, probes=probes,
                          probe_validity=6, seed=seed)
    flam = SeriesVec(substitute_partial(fi, SeriesVec(lx), 0, check_order=False) for fi in f)
    c = (b - flam).truncate(N)
    sol = solve_via_linearization(bundle, c, N, kernel_probe=False) if _low_ok(bundle, c, N) else None
    if sol is None or sol.particular is None:
        fail("OBSTRUCTED", "b - f(lam x) is not reached by f(lam x + v) with v in m^2",
             witness=None if sol is None else sol.obstruction)
    u = SeriesVec(lx[i].truncate(N) + sol.particular[i] for i in range(n)).truncate(N)
    resid = SeriesVec(substitute_partial(fi, u, 0, N, check_order=False) for fi in f) - b
    if not resid.truncate(N).is_zero():
        fail("OBSTRUCTED", "residual f(u) - b does not vanish", witness=resid)
    return GermInversion(u, bundle)


def _low_ok(bundle, c, N):
    """The solution of ell(y) = c must lie in m^2 (ell is injective)."""
    y = bundle.sigma(c, N)
    return not _low_terms_vec(y, 2)


# deformations over a test ring


@dataclass
class DrinfeldData:
    f: Series
    gamma0: SeriesVec
    ring: object
    q: Series
    xbar: list
    ybar: Series
    r: int = 2

    @property
    def n(self):
        return self.f.n - 1


def _is_nilpotent(c, ring):
    return c == 0 or not ring.is_unit(c)


def _residue(s):
    return s.map_coeffs(lambda c: c.c[0] if hasattr(c, "c") else c, QQ)


def check_monic(q):
    ring = q.ring
    top = max((a[0] for a, c in q.terms()), default=None)
    if top is None or q.validity != INF:
        fail("NOT_MONIC", "q must be an exact nonzero polynomial")
    if q.coeff((top,)) != ring.one():
        fail("NOT_MONIC", "leading coefficient of q is not 1")
    if any(not _is_nilpotent(c, ring) for a, c in q.terms() if a[0] < top):
        fail("NOT_MONIC", "q is not t^d modulo the nilpotent ideal")
    return top


def drinfeld_split(x, y, q, r, T=None):
    """x = xbar + q^{r+1} xi, y = ybar + q^r eta with deg xbar < (r+1)d, deg ybar < rd."""
    check_monic(q)
    x, y = as_vec(x), as_vec(y)
    Q1, Q0 = q.power(r + 1), q.power(r)
    xs = [weierstrass_divide(c, Q1, 0, T) for c in x]
    ys = [weierstrass_divide(c, Q0, 0, T) for c in y]
    return ([rem for _, rem in xs], [rem for _, rem in ys],
            [quo for quo, _ in xs], [quo for quo, _ in ys])


def _lift(s, ring):
    return s if s.ring.nil_index == ring.nil_index else s.with_ring(ring)


def _eval_at(p, arcs, T=None):
    return substitute_partial(p, SeriesVec(arcs), 0, T, check_order=False)


def drinfeld_conditions(data):
    """Names of the violated conditions among C_q, C_x, C_y, E1, E2."""
    ring, r, n = data.ring, data.r, data.n
    bad = []
    x0, y0 = list(data.gamma0)[:n], data.gamma0[n]
    dfy0 = _eval_at(data.f.derivative(n), list(data.gamma0))
    d = dfy0.order() if not dfy0.is_zero() else INF
    try:
        deg = check_monic(data.q)
        if deg != d:
            bad.append("C_q")
    except PowerlinError:
        bad.append("C_q")
        deg = None
    if d == INF:
        return bad + ["C_q"] if "C_q" not in bad else bad
    for xb, x0i in zip(data.xbar, x0):
        if not _residue(xb).agrees(x0i.truncate((r + 1) * d - 1), (r + 1) * d - 1) or \
                any(a[0] >= (r + 1) * d for a, _ in xb.terms()):
            bad.append("C_x")
            break
    if not _residue(data.ybar).agrees(y0.truncate(r * d - 1), r * d - 1) or \
            any(a[0] >= r * d for a, _ in data.ybar.terms()):
        bad.append("C_y")
    if deg is None:
        return bad + ["E1", "E2"]
    fA = _lift(data.f, ring)
    pt = list(data.xbar) + [data.ybar]
    dfy = _eval_at(fA.derivative(n), pt)
    _, rem1 = weierstrass_divide(dfy, data.q, 0)
    if not rem1.is_zero():
        bad.append("E1")
    _, rem2 = weierstrass_divide(_eval_at(fA, pt), data.q.power(r + 1), 0)
    if not rem2.is_zero():
        bad.append("E2")
    return bad


@dataclass
class Deformation:
    gamma: SeriesVec
    xi: SeriesVec
    eta: Series
    iterations: int = 0


def _refined_audit(sigma_h, ring, arity, trials=8, validity=6, seed=0):
    rng = random.Random(seed)
    e = ring.eps()
    for _ in range(trials):
        a = SeriesVec(random_series(rng, 1, 0, validity, ring=ring).scale(e) for _ in range(arity))
        b = SeriesVec(x + random_series(rng, 1, 0, validity, ring=ring, density=0.4).scale(e)
                      for x in a)
        d_in = a - b
        if d_in.is_zero():
            continue
        d_out = sigma_h(a, validity) - sigma_h(b, validity)
        W_in, W_out = d_in.refined_order(), d_out.refined_order()
        if isinstance(W_out.w, AtLeast):
            continue
        if not (W_out.w, W_out.p) > (W_in.w, W_in.p):
            return (a, b, d_in, d_out)
    return None


def drinfeld_deform(data, free=None, N=12, seed=0):
    """A-arc gamma = (xbar + q^{r+1} xi, ybar + q^r eta) with f(gamma) = 0, gamma = gamma0 mod n.

    Division by q^{r+1} costs precision; the bound is raised until gamma is
    valid to N.
    """
    work = N
    while True:
        res = _deform_at(data, free, work, seed)
        v = res.gamma.validity
        if v >= N or work > 4 * N + 8:
            t = min(v, N)
            return Deformation(res.gamma.truncate(t), res.xi.truncate(t), res.eta.truncate(t),
                               res.iterations)
        work += max(1, N - v)


def _deform_at(data, free, N, seed):
    bad = drinfeld_conditions(data)
    if bad:
        fail("CONDITIONS_VIOLATED", "violated: " + ", ".join(bad), witness=bad)
    ring, r, n = data.ring, data.r, data.n
    fA = _lift(data.f, ring)
    q = data.q
    Q1, Q0 = q.power(r + 1), q.power(r)
    pt = list(data.xbar) + [data.ybar]
    fbar = _eval_at(fA, pt)
    dfy, _ = weierstrass_divide(_eval_at(fA.derivative(n), pt), q, 0)
    unit_inv = dfy.inverse(N + 1)
    dfx = [_eval_at(fA.derivative(i), pt) for i in range(n)]
    # Phi(t, xi, eta) = f(xbar + Q1 xi, ybar + Q0 eta) - f(xbar, ybar)
    m = n + 2
    comps = [_embed(xb, m) + _embed(Q1, m) * _var(1 + i, m, ring) for i, xb in enumerate(data.xbar)]
    comps.append(_embed(data.ybar, m) + _embed(Q0, m) * _var(n + 1, m, ring))
    Phi = _eval_at(fA, comps)
    hpoly = Series({a: c for a, c in Phi.terms() if sum(a[1:]) >= 2}, m, INF, ring=ring)

    def sigma_fn(b, T):
        quo, _ = weierstrass_divide(b[0], Q1, 0, T + Q1.order() if T != INF else None)
        eta = quo.mul(unit_inv, T).truncate(T)
        return SeriesVec([Series({}, 1, T, ring=ring)] * n + [eta])

    def sigma_h_fn(a, T):
        hv = substitute_partial(hpoly, a, 1, T + Q1.order(), check_order=False)
        return sigma_fn(SeriesVec([hv]), T)

    sigma_h = general_map(sigma_h_fn, n + 1, n + 1, 0, 0, 1, name="sigma-h")
    witness = _refined_audit(sigma_h, ring, n + 1, seed=seed)
    if witness is not None:
        fail("ORDER_CONDITION_FAILED", "sigma h is not refined-order contractive", witness=witness)
    if free is None:
        free = SeriesVec([Series({}, 1, N, ring=ring)] * n)
    free = SeriesVec(_lift(c, ring).truncate(N) for c in as_vec(free))
    if any(not _is_nilpotent(c, ring) for comp in free for _, c in comp.terms()):
        fail("DOMAIN_MISMATCH", "free xi-parameters must have nilpotent coefficients")
    c, rem = weierstrass_divide(-fbar, Q1, 0, N + Q1.order())
    if not rem.is_zero():
        fail("OBSTRUCTED", "f(xbar, ybar) is not divisible by q^{r+1}", witness=rem)
    lin = c
    for i in range(n):
        lin = lin - dfx[i].mul(free[i], N)
    eta_lin = lin.mul(unit_inv, N).truncate(N)
    y = SeriesVec(list(free) + [eta_lin])
    from .linearize import InversionStats

    stats = InversionStats()
    sol = invert_id_plus_h(sigma_h, y, N, mode="test_ring", stats=stats)
    xi, eta = SeriesVec(list(sol)[:n]), sol[n]
    gamma = [(xb + Q1.mul(xi[i], N)).truncate(N) for i, xb in enumerate(data.xbar)]
    gamma.append((data.ybar + Q0.mul(eta, N)).truncate(N))
    gamma = SeriesVec(gamma)
    resid = _eval_at(fA, list(gamma), N)
    if not resid.truncate(N).is_zero():
        fail("OBSTRUCTED", "deformation does not solve f", witness=resid)
    return Deformation(gamma, xi, eta, stats.iterations)


def base_point_data(f, gamma0, ring, r=2):
    """(t^d, x0 mod t^{(r+1)d}, y0 mod t^{rd}) for the arc gamma0."""
    n = f.n - 1
    g = list(as_vec(gamma0))
    dfy = _eval_at(f.derivative(n), g)
    d = dfy.order()
    q = Series({(d,): 1}, 1, ring=ring)

    def trunc(s, k):
        return Series({a: c for a, c in s.terms() if a[0] < k}, 1, ring=ring).with_ring(ring)

    xbar = [trunc(c, (r + 1) * d) for c in g[:n]]
    ybar = trunc(g[n], r * d)
    return DrinfeldData(f, as_vec(gamma0), ring, q, xbar, ybar, r)
