"""Jets and arcs on hypersurfaces and complete intersections.

A jet of level e is a tuple of polynomials of degree <= e in t.  Jets are
classified by the least order e' of the partial derivatives along them,
lifted to arcs through the linearization of eta -> f(jet + eta) on
m^{e+1}, and arcs over a jet are given fiber coordinates in m^{e+1} A^{n-1}.
"""

from dataclasses import dataclass
from fractions import Fraction

from .division import smith_form
from .errors import fail
from .linearize import build_bundle, principal_scission
from .ring import as_rational, format_rational
from .series import INF, Series, SeriesVec, as_vec, substitute_partial
from .textile import TextileMap, tactile_from_poly


@dataclass
class Jet:
    values: list
    level: int

    def __post_init__(self):
        self.values = [[as_rational(c) for c in comp] for comp in self.values]
        for comp in self.values:
            if len(comp) > self.level + 1:
                raise ValueError("jet component longer than its level")
            comp.extend([0] * (self.level + 1 - len(comp)))

    @property
    def n(self):
        return len(self.values)

    def arcs(self):
        """The jet as exact polynomial arcs (zeros beyond the level)."""
        return SeriesVec(Series({(k,): c for k, c in enumerate(comp) if c}, 1) for comp in self.values)

    @classmethod
    def from_arcs(cls, a, level):
        a = as_vec(a)
        return cls([[comp.coeff((k,)) for k in range(level + 1)] for comp in a], level)

    def dump(self):
        lines = [f"level={self.level}"]
        lines += [", ".join(format_rational(c) for c in comp) for comp in self.values]
        return "\n".join(lines) + "\n"

    @classmethod
    def load(cls, text):
        lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        if not lines or not lines[0].startswith("level="):
            raise ValueError("jet file must start with level=<e>")
        level = int(lines[0].split("=", 1)[1])
        values = [[Fraction(x.strip()) for x in ln.split(",")] for ln in lines[1:]]
        return cls(values, level)


@dataclass(frozen=True)
class StratumTag:
    i: int
    e_prime: int
    ord_f: object


def _as_polys(f):
    if isinstance(f, Series):
        return [f]
    return list(f)


def _eval_at(p, arcs):
    return substitute_partial(p, arcs, 0, check_order=False)


def classify_jet(f, jet):
    """(i, e', ord f) for the jet; ties go to the smallest index."""
    a = jet.arcs()
    if f.n != jet.n:
        fail("DOMAIN_MISMATCH", "jet and polynomial have different numbers of variables")
    orders = []
    for j in range(f.n):
        d = _eval_at(f.derivative(j), a)
        w = d.order() if not d.is_zero() else INF
        orders.append(w if w <= jet.level else INF)
    e_prime = min(orders)
    if e_prime == INF:
        fail("INDETERMINATE", "every partial derivative vanishes to the jet level",
             witness=jet)
    i = orders.index(e_prime)
    fa = _eval_at(f, a)
    ord_f = fa.order() if not fa.is_zero() else INF
    return StratumTag(i, int(e_prime), ord_f)


def _shifted_poly(f, base):
    """F(t, y) = f(base(t) + y) as a polynomial in (t, y_1..y_n)."""
    n = f.n
    comps = []
    for j, b in enumerate(base):
        terms = {(k,) + (0,) * n: c for (k,), c in b.terms()}
        yj = [0] * n
        yj[j] = 1
        terms[(0,) + tuple(yj)] = terms.get((0,) + tuple(yj), 0) + 1
        comps.append(Series(terms, n + 1))
    return substitute_partial(f, SeriesVec(comps), 0, check_order=False)


def _drop_constant_in_y(F, n):
    keep = {alpha: c for alpha, c in F.terms() if any(alpha[1:])}
    return Series(keep, F.n, F.validity, F.L, F.ring)


@dataclass
class HypersurfaceChart:
    """Linearization of eta -> f(jet + eta) - f(jet) on m^{e+1} A^n."""

    f: Series
    jet: Jet
    tag: StratumTag
    bundle: object
    fa: Series
    partials: list

    @property
    def e(self):
        return self.jet.level

    def particular(self, N):
        """y with ell(y) = -f(jet) (the target automorphism is the identity)."""
        c = SeriesVec([(-self.fa).truncate(N + self.tag.e_prime)])
        y = self.bundle.sigma(c, N)
        rem = c - self.bundle.ell(y, N + self.tag.e_prime)
        if not rem.truncate(N + self.tag.e_prime).is_zero():
            fail("OBSTRUCTED", f"f(jet) has order {self.tag.ord_f}, below the image "
                 f"m^{self.e + self.tag.e_prime + 1}", witness=rem)
        return y

    def solve_coordinate(self, y_free, index, N):
        """Complete y (index entry unknown) to a solution of ell(y) = -f(jet)."""
        rhs = (-self.fa).truncate(N + self.tag.e_prime)
        for j, yj in enumerate(y_free):
            if j != index:
                rhs = rhs - self.partials[j].mul(yj, N + self.tag.e_prime)
        d = self.partials[index]
        w = d.order()
        if _low_degree(rhs, w + self.e):
            fail("OBSTRUCTED", "fiber coordinates leave the solution space", witness=rhs)
        q = _exact_div(rhs, d, N)
        comps = list(y_free)
        comps[index] = q
        return SeriesVec(comps)


def _low_degree(x, bound):
    """Terms of the univariate series x in degree <= bound."""
    return {k: c for (k,), c in x.terms() if k <= bound}


def _exact_div(x, d, N):
    """x / d for univariate x divisible by d (d = unit * t^w), valid to N."""
    w = d.order()
    unit = d.shift_down((w,))
    low = _low_degree(x, w - 1)
    if low:
        fail("OBSTRUCTED", "division leaves a remainder", witness=low)
    hi = Series({(k - w,): c for (k,), c in x.terms() if k >= w}, 1, x.validity - w)
    return hi.mul(unit.inverse(N), N).truncate(N)


def hypersurface_chart(f, jet, tag=None, probes=1):
    tag = tag or classify_jet(f, jet)
    e, ep, i = jet.level, tag.e_prime, tag.i
    a = jet.arcs()
    F = _shifted_poly(f, a)
    Fhat = _drop_constant_in_y(F, f.n)
    fhat = tactile_from_poly(SeriesVec([Fhat]), e + 1, nbase=1, name="f-hat")
    partials = [_eval_at(f.derivative(j), a) for j in range(f.n)]
    sigma = principal_scission(partials[i], f.n, i, e + 1)
    # h has order >= 2(e+1) > e + e' + 1, so im(h) lies in im(ell) = m^{e+e'+1}
    bundle = build_bundle(fhat, sigma, "quasi_submersion", probes=probes,
                          probe_validity=e + ep + 4)
    return HypersurfaceChart(f, jet, tag, bundle, _eval_at(f, a), partials)


def lift_jet_hypersurface(f, jet, N, tag=None, fiber=None, probes=1, chart=None):
    """Arc a = jet + u^{-1}(y) with f(a) = 0 to validity N."""
    chart = chart or hypersurface_chart(f, jet, tag, probes)
    tag = chart.tag
    if tag.ord_f < jet.level + tag.e_prime + 1:
        fail("OBSTRUCTED", f"ord f(jet) = {tag.ord_f} < {jet.level + tag.e_prime + 1}",
             witness=tag)
    if fiber is None:
        y = chart.particular(N)
    else:
        y = chart.solve_coordinate(_embed_fiber(fiber, tag.i, N), tag.i, N)
    x = chart.bundle.u_inv(SeriesVec(c.truncate(N) for c in y), N)
    return jet.arcs().truncate(N) + x


def _embed_fiber(fiber, index, N):
    fiber = list(as_vec(fiber))
    comps = fiber[:index] + [Series({}, 1, N)] + fiber[index:]
    return SeriesVec(c.truncate(N) for c in comps)


def trivialize(f, jet, arc, N, chart_index=None, chart=None):
    """phi(arc) = (jet, psi(u(arc - jet))); psi deletes the chart coordinate."""
    chart = chart or hypersurface_chart(f, jet)
    arc = as_vec(arc).truncate(N)
    tail = arc - jet.arcs().truncate(N)
    if any(_low_degree(c, jet.level) for c in tail):
        fail("DOMAIN_MISMATCH", "arc does not lie over the jet")
    y = chart.bundle.u(tail, N)
    k = chart.tag.i if chart_index is None else chart_index
    return jet, SeriesVec([c for j, c in enumerate(y) if j != k])


def trivialize_inv(f, jet, fiber, N, chart_index=None, chart=None):
    chart = chart or hypersurface_chart(f, jet)
    k = chart.tag.i if chart_index is None else chart_index
    if chart.partials[k].order() != chart.tag.e_prime:
        fail("DOMAIN_MISMATCH", f"coordinate {k} is not a chart coordinate over this jet")
    y = chart.solve_coordinate(_embed_fiber(fiber, k, N), k, N)
    return jet.arcs().truncate(N) + chart.bundle.u_inv(y, N)


@dataclass
class GeneralLift:
    arc: SeriesVec
    smith: object
    rank: int


def lift_jet_general(fs, jet, N, probes=1):
    """Lift a jet on {f_1 = .. = f_k = 0} using the Smith form of the Jacobian."""
    fs = _as_polys(fs)
    e = jet.level
    a = jet.arcs()
    V = N + 2 * e + 4
    J = [[_eval_at(f.derivative(j), a).truncate(V) for j in range(f.n)] for f in fs]
    sm = smith_form(J)
    r = sm.rank
    if r == 0:
        fail("RANK_DEFICIENT_WITHIN_VALIDITY", "Jacobian vanishes along the jet")
    if sm.eps[-1] > e:
        fail("RANK_DEFICIENT_WITHIN_VALIDITY",
             f"largest Smith exponent {sm.eps[-1]} exceeds the jet level {e}")
    n = fs[0].n
    Fhats = [_drop_constant_in_y(_shifted_poly(f, a), n) for f in fs]
    fhat = tactile_from_poly(SeriesVec(Fhats), e + 1, nbase=1, name="f-hat")
    emax = max(sm.eps)
    P, Q = sm.P, sm.Q
    units_inv = [u.inverse(V) for u in sm.units]

    def sigma_fn(b, T):
        b = as_vec(b)
        top = min(b.validity, T + emax)
        pb = [sum((P[k][j].mul(b[j], top) for j in range(len(b))), Series({}, 1, top))
              for k in range(len(fs))]
        w = []
        for k in range(n):
            if k < r:
                d = sm.eps[k] + e + 1
                hi = Series({(m - d,): c for (m,), c in pb[k].terms() if m >= d}, 1,
                            pb[k].validity - d)
                q = hi.mul(units_inv[k], T - e - 1).shift((e + 1,))
                w.append(q.truncate(T))
            else:
                w.append(Series({}, 1, T))
        out = [sum((Q[j][k].mul(w[k], T) for k in range(n)), Series({}, 1, T)) for j in range(n)]
        return SeriesVec(x.truncate(T) for x in out)

    sigma = TextileMap(len(fs), n, sigma_fn, -emax, 0, "linear", 1, name="smith-scission")
    evidence = "quasi_submersion" if r == len(fs) else "sampled_pointwise"
    bundle = build_bundle(fhat, sigma, evidence, probes=probes, probe_validity=e + emax + 4)
    c = SeriesVec([(-_eval_at(f, a)).truncate(N + emax) for f in fs])
    c = bundle.v(c, N + emax)
    y = bundle.sigma(c, N)
    rem = (c - bundle.ell(y, N + emax)).truncate(N + emax)
    if not rem.is_zero():
        fail("OBSTRUCTED", "f(jet) is not in the image of the linear part", witness=rem)
    x = bundle.u_inv(SeriesVec(comp.truncate(N) for comp in y), N)
    return GeneralLift(a.truncate(N) + x, sm, r)
