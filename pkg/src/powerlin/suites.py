"""Executable property batteries behind ``powerlin verify <suite>``.

Each check draws instances from a seeded RNG in order of increasing size and
stops at the first failure, so the reported witness is the smallest failing
instance seen.
"""

import random
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import fail
from .series import Series, SeriesVec, parse_poly, substitute_partial
from .textile import random_series, tactile_from_poly


@dataclass
class CheckResult:
    name: str
    passed: bool
    instances: int
    witness: object = None


@dataclass
class SuiteReport:
    suite: str
    seed: int
    checks: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)


def _arc(coeffs, validity):
    return Series({(k,): c for k, c in enumerate(coeffs) if c}, 1, validity)


def _run(name, rng, sizes, body):
    """body(rng, size) returns None on success or a witness on failure."""
    count = 0
    for size in sizes:
        count += 1
        try:
            w = body(rng, size)
        except Exception as exc:  # an unexpected error is a failed check
            w = ("error", f"{type(exc).__name__}: {exc}", size)
        if w is not None:
            return CheckResult(name, False, count, w)
    return CheckResult(name, True, count)


def _golden(name, body):
    try:
        w = body()
    except Exception as exc:
        w = ("error", f"{type(exc).__name__}: {exc}")
    return CheckResult(name, w is None, 1, w)


# division


def _division_checks(rng, scale):
    from .division import (DivisionContext, adjugate_scission, gh_divide, gh_scission,
                           smith_form, weierstrass_divide)
    from .linalg import mat_vec

    x, y = parse_poly("x", ["x", "y"]), parse_poly("y", ["x", "y"])
    sizes = [1 + k % 4 for k in range(scale)]

    def weierstrass(rng, d):
        p = Series({(d,): 1}, 1) + random_series(rng, 1, d + 1, d + 4)
        p = Series(dict(p.terms()), 1)
        g = random_series(rng, 1, 0, 10)
        q, r = weierstrass_divide(g, p, 0, 10)
        if not (q.mul(p, 10) + r).agrees(g, 10):
            return ("identity", g, p)
        if any(k >= d for (k,), _ in r.terms()):
            return ("remainder degree", g, p)
        return None

    def gh(rng, size):
        if size % 2:
            basis = [Series({(size,): 1}, 1)]
            f = SeriesVec([random_series(rng, 1, 0, 8)])
        else:
            basis = [y - x, x * x]
            f = SeriesVec([random_series(rng, 2, 0, 6)])
        ctx = DivisionContext(basis)
        T = f.validity
        res = gh_divide(f, ctx, T)
        total = res.remainder
        for qi, gi in zip(res.quotients, ctx.basis):
            total = total + SeriesVec(qi.mul(c, T) for c in gi)
        if not total.agrees(f, T):
            return ("identity", f)
        for j, comp in enumerate(res.remainder):
            for alpha, _ in comp.terms():
                if ctx.default_assign(alpha, j) is not None:
                    return ("support", f, alpha)
        again = gh_divide(res.remainder, ctx, T)
        if not again.remainder.agrees(res.remainder, T):
            return ("idempotence", f)
        sc = gh_scission(ctx)
        ys = [random_series(rng, f[0].n, 0, T - ctx.max_order) for _ in ctx.basis]
        lb = sum((SeriesVec(yi.mul(c, T) for c in gi) for yi, gi in zip(ys, ctx.basis)),
                 SeriesVec.zeros(1, f[0].n, T))
        s = sc(lb, T - ctx.max_order)
        back = sum((SeriesVec(si.mul(c, T) for c in gi) for si, gi in zip(s, ctx.basis)),
                   SeriesVec.zeros(1, f[0].n, T))
        if not back.agrees(lb, T - ctx.max_order):
            return ("scission", ys)
        return None

    def adjugate(rng, size):
        A = [[random_series(rng, 1, 0, 2) for _ in range(2)] for _ in range(2)]
        try:
            sc = adjugate_scission(A)
        except Exception:
            return None
        T = 8
        ys = SeriesVec(random_series(rng, 1, 0, T) for _ in range(2))
        b = mat_vec(A, ys).truncate(T)
        s = sc(b, T - sc.det.order())
        if not mat_vec(A, s).agrees(b, T - sc.det.order()):
            return ("adjugate", A, ys)
        return None

    def smith(rng, size):
        A = [[random_series(rng, 1, 0, 8) for _ in range(2)] for _ in range(1 + size % 2)]
        try:
            res = smith_form(A)
        except Exception:
            return None
        from .linalg import mat_mul
        D = mat_mul(mat_mul(res.P, A), res.Q)
        for i, row in enumerate(D):
            for j, c in enumerate(row):
                if i != j and not c.truncate(c.validity).is_zero():
                    return ("off-diagonal", A)
        if res.eps != sorted(res.eps):
            return ("eps order", A)
        return None

    return [
        _run("weierstrass identity and remainder degree", rng, sizes, weierstrass),
        _run("standard-basis division identity, support, idempotence, scission", rng, sizes, gh),
        _run("adjugate scission right inverse", rng, sizes, adjugate),
        _run("smith form diagonalizes", rng, sizes, smith),
    ]


# linearize


def _linearize_checks(rng, scale):
    from .linearize import build_bundle, invert_id_plus_h, principal_scission
    from .series import SeriesVec as SV
    from .textile import general_map

    def xy(text):
        return parse_poly(text, ["x", "y"])

    def golden_u():
        f = tactile_from_poly(SV([xy("x + x*y")]), 1)
        sigma = principal_scission(Series({(0,): 1}, 1), 2, 0, 0)
        bundle = build_bundle(f, sigma, "quasi_submersion", probe_validity=20)
        a = SV([_arc([0, 1, 0, 2, 0, -1], 20), _arc([0, -1, 1, 0, 3], 20)])
        closed = SV([(a[0] * (a[1] + 1)).truncate(20), a[1]])
        if not bundle.u(a).agrees(closed, 20):
            return ("u(a) = (a1 (1 + a2), a2)", a)
        b = SV([_arc([0, 5, -1, 2], 20)])
        if bundle.v(b) != b:
            return ("v = id", b)
        return None

    def probe_tx():
        f = tactile_from_poly(SV([parse_poly("t*x + x*y", ["t", "x", "y"])]), 2, nbase=1)
        sigma = principal_scission(parse_poly("t"), 2, 0, 2)
        try:
            build_bundle(f, sigma, "sampled_pointwise", probe_validity=12, probes=3,
                         seed=rng.randint(0, 10**6))
        except Exception as exc:
            return ("probe", str(exc))
        return None

    def inverse(rng, size):
        # h(a) = c a^2 / t on m^2, kappa 1
        c = Fraction(rng.randint(-3, 3), rng.randint(1, 2))
        h = general_map(lambda a, T: SV([a[0].mul(a[0]).shift_down((1,)).scale(c)]), 1, 1, 1, 2, 1)
        N = 6 + 2 * size
        b = SV([random_series(rng, 1, 2, N)])
        g = invert_id_plus_h(h, b, N)
        if not (g + h(g, N)).agrees(b, N):
            return ("(id + h)(g) = b", c, b)
        return None

    sizes = [1 + k % 5 for k in range(scale)]
    return [
        _golden("x + xy closed-form automorphism", golden_u),
        _golden("t x + x y linearizes on m^2", probe_tx),
        _run("inverse of id + h", rng, sizes, inverse),
    ]


# nmatrix


def _nmatrix_checks(rng, scale, work_bound=None):
    from .nmatrix import RowFiniteMatrix, canonical_form, difference_solve

    def canonical(rng, d):
        h = [Fraction(rng.randint(-3, 3), rng.randint(1, 3)) for _ in range(d)]
        ell = RowFiniteMatrix.difference_operator(h)
        N = 12
        cf = canonical_form(ell, N, None if work_bound is None else work_bound * (N + d + 1))
        a = [Fraction(rng.randint(-5, 5)) for _ in range(N + 4 * d + 8)]
        if cf.canon_apply(a, N) != [a[i + d] for i in range(N)]:
            return ("canonical shape", h)
        rows = N + 1 - d
        if cf.apply_P(ell.apply(cf.apply_Q(a), rows)) != cf.canon_apply(a, rows):
            return ("P ell Q = canon", h)
        b = [Fraction(rng.randint(-5, 5)) for _ in range(N + d + 1)]
        sol = difference_solve(h, b, N)
        if len(sol.kernel) != d:
            return ("kernel dimension", h)
        for vec in [sol.particular] + [
                [p + k for p, k in zip(sol.particular, kv)] for kv in sol.kernel]:
            for i in range(N + 1 - d):
                if vec[i + d] + sum(h[k] * vec[i + k] for k in range(d)) != b[i]:
                    return ("solution", h, b)
        return None

    sizes = [1 + k % 3 for k in range(scale)]
    return [_run("difference operator canonical form and solutions", rng, sizes, canonical)]


# arcspace


def _arcspace_checks(rng, scale):
    from .arcspace import Jet, classify_jet, lift_jet_hypersurface, trivialize, trivialize_inv

    cusp = parse_poly("y^2 - x^3", ["x", "y"])

    def cusp_jets(rng, size):
        # (s^2, s^3) reparametrized by s = t + c t^2 stays on the cusp
        c = rng.randint(-2, 2)
        level = 4 + size % 5
        s = _arc([0, 1, c], 40)
        x, y = (s * s).truncate(level), (s * s * s).truncate(level)
        jet = Jet.from_arcs(SeriesVec([x, y]), level)
        tag = classify_jet(cusp, jet)
        if tag.ord_f < level + tag.e_prime + 1:
            return None
        N = level + 10
        a = lift_jet_hypersurface(cusp, jet, N, tag=tag)
        if not substitute_partial(cusp, a, 0, check_order=False).truncate(N).is_zero():
            return ("residual", jet)
        _, zeta = trivialize(cusp, jet, a, N)
        if trivialize_inv(cusp, jet, zeta, N) != a:
            return ("round trip", jet)
        return None

    def smooth():
        a = lift_jet_hypersurface(parse_poly("y - x^2", ["x", "y"]), Jet([[0, 1], [0, 0]], 1), 10)
        tag = classify_jet(parse_poly("y - x^2", ["x", "y"]), Jet([[0, 1], [0, 0]], 1))
        if tag.e_prime != 0 or a != SeriesVec([_arc([0, 1], 10), _arc([0, 0, 1], 10)]):
            return ("smooth control", a)
        return None

    sizes = [k for k in range(scale)]
    return [
        _run("cusp jets lift and trivialize", rng, sizes, cusp_jets),
        _golden("smooth locus lifts with e' = 0", smooth),
    ]


# apps


def _apps_checks(rng, scale):
    from .apps import OdeSystem, ode_recursion_oracle, ode_variable_names, solve_ode, wavrik_lift

    def ode(rng, size):
        n, q = 1 + size % 2, 1 + size % 3
        names = ode_variable_names(n, q)
        P = []
        for _ in range(n):
            terms = {}
            for _ in range(rng.randint(0, 3)):
                alpha = [0] * (n * q)
                for _ in range(rng.randint(0, 2)):
                    alpha[rng.randrange(n * q)] += 1
                terms[tuple(alpha)] = Fraction(rng.randint(-2, 2))
            P.append(Series(terms, n * q))
        init = [[rng.randint(-2, 2) for _ in range(q)] for _ in range(n)]
        sys = OdeSystem(q, P, init)
        N = 10
        x = solve_ode(sys, N)
        got = [[c.coeff((k,)) for k in range(N + 1)] for c in x]
        if got != ode_recursion_oracle(sys, N):
            return ("ode", [str(p) for p in P], init, names)
        return None

    def wavrik():
        F = parse_poly("y^2 - x^2*(1+x)", ["x", "y"])
        res = wavrik_lift(F, parse_poly("x + 1/2*x^2", ["x"]), 3, 12)
        r = substitute_partial(F, SeriesVec([_arc([0, 1], 12), res.y]), 0, check_order=False)
        if not r.truncate(12).is_zero() or res.agreement != 3:
            return ("wavrik", res.y)
        return None

    sizes = [k for k in range(scale)]
    return [_run("ode against recursion", rng, sizes, ode), _golden("wavrik binomial lift", wavrik)]


SUITES = {
    "division": _division_checks,
    "linearize": _linearize_checks,
    "nmatrix": _nmatrix_checks,
    "arcspace": _arcspace_checks,
    "apps": _apps_checks,
}


def run_suite(name, seed=0, scale=8, work_bound=None):
    if name not in SUITES:
        fail("UNKNOWN_SUITE", f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    rng = random.Random(seed)
    if name == "nmatrix":
        checks = _nmatrix_checks(rng, scale, work_bound)
    else:
        checks = SUITES[name](rng, scale)
    return SuiteReport(name, seed, checks)
