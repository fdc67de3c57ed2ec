"""Division theorems and the scissions they induce.

* Weierstrass division by a series regular in one variable.
* Division by a (caller-asserted) standard basis of a submodule of C^p,
  with a deterministic partition of the initial exponents.
* Adjugate scissions for square matrices and Smith normal form over
  univariate series.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

from .errors import fail
from .linalg import adjugate, det, identity, mat_vec, shape
from .series import BITS, INF, MASK, AtLeast, Series, SeriesVec, as_vec, substitute_partial, unpack, var


# Weierstrass division


def _degree_in(key, n, i):
    return (key >> (BITS * (n - 1 - i))) & MASK


def regularity_degree(p, var_index):
    """Degree b with p regular of order b in x_var, or None.

    Over a test ring the condition is read modulo the nilpotent ideal:
    lower-weight terms must have nilpotent coefficients.
    """
    ring = p.ring
    items = p.items()
    unit_items = [(w, k, c) for w, k, c in items if ring.is_unit(c)]
    if not unit_items:
        return None
    w0 = unit_items[0][0]
    b = Fraction(w0) / p.L[var_index]
    if b.denominator != 1:
        return None
    b = int(b)
    pure = b << (BITS * (p.n - 1 - var_index))
    c = p._t.get(pure)
    if c is None or not ring.is_unit(c):
        return None
    return b


def _split(s, var_index, b):
    """(terms of x_var-degree < b, other terms divided by x_var^b)."""
    n = s.n
    step = b << (BITS * (n - 1 - var_index))
    low, high, hw = {}, {}, {}
    dw = b * s.L[var_index]
    for k, c in s._t.items():
        if _degree_in(k, n, var_index) < b:
            low[k] = c
        else:
            high[k - step] = c
            hw[k - step] = s._wt[k] - dw
    lo = Series._raw(n, s.L, s.ring, s.validity, low, {k: s._wt[k] for k in low})
    hi = Series._raw(n, s.L, s.ring, s.validity - dw, high, hw)
    return lo, hi


def weierstrass_divide(g, p, var_index=None, T=None, max_rounds=100000):
    """Return (quotient, remainder) with g = quotient*p + remainder.

    The remainder has x_var-degree below the regularity degree of ``p``.
    ``T`` caps the validity; it is required when both inputs are exact and
    the division does not terminate on its own.
    """
    if var_index is None:
        var_index = g.n - 1
    g._check(p)
    b = regularity_degree(p, var_index)
    if b is None:
        fail("NOT_REGULAR", f"divisor is not regular in variable {var_index}")
    p_low, p_high = _split(p, var_index, b)
    dw = b * p.L[var_index]
    res = g if T is None else g.truncate(T)
    V = res.validity
    inv_high = p_high.inverse(None if V == INF else V - dw)
    quot = g.zero_like(INF)
    rem = g.zero_like(INF)
    rounds = 0
    while not res.is_zero():
        rounds += 1
        if rounds > max_rounds:
            fail("BUDGET_EXCEEDED", "Weierstrass division did not settle")
        low, high = _split(res, var_index, b)
        rem = rem + low
        q = high.mul(inv_high)
        quot = quot + q
        res = -(q.mul(p_low))
    quot = quot.truncate(res.validity - dw)
    rem = rem.truncate(res.validity)
    return quot, rem


# generic coordinate changes


def generic_linear_change(h, target=None, max_c=64):
    """Matrix M (rows of Fractions) with h(Mx) regular in x_target.

    The search runs over c = 0, 1, 2, ... and subsets S of the other
    variables (by size, then lex), trying x_i -> x_i + c*x_target for i in S.
    """
    n = h.n
    if target is None:
        target = n - 1
    if h.is_zero():
        fail("ZERO_SERIES", "cannot make the zero series regular")
    if len(set(h.L)) != 1:
        fail("UNSUPPORTED", "linear changes need equal weights")
    w = h.order()
    initial = [(unpack(k, n), c) for ww, k, c in h.items() if ww == w]
    others = [i for i in range(n) if i != target]

    def value_at(point):
        total = 0
        for alpha, c in initial:
            term = c
            for a, x in zip(alpha, point):
                if a:
                    term = term * Fraction(x) ** a
            total = total + term
        return total

    for c in range(max_c + 1):
        subsets = [()] if c == 0 else [s for size in range(1, len(others) + 1)
                                       for s in combinations(others, size)]
        for S in subsets:
            point = [0] * n
            point[target] = 1
            for i in S:
                point[i] = c
            if h.ring.is_unit(value_at(point)) if not h.ring.is_field else value_at(point) != 0:
                M = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
                for i in S:
                    M[i][target] = Fraction(c)
                return M
    fail("BUDGET_EXCEEDED", "no regularizing change found")


def apply_linear_change(s, M):
    """s(Mx): substitute x_i -> sum_j M[i][j] x_j."""
    n = s.n
    xs = [var(j, n, s.L, s.ring) for j in range(n)]
    images = []
    for row in M:
        acc = s.zero_like(INF)
        for j, m in enumerate(row):
            if m:
                acc = acc + xs[j].scale(m)
        images.append(acc)
    return substitute_partial(s, SeriesVec(images), 0, check_order=False)


def invert_linear_change(M):
    n = len(M)
    A = [list(map(Fraction, row)) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(M)]
    for col in range(n):
        piv = next(r for r in range(col, n) if A[r][col] != 0)
        A[col], A[piv] = A[piv], A[col]
        pv = A[col][col]
        A[col] = [x / pv for x in A[col]]
        for r in range(n):
            if r != col and A[r][col] != 0:
                f = A[r][col]
                A[r] = [x - f * y for x, y in zip(A[r], A[col])]
    return [row[n:] for row in A]


# standard-basis division


def _divides(a, b):
    return all(x <= y for x, y in zip(a, b))


class DivisionContext:
    """Monic basis of a submodule of C^p with leading exponents.

    ``leading[i] = (alpha_i, j_i)``; when omitted it is the smallest term
    of f_i in the (L, lex, component) order.  ``partition`` optionally
    overrides the default rule (smallest i whose leading term divides).
    """

    def __init__(self, basis, leading=None, partition=None):
        basis = [as_vec(f) for f in basis]
        if not basis:
            raise ValueError("empty basis")
        self.basis = basis
        self.p = len(basis[0])
        self.n = basis[0].n
        self.L = basis[0].L
        if leading is None:
            leading = [self._initial(f) for f in basis]
        self.leading = [(tuple(a), j) for a, j in leading]
        for i, (f, (alpha, j)) in enumerate(zip(basis, self.leading)):
            if alpha != self._initial(f)[0] or j != self._initial(f)[1]:
                fail("PARTITION_VIOLATION", f"declared leading term of basis element {i} is not initial")
            c = f[j].coeff(alpha)
            if c != 1:
                fail("NOT_MONIC", f"basis element {i} has leading coefficient {c}")
        self.tails = []
        for f, (alpha, j) in zip(basis, self.leading):
            comps = list(f.comps)
            comps[j] = comps[j] - comps[j].const(1).shift(alpha)
            self.tails.append(SeriesVec(comps))
        self.lead_weights = [sum(w * a for w, a in zip(self.L, alpha)) for alpha, _ in self.leading]
        self.max_order = max(self.lead_weights)
        gaps = []
        for tail, lw in zip(self.tails, self.lead_weights):
            if not tail.is_zero():
                gaps.append(tail.order() - lw)
        self.delta = min(gaps) if gaps else INF
        self._partition = partition
        self._cache = {}

    def _initial(self, f):
        best = None
        for j, comp in enumerate(f):
            if comp.is_zero():
                continue
            w, k, c = comp.items()[0]
            key = (w, k, j)
            if best is None or key < best:
                best = key
        if best is None:
            fail("ZERO_SERIES", "basis element is zero")
        return unpack(best[1], self.n), best[2]

    def default_assign(self, alpha, j):
        for i, (a, jj) in enumerate(self.leading):
            if jj == j and _divides(a, alpha):
                return i
        return None

    def assign(self, alpha, j):
        key = (alpha, j)
        if key in self._cache:
            return self._cache[key]
        i = self.default_assign(alpha, j)
        if self._partition is not None:
            chosen = self._partition(alpha, j)
            if chosen is not None:
                a, jj = self.leading[chosen]
                if jj != j or not _divides(a, alpha):
                    fail("PARTITION_VIOLATION", f"exponent {alpha},{j} assigned outside C*in(f_{chosen})")
            elif i is not None:
                fail("PARTITION_VIOLATION", f"exponent {alpha},{j} lies in S but was not assigned")
            i = chosen
        self._cache[key] = i
        return i


@dataclass
class DivisionResult:
    quotients: list
    remainder: SeriesVec
    rounds: int = 0
    perturbed: bool = False


def _round_bound(ctx, f, T):
    if ctx.delta != INF and ctx.delta > 0:
        w = f.order()
        w = w.value if isinstance(w, AtLeast) else w
        return max(0, math.ceil((T - w) / ctx.delta)) + 1, False
    # zero gap: progress is only in the lex tie-break, which amounts to a
    # perturbed linear form; bound by the number of exponents up to T
    count = 0
    n = ctx.n
    lmin = min(ctx.L)
    top = int(T / lmin) if T != INF else 0
    count = math.comb(top + n, n) * ctx.p
    return count + 1, True


def gh_divide(f, ctx, T=None):
    """Divide f by the basis of ``ctx`` up to weight T."""
    f = as_vec(f)
    if T is None:
        T = f.validity
    if T == INF:
        fail("DOMAIN_MISMATCH", "an explicit target validity is required for exact input")
    res = f.truncate(T)
    m, p, n = len(ctx.basis), ctx.p, ctx.n
    proto = res[0]
    quots = [proto.zero_like(INF) for _ in range(m)]
    rems = [proto.zero_like(INF) for _ in range(p)]
    bound, perturbed = _round_bound(ctx, res, T)
    rounds = 0
    while not res.is_zero():
        rounds += 1
        if rounds > bound:
            fail("BUDGET_EXCEEDED", "division did not settle within the proven bound")
        qparts = [dict() for _ in range(m)]
        rparts = [dict() for _ in range(p)]
        for j, comp in enumerate(res):
            for alpha, c in comp.terms():
                i = ctx.assign(alpha, j)
                if i is None:
                    rparts[j][alpha] = c
                else:
                    a = ctx.leading[i][0]
                    qparts[i][tuple(x - y for x, y in zip(alpha, a))] = c
        V = res.validity
        new = None
        for i in range(m):
            if not qparts[i]:
                continue
            q = Series(qparts[i], n, V - ctx.lead_weights[i], ctx.L, proto.ring)
            quots[i] = quots[i] + q
            contrib = SeriesVec(q.mul(c, T) for c in ctx.tails[i])
            new = -contrib if new is None else new - contrib
        for j in range(p):
            if rparts[j]:
                rems[j] = rems[j] + Series(rparts[j], n, V, ctx.L, proto.ring)
        if new is None:
            res = SeriesVec.zeros(p, n, V, ctx.L, proto.ring)
        else:
            res = SeriesVec(c.truncate(T) for c in new)
    V = res.validity
    quots = [q.truncate(V - lw) for q, lw in zip(quots, ctx.lead_weights)]
    rems = SeriesVec(r.truncate(V) for r in rems)
    return DivisionResult(quots, rems, rounds, perturbed and rounds > 1)


class Scission:
    """A right inverse on the image: ell(sigma(ell(y))) = ell(y).

    ``fn(b, T)`` returns a SeriesVec valid to T; ``kappa`` is the certified
    contraction degree (typically negative).
    """

    def __init__(self, fn, kappa, arity_in, arity_out, description=""):
        self.fn = fn
        self.kappa = kappa
        self.arity_in = arity_in
        self.arity_out = arity_out
        self.description = description

    def __call__(self, b, T=None):
        b = as_vec(b)
        if T is None:
            T = b.validity
        return self.fn(b, T)


def gh_scission(ctx):
    def sigma(b, T):
        return SeriesVec(gh_divide(b, ctx, min(b.validity, T + ctx.max_order)).quotients)

    return Scission(sigma, -ctx.max_order, ctx.p, len(ctx.basis), "standard-basis division")


def adjugate_scission(A):
    """Scission of y -> A y from Weierstrass division of adj(A) z by det A."""
    k, k2 = shape(A)
    if k != k2:
        fail("DOMAIN_MISMATCH", "adjugate scission needs a square matrix")
    D = det(A)
    if D.is_zero():
        fail("SINGULAR_WITHIN_VALIDITY", "determinant vanishes within validity")
    adj = adjugate(A)
    n = D.n
    M = generic_linear_change(D) if n > 1 else None
    Minv = invert_linear_change(M) if M is not None else None
    Dphi = apply_linear_change(D, M) if M is not None else D
    wd = D.order()
    orders = [a.order() for row in adj for a in row if not a.is_zero()]
    kadj = min(orders) if orders else 0

    def sigma(z, T):
        need = T + wd
        z = z.truncate(need) if need != INF else z
        y = mat_vec(adj, z)
        out = []
        for comp in y:
            c = apply_linear_change(comp, M) if M is not None else comp
            q, _ = weierstrass_divide(c, Dphi, n - 1)
            if Minv is not None:
                q = apply_linear_change(q, Minv)
            out.append(q.truncate(T) if T != INF else q)
        return SeriesVec(out)

    sc = Scission(sigma, -wd + kadj, k, k, "adjugate division")
    sc.det = D
    sc.adj = adj
    return sc


# Smith normal form


@dataclass
class SmithResult:
    P: list
    Q: list
    eps: list
    units: list
    rank: int
    diagonal: list = field(default_factory=list)


def _exact_quotient(a, pivot):
    q, r = weierstrass_divide(a, pivot, 0)
    if not r.is_zero():
        fail("RANK_DEFICIENT_WITHIN_VALIDITY", "non-exact division during Smith reduction")
    return q


def smith_form(A, rank_target=None):
    """P, Q invertible with P A Q diagonal t^eps_i E_i (E_i(0) = 1)."""
    N, n = shape(A)
    proto = A[0][0]
    if proto.n != 1:
        fail("UNSUPPORTED", "Smith form is implemented over univariate series")
    M = [list(row) for row in A]
    P = identity(N, proto)
    Q = identity(n, proto)
    eps, units = [], []
    k = 0
    limit = min(N, n)
    while k < limit:
        best = None
        for i in range(k, N):
            for j in range(k, n):
                e = M[i][j]
                if e.is_zero():
                    continue
                key = (e.order(), i, j)
                if best is None or key < best:
                    best = key
        if best is None:
            break
        _, i, j = best
        M[k], M[i] = M[i], M[k]
        P[k], P[i] = P[i], P[k]
        for row in M:
            row[k], row[j] = row[j], row[k]
        for row in Q:
            row[k], row[j] = row[j], row[k]
        piv = M[k][k]
        c0 = piv.items()[0][2]
        e = piv.order()
        scale = piv.ring.inv(c0)
        M[k] = [x.scale(scale) for x in M[k]]
        P[k] = [x.scale(scale) for x in P[k]]
        piv = M[k][k]
        for r in range(k + 1, N):
            if M[r][k].is_zero():
                continue
            f = _exact_quotient(M[r][k], piv)
            M[r] = [a - f * b for a, b in zip(M[r], M[k])]
            P[r] = [a - f * b for a, b in zip(P[r], P[k])]
        for c in range(k + 1, n):
            if M[k][c].is_zero():
                continue
            f = _exact_quotient(M[k][c], piv)
            for row in M:
                row[c] = row[c] - f * row[k]
            for row in Q:
                row[c] = row[c] - f * row[k]
        eps.append(e)
        units.append(piv.shift_down((e,)))
        k += 1
    if rank_target is not None and k < rank_target:
        fail("RANK_DEFICIENT_WITHIN_VALIDITY", f"reached rank {k} < {rank_target}")
    return SmithResult(P, Q, eps, units, k, [M[i][i] for i in range(k)])
