"""Row-finite N^2-matrices acting on univariate coefficient sequences.

Rows are finite maps column -> coefficient.  A matrix is given by explicit
rows plus an optional banded tail: row i (i >= start) has the entries of a
fixed stencil at columns i + offset, i + offset + 1, ...

The canonical-form routine runs the row-by-row elimination on a finite
working window and certifies which prefix of the result is final.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .errors import fail
from .ring import QQ, format_coeff
from .series import INF, Series, SeriesVec
from .textile import TextileMap


class RowFiniteMatrix:
    def __init__(self, rows=None, tail=None, ring=QQ):
        self.ring = ring
        self.explicit = [{j: ring.coerce(c) for j, c in r.items() if c} for r in (rows or [])]
        if tail is not None:
            start, offset, stencil = tail
            tail = (start, offset, tuple(ring.coerce(c) for c in stencil))
        self.tail = tail
        if tail is not None:
            for i in range(tail[0], len(self.explicit)):
                if self.explicit[i] != self._tail_row(i):
                    fail("DOMAIN_MISMATCH", f"explicit row {i} disagrees with the tail rule")

    def _tail_row(self, i):
        start, offset, stencil = self.tail
        return {i + offset + k: c for k, c in enumerate(stencil) if c and i + offset + k >= 0}

    def row(self, i):
        if i < len(self.explicit):
            return dict(self.explicit[i])
        if self.tail is not None and i >= self.tail[0]:
            return self._tail_row(i)
        return {}

    @classmethod
    def load(cls, text, ring=QQ):
        """Read lines 'row <i>: <j>=<c>, ...' and 'band [start=<s>] offset=<k> stencil=<c0,..>'.

        The band starts after the last explicit row unless start is given.
        """
        rows, band = {}, None
        for ln in text.splitlines():
            ln = ln.split("#", 1)[0].strip()
            if not ln:
                continue
            if ln.startswith("row"):
                head, _, body = ln.partition(":")
                i = int(head.split()[1])
                entries = {}
                for item in body.split(","):
                    if item.strip():
                        j, c = item.split("=")
                        entries[int(j)] = Fraction(c.strip())
                rows[i] = entries
            elif ln.startswith("band"):
                fields = dict(part.split("=", 1) for part in ln.split()[1:])
                band = (int(fields["start"]) if "start" in fields else None,
                        int(fields.get("offset", 0)),
                        [Fraction(c) for c in fields["stencil"].split(",")])
            else:
                raise ValueError(f"cannot read matrix line {ln!r}")
        explicit = [rows.get(i, {}) for i in range(max(rows) + 1)] if rows else []
        tail = None
        if band is not None:
            start = band[0] if band[0] is not None else len(explicit)
            tail = (start, band[1], band[2])
        return cls(explicit, tail, ring)

    def dump(self):
        lines = []
        for i, r in enumerate(self.explicit):
            body = ", ".join(f"{j}={format_coeff(c)}" for j, c in sorted(r.items()))
            lines.append(f"row {i}: {body}")
        if self.tail is not None:
            start, offset, stencil = self.tail
            lines.append(f"band start={start} offset={offset} "
                         f"stencil={','.join(format_coeff(c) for c in stencil)}")
        return "\n".join(lines) + "\n"

    def bandwidth(self):
        """Largest max-column minus row index over all rows (at least 0)."""
        bw = 0
        for i, r in enumerate(self.explicit):
            if r:
                bw = max(bw, max(r) - i)
        if self.tail is not None:
            bw = max(bw, self.tail[1] + len(self.tail[2]) - 1)
        return bw

    @classmethod
    def difference_operator(cls, h, ring=QQ):
        """s^d + h_{d-1} s^{d-1} + ... + h_0 acting by (a_i) -> (sum h_k a_{i+k})."""
        stencil = list(h) + [1]
        return cls([], (0, 0, stencil), ring)

    @classmethod
    def identity(cls, ring=QQ):
        return cls([], (0, 0, [1]), ring)

    @classmethod
    def zero(cls, ring=QQ):
        return cls([], None, ring)

    def apply(self, a, n_out):
        """First n_out entries of ell(a) for a coefficient list a."""
        out = []
        for i in range(n_out):
            acc = self.ring.zero()
            for j, c in self.row(i).items():
                if j >= len(a):
                    fail("WINDOW_INSUFFICIENT", f"row {i} needs input entry {j}")
                acc = acc + c * a[j]
            out.append(acc)
        return out

    def as_textile(self):
        """The matrix as a linear textile map on univariate series."""
        bw = self.bandwidth()

        def fn(a, T):
            s = a[0]
            top = min(T, s.validity - bw)
            if top == INF:
                fail("DOMAIN_MISMATCH", "row-finite maps need a finite validity")
            coeffs = [s.coeff((j,)) if j <= s.validity else 0 for j in range(int(top) + bw + 1)]
            vals = self.apply(coeffs, int(top) + 1)
            return SeriesVec([Series({(i,): c for i, c in enumerate(vals)}, 1, top, s.L, s.ring)])

        return TextileMap(1, 1, fn, -bw, 0, "linear", 1, name="row-finite")


def _sub_row(target, row, c):
    for j, v in row.items():
        nv = target.get(j, 0) - c * v
        if nv:
            target[j] = nv
        elif j in target:
            del target[j]


@dataclass
class CanonicalFormResult:
    P_factors: list
    Q_factors: list
    pivots: list
    window: int
    work_bound: int
    ring: object = QQ
    pivot_of_row: dict = field(default_factory=dict)

    def canon_apply(self, a, n_out):
        out = []
        for i in range(n_out):
            j = self.pivot_of_row.get(i)
            out.append(a[j] if j is not None else self.ring.zero())
        return out

    def apply_P(self, b):
        b = list(b)
        m = len(b)
        for i, s, elim in self.P_factors:
            if i >= m:
                break
            b[i] = b[i] * s
            for l, c in elim.items():
                if l < m:
                    b[l] = b[l] - c * b[i]
        return b

    def apply_P_inv(self, b):
        b = list(b)
        m = len(b)
        for i, s, elim in reversed(self.P_factors):
            if i >= m:
                continue
            for l, c in elim.items():
                if l < m:
                    b[l] = b[l] + c * b[i]
            b[i] = b[i] * self.ring.inv(s)
        return b

    def apply_Q(self, a):
        a = list(a)
        m = len(a)
        for Ni, coeffs in reversed(self.Q_factors):
            if Ni < m:
                a[Ni] = a[Ni] - sum((c * a[j] for j, c in coeffs.items()), self.ring.zero())
        return a

    def apply_Q_inv(self, a):
        a = list(a)
        m = len(a)
        for Ni, coeffs in self.Q_factors:
            if Ni < m:
                a[Ni] = a[Ni] + sum((c * a[j] for j, c in coeffs.items()), self.ring.zero())
        return a

    def pivot_columns(self):
        return {j for _, j in self.pivots}

    def kernel_columns(self):
        """Columns within the window that never become pivot columns."""
        cols = self.pivot_columns()
        return [j for j in range(self.window + 1) if j not in cols]


def canonical_form(ell, N, work_bound=None):
    """Run the elimination on rows < work_bound and certify columns <= N."""
    ring = ell.ring
    bw = ell.bandwidth()
    W = work_bound if work_bound is not None else 4 * (N + bw + 1)
    if W <= N:
        fail("WINDOW_INSUFFICIENT", f"work bound {W} does not exceed the window {N}")
    rows = [ell.row(i) for i in range(W)]
    P_factors, Q_factors, pivots = [], [], []
    pivot_of_row = {}
    late_low = []
    for i in range(W):
        r = rows[i]
        if not r:
            continue
        Ni = max(r)
        piv = r[Ni]
        if not ring.is_unit(piv):
            fail("NON_UNIT_PIVOT", f"pivot at ({i}, {Ni}) is not a unit", witness=(i, Ni))
        s = ring.inv(piv)
        r = {j: c * s for j, c in r.items()}
        elim = {}
        for l in range(i + 1, W):
            c = rows[l].get(Ni)
            if c:
                _sub_row(rows[l], r, c)
                elim[l] = c
        P_factors.append((i, s, elim))
        Q_factors.append((Ni, {j: c for j, c in r.items() if j != Ni}))
        rows[i] = {Ni: ring.one()}
        pivots.append((i, Ni))
        pivot_of_row[i] = Ni
        if i >= W // 2 and Ni <= N:
            late_low.append((i, Ni))
    if late_low:
        fail("WINDOW_INSUFFICIENT",
             f"late rows still pivot inside the window: {late_low[:3]}", witness=late_low)
    return CanonicalFormResult(P_factors, Q_factors, pivots, N, W, ring, pivot_of_row)


class NScission:
    """sigma = Q sigma~ P for a row-finite matrix, exact on the window."""

    def __init__(self, ell, N, work_bound=None):
        self.ell = ell
        self.N = N
        self.cf = canonical_form(ell, N, work_bound)
        rows_needed = [i for i, j in self.cf.pivots if j <= N]
        self.input_len = (max(rows_needed) + 1) if rows_needed else 0

    def __call__(self, b):
        """First N+1 entries of sigma(b) for a coefficient list b."""
        ring = self.cf.ring
        need = self.input_len
        if len(b) < need:
            fail("WINDOW_INSUFFICIENT", f"need {need} input entries, got {len(b)}")
        pb = self.cf.apply_P(list(b[:max(need, 1)]) if need else [])
        out = [ring.zero()] * (self.N + 1)
        for i, j in self.cf.pivots:
            if j <= self.N and i < len(pb):
                out[j] = pb[i]
        return self.cf.apply_Q(out)


def scission_from_canonical(ell, N, work_bound=None):
    return NScission(ell, N, work_bound)


@dataclass
class DifferenceSolution:
    particular: list
    kernel: list
    window: int


def difference_solve(h, b, N, work_bound=None, ring=QQ):
    """Solutions of Delta a = b on the window, Delta = s^d + sum h_k s^k.

    ``b`` is a coefficient list (or univariate Series) with at least N+1
    entries; returned vectors have N+1 entries and satisfy the first
    N+1-d equations exactly.
    """
    d = len(h)
    ell = RowFiniteMatrix.difference_operator(h, ring)
    if isinstance(b, Series):
        b = [b.coeff((i,)) for i in range(int(min(b.validity, N + d)) + 1)]
    b = [ring.coerce(x) for x in b]
    sc = NScission(ell, N, work_bound)
    if len(b) < sc.input_len:
        b = b + [ring.zero()] * (sc.input_len - len(b))
    particular = sc(b)
    kernel = []
    for j in sc.cf.kernel_columns():
        e = [ring.zero()] * (N + 1)
        e[j] = ring.one()
        kernel.append(sc.cf.apply_Q(e))
    return DifferenceSolution(particular, kernel, N)
