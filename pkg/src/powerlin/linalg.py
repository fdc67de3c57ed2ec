"""Small matrices whose entries are Series (lists of rows)."""

from .errors import fail
from .series import INF, Series, SeriesVec


def identity(k, proto):
    one, zero = proto.const(1), proto.const(0)
    return [[one if i == j else zero for j in range(k)] for i in range(k)]


def shape(A):
    return len(A), len(A[0]) if A else 0


def mat_vec(A, v, T=None):
    v = list(v)
    rows, cols = shape(A)
    if cols != len(v):
        fail("DOMAIN_MISMATCH", "matrix and vector sizes differ")
    out = []
    for row in A:
        acc = v[0].zero_like(INF)
        for a, x in zip(row, v):
            if a.is_zero() and a.validity == INF:
                continue
            acc = acc + a.mul(x, T)
        out.append(acc)
    return SeriesVec(out)


def mat_mul(A, B, T=None):
    ra, ca = shape(A)
    rb, cb = shape(B)
    if ca != rb:
        fail("DOMAIN_MISMATCH", "matrix sizes differ")
    cols = [mat_vec(A, [B[i][j] for i in range(rb)], T) for j in range(cb)]
    return [[cols[j][i] for j in range(cb)] for i in range(ra)]


def det(A, T=None):
    """Determinant by cofactor expansion memoized on column subsets."""
    k = len(A)
    if k == 0:
        raise ValueError("empty matrix")
    memo = {}

    def minor(row, cols):
        # determinant of rows row..k-1 restricted to the columns in ``cols``
        if row == k:
            return None
        key = (row, cols)
        if key in memo:
            return memo[key]
        acc = None
        sign = 1
        for idx, c in enumerate(cols):
            rest = cols[:idx] + cols[idx + 1:]
            sub = minor(row + 1, rest)
            term = A[row][c] if sub is None else A[row][c].mul(sub, T)
            if sign < 0:
                term = -term
            acc = term if acc is None else acc + term
            sign = -sign
        memo[key] = acc
        return acc

    return minor(0, tuple(range(k)))


def adjugate(A, T=None):
    k = len(A)
    if k == 1:
        return [[A[0][0].const(1)]]
    out = [[None] * k for _ in range(k)]
    for i in range(k):
        for j in range(k):
            sub = [[A[r][c] for c in range(k) if c != j] for r in range(k) if r != i]
            d = det(sub, T)
            out[j][i] = d if (i + j) % 2 == 0 else -d
    return out


def minors(A, size):
    """All size x size minors of A as a list of Series."""
    from itertools import combinations

    rows, cols = shape(A)
    out = []
    for rs in combinations(range(rows), size):
        for cs in combinations(range(cols), size):
            out.append(det([[A[r][c] for c in cs] for r in rs]))
    return out


def is_series_matrix(A):
    return all(isinstance(a, Series) for row in A for a in row)
