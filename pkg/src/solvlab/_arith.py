"""Small exact-arithmetic helpers shared by several modules."""
import math
from fractions import Fraction


def iroot(n, k):
    """Return the integer k-th root of n >= 0 if it is exact, else None."""
    if n < 0 or k < 1:
        raise ValueError("iroot needs n >= 0 and k >= 1")
    if n in (0, 1) or k == 1:
        return n
    lo, hi = 1, 1 << (n.bit_length() // k + 1)
    while lo <= hi:
        mid = (lo + hi) // 2
        p = mid ** k
        if p == n:
            return mid
        if p < n:
            lo = mid + 1
        else:
            hi = mid - 1
    return None


def bareiss_det(rows):
    """Exact determinant of an integer matrix by fraction-free elimination."""
    a = [list(map(int, r)) for r in rows]
    n = len(a)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def rref(rows):
    """Reduced row echelon form over the rationals. Returns (matrix, pivots)."""
    a = [[Fraction(x) for x in r] for r in rows]
    if not a:
        return a, []
    nrows, ncols = len(a), len(a[0])
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, nrows) if a[i][c] != 0), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        lead = a[r][c]
        a[r] = [x / lead for x in a[r]]
        for i in range(nrows):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return a, pivots


def nullspace(rows):
    """Basis of the rational null space, each vector scaled to integers."""
    a, pivots = rref(rows)
    ncols = len(rows[0])
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for i, p in enumerate(pivots):
            v[p] = -a[i][f]
        den = 1
        for x in v:
            den = den * x.denominator // math.gcd(den, x.denominator)
        basis.append([x * den for x in v])
    return basis


def mat_inverse(rows):
    """Exact inverse of a square rational matrix."""
    n = len(rows)
    aug = [list(r) + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(rows)]
    red, pivots = rref(aug)
    if pivots[:n] != list(range(n)):
        raise ZeroDivisionError("matrix is singular")
    return [row[n:] for row in red]


def matvec(A, v):
    return tuple(sum(a * x for a, x in zip(row, v)) for row in A)


def matmul(A, B):
    cols = list(zip(*B))
    return [[sum((a * b for a, b in zip(row, col)), Fraction(0)) for col in cols] for row in A]


def mat_power(A, k):
    """A**k for a square rational matrix; negative k uses the exact inverse."""
    n = len(A)
    base = [[Fraction(x) for x in r] for r in A]
    if k < 0:
        base = mat_inverse(base)
        k = -k
    out = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    while k:
        if k & 1:
            out = matmul(out, base)
        base = matmul(base, base)
        k >>= 1
    return out


def frac_part(x):
    """Fractional part in [0, 1) of a Fraction."""
    return x - (x.numerator // x.denominator)

