"""Exact integer and rational linear algebra on small dense matrices.

Matrices are lists of lists of Python ints (or Fractions where noted).  All
routines are exact; sizes here are tiny (d <= 6 or so), so clarity wins over
asymptotics.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Sequence

Matrix = list[list[int]]


def as_matrix(rows: Sequence[Sequence[int]]) -> Matrix:
    return [[int(x) for x in row] for row in rows]


def identity(n: int) -> Matrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def zeros(r: int, c: int) -> Matrix:
    return [[0] * c for _ in range(r)]


def transpose(a: Sequence[Sequence]) -> list[list]:
    if not a:
        return []
    return [list(col) for col in zip(*a)]


def matmul(a: Sequence[Sequence], b: Sequence[Sequence]) -> list[list]:
    if not a:
        return []
    inner = len(b)
    cols = len(b[0]) if b else 0
    return [[sum(a[i][k] * b[k][j] for k in range(inner)) for j in range(cols)]
            for i in range(len(a))]


def matvec(a: Sequence[Sequence], v: Sequence) -> list:
    return [sum(x * y for x, y in zip(row, v)) for row in a]


def content(values) -> int:
    """gcd of all entries (0 for the empty or all-zero input)."""
    g = 0
    for x in values:
        g = gcd(g, int(x))
    return g


def flatten(a: Sequence[Sequence[int]]) -> list[int]:
    return [x for row in a for x in row]


def det(a: Sequence[Sequence[int]]) -> int:
    """Determinant by fraction-free Bareiss elimination."""
    n = len(a)
    if n == 0:
        return 1
    m = [list(map(int, row)) for row in a]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for i in range(k + 1, n):
                if m[i][k] != 0:
                    m[k], m[i] = m[i], m[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


def rational_rank(rows: Sequence[Sequence]) -> int:
    return len(row_echelon(rows)[1])


def row_echelon(rows: Sequence[Sequence]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form over Q; returns (rref rows, pivot columns)."""
    m = [[Fraction(x) for x in row] for row in rows]
    if not m:
        return [], []
    ncols = len(m[0])
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        lead = m[r][c]
        m[r] = [x / lead for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def rational_nullspace(rows: Sequence[Sequence], ncols: int) -> list[list[Fraction]]:
    """Basis of {x in Q^ncols : rows x = 0}."""
    rref, pivots = row_echelon(rows) if rows else ([], [])
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for i, p in enumerate(pivots):
            v[p] = -rref[i][f]
        basis.append(v)
    return basis


def primitive_integer(v: Sequence[Fraction]) -> list[int]:
    """Scale a rational vector to the primitive integer vector on its ray."""
    den = 1
    for x in v:
        den = den * Fraction(x).denominator // gcd(den, Fraction(x).denominator)
    ints = [int(Fraction(x) * den) for x in v]
    g = content(ints)
    return [x // g for x in ints] if g else ints


def solve_rational(a: Sequence[Sequence], b: Sequence[Sequence]) -> list[list[Fraction]] | None:
    """Solve a X = b for square nonsingular a over Q (None when singular)."""
    n = len(a)
    aug = [[Fraction(x) for x in a[i]] + [Fraction(x) for x in b[i]] for i in range(n)]
    rref, pivots = row_echelon(aug)
    if pivots[:n] != list(range(n)) or len(pivots) < n:
        return None
    return [row[n:] for row in rref[:n]]


def inverse_rational(a: Sequence[Sequence[int]]) -> list[list[Fraction]] | None:
    return solve_rational(a, identity(len(a)))


def hermite_normal_form(a: Sequence[Sequence[int]]) -> tuple[Matrix, Matrix]:
    """Row-style HNF: returns (H, U) with U unimodular and U a = H.

    H is upper echelon, pivots positive, entries above each pivot reduced into
    [0, pivot).  Zero rows are kept at the bottom.
    """
    m = [list(map(int, row)) for row in a]
    nrows = len(m)
    ncols = len(m[0]) if m else 0
    u = identity(nrows)
    r = 0
    for c in range(ncols):
        if r >= nrows:
            break
        while True:
            nz = [i for i in range(r, nrows) if m[i][c] != 0]
            if not nz:
                break
            piv = min(nz, key=lambda i: abs(m[i][c]))
            m[r], m[piv] = m[piv], m[r]
            u[r], u[piv] = u[piv], u[r]
            done = True
            for i in range(r + 1, nrows):
                if m[i][c] != 0:
                    q = m[i][c] // m[r][c]
                    m[i] = [x - q * y for x, y in zip(m[i], m[r])]
                    u[i] = [x - q * y for x, y in zip(u[i], u[r])]
                    if m[i][c] != 0:
                        done = False
            if done:
                break
        if all(m[i][c] == 0 for i in range(r, nrows)):
            continue
        if m[r][c] < 0:
            m[r] = [-x for x in m[r]]
            u[r] = [-x for x in u[r]]
        for i in range(r):
            q = m[i][c] // m[r][c]
            if q:
                m[i] = [x - q * y for x, y in zip(m[i], m[r])]
                u[i] = [x - q * y for x, y in zip(u[i], u[r])]
        r += 1
    return m, u


def hnf_basis(rows: Sequence[Sequence[int]]) -> Matrix:
    """Canonical basis (nonzero HNF rows) of the lattice spanned by ``rows``."""
    if not rows:
        return []
    h, _ = hermite_normal_form(rows)
    return [row for row in h if any(row)]


def integer_kernel(a: Sequence[Sequence[int]], ncols: int) -> Matrix:
    """Basis (rows, HNF-canonical) of {x in Z^ncols : a x = 0}.

    The kernel of an integer matrix is a saturated sublattice, so the basis
    returned extends to a basis of Z^ncols.
    """
    if not a:
        return identity(ncols)
    # column operations on a == row operations on a^T
    h, u = hermite_normal_form(transpose(a))
    kernel = [u[i] for i in range(len(h)) if not any(h[i])]
    return hnf_basis(kernel)


def smith_normal_form(a: Sequence[Sequence[int]]) -> tuple[Matrix, Matrix, Matrix]:
    """Returns (D, P, Q) with P, Q unimodular and P a Q = D diagonal.

    Diagonal entries are nonnegative and successively divide each other.
    """
    m = [list(map(int, row)) for row in a]
    nr = len(m)
    nc = len(m[0]) if m else 0
    p = identity(nr)
    q = identity(nc)

    def swap_rows(i, j):
        m[i], m[j] = m[j], m[i]
        p[i], p[j] = p[j], p[i]

    def swap_cols(i, j):
        for row in m:
            row[i], row[j] = row[j], row[i]
        for row in q:
            row[i], row[j] = row[j], row[i]

    def add_row(dst, src, f):
        m[dst] = [x - f * y for x, y in zip(m[dst], m[src])]
        p[dst] = [x - f * y for x, y in zip(p[dst], p[src])]

    def add_col(dst, src, f):
        for row in m:
            row[dst] -= f * row[src]
        for row in q:
            row[dst] -= f * row[src]

    t = 0
    while t < min(nr, nc):
        cells = [(abs(m[i][j]), i, j) for i in range(t, nr) for j in range(t, nc) if m[i][j]]
        if not cells:
            break
        _, i, j = min(cells)
        swap_rows(t, i)
        swap_cols(t, j)
        while True:
            changed = False
            for i in range(t + 1, nr):
                if m[i][t]:
                    add_row(i, t, m[i][t] // m[t][t])
                    if m[i][t]:
                        swap_rows(t, i)
                        changed = True
            for j in range(t + 1, nc):
                if m[t][j]:
                    add_col(j, t, m[t][j] // m[t][t])
                    if m[t][j]:
                        swap_cols(t, j)
                        changed = True
            if changed:
                continue
            # divisibility of the remaining block
            bad = next(((i, j) for i in range(t + 1, nr) for j in range(t + 1, nc)
                        if m[i][j] % m[t][t]), None)
            if bad is None:
                break
            add_row(t, bad[0], -1)
        if m[t][t] < 0:
            m[t] = [-x for x in m[t]]
            p[t] = [-x for x in p[t]]
        t += 1
    return m, p, q


def smith_invariants(a: Sequence[Sequence[int]]) -> list[int]:
    d, _, _ = smith_normal_form(a)
    return [d[i][i] for i in range(min(len(d), len(d[0]) if d else 0))]


def right_inverse(u: Sequence[Sequence[int]]) -> Matrix:
    """Integer R with u R = I for a surjective u : Z^n -> Z^k.

    Raises ValueError when u is not surjective over Z.
    """
    k = len(u)
    if k == 0:
        return []
    d, p, q = smith_normal_form(u)
    if any(d[i][i] != 1 for i in range(k)):
        raise ValueError("matrix is not surjective onto Z^k")
    # p u q = [I 0]  =>  u (q[:, :k] p) = I
    qk = [row[:k] for row in q]
    return matmul(qk, p)


def solve_integer(a: Sequence[Sequence[int]], b: Sequence[int]) -> list[int] | None:
    """One integer solution of a x = b for square nonsingular a, or None."""
    n = len(a)
    if n == 0:
        return []
    inv = inverse_rational(a)
    if inv is None:
        raise ValueError("singular matrix")
    x = [sum(Fraction(inv[i][j]) * b[j] for j in range(n)) for i in range(n)]
    if any(v.denominator != 1 for v in x):
        return None
    return [int(v) for v in x]
