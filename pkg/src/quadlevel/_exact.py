"""Exact integer and rational linear algebra on small dense matrices.

Matrices are lists of rows holding ``int`` or ``Fraction`` entries. Nothing
here is fast; everything here is exact.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Sequence

Matrix = list[list]
Vector = list


def to_int_matrix(rows) -> list[list[int]]:
    return [[int(x) for x in row] for row in rows]


def identity(n: int) -> list[list[int]]:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def transpose(a: Matrix) -> Matrix:
    return [list(col) for col in zip(*a)]


def matmul(a: Matrix, b: Matrix) -> Matrix:
    bt = transpose(b)
    return [[sum(x * y for x, y in zip(row, col)) for col in bt] for row in a]


def matvec(a: Matrix, v: Sequence) -> Vector:
    return [sum(x * y for x, y in zip(row, v)) for row in a]


def dot(u: Sequence, v: Sequence):
    return sum(x * y for x, y in zip(u, v))


def columns(a: Matrix, idx) -> Matrix:
    return [[row[j] for j in idx] for row in a]


def det(a: Matrix):
    """Determinant by fraction-free Bareiss elimination.

    Integer input gives an integer result; Fraction input is handled by the
    same recurrence since every division is exact in the field.
    """
    n = len(a)
    if n == 0:
        return 1
    m = [list(row) for row in a]
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
        pivot = m[k][k]
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                num = m[i][j] * pivot - m[i][k] * m[k][j]
                if isinstance(num, int) and isinstance(prev, int):
                    m[i][j] = num // prev
                else:
                    m[i][j] = num / prev
            m[i][k] = 0
        prev = pivot
    return sign * m[n - 1][n - 1]


def minor(a: Matrix, i: int, j: int) -> Matrix:
    return [row[:j] + row[j + 1:] for r, row in enumerate(a) if r != i]


def adjugate(a: Matrix) -> Matrix:
    n = len(a)
    if n == 1:
        return [[1]]
    return [[(-1) ** (i + j) * det(minor(a, j, i)) for j in range(n)] for i in range(n)]


def inverse(a: Matrix) -> list[list[Fraction]]:
    """Exact inverse by Gauss-Jordan over the rationals."""
    n = len(a)
    m = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
         for i, row in enumerate(a)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        m[col], m[piv] = m[piv], m[col]
        p = m[col][col]
        m[col] = [x / p for x in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [row[n:] for row in m]


def solve(a: Matrix, b: Sequence) -> list[Fraction]:
    inv = inverse(a)
    return matvec(inv, [Fraction(x) for x in b])


def leading_minors(a: Matrix) -> list:
    return [det([row[:k] for row in a[:k]]) for k in range(1, len(a) + 1)]


def congruence_diagonalize(gram: Matrix) -> tuple[list[Fraction], list[list[Fraction]]]:
    """Rational congruence diagonalization of a symmetric matrix.

    Returns ``(diag, P)`` with ``P^t gram P = diag(diag)`` and ``P`` invertible.
    Zero entries of ``diag`` correspond to the radical.
    """
    n = len(gram)
    a = [[Fraction(x) for x in row] for row in gram]
    p = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]

    def add_col(dst: int, src: int, f: Fraction) -> None:
        # column op on P and the congruent row+column op on a
        for row in p:
            row[dst] += f * row[src]
        for row in a:
            row[dst] += f * row[src]
        a[dst] = [x + f * y for x, y in zip(a[dst], a[src])]

    def swap(i: int, j: int) -> None:
        for row in p:
            row[i], row[j] = row[j], row[i]
        for row in a:
            row[i], row[j] = row[j], row[i]
        a[i], a[j] = a[j], a[i]

    for k in range(n):
        if a[k][k] == 0:
            piv = next((i for i in range(k + 1, n) if a[i][i] != 0), None)
            if piv is not None:
                swap(k, piv)
            else:
                off = next((i for i in range(k + 1, n) if a[k][i] != 0), None)
                if off is None:
                    continue
                add_col(k, off, Fraction(1))
        pk = a[k][k]
        for i in range(k + 1, n):
            if a[k][i] != 0:
                add_col(i, k, -a[k][i] / pk)
    return [a[i][i] for i in range(n)], p


def xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Return ``(g, x, y)`` with ``a*x + b*y = g = gcd(a, b) >= 0``."""
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, r = divmod(a, b)
        a, b = b, r
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        return -a, -x0, -y0
    return a, x0, y0


def vector_gcd(v: Sequence[int]) -> int:
    g = 0
    for x in v:
        g = gcd(g, int(x))
    return g


def column_reduce_row(row: Sequence[int]) -> tuple[int, list[list[int]]]:
    """Unimodular column reduction of a single integer row.

    Returns ``(g, U)`` with ``U`` in GL_n(Z) and ``row @ U = (0, ..., 0, g)``,
    ``g = gcd(row) >= 0``. The first ``n-1`` columns of ``U`` are then a Z-basis
    of the integer kernel of the row.
    """
    r = [int(x) for x in row]
    n = len(r)
    u = identity(n)

    def col_sub(j: int, i: int, q: int) -> None:
        r[j] -= q * r[i]
        for urow in u:
            urow[j] -= q * urow[i]

    def col_swap(i: int, j: int) -> None:
        r[i], r[j] = r[j], r[i]
        for urow in u:
            urow[i], urow[j] = urow[j], urow[i]

    while True:
        nz = [i for i in range(n) if r[i] != 0]
        if len(nz) <= 1:
            break
        piv = min(nz, key=lambda i: (abs(r[i]), i))
        for j in nz:
            if j != piv:
                col_sub(j, piv, r[j] // r[piv])
    nz = [i for i in range(n) if r[i] != 0]
    if nz and nz[0] != n - 1:
        col_swap(nz[0], n - 1)
    if r[n - 1] < 0:
        r[n - 1] = -r[n - 1]
        for urow in u:
            urow[n - 1] = -urow[n - 1]
    return r[n - 1], u


def integer_kernel(rows: Matrix) -> list[list[int]]:
    """Z-basis of the integer kernel of an integer matrix, as columns of a
    ``n x k`` matrix (returned as a list of rows)."""
    n = len(rows[0])
    basis = identity(n)  # columns span the current kernel
    for row in rows:
        image = [dot(row, col) for col in transpose(basis)]
        if all(x == 0 for x in image):
            continue
        g, u = column_reduce_row(image)
        basis = matmul(basis, columns(u, range(len(image) - 1)))
    return basis


def clear_denominators(v: Sequence) -> list[int]:
    """Smallest primitive integer vector on the ray through a rational vector."""
    den = 1
    for x in v:
        den = den * Fraction(x).denominator // gcd(den, Fraction(x).denominator)
    ints = [int(Fraction(x) * den) for x in v]
    g = vector_gcd(ints)
    return [x // g for x in ints] if g else ints


def mat_mod(a: Matrix, q: int) -> list[list[int]]:
    return [[int(x) % q for x in row] for row in a]


def inverse_mod(a: Matrix, q: int) -> list[list[int]]:
    """Inverse of an integer matrix modulo ``q`` (``det`` must be a unit)."""
    d = det(to_int_matrix(a))
    dinv = pow(d % q, -1, q)
    adj = adjugate(to_int_matrix(a))
    return [[(x * dinv) % q for x in row] for row in adj]


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def factorize(n: int) -> dict[int, int]:
    """Trial-division factorization of a nonzero integer's absolute value."""
    n = abs(int(n))
    out: dict[int, int] = {}
    f = 2
    while f * f <= n:
        while n % f == 0:
            out[f] = out.get(f, 0) + 1
            n //= f
        f += 1 if f == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def crt_pair(r1: int, m1: int, r2: int, m2: int) -> int:
    """Combine ``x = r1 mod m1`` and ``x = r2 mod m2`` for coprime moduli."""
    t = ((r2 - r1) * pow(m1, -1, m2)) % m2
    return (r1 + m1 * t) % (m1 * m2)
