"""Local arithmetic of quadratic forms.

Hilbert symbols, isotropy over Q_p and R, co-isotropy certificates with
Hensel-checked witnesses, generalized reflections modulo q, transitivity
witnesses on unit level sets mod q, the orthogonal lifting step mod p^{2k},
and brute-force residue level-set tables.

p-adic numbers never appear as a type: everything is a congruence computation
with an explicit precision.
"""

from __future__ import annotations

import itertools
import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import _exact as ex
from .forms import IntegralQuadraticForm, RationalForm, evaluate, nonsingular_mod

__all__ = [
    "INF",
    "LocalCertificate",
    "ResidueTable",
    "BudgetExceeded",
    "hilbert_symbol",
    "is_isotropic_local",
    "coisotropic",
    "reflection_mod",
    "transitivity_witness",
    "lift_orthogonal_step",
    "random_orthogonal_mod",
    "enumerate_residue_levelset",
    "valuation",
    "is_square_local",
]

INF = "inf"


class BudgetExceeded(RuntimeError):
    """Raised when an exhaustive computation would exceed its configured size."""


def _place(p):
    if p == INF or p == math.inf or (isinstance(p, str) and p.lower() in ("inf", "oo", "infinity")):
        return INF
    p = int(p)
    if not ex.is_prime(p):
        raise ValueError(f"place must be a prime or infinity, got {p}")
    return p


def valuation(n: int, p: int) -> int:
    n = int(n)
    if n == 0:
        raise ValueError("valuation of zero")
    k = 0
    while n % p == 0:
        n //= p
        k += 1
    return k


def _square_class_int(x) -> int:
    # a/b and a*b differ by the square b^2
    f = Fraction(x)
    if f == 0:
        raise ValueError("zero has no square class")
    return f.numerator * f.denominator


def _split(n: int, p: int) -> tuple[int, int]:
    k = valuation(n, p)
    return k, n // p**k


def _legendre(u: int, p: int) -> int:
    r = pow(u % p, (p - 1) // 2, p)
    return -1 if r == p - 1 else r


def hilbert_symbol(a, b, place) -> int:
    """Hilbert symbol ``(a, b)`` at a prime ``p`` or at ``"inf"``."""
    pl = _place(place)
    a, b = _square_class_int(a), _square_class_int(b)
    if pl == INF:
        return -1 if (a < 0 and b < 0) else 1
    p = pl
    alpha, u = _split(a, p)
    beta, v = _split(b, p)
    if p != 2:
        s = (-1) ** (alpha * beta * ((p - 1) // 2))
        return s * _legendre(u, p) ** beta * _legendre(v, p) ** alpha

    def eps(x):
        return ((x - 1) // 2) % 2

    def omega(x):
        return ((x * x - 1) // 8) % 2

    e = eps(u) * eps(v) + alpha * omega(v) + beta * omega(u)
    return -1 if e % 2 else 1


def is_square_local(x, place) -> bool:
    """Whether the nonzero rational ``x`` is a square in Q_p (or R)."""
    pl = _place(place)
    n = _square_class_int(x)
    if pl == INF:
        return n > 0
    k, u = _split(n, pl)
    if k % 2:
        return False
    if pl == 2:
        return u % 8 == 1
    return _legendre(u, pl) == 1


def _diagonal(f) -> list[Fraction]:
    m = f.matrix if hasattr(f, "matrix") else [list(r) for r in f]
    diag, _ = ex.congruence_diagonalize(m)
    if any(x == 0 for x in diag):
        raise ValueError("form is degenerate")
    return diag


def is_isotropic_local(f, place) -> bool:
    """Whether the nondegenerate rational form ``f`` has a nontrivial zero over
    Q_p or R, decided from a rational diagonalization."""
    pl = _place(place)
    a = _diagonal(f)
    n = len(a)
    if pl == INF:
        return any(x > 0 for x in a) and any(x < 0 for x in a)
    if n <= 1:
        return False
    if n >= 5:
        return True
    d = Fraction(1)
    for x in a:
        d *= x
    eps = 1
    for i in range(n):
        for j in range(i + 1, n):
            eps *= hilbert_symbol(a[i], a[j], pl)
    if n == 2:
        return is_square_local(-d, pl)
    if n == 3:
        return hilbert_symbol(-1, -d, pl) == eps
    return (not is_square_local(d, pl)) or eps == hilbert_symbol(-1, -1, pl)


@dataclass(frozen=True)
class LocalCertificate:
    """Outcome of a local co-isotropy test at an odd prime.

    For ``kind == "isotropy"`` the witness ``u`` is a primitive integer vector
    in the Q-orthogonal complement of ``v`` with ``Q(u) = 0 mod p^k`` and
    ``k >= 2e + 1``, ``e`` being the p-adic valuation of the gradient of the
    restricted form at ``u``; Hensel's lemma then yields an exact zero.
    """

    p: int
    kind: str
    witness: tuple[int, ...] | None
    precision: int
    gradient_valuation: int = 0


def _padic_jordan(gram: list[list[int]], p: int):
    """Diagonalize an integral symmetric matrix over Z_(p), p odd.

    Returns ``(diag, P)`` with ``P`` rational, p-integral and invertible mod p,
    and ``P^t gram P = diag(diag)``.
    """
    n = len(gram)
    a = [[Fraction(x) for x in row] for row in gram]
    pm = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]

    def v(x: Fraction) -> int:
        return valuation(x.numerator, p) - valuation(x.denominator, p)

    def add_col(dst, src, c):
        for row in pm:
            row[dst] += c * row[src]
        for row in a:
            row[dst] += c * row[src]
        a[dst] = [x + c * y for x, y in zip(a[dst], a[src])]

    def swap(i, j):
        for row in pm:
            row[i], row[j] = row[j], row[i]
        for row in a:
            row[i], row[j] = row[j], row[i]
        a[i], a[j] = a[j], a[i]

    for k in range(n):
        entries = [(v(a[i][j]), i != j, i, j) for i in range(k, n) for j in range(i, n)
                   if a[i][j] != 0]
        if not entries:
            raise ValueError("degenerate form")
        _, off, i, j = min(entries)
        if off:
            # 2*a_ij dominates a_ii + a_jj in valuation since p is odd
            add_col(i, j, Fraction(1))
        swap(k, i)
        pk = a[k][k]
        for r in range(k + 1, n):
            if a[k][r] != 0:
                add_col(r, k, -a[k][r] / pk)
    return [a[i][i] for i in range(n)], pm


def _residue_zero(units: list[int], p: int) -> list[int] | None:
    """First nonzero solution in lexicographic order of ``sum u_i y_i^2 = 0``
    over F_p."""
    n = len(units)
    if n == 0:
        return None
    sq = [(y * y) % p for y in range(p)]
    for y in itertools.product(range(p), repeat=n):
        if any(y) and sum(u * sq[t] for u, t in zip(units, y)) % p == 0:
            return list(y)
    return None


def _hensel_diagonal(units: list[int], y: list[int], p: int, prec: int) -> list[int]:
    """Lift a smooth zero of ``sum u_i y_i^2`` mod p to a zero mod p^prec."""
    i = next(t for t, x in enumerate(y) if x % p)
    y = list(y)
    mod = p**prec
    for _ in range(prec + 1):
        val = sum(u * x * x for u, x in zip(units, y))
        if val % mod == 0:
            return y
        deriv = (2 * units[i] * y[i]) % mod
        y[i] = (y[i] - val * pow(deriv, -1, mod)) % mod
    raise AssertionError("Hensel iteration failed to converge")


def _unit_rep(u: Fraction, mod: int) -> int:
    return (u.numerator * pow(u.denominator, -1, mod)) % mod


def _check_zero(gram, c, p, k):
    val = ex.dot(c, ex.matvec(gram, c))
    grad = [2 * t for t in ex.matvec(gram, c)]
    e = min(valuation(t, p) for t in grad if t != 0)
    need = max(k, 2 * e + 1)
    if val == 0 or valuation(val, p) >= need:
        return c, need, e
    return None


def _isotropic_vector_padic(gram: list[list[int]], p: int, k: int):
    """Primitive integer ``c`` with ``c^t gram c = 0 mod p^k`` and the
    gradient valuation ``e`` satisfying ``k >= 2e+1``, or None if the form is
    anisotropic over Q_p."""
    diag, pm = _padic_jordan(gram, p)
    n = len(diag)
    exps, units = [], []
    for x in diag:
        e = valuation(x.numerator, p) - valuation(x.denominator, p)
        u = x / Fraction(p) ** e
        exps.append(e)
        units.append(u)
    # x_i = p^{-floor(e_i/2)} y_i turns the form into f0 + p*f1 with unit f0, f1
    even = [i for i in range(n) if exps[i] % 2 == 0]
    odd = [i for i in range(n) if exps[i] % 2 == 1]
    half_max = max(e // 2 for e in exps)
    for block in (even, odd):
        ubl = [_unit_rep(units[i], p) for i in block]
        y0 = _residue_zero(ubl, p)
        if y0 is None:
            continue
        prec = k + 2 * half_max + 2 * max(exps) + 4
        while True:
            y = _hensel_diagonal([_unit_rep(units[i], p**prec) for i in block], y0, p, prec)
            xs = [Fraction(0)] * n
            for i, yi in zip(block, y):
                xs[i] = Fraction(yi) * Fraction(p) ** (half_max - exps[i] // 2)
            c = ex.clear_denominators(ex.matvec(pm, xs))
            found = _check_zero(gram, c, p, k)
            if found is not None:
                # a small symmetric representative is an equally good witness
                red = p ** found[1]
                small = [((x + red // 2) % red) - red // 2 for x in c]
                if any(small) and ex.vector_gcd(small) % p:
                    g = ex.vector_gcd(small)
                    alt = _check_zero(gram, [x // g for x in small], p, k)
                    if alt is not None and alt[2] == found[2]:
                        return alt
                return found
            prec += 4
    return None


def coisotropic(q: IntegralQuadraticForm, v: Sequence[int], p: int, k: int = 5):
    """Decide whether ``Q`` restricted to the Q-orthogonal complement of ``v``
    is isotropic over Q_p; return ``(flag, LocalCertificate)``."""
    p = int(p)
    if p == 2 or not ex.is_prime(p):
        raise ValueError("p must be an odd prime")
    v = [int(x) for x in v]
    if evaluate(q, v) == 0:
        raise ValueError("Q(v) must be nonzero")
    mv = ex.matvec(q.gram, v)
    basis = ex.integer_kernel([mv])
    restricted = ex.matmul(ex.transpose(basis), ex.matmul(q.matrix, basis))
    flag = is_isotropic_local(RationalForm(tuple(tuple(r) for r in restricted)), p)
    found = _isotropic_vector_padic(restricted, p, k)
    if flag != (found is not None):
        raise AssertionError("isotropy criterion and witness search disagree")
    if not flag:
        return False, LocalCertificate(p, "anisotropy", None, k)
    c, prec, e = found
    u = ex.matvec(basis, c)
    g = ex.vector_gcd(u)
    u = [x // g for x in u]
    if g % p == 0:
        raise AssertionError("witness lost primitivity")
    cert = LocalCertificate(p, "isotropy", tuple(u), prec, e)
    if not verify_certificate(q, v, cert):
        raise AssertionError("co-isotropy witness failed verification")
    return True, cert


def verify_certificate(q: IntegralQuadraticForm, v: Sequence[int], cert: LocalCertificate) -> bool:
    """Independent check of an isotropy certificate."""
    if cert.kind != "isotropy" or cert.witness is None:
        return False
    u = list(cert.witness)
    p = cert.p
    mod = p**cert.precision
    if ex.vector_gcd(u) != 1 or all(x % p == 0 for x in u):
        return False
    if ex.dot(u, ex.matvec(q.gram, [int(x) for x in v])) != 0:
        return False
    if evaluate(q, u) % mod:
        return False
    # Hensel: gradient of Q on v^perp at u is the projection of 2Mu; its
    # valuation is at least that of 2Mu in a primitive basis
    mv = ex.matvec(q.gram, [int(x) for x in v])
    basis = ex.integer_kernel([mv])
    grad = [2 * t for t in ex.matvec(ex.transpose(basis), ex.matvec(q.gram, u))]
    nz = [t for t in grad if t]
    if not nz:
        return False
    e = min(valuation(t, p) for t in nz)
    return cert.precision >= 2 * e + 1


def _unit_mod(x: int, q: int) -> bool:
    return math.gcd(int(x), q) == 1


def reflection_mod(q: IntegralQuadraticForm, v: Sequence[int], modulus: int) -> list[list[int]]:
    """Matrix of ``x -> x - (2 Q(x,v)/Q(v)) v`` over Z/modulus."""
    if modulus < 3 or modulus % 2 == 0:
        raise ValueError("modulus must be odd and at least 3")
    v = [int(x) % modulus for x in v]
    qv = evaluate(q, v) % modulus
    if not _unit_mod(qv, modulus):
        raise ValueError("Q(v) is not a unit modulo the modulus")
    c = (2 * pow(qv, -1, modulus)) % modulus
    mv = ex.matvec(q.gram, v)
    d = q.dim
    return [[(int(i == j) - c * v[i] * mv[j]) % modulus for j in range(d)] for i in range(d)]


def _matmul_mod(a, b, m):
    return ex.mat_mod(ex.matmul(a, b), m)


def _witness_prime_power(q, p, k, v1, v2):
    mod = p**k
    diff = [(a - b) % mod for a, b in zip(v1, v2)]
    if _unit_mod(evaluate(q, diff), p):
        l = [x % mod for x in ex.matvec(q.gram, v1)]
        qv = [[x % p for x in row] for row in q.gram]
        u = None
        for cand in itertools.product(range(p), repeat=q.dim):
            if sum(a * b for a, b in zip(cand, l)) % p:
                continue
            if ex.dot(cand, ex.matvec(qv, cand)) % p:
                u = list(cand)
                break
        if u is None:
            raise AssertionError("no anisotropic vector orthogonal to v1 mod p")
        # the constraint Q(u, v1) = 0 is linear; correct along a unit coordinate
        i = next(t for t, x in enumerate(l) if x % p)
        u[i] = (u[i] - ex.dot(u, l) * pow(l[i], -1, mod)) % mod
        return _matmul_mod(reflection_mod(q, diff, mod), reflection_mod(q, u, mod), mod)
    plus = [(a + b) % mod for a, b in zip(v1, v2)]
    return _matmul_mod(reflection_mod(q, v2, mod), reflection_mod(q, plus, mod), mod)


def transitivity_witness(q: IntegralQuadraticForm, modulus: int, v1: Sequence[int],
                         v2: Sequence[int]) -> list[list[int]]:
    """An element of SO_Q(Z/modulus) carrying ``v1`` to ``v2``.

    Both vectors must have the same unit value of ``Q`` modulo the odd
    ``modulus``; the result is checked before being returned.
    """
    if modulus < 3 or modulus % 2 == 0:
        raise ValueError("modulus must be odd and at least 3")
    if not nonsingular_mod(q, modulus):
        raise ValueError("form is singular modulo the modulus")
    v1 = [int(x) % modulus for x in v1]
    v2 = [int(x) % modulus for x in v2]
    a1, a2 = evaluate(q, v1) % modulus, evaluate(q, v2) % modulus
    if a1 != a2:
        raise ValueError("v1 and v2 lie on different level sets")
    if not _unit_mod(a1, modulus):
        raise ValueError("level is not a unit modulo the modulus")
    d = q.dim
    gamma = [[0] * d for _ in range(d)]
    acc = 1
    for p, k in sorted(ex.factorize(modulus).items()):
        mod = p**k
        part = _witness_prime_power(q, p, k, v1, v2)
        gamma = [[ex.crt_pair(gamma[i][j], acc, part[i][j], mod) for j in range(d)]
                 for i in range(d)]
        acc *= mod
    if not check_witness(q, modulus, gamma, v1, v2):
        raise AssertionError("transitivity witness failed verification")
    return gamma


def check_witness(q, modulus, gamma, v1, v2) -> bool:
    m = q.matrix
    lhs = _matmul_mod(ex.transpose(gamma), ex.matmul(m, gamma), modulus)
    if lhs != ex.mat_mod(m, modulus):
        return False
    if ex.det(gamma) % modulus != 1 % modulus:
        return False
    return [x % modulus for x in ex.matvec(gamma, v1)] == [x % modulus for x in v2]


def lift_orthogonal_step(q: IntegralQuadraticForm, p: int, k: int, f) -> list[list[int]]:
    """From ``F^t M F = M mod p^k`` produce ``F' = F + S`` with
    ``F'^t M F' = M mod p^{2k}`` and ``S = 0 mod p^k``."""
    if p == 2 or not ex.is_prime(p):
        raise ValueError("p must be an odd prime")
    if q.disc % p == 0:
        raise ValueError("form is singular modulo p")
    f = [[int(x) for x in row] for row in f]
    m = q.matrix
    if ex.det(f) % p == 0:
        raise ValueError("F is singular modulo p")
    mk = p**k
    if ex.mat_mod(ex.matmul(ex.transpose(f), ex.matmul(m, f)), mk) != ex.mat_mod(m, mk):
        raise ValueError("F is not orthogonal modulo p^k")
    mod = p ** (2 * k)
    minv = ex.inverse_mod(m, mod)
    ftinv = ex.inverse_mod(ex.transpose(f), mod)
    half = pow(2, -1, mod)
    core = _matmul_mod(minv, _matmul_mod(ftinv, m, mod), mod)
    s = [[(half * (c - x)) % mod for c, x in zip(crow, frow)] for crow, frow in zip(core, f)]
    if any(x % mk for row in s for x in row):
        raise AssertionError("lifting correction is not divisible by p^k")
    return [[x + y for x, y in zip(frow, srow)] for frow, srow in zip(f, s)]


def random_orthogonal_mod(q: IntegralQuadraticForm, modulus: int, rng: random.Random,
                          factors: int = 4) -> list[list[int]]:
    """Product of random generalized reflections modulo ``modulus``."""
    d = q.dim
    g = ex.identity(d)
    count = 0
    while count < factors:
        v = [rng.randrange(modulus) for _ in range(d)]
        if not _unit_mod(evaluate(q, v), modulus):
            continue
        g = _matmul_mod(g, reflection_mod(q, v, modulus), modulus)
        count += 1
    return g


@dataclass
class ResidueTable:
    """Solutions of ``Q(x) = a`` in (Z/q)^d with optional observed counts."""

    q: int
    a: int
    elements: tuple[tuple[int, ...], ...]
    counts: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.elements)

    def index(self) -> dict[tuple[int, ...], int]:
        return {e: i for i, e in enumerate(self.elements)}

    def with_counts(self, residues: Iterable[Sequence[int]]) -> "ResidueTable":
        idx = self.index()
        counts: dict[tuple[int, ...], int] = {}
        for r in residues:
            key = tuple(int(x) % self.q for x in r)
            if key not in idx:
                raise ValueError(f"residue {key} is not on the level set mod {self.q}")
            counts[key] = counts.get(key, 0) + 1
        return ResidueTable(self.q, self.a, self.elements, counts)

    def to_json(self, include_elements: bool = False, manifest: str | None = None) -> str:
        doc = {
            "q": self.q,
            "a": self.a,
            "count": self.size,
            "histogram": {",".join(map(str, e)): self.counts.get(e, 0) for e in self.elements},
        }
        if include_elements:
            doc["elements"] = [",".join(map(str, e)) for e in self.elements]
        if manifest is not None:
            doc["manifest"] = manifest
        return json.dumps(doc, indent=1)


def enumerate_residue_levelset(q: IntegralQuadraticForm, modulus: int, a: int,
                               budget: int = 10**7) -> ResidueTable:
    """All ``x`` in (Z/modulus)^d with ``Q(x) = a``, in lexicographic order."""
    if modulus < 3 or modulus % 2 == 0:
        raise ValueError("modulus must be odd and at least 3")
    d = q.dim
    if modulus**d > budget:
        raise BudgetExceeded(f"{modulus}^{d} exceeds the residue budget {budget}")
    a %= modulus
    m = q.array() % modulus
    rest = np.array(list(itertools.product(range(modulus), repeat=d - 1)), dtype=np.int64)
    out = []
    for x0 in range(modulus):
        pts = np.empty((len(rest), d), dtype=np.int64)
        pts[:, 0] = x0
        pts[:, 1:] = rest
        vals = np.einsum("ij,jk,ik->i", pts, m, pts) % modulus
        out.extend(map(tuple, pts[vals == a].tolist()))
    return ResidueTable(modulus, a, tuple(out))
