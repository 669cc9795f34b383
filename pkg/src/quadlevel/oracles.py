"""Slow, obviously-correct reference computations used by the tests and the
acceptance suite to cross-check the fast paths."""

from __future__ import annotations

import itertools

import numpy as np

from . import _exact as ex
from .forms import IntegralQuadraticForm

__all__ = [
    "box_levelset",
    "box_window",
    "box_levelsets",
    "hilbert_symbol_search",
    "square_classes",
    "residue_levelset_naive",
]


def _box(d: int, bound: int) -> np.ndarray:
    axis = np.arange(-bound, bound + 1, dtype=np.int64)
    return np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)


def _primitive_rows(pts: np.ndarray) -> np.ndarray:
    if len(pts) == 0:
        return pts
    return pts[np.gcd.reduce(np.abs(pts), axis=1) == 1]


def box_levelset(q: IntegralQuadraticForm, level: int, bound: int) -> set[tuple[int, ...]]:
    """Primitive ``v`` with ``|v|_inf <= bound`` and ``Q(v) = level``."""
    pts = _box(q.dim, bound)
    vals = np.einsum("ij,jk,ik->i", pts, q.array(), pts)
    return set(map(tuple, _primitive_rows(pts[vals == level]).tolist()))


def box_window(q: IntegralQuadraticForm, level: int, height: int, bound: int) -> set[tuple[int, ...]]:
    """:func:`box_levelset` restricted to ``|v^t M e_d| <= height * Q(e_d)``."""
    pts = _box(q.dim, bound)
    m = q.array()
    vals = np.einsum("ij,jk,ik->i", pts, m, pts)
    ell = pts @ m[:, -1]
    keep = (vals == level) & (np.abs(ell) <= height * q.q_ed)
    return set(map(tuple, _primitive_rows(pts[keep]).tolist()))


def square_classes(p: int) -> list[int]:
    """Representatives ``1, u, p, u p`` of Q_p^x / squares for odd ``p``."""
    u = next(x for x in range(2, p) if pow(x, (p - 1) // 2, p) == p - 1)
    return [1, u, p, u * p]


def _val(x: int, p: int) -> int:
    if x == 0:
        return 10**9
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def hilbert_symbol_search(a: int, b: int, p: int, k: int = 5) -> int:
    """``+1`` iff ``a x^2 + b y^2 = z^2`` has a primitive solution mod ``p^k``
    that Hensel's lemma lifts to Z_p.

    Each chart fixes one coordinate to ``1``; the remaining pair is found
    through a table of values of one term. A solution lifts when the gradient
    has valuation ``e`` with ``2e + 1 <= k``.
    """
    if p == 2:
        raise ValueError("odd primes only")
    mod = p**k
    coef = [a % mod, b % mod, (-1) % mod]
    for fixed in range(3):
        free = [i for i in range(3) if i != fixed]
        i, j = free
        # table: value of coef_j * y^2 -> y with least gradient valuation
        table: dict[int, int] = {}
        for y in range(mod):
            key = coef[j] * y * y % mod
            prev = table.get(key)
            if prev is None or _val(2 * coef[j] * y, p) < _val(2 * coef[j] * prev, p):
                table[key] = y
        for x in range(mod):
            need = -(coef[fixed] + coef[i] * x * x) % mod
            y = table.get(need)
            if y is None:
                continue
            sol = [0, 0, 0]
            sol[fixed], sol[i], sol[j] = 1, x, y
            e = min(_val(2 * c * s, p) for c, s in zip((a, b, -1), sol))
            if 2 * e + 1 <= k:
                return 1
    return -1


def residue_levelset_naive(q: IntegralQuadraticForm, modulus: int, a: int) -> list[tuple[int, ...]]:
    m = q.matrix
    out = []
    for x in itertools.product(range(modulus), repeat=q.dim):
        if ex.dot(x, ex.matvec(m, x)) % modulus == a % modulus:
            out.append(x)
    return out


def box_levelsets(q: IntegralQuadraticForm, levels, bound: int) -> dict[int, set[tuple[int, ...]]]:
    """:func:`box_levelset` for many levels sharing one box."""
    pts = _box(q.dim, bound)
    vals = np.einsum("ij,jk,ik->i", pts, q.array(), pts)
    prim = np.gcd.reduce(np.abs(pts), axis=1) == 1
    return {n: set(map(tuple, pts[(vals == n) & prim].tolist())) for n in levels}
