"""Orthogonal lattices of primitive vectors, their shapes and grids.

For primitive ``v`` in Z^d the lattice ``L_v = v^perp ∩ Z^d`` has rank d-1 and
covolume ``|v|``. Its shape is recorded as a canonical Minkowski-reduced Gram
matrix, which determines the lattice up to isometry (mirror images included).
The grid is the coset of ``L_v`` traced by the orthogonal projection of any
``w`` with ``<v, w> = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Sequence

import numpy as np

from . import _exact as ex

__all__ = [
    "OrthoLatticeBasis",
    "ShapeDescriptor",
    "GridDescriptor",
    "ortho_lattice",
    "positive_completion",
    "complete_to_sl",
    "lll_gram",
    "short_vectors",
    "successive_minima",
    "canonical_gram",
    "shape_descriptor",
    "shape_features",
    "grid_descriptor",
    "feature_names",
    "minima_batch",
]

DELTA = Fraction(99, 100)


def _primitive(v: Sequence[int]) -> list[int]:
    v = [int(x) for x in v]
    if ex.vector_gcd(v) != 1:
        raise ValueError(f"vector {v} is not primitive")
    return v


@dataclass(frozen=True)
class OrthoLatticeBasis:
    v: tuple[int, ...]
    basis: tuple[tuple[int, ...], ...]  # d x (d-1), columns span L_v
    gram: tuple[tuple[int, ...], ...]
    covol_sq: int

    @property
    def rank(self) -> int:
        return len(self.gram)

    def columns(self) -> list[list[int]]:
        return ex.transpose([list(r) for r in self.basis])


def ortho_lattice(v: Sequence[int]) -> OrthoLatticeBasis:
    """Integer basis of ``v^perp ∩ Z^d`` by unimodular column reduction."""
    v = _primitive(v)
    g, u = ex.column_reduce_row(v)
    basis = ex.columns(u, range(len(v) - 1))
    gram = ex.matmul(ex.transpose(basis), basis)
    covol_sq = ex.det(gram)
    if covol_sq != ex.dot(v, v):
        raise AssertionError("covolume identity failed")
    return OrthoLatticeBasis(
        tuple(v),
        tuple(tuple(r) for r in basis),
        tuple(tuple(r) for r in gram),
        int(covol_sq),
    )


def positive_completion(v: Sequence[int]) -> list[int]:
    """``w`` with ``<v, w> = 1`` from iterated extended gcd."""
    v = _primitive(v)
    d = len(v)
    g = v[0]
    w = [1] + [0] * (d - 1)
    for i in range(1, d):
        g, x, y = ex.xgcd(g, v[i])
        w = [x * t for t in w]
        w[i] += y
    if g < 0:
        w = [-t for t in w]
    if ex.dot(v, w) != 1:
        raise AssertionError("extended gcd completion failed")
    return w


def complete_to_sl(v: Sequence[int]) -> list[list[int]]:
    """``g`` in SL_d(Z) whose last column pairs to 1 with ``v`` and whose other
    columns span ``v^perp``, so that ``(g^t)^{-1} e_d = v``."""
    lat = ortho_lattice(v)
    w = positive_completion(v)
    g = [list(row) + [wi] for row, wi in zip(lat.basis, w)]
    det = ex.det(g)
    if det == -1:
        for row in g:
            row[0] = -row[0]
    elif det != 1:
        raise AssertionError("completion is not unimodular")
    return g


# ---------------------------------------------------------------------------
# reduction


def lll_gram(gram: Sequence[Sequence[int]], delta: Fraction = DELTA) -> list[list[int]]:
    """Integral LLL on a positive definite Gram matrix.

    Returns the unimodular ``H`` (columns are coefficient vectors of the
    reduced basis); the reduced Gram is ``H^t G H``. All arithmetic is exact.
    """
    g0 = [[int(x) for x in row] for row in gram]
    n = len(g0)
    p, q = delta.numerator, delta.denominator
    h = ex.identity(n)  # column j of h is b_j in the input basis
    lam = [[0] * n for _ in range(n)]
    dd = [0] * (n + 1)  # dd[i] is d_i of the 1-indexed algorithm; dd[0] = 1
    dd[0] = 1

    def inner(i: int, j: int) -> int:
        hi = [row[i] for row in h]
        hj = [row[j] for row in h]
        return ex.dot(hi, ex.matvec(g0, hj))

    def col_axpy(k: int, l: int, c: int) -> None:
        for row in h:
            row[k] -= c * row[l]

    def redi(k: int, l: int) -> None:
        if 2 * abs(lam[k][l]) <= dd[l + 1]:
            return
        c = (2 * lam[k][l] + dd[l + 1]) // (2 * dd[l + 1])
        col_axpy(k, l, c)
        lam[k][l] -= c * dd[l + 1]
        for i in range(l):
            lam[k][i] -= c * lam[l][i]

    def swapi(k: int, kmax: int) -> None:
        for row in h:
            row[k], row[k - 1] = row[k - 1], row[k]
        for j in range(k - 1):
            lam[k][j], lam[k - 1][j] = lam[k - 1][j], lam[k][j]
        lm = lam[k][k - 1]
        b = (dd[k - 1] * dd[k + 1] + lm * lm) // dd[k]
        for i in range(k + 1, kmax + 1):
            t = lam[i][k]
            lam[i][k] = (dd[k + 1] * lam[i][k - 1] - lm * t) // dd[k]
            lam[i][k - 1] = (b * t + lm * lam[i][k]) // dd[k + 1]
        dd[k] = b

    if n <= 1:
        return h
    dd[1] = g0[0][0]
    k, kmax = 1, 0
    while k < n:
        if k > kmax:
            kmax = k
            for j in range(k + 1):
                u = inner(k, j)
                for i in range(j):
                    u = (dd[i + 1] * u - lam[k][i] * lam[j][i]) // dd[i]
                if j < k:
                    lam[k][j] = u
                else:
                    if u == 0:
                        raise ValueError("Gram matrix is singular")
                    dd[k + 1] = u
        redi(k, k - 1)
        if q * dd[k + 1] * dd[k - 1] < p * dd[k] ** 2 - q * lam[k][k - 1] ** 2:
            swapi(k, kmax)
            k = max(1, k - 1)
        else:
            for l in range(k - 2, -1, -1):
                redi(k, l)
            k += 1
    return h


def _congruent(g, h):
    return ex.matmul(ex.transpose(h), ex.matmul(g, h))


def short_vectors(gram: Sequence[Sequence[int]], bound: int) -> list[tuple[int, tuple[int, ...]]]:
    """All nonzero ``x`` with ``x^t G x <= bound`` as ``(norm, x)`` pairs,
    sorted by norm then lexicographically.

    The search uses a binary64 Cholesky factor with generous padding; every
    candidate's norm is then computed exactly in integers.
    """
    g = np.array(gram, dtype=float)
    n = len(g)
    gi = [[int(x) for x in row] for row in gram]
    # Cohen's decomposition in floats
    qm = g.copy()
    for i in range(n):
        for j in range(i + 1, n):
            qm[j, i] = qm[i, j]
            qm[i, j] = qm[i, j] / qm[i, i]
        for k in range(i + 1, n):
            for l in range(k, n):
                qm[k, l] -= qm[k, i] * qm[i, l]
    pad = 1e-7 * (bound + 1)
    out = []
    x = [0] * n

    def rec(i: int, rem: float) -> None:
        centre = -sum(qm[i, j] * x[j] for j in range(i + 1, n))
        r = math.sqrt(max(rem + pad, 0.0) / qm[i, i])
        lo, hi = math.ceil(centre - r - 1e-9), math.floor(centre + r + 1e-9)
        for xi in range(lo, hi + 1):
            x[i] = xi
            t = xi - centre
            left = rem - qm[i, i] * t * t
            if i == 0:
                if any(x):
                    norm = ex.dot(x, ex.matvec(gi, x))
                    if norm <= bound:
                        out.append((norm, tuple(x)))
            elif left + pad >= 0:
                rec(i - 1, left)

    rec(n - 1, float(bound))
    out.sort()
    return out


def _adapted_basis(chosen: list[Sequence[int]], n: int) -> list[list[int]]:
    """Unimodular ``U`` whose first ``r`` columns span the saturation of the
    ``r`` independent integer vectors ``chosen``.

    Row-reduces the matrix with columns ``chosen`` to ``[T; 0]`` and keeps the
    inverse of the accumulated row operations.
    """
    c = [[int(vec[i]) for vec in chosen] for i in range(n)]
    w = ex.identity(n)
    for j in range(len(chosen)):
        while True:
            rows = [i for i in range(j, n) if c[i][j] != 0]
            if len(rows) <= 1:
                break
            piv = min(rows, key=lambda i: abs(c[i][j]))
            for i in rows:
                if i != piv:
                    qq = c[i][j] // c[piv][j]
                    c[i] = [a - qq * b for a, b in zip(c[i], c[piv])]
                    for row in w:
                        row[piv] += qq * row[i]
        rows = [i for i in range(j, n) if c[i][j] != 0]
        if not rows:
            raise ValueError("chosen vectors are dependent")
        if rows[0] != j:
            a = rows[0]
            c[a], c[j] = c[j], c[a]
            for row in w:
                row[a], row[j] = row[j], row[a]
    return w


def _reduce_adapted(g, u, r: int) -> list[list[int]]:
    """Improve an adapted basis without leaving it adapted: LLL inside the
    first ``r`` columns, LLL of the projection of the rest, then size
    reduction of the rest against the first block."""
    n = len(g)
    gu = _congruent(g, u)
    if r > 0:
        h = lll_gram([row[:r] for row in gu[:r]])
        big = [[h[i][j] if i < r and j < r else int(i == j) for j in range(n)] for i in range(n)]
        u = ex.matmul(u, big)
        gu = _congruent(g, u)
    if r < n:
        gss = [row[:r] for row in gu[:r]]
        gsc = [row[r:] for row in gu[:r]]
        gcc = [row[r:] for row in gu[r:]]
        if r > 0:
            adj = ex.adjugate(gss) if r > 1 else [[1]]
            det = ex.det(gss)
            proj = [[det * gcc[i][j] - ex.dot(ex.transpose(gsc)[i], ex.matvec(adj, ex.transpose(gsc)[j]))
                     for j in range(n - r)] for i in range(n - r)]
        else:
            proj = gcc
        h = lll_gram(proj)
        big = [[h[i - r][j - r] if i >= r and j >= r else int(i == j) for j in range(n)] for i in range(n)]
        u = ex.matmul(u, big)
        if r > 0:
            gu = _congruent(g, u)
            gss = [row[:r] for row in gu[:r]]
            inv = ex.inverse(gss)
            for j in range(r, n):
                coef = ex.matvec(inv, [gu[i][j] for i in range(r)])
                shift = [round(x) for x in coef]
                for row in u:
                    row[j] -= ex.dot(shift, row[:r])
    return u


def _search_outside(g, r: int, primitive_tail: bool) -> tuple[int, list[tuple[int, ...]]]:
    """Minimum of ``x^t G x`` over integer ``x`` whose coordinates ``r..n-1``
    are not all zero (and coprime, if ``primitive_tail``), with every
    minimizer.

    Depth-first search from the last coordinate with a bound that shrinks to
    the best exact norm found; the bound never drops below the true minimum,
    so all minimizers are visited.
    """
    n = len(g)
    gi = [[int(x) for x in row] for row in g]
    qm = np.array(gi, dtype=float)
    for i in range(n):
        for j in range(i + 1, n):
            qm[j, i] = qm[i, j]
            qm[i, j] = qm[i, j] / qm[i, i]
        for k in range(i + 1, n):
            for l in range(k, n):
                qm[k, l] -= qm[k, i] * qm[i, l]
    best = min(gi[j][j] for j in range(r, n))
    found: list[tuple[int, tuple[int, ...]]] = []
    x = [0] * n

    def tail_ok() -> bool:
        tail = x[r:]
        if primitive_tail:
            return ex.vector_gcd(tail) == 1
        return any(tail)

    def rec_b(i: int, used: float) -> None:
        nonlocal best
        if i == r - 1 and not any(x[r:]):
            return
        rem = float(best) - used
        pad = 1e-7 * (best + 1)
        centre = -sum(qm[i, j] * x[j] for j in range(i + 1, n))
        rad = math.sqrt(max(rem + pad, 0.0) / qm[i, i])
        for xi in range(math.ceil(centre - rad - 1e-9), math.floor(centre + rad + 1e-9) + 1):
            x[i] = xi
            t = xi - centre
            now = used + qm[i, i] * t * t
            if i == 0:
                if tail_ok():
                    norm = ex.dot(x, ex.matvec(gi, x))
                    if norm <= best:
                        best = norm
                        found.append((norm, tuple(x)))
            elif now <= float(best) + 1e-7 * (best + 1):
                rec_b(i - 1, now)
        x[i] = 0

    rec_b(n - 1, 0.0)
    minimizers = sorted(v for nm, v in found if nm == best)
    return best, minimizers


def successive_minima(gram: Sequence[Sequence[int]]) -> list[int]:
    """Squared successive minima of the lattice with Gram ``G``.

    Greedy: the i-th minimum is the least norm of a vector outside the span of
    the previously chosen ones, searched in a basis adapted to that span.
    """
    g = [[int(x) for x in row] for row in gram]
    n = len(g)
    chosen: list[list[int]] = []
    minima: list[int] = []
    u = lll_gram(g)
    for i in range(n):
        if chosen:
            u = _reduce_adapted(g, _adapted_basis(chosen, n), i)
        best, xs = _search_outside(_congruent(g, u), i, primitive_tail=False)
        chosen.append(ex.matvec(u, list(xs[0])))
        minima.append(best)
    return minima


def _extends_primitively(vectors: list[Sequence[int]]) -> bool:
    """Whether the coefficient vectors form part of a lattice basis, i.e. the
    gcd of their maximal minors is 1."""
    k = len(vectors)
    n = len(vectors[0])
    g = 0
    for cols in combinations(range(n), k):
        g = math.gcd(g, ex.det([[v[c] for c in cols] for v in vectors]))
        if g == 1:
            return True
    return False


def canonical_gram(gram: Sequence[Sequence[int]]) -> tuple[list[list[int]], list[list[int]]]:
    """Canonical greedy-Minkowski reduced Gram matrix and its transform.

    At every step the next basis vector is a shortest vector extending the
    chosen ones to part of a basis; among those, the new Gram row
    ``(<w,b_1>, ..., <w,b_{i-1}>)`` is taken lexicographically smallest. All
    tied partial bases are carried along, so the result depends only on the
    isometry class of the lattice.
    """
    g = [[int(x) for x in row] for row in gram]
    n = len(g)
    start = lll_gram(g)
    partial: list[list[list[int]]] = [[]]
    for step in range(n):
        best_key = None
        best: list[list[list[int]]] = []
        for pre in partial:
            u = start if not pre else _reduce_adapted(g, _adapted_basis(pre, n), step)
            norm, xs = _search_outside(_congruent(g, u), step, primitive_tail=True)
            if best_key is not None and norm > best_key[0]:
                continue
            for x in xs:
                w = ex.matvec(u, list(x))
                gw = ex.matvec(g, w)
                key = (norm,) + tuple(ex.dot(b, gw) for b in pre)
                if best_key is None or key < best_key:
                    best_key, best = key, [pre + [w]]
                elif key == best_key:
                    best.append(pre + [w])
        partial = best
    hmat = ex.transpose(partial[0])
    return _congruent(g, hmat), hmat


# ---------------------------------------------------------------------------
# descriptors


def feature_names(rank: int) -> list[str]:
    names = [f"lambda{i + 1}_over_lambda1" for i in range(1, rank)]
    names += [f"diag{i + 1}_norm" for i in range(rank)]
    names += [f"cos{i + 1}{j + 1}" for i in range(rank) for j in range(i + 1, rank)]
    return names


def shape_features(reduced_gram, minima, covol_sq: int) -> np.ndarray:
    n = len(reduced_gram)
    lam1 = math.sqrt(minima[0])
    ratios = [math.sqrt(m) / lam1 for m in minima[1:]]
    scale = float(covol_sq) ** (1.0 / n)
    diag = [reduced_gram[i][i] / scale for i in range(n)]
    cos = [
        reduced_gram[i][j] / math.sqrt(reduced_gram[i][i] * reduced_gram[j][j])
        for i in range(n) for j in range(i + 1, n)
    ]
    return np.array(ratios + diag + cos, dtype=float)


@dataclass(frozen=True)
class ShapeDescriptor:
    v: tuple[int, ...]
    reduced_gram: tuple[tuple[int, ...], ...]
    covol_sq: int
    minima: tuple[int, ...]
    features: np.ndarray

    @property
    def names(self) -> list[str]:
        return feature_names(len(self.reduced_gram))


def shape_descriptor(lat: OrthoLatticeBasis | Sequence[int]) -> ShapeDescriptor:
    """Canonical reduced Gram and invariant features of ``L_v``."""
    if not isinstance(lat, OrthoLatticeBasis):
        lat = ortho_lattice(lat)
    red, _ = canonical_gram(lat.gram)
    if ex.det(red) != lat.covol_sq:
        raise AssertionError("reduction changed the determinant")
    minima = successive_minima(red)
    feats = shape_features(red, minima, lat.covol_sq)
    return ShapeDescriptor(lat.v, tuple(tuple(r) for r in red), lat.covol_sq,
                           tuple(minima), feats)


@dataclass(frozen=True)
class GridDescriptor:
    v: tuple[int, ...]
    w: tuple[int, ...]
    frac_coords: tuple[float, ...]
    distance: float
    covol_sq: int

    @property
    def features(self) -> np.ndarray:
        return np.array([self.distance])


def _cvp_sq(gram, centre: list[Fraction]) -> Fraction:
    """``min_y (y - c)^t G (y - c)`` over integer ``y``, exactly."""
    from .enumerate import fincke_pohst

    start = [round(c) for c in centre]
    diff = [Fraction(a) - c for a, c in zip(start, centre)]
    best = ex.dot(diff, ex.matvec(gram, diff))
    for y in fincke_pohst(gram, best, centre, exact=False):
        diff = [Fraction(a) - c for a, c in zip(y, centre)]
        best = min(best, ex.dot(diff, ex.matvec(gram, diff)))
    return best


def grid_descriptor(v: Sequence[int], w: Sequence[int] | None = None) -> GridDescriptor:
    """Coset data of ``pi^perp(w) + L_v``.

    ``frac_coords`` are the coordinates of ``pi^perp(w)`` in the canonical
    reduced basis, reduced mod 1; ``distance`` is the distance from the coset
    to the origin divided by ``covol^{1/(d-1)}``, which does not depend on the
    choice of ``w``.
    """
    v = _primitive(v)
    lat = ortho_lattice(v)
    w = positive_completion(v) if w is None else [int(x) for x in w]
    if ex.dot(v, w) != 1:
        raise ValueError("completion must satisfy <v, w> = 1")
    red, hmat = canonical_gram(lat.gram)
    bred = ex.matmul([list(r) for r in lat.basis], hmat)
    rhs = ex.matvec(ex.transpose(bred), w)
    coords = ex.solve(red, rhs)
    frac = tuple(float(c - math.floor(c)) for c in coords)
    dist_sq = _cvp_sq(red, coords)
    n = len(red)
    dist = math.sqrt(dist_sq) / float(lat.covol_sq) ** (1.0 / (2 * n))
    return GridDescriptor(tuple(v), tuple(w), frac, dist, lat.covol_sq)


def minima_batch(vs: np.ndarray) -> np.ndarray:
    """Squared successive minima of ``L_v`` for every row of ``vs``.

    A compiled kernel handles the bulk; rows it cannot finish fall back to
    :func:`successive_minima`.
    """
    from ._kernels import batch_minima

    vs = np.asarray(vs, dtype=np.int64)
    out, ok = batch_minima(vs)
    for i in np.flatnonzero(~ok):
        out[i] = successive_minima(ortho_lattice(vs[i].tolist()).gram)
    return out
