"""Enumeration of primitive integral points on level sets and in balls.

Definite forms are enumerated completely. Forms of signature (1, d-1) have
infinitely many points on each level set, so they are enumerated inside a
window on the linear form ``l(x) = x^t M e_d``: every fiber ``l(x) = m`` is a
coset of a rank-(d-1) lattice on which ``Q`` is negative definite, which makes
each fiber a finite ellipsoid problem.

Two kernels exist for every problem: an exact Fincke-Pohst recursion in
rational arithmetic that works for any form, and a numpy kernel for diagonal
forms that enumerates orbit representatives under the signed permutations
preserving the form.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from . import _exact as ex
from .forms import IntegralQuadraticForm

__all__ = [
    "ALGORITHM_VERSION",
    "LevelSetSample",
    "OrbitSample",
    "enum_definite",
    "enum_hyperbolic_sliced",
    "enum_primitive_ball",
    "ball_orbit_reps",
    "definite_orbit_reps",
    "hyperbolic_orbit_reps",
    "fincke_pohst",
    "orbit_sizes",
    "expand_orbits",
    "orbit_index",
    "primitive_mask",
]

ALGORITHM_VERSION = "1"


@dataclass
class LevelSetSample:
    """Primitive points of ``Q(v) = N``, possibly restricted to a window.

    ``points`` is an ``(n, d)`` int64 array in lexicographic row order.
    """

    form: IntegralQuadraticForm
    level: int
    height: int | None
    points: np.ndarray
    complete: bool
    method: str = "generic"
    version: str = ALGORITHM_VERSION
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def window(self) -> dict:
        return {"height": self.height}


@dataclass
class OrbitSample:
    """Orbit representatives with multiplicities.

    Each row of ``reps`` stands for ``weights[i]`` distinct points obtained by
    the signed coordinate permutations that preserve the form. Used when the
    full point set is only needed through orbit-invariant statistics.
    """

    reps: np.ndarray
    weights: np.ndarray
    groups: tuple[tuple[int, ...], ...]

    @property
    def total(self) -> int:
        return int(self.weights.sum())


def primitive_mask(points: np.ndarray) -> np.ndarray:
    if len(points) == 0:
        return np.zeros(0, dtype=bool)
    return np.gcd.reduce(np.abs(points), axis=1) == 1


def _sort_rows(points: np.ndarray) -> np.ndarray:
    if len(points) == 0:
        return points
    order = np.lexsort(points.T[::-1])
    return points[order]


# ---------------------------------------------------------------------------
# exact generic kernel


def _exact_range(u: Fraction, s: Fraction) -> tuple[int, int]:
    """Integers ``y`` with ``(y - u)^2 <= s``, as an inclusive range."""
    if s < 0:
        return 1, 0
    a, b = u.numerator, u.denominator
    x = s * b * b
    m = math.isqrt(x.numerator // x.denominator)
    return -((m - a) // b), (a + m) // b


def _ldl(g: list[list[Fraction]]) -> list[list[Fraction]]:
    """Cohen's quadratic-form decomposition: returns ``q`` with
    ``x^t g x = sum_i q[i][i] (x_i + sum_{j>i} q[i][j] x_j)^2``."""
    n = len(g)
    q = [[Fraction(x) for x in row] for row in g]
    for i in range(n):
        for j in range(i + 1, n):
            q[j][i] = q[i][j]
            q[i][j] = q[i][j] / q[i][i]
        for k in range(i + 1, n):
            for l in range(k, n):
                q[k][l] -= q[k][i] * q[i][l]
    return q


def _fincke_pohst_int(g: list[list[int]], target: int) -> list[tuple[int, ...]]:
    # floats with slack only prune the outer coordinates (a superset of the
    # admissible ranges); the innermost one solves an integer quadratic
    n = len(g)
    q = [[float(x) for x in row] for row in _ldl(g)]
    slack = 1e-9 * (1.0 + target)
    a = g[0][0]
    out: list[tuple[int, ...]] = []
    y = [0] * n

    def rec(i: int, rem: float) -> None:
        if i == 0:
            b = sum(g[0][j] * y[j] for j in range(1, n))
            c = sum(y[k] * g[k][j] * y[j] for k in range(1, n) for j in range(1, n))
            disc = b * b - a * (c - target)
            if disc < 0:
                return
            r = math.isqrt(disc)
            if r * r != disc:
                return
            for num in {-b + r, -b - r}:
                if num % a == 0:
                    y[0] = num // a
                    out.append(tuple(y))
            return
        u = -sum(q[i][j] * y[j] for j in range(i + 1, n))
        s = (rem + slack) / q[i][i]
        if s < 0:
            return
        w = math.sqrt(s)
        for yi in range(math.ceil(u - w), math.floor(u + w) + 1):
            y[i] = yi
            diff = yi - u
            rec(i - 1, rem - q[i][i] * diff * diff)

    rec(n - 1, float(target))
    return out


def fincke_pohst(gram, target, center=None, exact: bool = True) -> list[tuple[int, ...]]:
    """Integer ``y`` with ``(y - c)^t G (y - c) = target`` (or ``<= target``
    when ``exact`` is false) for a positive definite rational ``G``."""
    n = len(gram)
    integral = all(isinstance(x, int) or (isinstance(x, Fraction) and x.denominator == 1)
                   for row in gram for x in row)
    if exact and center is None and integral and Fraction(target).denominator == 1 and n > 1:
        if target < 0:
            return []
        return _fincke_pohst_int([[int(x) for x in row] for row in gram], int(target))
    q = _ldl(gram)
    c = [Fraction(x) for x in (center or [0] * n)]
    t = Fraction(target)
    out: list[tuple[int, ...]] = []
    y = [0] * n

    def rec(i: int, rem: Fraction) -> None:
        u = c[i] - sum((q[i][j] * (y[j] - c[j]) for j in range(i + 1, n)), Fraction(0))
        s = rem / q[i][i]
        if i == 0 and exact:
            # the last coordinate must hit the level exactly
            if s < 0:
                return
            num, den = s.numerator, s.denominator
            rn, rd = math.isqrt(num), math.isqrt(den)
            if rn * rn != num or rd * rd != den:
                return
            for root in {Fraction(rn, rd), -Fraction(rn, rd)}:
                val = u + root
                if val.denominator == 1:
                    y[0] = int(val)
                    out.append(tuple(y))
            return
        lo, hi = _exact_range(u, s)
        for yi in range(lo, hi + 1):
            y[i] = yi
            diff = yi - u
            r = rem - q[i][i] * diff * diff
            if i == 0:
                out.append(tuple(y))
            else:
                rec(i - 1, r)

    if t >= 0:
        rec(n - 1, t)
    return out


# ---------------------------------------------------------------------------
# diagonal kernels over orbit representatives


def _coefficient_groups(coeffs: Sequence[int]) -> tuple[tuple[int, ...], ...]:
    seen: dict[int, list[int]] = {}
    for i, a in enumerate(coeffs):
        seen.setdefault(a, []).append(i)
    return tuple(tuple(v) for v in seen.values())


def _sorted_nonneg(coeffs: Sequence[int], target: int, le: bool = False) -> np.ndarray:
    """Nonnegative solutions of ``sum a_i x_i^2 = target`` (``<=`` if ``le``)
    for positive ``a_i``, nondecreasing inside every run of equal consecutive
    coefficients."""
    n = len(coeffs)
    a = [int(x) for x in coeffs]
    same_prev = [i > 0 and a[i] == a[i - 1] for i in range(n)]
    # how many coordinates from i onward share a_i and are forced >= x_i
    run_left = [1] * n
    for i in range(n - 2, -1, -1):
        if a[i + 1] == a[i]:
            run_left[i] = run_left[i + 1] + 1
    chunks: list[np.ndarray] = []
    prefix = [0] * n

    def upper(i: int, rem: int) -> int:
        return math.isqrt(rem // (a[i] * run_left[i]))

    def rec(i: int, rem: int) -> None:
        lo = prefix[i - 1] if same_prev[i] else 0
        hi = upper(i, rem)
        if lo > hi:
            return
        if i == n - 1:
            if le:
                xs = np.arange(lo, hi + 1, dtype=np.int64)
            else:
                if rem % a[i]:
                    return
                r = math.isqrt(rem // a[i])
                if r * r * a[i] != rem or r < lo:
                    return
                xs = np.array([r], dtype=np.int64)
            block = np.empty((len(xs), n), dtype=np.int64)
            block[:, :i] = prefix[:i]
            block[:, i] = xs
            chunks.append(block)
            return
        if i == n - 2 and not le:
            xs = np.arange(lo, hi + 1, dtype=np.int64)
            r = rem - a[i] * xs * xs
            ok = r % a[i + 1] == 0
            w = r // a[i + 1]
            root = np.floor(np.sqrt(np.maximum(w, 0).astype(np.float64))).astype(np.int64)
            # guard the float square root at the boundary
            root = np.where((root + 1) ** 2 <= w, root + 1, root)
            root = np.where(root**2 > w, root - 1, root)
            ok &= (root * root == w) & (w >= 0)
            if same_prev[i + 1]:
                ok &= root >= xs
            if ok.any():
                k = int(ok.sum())
                block = np.empty((k, n), dtype=np.int64)
                block[:, :i] = prefix[:i]
                block[:, i] = xs[ok]
                block[:, i + 1] = root[ok]
                chunks.append(block)
            return
        for x in range(lo, hi + 1):
            prefix[i] = x
            rec(i + 1, rem - a[i] * x * x)

    if target >= 0:
        rec(0, int(target))
    if not chunks:
        return np.zeros((0, n), dtype=np.int64)
    return np.concatenate(chunks)


def orbit_sizes(reps: np.ndarray, groups: Sequence[Sequence[int]]) -> np.ndarray:
    """Number of distinct images of each representative under sign changes
    and permutations inside each coordinate group."""
    if len(reps) == 0:
        return np.zeros(0, dtype=np.int64)
    nonzero = (reps != 0).sum(axis=1)
    size = np.left_shift(np.int64(1), nonzero).astype(np.int64)
    for grp in groups:
        sub = np.sort(reps[:, list(grp)], axis=1)
        perms = np.full(len(reps), math.factorial(len(grp)), dtype=np.int64)
        # divide by factorials of tie multiplicities
        run = np.ones(len(reps), dtype=np.int64)
        for j in range(1, len(grp)):
            tie = sub[:, j] == sub[:, j - 1]
            run = np.where(tie, run + 1, 1)
            perms //= np.where(tie, run, 1)
        size *= perms
    return size


def expand_orbits(reps: np.ndarray, groups: Sequence[Sequence[int]]) -> np.ndarray:
    """All distinct signed, group-permuted images of the representatives,
    sorted lexicographically."""
    if len(reps) == 0:
        return reps
    d = reps.shape[1]
    perm_lists = [list(itertools.permutations(g)) for g in groups]
    perms = []
    for choice in itertools.product(*perm_lists):
        p = list(range(d))
        for grp, img in zip(groups, choice):
            for src, dst in zip(grp, img):
                p[dst] = src
        perms.append(p)
    signs = np.array(list(itertools.product((1, -1), repeat=d)), dtype=np.int64)
    out = []
    for p in perms:
        permuted = reps[:, p]
        out.append((permuted[:, None, :] * signs[None, :, :]).reshape(-1, d))
    allpts = np.unique(np.concatenate(out), axis=0)
    return allpts


def _diag_entries(form: IntegralQuadraticForm) -> list[int]:
    return [form.gram[i][i] for i in range(form.dim)]


def _layout(coeffs: Sequence[int]):
    """Permutation making equal coefficients contiguous, and the groups in the
    original coordinates."""
    groups = _coefficient_groups(coeffs)
    order = [i for g in groups for i in g]
    return order, groups


def definite_orbit_reps(form: IntegralQuadraticForm, level: int, primitive: bool = True) -> OrbitSample:
    """Orbit representatives of ``Q(v) = N`` for a positive definite
    diagonal form."""
    if not form.is_diagonal or not form.is_definite:
        raise ValueError("orbit enumeration needs a positive definite diagonal form")
    coeffs = _diag_entries(form)
    order, groups = _layout(coeffs)
    sub = _sorted_nonneg([coeffs[i] for i in order], level)
    reps = np.zeros_like(sub)
    reps[:, order] = sub
    if primitive and len(reps):
        reps = reps[primitive_mask(reps)]
    reps = _sort_rows(reps)
    return OrbitSample(reps, orbit_sizes(reps, groups), groups)


def _check_level(level: int) -> None:
    if level < 1:
        raise ValueError("level N must be a positive integer")


def enum_definite(form: IntegralQuadraticForm, level: int, method: str = "auto") -> LevelSetSample:
    """All primitive ``v`` with ``Q(v) = N`` for a positive definite form."""
    _check_level(level)
    if not form.is_definite or form.signature[0] != form.dim:
        raise ValueError("enum_definite needs a positive definite form")
    if method == "auto":
        method = "diagonal" if form.is_diagonal else "generic"
    if method == "diagonal":
        orb = definite_orbit_reps(form, level)
        pts = expand_orbits(orb.reps, orb.groups)
    elif method == "generic":
        sols = fincke_pohst(form.matrix, level)
        pts = np.array(sols, dtype=np.int64).reshape(-1, form.dim)
        pts = _sort_rows(pts[primitive_mask(pts)])
    else:
        raise ValueError(f"unknown method {method!r}")
    return LevelSetSample(form, level, None, pts, True, method)


def _min_height(form: IntegralQuadraticForm, level: int) -> int:
    # least H whose window H * Q(e_d) reaches a fiber with l(x)^2 >= N Q(e_d)
    qe = form.q_ed
    least_l = math.isqrt(level * qe - 1) + 1
    return -(-least_l // qe)


def _check_hyperbolic(form: IntegralQuadraticForm, level: int, height: int) -> None:
    _check_level(level)
    if not form.standing_ok or not form.is_hyperbolic:
        raise ValueError("sliced enumeration needs a standing-assumption form of signature (1, d-1)")
    need = _min_height(form, level)
    if height < need:
        raise ValueError(f"window height {height} is too small: need H >= {need}")


def _fiber_solutions(form: IntegralQuadraticForm, level: int, height: int) -> Iterator[tuple[int, ...]]:
    d = form.dim
    m = form.matrix
    med = [m[i][d - 1] for i in range(d)]
    qe = form.q_ed
    g, u = ex.column_reduce_row(med)
    basis = ex.columns(u, range(d - 1))
    # x0 = u e_d has l(x0) = g; the fiber l = m is x0 * (m/g) + span(basis)
    x_unit = [row[d - 1] for row in u]
    neg = [[-x for x in row] for row in ex.matmul(ex.transpose(basis), ex.matmul(m, basis))]
    neg_inv = ex.inverse(neg)
    for mval in range(-height * qe, height * qe + 1):
        if mval % g or mval * mval < level * qe:
            continue
        x0 = [x * (mval // g) for x in x_unit]
        b = ex.matvec(ex.transpose(basis), ex.matvec(m, x0))
        center = ex.matvec(neg_inv, b)
        qx0 = ex.dot(x0, ex.matvec(m, x0))
        # Q(x0 + By) = Q(x0) + 2 b.y - y^t G y = N  <=>  (y-c)^t G (y-c) = Q(x0) - N + c^t G c
        t = Fraction(qx0 - level) + ex.dot(center, ex.matvec(neg, center))
        for y in fincke_pohst(neg, t, center):
            yield tuple(a + b_ for a, b_ in zip(x0, ex.matvec(basis, list(y))))


def hyperbolic_orbit_reps(form: IntegralQuadraticForm, level: int, height: int,
                          primitive: bool = True) -> OrbitSample:
    """Orbit representatives of the window ``|x_d| <= H`` of ``Q(v) = N`` for
    a diagonal form ``-a_1 x_1^2 - ... - a_{d-1} x_{d-1}^2 + a_d x_d^2``.

    Representatives have nonnegative, group-sorted entries; the last
    coordinate is its own group, so each orbit includes both sheets.
    """
    _check_hyperbolic(form, level, height)
    if not form.is_diagonal:
        raise ValueError("orbit enumeration needs a diagonal form")
    coeffs = _diag_entries(form)
    d = form.dim
    neg = [-c for c in coeffs[:-1]]
    order, groups = _layout(neg)
    ad = coeffs[-1]
    chunks = []
    for xd in range(0, height + 1):
        rhs = ad * xd * xd - level
        if rhs < 0:
            continue
        sub = _sorted_nonneg([neg[i] for i in order], rhs)
        if len(sub) == 0:
            continue
        block = np.zeros((len(sub), d), dtype=np.int64)
        block[:, order] = sub
        block[:, -1] = xd
        chunks.append(block)
    reps = np.concatenate(chunks) if chunks else np.zeros((0, d), dtype=np.int64)
    if primitive and len(reps):
        reps = reps[primitive_mask(reps)]
    reps = _sort_rows(reps)
    groups = tuple(groups) + ((d - 1,),)
    return OrbitSample(reps, orbit_sizes(reps, groups), groups)


def enum_hyperbolic_sliced(form: IntegralQuadraticForm, level: int, height: int,
                           method: str = "auto") -> LevelSetSample:
    """Primitive ``v`` with ``Q(v) = N`` and ``|v^t M e_d| <= H Q(e_d)``."""
    _check_hyperbolic(form, level, height)
    if method == "auto":
        method = "diagonal" if form.is_diagonal else "generic"
    if method == "diagonal":
        orb = hyperbolic_orbit_reps(form, level, height)
        pts = expand_orbits(orb.reps, orb.groups)
    elif method == "generic":
        pts = np.array(sorted(set(_fiber_solutions(form, level, height))),
                       dtype=np.int64).reshape(-1, form.dim)
        pts = pts[primitive_mask(pts)]
    else:
        raise ValueError(f"unknown method {method!r}")
    return LevelSetSample(form, level, height, _sort_rows(pts), False, method)


def ball_orbit_reps(d: int, radius: int, primitive: bool = True) -> OrbitSample:
    """Orbit representatives ``0 <= x_1 <= ... <= x_d`` of nonzero integer
    vectors with ``|x| <= R``, weighted by their signed-permutation orbit."""
    if radius < 1:
        raise ValueError("radius must be at least 1")
    reps = _sorted_nonneg([1] * d, radius * radius, le=True)
    reps = reps[(reps != 0).any(axis=1)]
    if primitive:
        reps = reps[primitive_mask(reps)]
    reps = _sort_rows(reps)
    groups = (tuple(range(d)),)
    return OrbitSample(reps, orbit_sizes(reps, groups), groups)


def enum_primitive_ball(d: int, radius: int) -> np.ndarray:
    """All primitive ``v`` in Z^d with Euclidean norm at most ``R``."""
    orb = ball_orbit_reps(d, radius)
    return expand_orbits(orb.reps, orb.groups)


def orbit_index(points: np.ndarray, orbits: OrbitSample) -> np.ndarray:
    """Row index into ``orbits.reps`` of the orbit containing each point."""
    pts = np.abs(np.asarray(points, dtype=np.int64))
    canon = pts.copy()
    for grp in orbits.groups:
        canon[:, list(grp)] = np.sort(pts[:, list(grp)], axis=1)
    reps = orbits.reps
    hi = int(max(canon.max(initial=0), reps.max(initial=0))) + 1
    w = hi ** np.arange(reps.shape[1] - 1, -1, -1, dtype=object)
    if hi ** reps.shape[1] >= 2**63:
        raise ValueError("coordinates too large to encode")
    w = w.astype(np.int64)
    rk = reps @ w
    ck = canon @ w
    order = np.argsort(rk)
    pos = np.searchsorted(rk[order], ck)
    pos = np.minimum(pos, len(rk) - 1)
    if np.any(rk[order][pos] != ck):
        raise ValueError("point outside the represented orbits")
    return order[pos]
