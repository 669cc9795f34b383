"""Equidistribution diagnostics for level-set samples.

The limit theorems being probed are weak-* statements without rates, so every
threshold used with these statistics is a calibration constant, never a
consequence of a theorem. Monte-Carlo components take an explicit seed.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize, special

from . import _exact as ex
from .forms import IntegralQuadraticForm
from .localarith import ResidueTable

__all__ = [
    "EmpiricalDistribution",
    "gegenbauer_coefficients",
    "zonal_sum_test",
    "LerayIntegrator",
    "cap_fraction",
    "WindowResult",
    "window_ratio_test",
    "chi_square_residues",
    "ks_two_sample",
    "ContingencyResult",
    "joint_contingency",
]


@dataclass
class EmpiricalDistribution:
    """Weighted point cloud in feature space.

    Raw weights are kept as given; :attr:`probabilities` normalizes them.
    Merging concatenates and sorts canonically, so it is associative and
    independent of argument order.
    """

    features: np.ndarray
    weights: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        f = np.atleast_2d(np.asarray(self.features, dtype=float))
        if f.shape[0] == 0:
            raise ValueError("empty distribution")
        w = np.ones(f.shape[0]) if self.weights is None else np.asarray(self.weights, dtype=float)
        if w.shape != (f.shape[0],):
            raise ValueError("one weight per sample")
        if np.any(w < 0) or w.sum() <= 0:
            raise ValueError("weights must be nonnegative with positive total")
        order = np.lexsort(np.column_stack([f, w]).T[::-1])
        self.features = f[order]
        self.weights = w[order]

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def probabilities(self) -> np.ndarray:
        return self.weights / self.weights.sum()

    def column(self, index: int) -> np.ndarray:
        return self.features[:, index]

    def merge(self, other: "EmpiricalDistribution") -> "EmpiricalDistribution":
        if self.features.shape[1] != other.features.shape[1]:
            raise ValueError("feature dimensions differ")
        meta = {"parts": sorted([repr(sorted(self.metadata.items())), repr(sorted(other.metadata.items()))])}
        return EmpiricalDistribution(
            np.vstack([self.features, other.features]),
            np.concatenate([self.weights, other.weights]),
            meta,
        )


# -- zonal sums on the sphere ------------------------------------------------


def gegenbauer_coefficients(k: int, dim: int) -> list[Fraction]:
    """Monomial coefficients of ``C_k^lam / C_k^lam(1)`` for ``S^{dim-1}``,
    ``lam = (dim - 2)/2``; index ``m`` holds the ``t^m`` coefficient."""
    if dim < 3:
        raise ValueError("dim >= 3 required")
    lam = Fraction(dim - 2, 2)
    prev, cur = [Fraction(1)], [Fraction(0), 2 * lam]
    if k == 0:
        cur = prev
    for n in range(2, k + 1):
        nxt = [Fraction(0)] * (n + 1)
        for m, c in enumerate(cur):
            nxt[m + 1] += 2 * (n + lam - 1) * c / n
        for m, c in enumerate(prev):
            nxt[m] -= (n + 2 * lam - 2) * c / n
        prev, cur = cur, nxt
    at_one = sum(cur)
    return [c / at_one for c in cur]


def _power_sums(x: np.ndarray, m: int) -> float:
    """``sum_{i,j} <x_i, x_j>^m`` through degree-``m`` moment tensors."""
    n, d = x.shape
    if m == 0:
        return float(n) ** 2
    total = 0.0
    for alpha in itertools.combinations_with_replacement(range(d), m):
        counts = np.bincount(alpha, minlength=d)
        mult = math.factorial(m)
        for c in counts:
            mult //= math.factorial(int(c))
        mom = math.fsum(np.prod(x[:, list(alpha)], axis=1))
        total += mult * mom * mom
    return total


def zonal_sum_test(directions: np.ndarray, kmax: int = 4) -> np.ndarray:
    """``W_k = n^{-2} sum_{i,j} G_k(<x_i, x_j>)`` for ``k = 1..kmax``.

    ``G_k`` is the Gegenbauer polynomial of the sphere normalized to
    ``G_k(1) = 1``. It is a positive-definite zonal kernel, so ``W_k >= 0``, and
    its integral against the uniform measure vanishes. The double sum is
    evaluated as a quadratic form in monomial moments, linear in ``n``.
    """
    x = np.asarray(directions, dtype=float)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("empty sample")
    if np.max(np.abs(np.einsum("ij,ij->i", x, x) - 1.0)) > 1e-9:
        raise ValueError("directions must be unit vectors")
    n, d = x.shape
    sums = [_power_sums(x, m) for m in range(kmax + 1)]
    out = np.empty(kmax)
    for k in range(1, kmax + 1):
        coeffs = gegenbauer_coefficients(k, d)
        out[k - 1] = sum(float(c) * sums[m] for m, c in enumerate(coeffs) if c) / n**2
    return out


# -- invariant measure on level sets ------------------------------------------


def cap_fraction(dim: int, c: float) -> float:
    """Fraction of ``S^{dim-1}`` with last coordinate at least ``c``."""
    if c >= 1:
        return 0.0
    if c <= -1:
        return 1.0
    half = 0.5 * special.betainc((dim - 1) / 2, 0.5, 1 - c * c)
    return half if c >= 0 else 1 - half


class LerayIntegrator:
    """Monte-Carlo integration against ``dsigma / |grad Q|`` on ``Q = 1``.

    Definite forms: directions ``u`` uniform on the sphere are mapped to
    ``u / sqrt(Q(u))`` with weight ``Q(u)^{-d/2}``. Signature ``(1, d-1)``
    with the standing assumption: write ``x = (m/Q(e_d)) e_d + y`` with
    ``y`` in ``e_d^{perp Q}`` and choose coordinates ``z`` there with
    ``Q(y) = -|z|^2``; the measure is proportional to ``dz / sqrt(1 + |z|^2)``
    on each sheet. The window is ``|z| <= radius``, equivalently
    ``l(x)^2 <= Q(e_d) (1 + radius^2)`` with ``l(x) = x^t M e_d``.
    """

    def __init__(self, q: IntegralQuadraticForm, seed: int, radius: float | None = None):
        self.q = q
        self.seed = int(seed)
        self.m = q.array().astype(float)
        self.d = q.dim
        if q.is_definite:
            if q.signature[0] != self.d:
                raise ValueError("negative definite forms have no points on Q = 1")
            self.radius = None
        else:
            if not q.is_hyperbolic or not q.standing_ok:
                raise ValueError("signature (1, d-1) with the standing assumption required")
            if radius is None or radius <= 0:
                raise ValueError("a positive window radius is required")
            self.radius = float(radius)
            self._chart()

    def _chart(self):
        d = self.d
        row = [self.q.gram[i][d - 1] for i in range(d)]
        k = np.array(ex.integer_kernel([row]), dtype=float)  # d x (d-1)
        neg = -(k.T @ self.m @ k)
        r = np.linalg.cholesky(neg).T  # neg = r^t r
        self._k = k
        self._r = r
        self._chart_map = k @ np.linalg.inv(r)  # z -> y

    def z_coordinates(self, x: np.ndarray) -> np.ndarray:
        """Chart coordinates of points ``x`` (rows) on ``Q = 1``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        qe = float(self.q.q_ed)
        ell = x @ self.m[:, -1]
        y = x.copy()
        y[:, -1] -= ell / qe
        coef, *_ = np.linalg.lstsq(self._k, y.T, rcond=None)
        return (self._r @ coef).T

    def sample(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """``n`` points on ``Q = 1`` (inside the window) with importance weights."""
        rng = np.random.default_rng(self.seed)
        d = self.d
        if self.radius is None:
            u = rng.standard_normal((n, d))
            u /= np.linalg.norm(u, axis=1)[:, None]
            qu = np.einsum("ij,jk,ik->i", u, self.m, u)
            return u / np.sqrt(qu)[:, None], qu ** (-d / 2)
        g = rng.standard_normal((n, d - 1))
        g /= np.linalg.norm(g, axis=1)[:, None]
        rad = self.radius * rng.random(n) ** (1.0 / (d - 1))
        z = g * rad[:, None]
        sheet = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        qe = float(self.q.q_ed)
        ell = sheet * np.sqrt(qe * (1 + rad**2))
        x = z @ self._chart_map.T
        x[:, -1] += ell / qe
        return x, 1.0 / np.sqrt(1 + rad**2)

    def cell_masses(self, cells: Callable[[np.ndarray], np.ndarray], ncells: int, n: int = 10**6) -> np.ndarray:
        """Normalized masses of cells labelled ``0..ncells-1`` (``-1`` = outside)."""
        x, w = self.sample(n)
        lab = np.asarray(cells(x))
        keep = lab >= 0
        mass = np.bincount(lab[keep], weights=w[keep], minlength=ncells)[:ncells]
        if mass.sum() <= 0:
            raise ValueError("cells carry no mass")
        return mass / mass.sum()

    def radial_quantiles(self, k: int) -> np.ndarray:
        """Radii ``0 = r_0 < ... < r_k = radius`` splitting the window into
        ``k`` rings of equal invariant mass (hyperbolic case)."""
        if self.radius is None:
            raise ValueError("radial rings are defined for the hyperbolic chart")
        d = self.d

        def mass(r):
            return integrate.quad(lambda s: s ** (d - 2) / math.sqrt(1 + s * s), 0, r)[0]

        total = mass(self.radius)
        out = [0.0]
        for j in range(1, k):
            out.append(optimize.brentq(lambda r: mass(r) - j * total / k, 0, self.radius))
        out.append(self.radius)
        return np.array(out)

    def ring_cells(self, k: int) -> Callable[[np.ndarray], np.ndarray]:
        """Cell function assigning each point its equal-mass ring, ``-1`` outside."""
        edges = self.radial_quantiles(k)

        def cells(x):
            r = np.linalg.norm(self.z_coordinates(x), axis=1)
            lab = np.searchsorted(edges, r, side="right") - 1
            lab[r > edges[-1]] = -1
            return np.minimum(lab, k - 1)

        return cells


@dataclass(frozen=True)
class WindowResult:
    statistic: float
    dof: int
    observed: np.ndarray
    expected: np.ndarray


def window_ratio_test(
    integrator: LerayIntegrator,
    points: np.ndarray,
    cells: Callable[[np.ndarray], np.ndarray],
    ncells: int,
    n_mc: int = 10**6,
    min_expected: float = 5.0,
) -> WindowResult:
    """Pearson statistic of cell counts against invariant-measure masses.

    Only the relative masses of cells inside the window are compared: the
    expected count of a cell is its mass share times the number of sample
    points that fall in some cell.
    """
    x = np.atleast_2d(np.asarray(points, dtype=float))
    qx = np.einsum("ij,jk,ik->i", x, integrator.m, x)
    if x.shape[0] and np.max(np.abs(qx - 1)) > 1e-6:
        raise ValueError("points must lie on Q = 1")
    lab = np.asarray(cells(x)) if x.shape[0] else np.zeros(0, dtype=int)
    obs = np.bincount(lab[lab >= 0], minlength=ncells)[:ncells].astype(float)
    n = obs.sum()
    if n == 0:
        raise ValueError("empty window")
    exp = n * integrator.cell_masses(cells, ncells, n_mc)
    use = exp >= min_expected
    stat = float(np.sum((obs[use] - exp[use]) ** 2 / exp[use]))
    return WindowResult(stat, max(int(use.sum()) - 1, 0), obs, exp)


# -- residues, KS, contingency -------------------------------------------------


def chi_square_residues(residues: np.ndarray, table: ResidueTable) -> tuple[float, int]:
    """Pearson statistic of residue counts against uniform on ``table``.

    A residue outside the table raises: it would mean the sample does not
    reduce into ``H_a(Z/q)``.
    """
    r = np.asarray(residues, dtype=np.int64) % table.q
    if r.ndim != 2 or r.shape[0] == 0:
        raise ValueError("empty sample")
    h = table.size
    weights = table.q ** np.arange(r.shape[1], dtype=np.int64)
    codes = r @ weights
    elem = np.asarray(table.elements, dtype=np.int64) @ weights
    sorted_elem = np.sort(elem)
    pos = np.searchsorted(sorted_elem, codes)
    bad = (pos >= h) | (sorted_elem[np.minimum(pos, h - 1)] != codes)
    if bad.any():
        raise ValueError(f"residue {tuple(r[np.argmax(bad)])} is not on the level set mod {table.q}")
    obs = np.bincount(pos, minlength=h)
    n = int(obs.sum())
    # integer arithmetic keeps the exactly uniform case at exactly zero
    num = sum((int(o) * h - n) ** 2 for o in obs.tolist())
    return num / (n * h), h - 1


def ks_two_sample(
    a: np.ndarray,
    b: np.ndarray,
    index: int | None = None,
    wa: np.ndarray | None = None,
    wb: np.ndarray | None = None,
) -> float:
    """Two-sample Kolmogorov-Smirnov distance, optionally weighted."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if index is not None:
        a = a[:, index]
        b = b[:, index]
    if a.size == 0 or b.size == 0:
        raise ValueError("empty input")
    wa = np.ones(a.size) if wa is None else np.asarray(wa, dtype=float)
    wb = np.ones(b.size) if wb is None else np.asarray(wb, dtype=float)
    grid = np.unique(np.concatenate([a, b]))

    def cdf(x, w):
        order = np.argsort(x, kind="mergesort")
        cw = np.concatenate([[0.0], np.cumsum(w[order])])
        return cw[np.searchsorted(x[order], grid, side="right")] / cw[-1]

    return float(np.max(np.abs(cdf(a, wa) - cdf(b, wb))))


@dataclass(frozen=True)
class ContingencyResult:
    statistic: float
    dof: int
    observed: np.ndarray
    expected: np.ndarray
    levels: tuple[tuple[tuple[int, ...], ...], ...]  # merged original labels per factor

    @property
    def ratio(self) -> float:
        return self.statistic / self.dof if self.dof else float("nan")


def _table(labels: list[np.ndarray], groups: list[list[list[int]]]) -> np.ndarray:
    idx = []
    for lab, grp in zip(labels, groups):
        lut = {v: i for i, g in enumerate(grp) for v in g}
        idx.append(np.array([lut[v] for v in lab.tolist()], dtype=np.int64))
    shape = tuple(len(g) for g in groups)
    flat = np.ravel_multi_index(tuple(idx), shape)
    return np.bincount(flat, minlength=int(np.prod(shape))).reshape(shape).astype(float)


def _expected(obs: np.ndarray) -> np.ndarray:
    n = obs.sum()
    exp = np.full(obs.shape, n)
    for axis in range(obs.ndim):
        other = tuple(a for a in range(obs.ndim) if a != axis)
        marg = obs.sum(axis=other) / n
        shape = [1] * obs.ndim
        shape[axis] = -1
        exp = exp * marg.reshape(shape)
    return exp


def joint_contingency(factors: Sequence[Sequence[int]], min_expected: float = 5.0) -> ContingencyResult:
    """Independence chi-square of several categorical factors.

    Levels are ordered; while some expected count is below ``min_expected``
    the sparsest level touching the worst cell is merged with its sparser
    neighbour. Degrees of freedom are ``prod L - 1 - sum (L - 1)``.
    """
    labels = [np.asarray(f) for f in factors]
    if len(labels) < 2 or len({len(x) for x in labels}) != 1 or len(labels[0]) == 0:
        raise ValueError("need at least two factors of equal nonzero length")
    groups = [[[int(v)] for v in np.unique(lab)] for lab in labels]
    while True:
        if any(len(g) < 2 for g in groups):
            raise ValueError("degenerate binning: a factor has fewer than two levels")
        obs = _table(labels, groups)
        exp = _expected(obs)
        if exp.min() >= min_expected:
            break
        cell = np.unravel_index(int(np.argmin(exp)), exp.shape)
        best = None
        for axis, lvl in enumerate(cell):
            other = tuple(a for a in range(obs.ndim) if a != axis)
            marg = obs.sum(axis=other)
            key = (marg[lvl], axis)
            if best is None or key < best[0]:
                best = (key, axis, lvl, marg)
        _, axis, lvl, marg = best
        grp = groups[axis]
        if lvl == 0:
            nb = 1
        elif lvl == len(grp) - 1:
            nb = lvl - 1
        else:
            nb = lvl - 1 if marg[lvl - 1] <= marg[lvl + 1] else lvl + 1
        lo, hi = sorted((lvl, nb))
        grp[lo] = grp[lo] + grp[hi]
        del grp[hi]
    dims = obs.shape
    dof = int(np.prod(dims)) - 1 - sum(L - 1 for L in dims)
    stat = float(np.sum((obs - exp) ** 2 / exp))
    return ContingencyResult(stat, dof, obs, exp, tuple(tuple(tuple(g) for g in grp) for grp in groups))
