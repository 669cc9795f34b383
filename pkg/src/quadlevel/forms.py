"""Integral quadratic forms Q(x) = x^t M x and the maps attached to them."""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _exact as ex

__all__ = [
    "IntegralQuadraticForm",
    "RationalForm",
    "StandingReport",
    "evaluate",
    "bilinear",
    "dual_form",
    "validate_standing",
    "tau",
    "theta",
    "make_aT",
    "dual_restriction",
    "nonsingular_mod",
    "diagonal_form",
    "Q4",
    "random_sl",
    "random_standing_form",
]


def _signature(gram) -> tuple[int, int]:
    diag, _ = ex.congruence_diagonalize(gram)
    return sum(1 for x in diag if x > 0), sum(1 for x in diag if x < 0)


def _is_definite(gram) -> bool:
    if not gram:
        return True
    minors = ex.leading_minors(gram)
    if all(m > 0 for m in minors):
        return True
    return all((m > 0) if k % 2 == 0 else (m < 0) for k, m in enumerate(minors, start=1))


@dataclass(frozen=True)
class StandingReport:
    q_ed_positive: bool
    definite_complement: bool
    signature: tuple[int, int]

    @property
    def ok(self) -> bool:
        return self.q_ed_positive and self.definite_complement


@dataclass(frozen=True)
class IntegralQuadraticForm:
    """Nondegenerate integral quadratic form of dimension at least 4.

    ``gram`` is the symmetric integer companion matrix ``M``. Derived data
    (``disc``, ``signature``, ``standing_ok``) is computed once at
    construction.
    """

    gram: tuple[tuple[int, ...], ...]
    disc: int = field(init=False)
    signature: tuple[int, int] = field(init=False)
    standing_ok: bool = field(init=False)

    def __post_init__(self):
        rows = tuple(tuple(int(x) for x in row) for row in self.gram)
        d = len(rows)
        if any(len(r) != d for r in rows):
            raise ValueError("companion matrix must be square")
        if d == 3:
            raise ValueError(
                "dimension 3 is not supported: the equidistribution statements "
                "used here require d >= 4 (ternary forms need separate treatment)"
            )
        if d < 4:
            raise ValueError(f"dimension must be at least 4, got {d}")
        for i in range(d):
            for j in range(i):
                if rows[i][j] != rows[j][i]:
                    raise ValueError("companion matrix is not symmetric")
        disc = ex.det([list(r) for r in rows])
        if disc == 0:
            raise ValueError("quadratic form is degenerate (det M = 0)")
        object.__setattr__(self, "gram", rows)
        object.__setattr__(self, "disc", int(disc))
        object.__setattr__(self, "signature", _signature(rows))
        object.__setattr__(self, "standing_ok", validate_standing(self).ok)

    @classmethod
    def from_matrix(cls, m) -> "IntegralQuadraticForm":
        return cls(tuple(tuple(int(x) for x in row) for row in m))

    @property
    def dim(self) -> int:
        return len(self.gram)

    @property
    def matrix(self) -> list[list[int]]:
        return [list(r) for r in self.gram]

    def array(self) -> np.ndarray:
        return np.array(self.gram, dtype=np.int64)

    @property
    def q_ed(self) -> int:
        return self.gram[-1][-1]

    @property
    def is_definite(self) -> bool:
        return self.signature[1] == 0

    @property
    def is_hyperbolic(self) -> bool:
        return self.signature == (1, self.dim - 1)

    @property
    def is_diagonal(self) -> bool:
        d = self.dim
        return all(self.gram[i][j] == 0 for i in range(d) for j in range(d) if i != j)

    def __call__(self, v: Sequence[int]) -> int:
        return evaluate(self, v)

    def digest(self) -> str:
        """Stable short hash of the companion matrix."""
        text = ";".join(",".join(str(x) for x in row) for row in self.gram)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class RationalForm:
    gram: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(Fraction(x) for x in row) for row in self.gram)
        d = len(rows)
        if any(len(r) != d for r in rows):
            raise ValueError("gram matrix must be square")
        for i in range(d):
            for j in range(i):
                if rows[i][j] != rows[j][i]:
                    raise ValueError("gram matrix is not symmetric")
        object.__setattr__(self, "gram", rows)

    @property
    def dim(self) -> int:
        return len(self.gram)

    @property
    def matrix(self) -> list[list[Fraction]]:
        return [list(r) for r in self.gram]

    def det(self) -> Fraction:
        return Fraction(ex.det(self.matrix))

    def __call__(self, v: Sequence) -> Fraction:
        return ex.dot(v, ex.matvec(self.matrix, v))


def _check_len(q, *vs) -> None:
    for v in vs:
        if len(v) != q.dim:
            raise ValueError(f"expected a vector of length {q.dim}, got {len(v)}")


def evaluate(q: IntegralQuadraticForm, v: Sequence[int]) -> int:
    """Return ``v^t M v`` exactly."""
    _check_len(q, v)
    v = [int(x) for x in v]
    return ex.dot(v, ex.matvec(q.gram, v))


def bilinear(q: IntegralQuadraticForm, x: Sequence[int], y: Sequence[int]) -> int:
    """Return ``x^t M y``, the polarization of ``Q``."""
    _check_len(q, x, y)
    return ex.dot([int(a) for a in x], ex.matvec(q.gram, [int(b) for b in y]))


def dual_form(q) -> RationalForm:
    """The form with companion ``M^{-1}``; accepts integral or rational forms."""
    return RationalForm(tuple(tuple(r) for r in ex.inverse(q.matrix)))


def validate_standing(q: IntegralQuadraticForm) -> StandingReport:
    """Check ``Q(e_d) > 0`` and definiteness of ``Q`` on the Q-orthogonal
    complement of ``e_d``."""
    m = q.matrix
    d = len(m)
    med = [m[i][d - 1] for i in range(d)]
    basis = ex.integer_kernel([med])
    restricted = ex.matmul(ex.transpose(basis), ex.matmul(m, basis))
    return StandingReport(
        q_ed_positive=m[d - 1][d - 1] > 0,
        definite_complement=_is_definite(restricted),
        signature=_signature(m),
    )


def _is_exact(g) -> bool:
    return all(isinstance(x, (int, Fraction, np.integer)) for row in g for x in row)


def tau(g) -> list[int] | np.ndarray:
    """``(g^t)^{-1} e_d``.

    For integer ``g`` of determinant 1 this is the last row of ``adj(g)`` and is
    computed exactly. Real input is solved in binary64.
    """
    if isinstance(g, np.ndarray) and g.dtype.kind == "f" or not _is_exact(g):
        a = np.asarray(g, dtype=float)
        e = np.zeros(a.shape[0])
        e[-1] = 1.0
        return np.linalg.solve(a.T, e)
    m = [[int(x) if not isinstance(x, Fraction) else x for x in row] for row in g]
    d = len(m)
    if ex.det(m) != 1:
        raise ValueError("tau expects a matrix of determinant 1")
    return [(-1) ** (d - 1 + j) * ex.det(ex.minor(m, j, d - 1)) for j in range(d)]


def theta(g) -> list[list[Fraction]] | np.ndarray:
    """``(g^t)^{-1}``, exact for integer or rational input."""
    if isinstance(g, np.ndarray) and g.dtype.kind == "f":
        return np.linalg.inv(g.T)
    return ex.inverse(ex.transpose([list(r) for r in g]))


def make_aT(q: IntegralQuadraticForm, t: float) -> np.ndarray:
    """The matrix acting by ``T^{1/(2(d-1))}`` on ``span(e_1..e_{d-1})`` and by
    ``T^{-1/2}`` on ``M e_d``."""
    if not q.standing_ok:
        raise ValueError("form does not satisfy the standing assumption")
    if not t > 0:
        raise ValueError("T must be positive")
    d = q.dim
    med = np.array([q.gram[i][d - 1] for i in range(d)], dtype=float)
    if med[-1] == 0:
        raise ValueError("M e_d lies in span(e_1..e_{d-1}); decomposition degenerates")
    s = t ** (1.0 / (2 * (d - 1)))
    r = t ** -0.5
    a = s * np.eye(d)
    a[:, -1] += (r - s) / med[-1] * med
    return a


def dual_restriction(q: IntegralQuadraticForm, g, gamma=None) -> RationalForm:
    """The (d-1)-dimensional form with companion ``γ^t ĝ^t M^{-1} ĝ γ``,
    ``ĝ`` being the first d-1 columns of ``g``."""
    d = q.dim
    g = [[int(x) for x in row] for row in g]
    if ex.det(g) != 1:
        raise ValueError("g must have determinant 1")
    ghat = ex.columns(g, range(d - 1))
    core = ex.matmul(ex.transpose(ghat), ex.matmul(ex.inverse(q.matrix), ghat))
    if gamma is not None:
        gm = [[Fraction(x) for x in row] for row in gamma]
        if ex.det(gm) == 0:
            raise ValueError("gamma must be invertible")
        core = ex.matmul(ex.transpose(gm), ex.matmul(core, gm))
    return RationalForm(tuple(tuple(r) for r in core))


def nonsingular_mod(q: IntegralQuadraticForm, modulus: int) -> bool:
    """Whether ``disc(Q)`` is a unit modulo the odd integer ``modulus``."""
    if modulus < 3 or modulus % 2 == 0:
        raise ValueError("modulus must be an odd integer >= 3")
    from math import gcd
    return gcd(q.disc, modulus) == 1


def diagonal_form(*entries: int) -> IntegralQuadraticForm:
    d = len(entries)
    return IntegralQuadraticForm(
        tuple(tuple(entries[i] if i == j else 0 for j in range(d)) for i in range(d))
    )


def Q4(d: int = 4) -> IntegralQuadraticForm:
    """``-x_1^2 - ... - x_{d-1}^2 + x_d^2``."""
    return diagonal_form(*([-1] * (d - 1) + [1]))


def random_sl(d: int, rng: random.Random, steps: int = 12, bound: int = 3) -> list[list[int]]:
    """Random element of SL_d(Z) as a product of elementary matrices."""
    g = ex.identity(d)
    for _ in range(steps):
        i, j = rng.sample(range(d), 2)
        c = rng.randint(-bound, bound)
        for row in g:
            row[j] += c * row[i]
    return g


def random_standing_form(
    d: int, rng: random.Random, hyperbolic: bool = True, bound: int = 3,
    max_tries: int = 10000,
) -> IntegralQuadraticForm:
    """Random integral form satisfying the standing assumption.

    Built as ``P^t D P`` for a random unimodular ``P`` and a diagonal ``D``
    of the requested signature, then rejected until ``Q(e_d) > 0`` and the
    complement of ``e_d`` is definite.
    """
    for _ in range(max_tries):
        diag = [rng.randint(1, bound) for _ in range(d)]
        if hyperbolic:
            diag = [-x for x in diag[:-1]] + [diag[-1]]
        p = random_sl(d, rng, steps=rng.randint(1, 2 * d), bound=1)
        dm = [[diag[i] if i == j else 0 for j in range(d)] for i in range(d)]
        m = ex.matmul(ex.transpose(p), ex.matmul(dm, p))
        q = IntegralQuadraticForm.from_matrix(m)
        if q.standing_ok:
            return q
    raise RuntimeError("failed to draw a standing-assumption form")
