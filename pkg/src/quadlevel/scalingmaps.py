"""Normalization maps that carry level sets back to a fixed level.

Two diagonalizable maps scale the hyperplane ``v^perp`` by
``alpha = T^{-1/(2(d-1))}`` and a complementary line by ``beta = T^{1/2}``:
``S`` uses the Euclidean complement ``v``, ``S^Q`` uses ``v_Q``, the direction
Q*-orthogonal to the image of ``v^perp``. They differ by a unipotent matrix in
the limit; the rate of that comparison is exposed here.

Normalization of ``v_Q``: the direction is ``M v`` and its length is fixed by
``v_Q = v + hat_v_Q`` with ``hat_v_Q`` Euclidean-orthogonal to ``v``, which
gives ``v_Q = (|v|^2 / Q(v)) M v``. The shorter expression ``M v / Q(v)``
has the right direction but satisfies ``<v_Q, v> = 1`` instead of ``|v|^2``;
:func:`vQ` reports its defect alongside the corrected vector.
"""

from __future__ import annotations

import decimal
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _exact as ex
from .forms import IntegralQuadraticForm, evaluate, tau

__all__ = [
    "VQ",
    "ScalingMapBundle",
    "scale_map",
    "vQ",
    "hatvQ",
    "dual_scale_map",
    "dual_scale_map_rational",
    "unipotent_comparator",
    "project_levelset",
    "residual_decay",
]


def _exponents(d: int, t: float) -> tuple[float, float]:
    if not t > 0:
        raise ValueError("T must be positive")
    return t ** (-1.0 / (2 * (d - 1))), t**0.5


def scale_map(v: Sequence[float], t: float) -> np.ndarray:
    """``alpha (I - P) + beta P`` with ``P`` the orthogonal projector on ``v``."""
    v = np.asarray(v, dtype=float)
    nv = float(v @ v)
    if nv == 0:
        raise ValueError("v must be nonzero")
    d = len(v)
    alpha, beta = _exponents(d, t)
    p = np.outer(v, v) / nv
    return alpha * (np.eye(d) - p) + beta * p


@dataclass(frozen=True)
class VQ:
    """``v_Q`` in exact rationals with the check of the unscaled formula.

    ``value`` is ``(|v|^2/Q(v)) M v``; ``raw`` is ``M v / Q(v)`` and
    ``raw_defect = <raw - v, v>``, nonzero exactly when ``raw`` violates the
    normalization ``<v_Q - v, v> = 0`` (``flagged``).
    """

    value: tuple[Fraction, ...]
    raw: tuple[Fraction, ...]
    raw_defect: Fraction

    @property
    def flagged(self) -> bool:
        return self.raw_defect != 0


def vQ(q: IntegralQuadraticForm, v: Sequence[int]) -> VQ:
    v = [int(x) for x in v]
    qv = evaluate(q, v)
    if qv == 0:
        raise ValueError("Q(v) must be nonzero")
    mv = ex.matvec(q.gram, v)
    nv = ex.dot(v, v)
    raw = [Fraction(x, qv) for x in mv]
    value = [Fraction(nv * x, qv) for x in mv]
    if ex.dot([a - b for a, b in zip(value, v)], v) != 0:
        raise AssertionError("normalized v_Q is not orthogonal-complementary to v")
    defect = ex.dot([a - b for a, b in zip(raw, v)], v)
    return VQ(tuple(value), tuple(raw), Fraction(defect))


def hatvQ(q: IntegralQuadraticForm, v: Sequence[int]) -> tuple[Fraction, ...]:
    """``v_Q - v``, orthogonal to ``v``."""
    val = vQ(q, v).value
    return tuple(a - int(b) for a, b in zip(val, v))


def _vq_float(q, v) -> tuple[np.ndarray, np.ndarray]:
    v = np.asarray(v, dtype=float)
    m = q.array().astype(float)
    mv = m @ v
    qv = float(v @ mv)
    if qv == 0:
        raise ValueError("Q(v) must be nonzero")
    return v, (float(v @ v) / qv) * mv


def dual_scale_map(q: IntegralQuadraticForm, v: Sequence[float], t: float) -> np.ndarray:
    """``alpha Pi + beta (I - Pi)``, ``Pi`` projecting onto ``v^perp`` along
    ``v_Q``."""
    v, vq = _vq_float(q, v)
    d = len(v)
    alpha, beta = _exponents(d, t)
    denom = float(vq @ v)
    if denom == 0:
        raise ValueError("projector is degenerate: <v_Q, v> = 0")
    comp = np.outer(vq, v) / denom  # I - Pi
    return alpha * (np.eye(d) - comp) + beta * comp


@dataclass(frozen=True)
class ScalingMapBundle:
    v: np.ndarray
    t: float
    S: np.ndarray
    SQ: np.ndarray
    u: np.ndarray
    residual: np.ndarray
    defect: np.ndarray
    predicted_defect: np.ndarray

    @property
    def residual_norm(self) -> float:
        return float(np.linalg.norm(self.residual, 2))


def _rational_power(t: float, num: int, den: int) -> Fraction:
    # t ** (num/den) to about 60 significant digits
    with decimal.localcontext() as ctx:
        ctx.prec = 60
        val = decimal.Decimal(t) ** (decimal.Decimal(num) / decimal.Decimal(den))
    return Fraction(val)


def dual_scale_map_rational(q: IntegralQuadraticForm, v: Sequence[int], t: float) -> list[list[Fraction]]:
    """:func:`dual_scale_map` in rationals, ``alpha`` and ``beta`` rounded to
    60 digits; its determinant is ``1`` to that precision."""
    vi = [int(x) for x in v]
    d = len(vi)
    vq = vQ(q, vi).value
    alpha = _rational_power(t, -1, 2 * (d - 1))
    beta = _rational_power(t, 1, 2)
    denom = ex.dot(vq, vi)
    return [
        [(beta - alpha) * vq[i] * vi[j] / denom + (alpha if i == j else 0) for j in range(d)]
        for i in range(d)
    ]


def unipotent_comparator(q: IntegralQuadraticForm, v: Sequence[int], t: float) -> ScalingMapBundle:
    """Compare ``S^Q S^{-1}`` with ``u = I + hat_v_Q v^t / |v|^2``.

    ``defect = (I - u^{-1} S^Q S^{-1}) v`` equals
    ``+T^{-d/(2(d-1))} u^{-1} hat_v_Q``; both are returned.

    The comparison is formed in rationals, with ``alpha`` and ``beta``
    rounded to 60 digits, and only then converted to binary64. In floats the
    cancellation costs a factor ``|hat_v_Q| beta / (|v| alpha)``, which near the
    light cone of ``Q`` exceeds the tolerance of the defect identity.
    """
    vi = [int(x) for x in v]
    d = len(vi)
    vq = vQ(q, vi).value
    nv = ex.dot(vi, vi)
    hat = [a - b for a, b in zip(vq, vi)]
    alpha = _rational_power(t, -1, 2 * (d - 1))
    beta = _rational_power(t, 1, 2)
    eye = ex.identity(d)
    p = [[Fraction(vi[i] * vi[j], nv) for j in range(d)] for i in range(d)]
    s_inv = [[(eye[i][j] - p[i][j]) / alpha + p[i][j] / beta for j in range(d)] for i in range(d)]
    sq = dual_scale_map_rational(q, vi, t)
    uinv = [[eye[i][j] - hat[i] * vi[j] / nv for j in range(d)] for i in range(d)]  # (u - I)^2 = 0
    comp = ex.matmul(uinv, ex.matmul(sq, s_inv))
    defect = [vi[i] - sum(comp[i][j] * vi[j] for j in range(d)) for i in range(d)]
    coef = _rational_power(t, -d, 2 * (d - 1))
    predicted = [coef * x for x in ex.matvec(uinv, hat)]

    def f(m):
        return np.array([[float(x) for x in row] for row in m])

    vv = np.array(vi, dtype=float)
    u = np.eye(d) + np.outer([float(x) for x in hat], vv) / nv
    residual = f([[comp[i][j] - eye[i][j] for j in range(d)] for i in range(d)])
    return ScalingMapBundle(
        vv, float(t), scale_map(vv, t), f(sq), u, residual,
        np.array([float(x) for x in defect]), np.array([float(x) for x in predicted]),
    )


def project_levelset(q: IntegralQuadraticForm, g, rtol: float = 1e-8) -> np.ndarray:
    """``S^Q_{T, tau(g)} g`` with ``T = Q(tau(g)) / Q(e_d)``; the result has
    ``Q(tau) = Q(e_d)``."""
    g = np.asarray(g, dtype=float)
    m = q.array().astype(float)
    v = np.asarray(tau(g), dtype=float)
    t = float(v @ m @ v) / q.q_ed
    if not t > 0:
        raise ValueError("tau(g) does not lie on a positive level")
    out = dual_scale_map(q, v, t) @ g
    w = np.asarray(tau(out), dtype=float)
    got = float(w @ m @ w)
    if abs(got - q.q_ed) > rtol * max(1.0, abs(q.q_ed)) * max(1.0, t):
        raise AssertionError("projection missed the target level")
    return out


def residual_decay(q: IntegralQuadraticForm, v: Sequence[int], ts: Sequence[float]):
    """Residual norms over ``ts`` and the fitted log-log slope."""
    norms = np.array([unipotent_comparator(q, v, t).residual_norm for t in ts])
    slope = float(np.polyfit(np.log(ts), np.log(norms), 1)[0]) if np.all(norms > 0) else float("nan")
    return norms, slope
