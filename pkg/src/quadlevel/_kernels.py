"""Compiled batch kernel: squared successive minima of orthogonal lattices.

Mirrors ``orthogeom.ortho_lattice`` + ``orthogeom.successive_minima`` for many
vectors at once. Gram entries and norms are exact int64; binary64 is used
only to steer the LLL pass and the enumeration bounds, with padding, and every
reported norm is recomputed in integers. Rows the kernel cannot finish (short
vector buffer overflow) are flagged and recomputed by the exact path.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_CAP = 4000


@njit(cache=True)
def _kernel_basis(v, u):
    d = v.shape[0]
    r = v.copy()
    for i in range(d):
        for j in range(d):
            u[i, j] = 1 if i == j else 0
    while True:
        piv = -1
        cnt = 0
        for i in range(d):
            if r[i] != 0:
                cnt += 1
                if piv < 0 or abs(r[i]) < abs(r[piv]):
                    piv = i
        if cnt <= 1:
            break
        for j in range(d):
            if j != piv and r[j] != 0:
                q = r[j] // r[piv]
                r[j] -= q * r[piv]
                for t in range(d):
                    u[t, j] -= q * u[t, piv]
    nz = -1
    for i in range(d):
        if r[i] != 0:
            nz = i
    if nz != d - 1:
        for t in range(d):
            tmp = u[t, nz]
            u[t, nz] = u[t, d - 1]
            u[t, d - 1] = tmp


@njit(cache=True)
def _gram(b, n, d, g):
    for i in range(n):
        for j in range(n):
            s = 0
            for t in range(d):
                s += b[t, i] * b[t, j]
            g[i, j] = s


@njit(cache=True)
def _lll(b, n, d, g):
    # textbook LLL (delta 0.99) on integer columns, Gram-Schmidt in floats
    mu = np.zeros((n, n))
    bn = np.zeros(n)
    k = 1
    it = 0
    while k < n and it < 10000:
        it += 1
        _gram(b, n, d, g)
        for i in range(n):
            acc = float(g[i, i])
            for j in range(i):
                m = float(g[i, j])
                for l in range(j):
                    m -= mu[j, l] * mu[i, l] * bn[l]
                mu[i, j] = m / bn[j]
                acc -= mu[i, j] * mu[i, j] * bn[j]
            bn[i] = acc
        for j in range(k - 1, -1, -1):
            c = np.floor(mu[k, j] + 0.5)
            if c != 0:
                ci = np.int64(c)
                for t in range(d):
                    b[t, k] -= ci * b[t, j]
                for l in range(j):
                    mu[k, l] -= c * mu[j, l]
                mu[k, j] -= c
        _gram(b, n, d, g)
        acc = float(g[k, k])
        for j in range(k):
            m = float(g[k, j])
            for l in range(j):
                m -= mu[j, l] * mu[k, l] * bn[l]
            mu[k, j] = m / bn[j]
            acc -= mu[k, j] * mu[k, j] * bn[j]
        bn[k] = acc
        if bn[k] < (0.99 - mu[k, k - 1] ** 2) * bn[k - 1]:
            for t in range(d):
                tmp = b[t, k]
                b[t, k] = b[t, k - 1]
                b[t, k - 1] = tmp
            k = max(k - 1, 1)
        else:
            k += 1
    _gram(b, n, d, g)


@njit(cache=True)
def _independent(rows, nrows, x, n):
    # fraction-free elimination against an echelon list; returns True and
    # appends the reduced row when x is independent
    y = x.copy()
    for r in range(nrows):
        pc = -1
        for c in range(n):
            if rows[r, c] != 0:
                pc = c
                break
        if y[pc] != 0:
            a = rows[r, pc]
            f = y[pc]
            for c in range(n):
                y[c] = y[c] * a - rows[r, c] * f
            g = 0
            for c in range(n):
                g = np.gcd(g, abs(y[c])) if y[c] != 0 else g
            if g > 1:
                for c in range(n):
                    y[c] //= g
    for c in range(n):
        if y[c] != 0:
            for t in range(n):
                rows[nrows, t] = y[t]
            return True
    return False


@njit(cache=True)
def _minima_one(v, out):
    d = v.shape[0]
    n = d - 1
    u = np.zeros((d, d), dtype=np.int64)
    _kernel_basis(v, u)
    b = u[:, :n].copy()
    g = np.zeros((n, n), dtype=np.int64)
    _lll(b, n, d, g)
    bound = 0
    for i in range(n):
        if g[i, i] > bound:
            bound = g[i, i]
    # Cohen decomposition in floats
    q = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            q[i, j] = g[i, j]
    for i in range(n):
        for j in range(i + 1, n):
            q[j, i] = q[i, j]
            q[i, j] = q[i, j] / q[i, i]
        for k in range(i + 1, n):
            for l in range(k, n):
                q[k, l] -= q[k, i] * q[i, l]
    pad = 1e-7 * (bound + 1)
    norms = np.empty(_CAP, dtype=np.int64)
    vecs = np.empty((_CAP, n), dtype=np.int64)
    cnt = 0
    x = np.zeros(n, dtype=np.int64)
    hi = np.zeros(n, dtype=np.int64)
    rem = np.zeros(n + 1)
    centre = np.zeros(n)
    i = n - 1
    rem[n] = float(bound)
    # initialise level i
    centre[i] = 0.0
    r = np.sqrt(max(rem[i + 1] + pad, 0.0) / q[i, i])
    x[i] = np.int64(np.ceil(centre[i] - r - 1e-9))
    hi[i] = np.int64(np.floor(centre[i] + r + 1e-9))
    while True:
        if x[i] > hi[i]:
            i += 1
            if i >= n:
                break
            x[i] += 1
            continue
        t = x[i] - centre[i]
        left = rem[i + 1] - q[i, i] * t * t
        if i == 0:
            nz = False
            for c in range(n):
                if x[c] != 0:
                    nz = True
            if nz:
                s = 0
                for a in range(n):
                    for c in range(n):
                        s += x[a] * g[a, c] * x[c]
                if s <= bound:
                    if cnt >= _CAP:
                        return False
                    norms[cnt] = s
                    for c in range(n):
                        vecs[cnt, c] = x[c]
                    cnt += 1
            x[0] += 1
            continue
        if left + pad < 0:
            x[i] += 1
            continue
        rem[i] = left
        i -= 1
        cs = 0.0
        for j in range(i + 1, n):
            cs -= q[i, j] * x[j]
        centre[i] = cs
        r = np.sqrt(max(rem[i + 1] + pad, 0.0) / q[i, i])
        x[i] = np.int64(np.ceil(cs - r - 1e-9))
        hi[i] = np.int64(np.floor(cs + r + 1e-9))
    order = np.argsort(norms[:cnt], kind="mergesort")
    rows = np.zeros((n, n), dtype=np.int64)
    got = 0
    for idx in order:
        if _independent(rows, got, vecs[idx], n):
            out[got] = norms[idx]
            got += 1
            if got == n:
                return True
    return False


@njit(cache=True)
def _minima_batch(vs, out, ok):
    for i in range(vs.shape[0]):
        ok[i] = _minima_one(vs[i], out[i])


def batch_minima(vs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Squared successive minima of ``v^perp ∩ Z^d`` for each row ``v``.

    Returns ``(minima, ok)``; rows with ``ok == False`` were not finished.
    """
    vs = np.ascontiguousarray(vs, dtype=np.int64)
    n = vs.shape[1] - 1
    out = np.zeros((len(vs), n), dtype=np.int64)
    ok = np.zeros(len(vs), dtype=np.bool_)
    if len(vs):
        _minima_batch(vs, out, ok)
    return out, ok
