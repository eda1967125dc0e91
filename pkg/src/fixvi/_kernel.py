"""Compiled inner loop for affine problems.

Every operator is passed in flattened form ``x -> A x + b``.  The loop only
produces iterates and the stopping decision; all trace metrics are computed
afterwards in numpy from the stored iterates.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda fn: fn


CONVERGED, MAX_ITER, DIVERGED = 0, 1, 2


@njit(cache=True)
def _pnorm(v, p):
    m = 0.0
    for i in range(v.shape[0]):
        a = abs(v[i])
        if a > m:
            m = a
    if m == 0.0:
        return 0.0
    s = 0.0
    if p == 2.0:
        for i in range(v.shape[0]):
            s += v[i] * v[i]
        return np.sqrt(s)
    for i in range(v.shape[0]):
        s += (abs(v[i]) / m) ** p
    return m * s ** (1.0 / p)


@njit(cache=True)
def _affine(A, b, x, out):
    d = x.shape[0]
    for i in range(d):
        acc = 0.0
        for j in range(d):
            acc += A[i, j] * x[j]
        out[i] = acc + b[i]


@njit(cache=True)
def _residual(x, cyclic, m, mats, offs, betas_op, RA, rb, p, tmp, z):
    if cyclic:
        N = mats.shape[0]
        for i in range(x.shape[0]):
            z[i] = x[i]
        for j in range(N):
            k = (m + j) % N
            _affine(mats[k], offs[k], z, tmp)
            bk = betas_op[k]
            for i in range(x.shape[0]):
                z[i] = bk * z[i] + (1.0 - bk) * tmp[i]
    else:
        _affine(RA, rb, x, z)
    for i in range(x.shape[0]):
        tmp[i] = x[i] - z[i]
    return _pnorm(tmp, p)


@njit(cache=True)
def run_affine(x0, cyclic, mats, offs, alphas, betas, betas_op, gamma, mu, Af, bf, AG, bG,
               RA, rb, p, step_tol, res_tol, X):
    """Fill ``X[0..n]`` with iterates; returns ``(n, status)``.

    Synchronal: ``mats[0], offs[0]`` is the convex combination and
    ``betas[n]`` its averaging weight.  Cyclic: step n uses operator
    ``n % N`` averaged with ``betas_op[n % N]``.
    """
    d = x0.shape[0]
    n_max = alphas.shape[0]
    N = mats.shape[0]
    x = x0.copy()
    y = np.empty(d)
    t = np.empty(d)
    fx = np.empty(d)
    gy = np.empty(d)
    tmp = np.empty(d)
    z = np.empty(d)
    for i in range(d):
        X[0, i] = x[i]
    for n in range(n_max):
        if cyclic:
            k = n % N
            bn = betas_op[k]
        else:
            k = 0
            bn = betas[n]
        an = alphas[n]
        _affine(mats[k], offs[k], x, t)
        for i in range(d):
            y[i] = bn * x[i] + (1.0 - bn) * t[i]
        _affine(Af, bf, x, fx)
        _affine(AG, bG, y, gy)
        finite = True
        for i in range(d):
            v = an * gamma * fx[i] + y[i] - an * mu * gy[i]
            tmp[i] = v - x[i]
            x[i] = v
            if not np.isfinite(v):
                finite = False
        if not finite:
            return n, DIVERGED
        for i in range(d):
            X[n + 1, i] = x[i]
        step = _pnorm(tmp, p)
        if step <= step_tol:
            res = _residual(x, cyclic, n + 1, mats, offs, betas_op, RA, rb, p, tmp, z)
            if res <= res_tol:
                return n + 1, CONVERGED
    return n_max, MAX_ITER
