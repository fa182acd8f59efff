"""Compiled fixed-step integrator for polymatrix games with built-in regularizers.

Mirrors ``ForelSystem.choice``/``payoffs`` and the loop in
``dynamics.integrate_many``; the numpy path stays the reference and the two
are cross-checked in the tests.
"""
import numpy as np
from numba import njit

ENTROPIC = 0
EUCLIDEAN = 1
KIND_CODES = {"entropic": ENTROPIC, "euclidean": EUCLIDEAN}


@njit(cache=True)
def _choice(y, offsets, kinds, x):
    N = kinds.shape[0]
    for i in range(N):
        s = offsets[i]
        e = offsets[i + 1]
        if kinds[i] == ENTROPIC:
            m = y[s]
            for k in range(s + 1, e):
                if y[k] > m:
                    m = y[k]
            tot = 0.0
            for k in range(s, e):
                x[k] = np.exp(y[k] - m)
                tot += x[k]
            for k in range(s, e):
                x[k] /= tot
        else:
            # insertion sort, descending, into the scratch slots x[s:e]
            for k in range(s, e):
                val = y[k]
                j = k
                while j > s and x[j - 1] < val:
                    x[j] = x[j - 1]
                    j -= 1
                x[j] = val
            css = 0.0
            theta = 0.0
            for k in range(e - s):
                css += x[s + k]
                t = (css - 1.0) / (k + 1)
                if x[s + k] - t > 0:
                    theta = t
            for k in range(s, e):
                d = y[k] - theta
                x[k] = d if d > 0.0 else 0.0


@njit(cache=True)
def _stage(y, MT, a, b, offsets, kinds, x, v, u):
    _choice(y, offsets, kinds, x)
    D = y.shape[0]
    for k in range(D):
        acc = 0.0
        for j in range(D):
            acc += x[j] * MT[j, k]
        v[k] = a[k] * acc + b[k]
    N = kinds.shape[0]
    for i in range(N):
        acc = 0.0
        for k in range(offsets[i], offsets[i + 1]):
            acc += v[k] * x[k]
        u[i] = acc


@njit(cache=True)
def integrate_polymatrix(Y0, MT, a, b, offsets, kinds, h, n_steps, steps, rk4, bound):
    """Returns ``(ys, cvs, cus, fail_step)``; ``fail_step`` is -1 on success."""
    B, D = Y0.shape
    N = kinds.shape[0]
    K = steps.shape[0]
    ys = np.empty((K, B, D))
    cvs = np.empty((K, B, D))
    cus = np.empty((K, B, N))
    x = np.empty(D)
    v1 = np.empty(D)
    v2 = np.empty(D)
    v3 = np.empty(D)
    v4 = np.empty(D)
    u1 = np.empty(N)
    u2 = np.empty(N)
    u3 = np.empty(N)
    u4 = np.empty(N)
    tmp = np.empty(D)
    h2 = 0.5 * h
    h6 = h / 6.0
    for bi in range(B):
        y = Y0[bi].copy()
        cv = np.zeros(D)
        cu = np.zeros(N)
        ys[0, bi] = y
        cvs[0, bi] = cv
        cus[0, bi] = cu
        k = 1
        for n in range(1, n_steps + 1):
            if rk4:
                _stage(y, MT, a, b, offsets, kinds, x, v1, u1)
                for d in range(D):
                    tmp[d] = y[d] + h2 * v1[d]
                _stage(tmp, MT, a, b, offsets, kinds, x, v2, u2)
                for d in range(D):
                    tmp[d] = y[d] + h2 * v2[d]
                _stage(tmp, MT, a, b, offsets, kinds, x, v3, u3)
                for d in range(D):
                    tmp[d] = y[d] + h * v3[d]
                _stage(tmp, MT, a, b, offsets, kinds, x, v4, u4)
                for d in range(D):
                    dv = h6 * (v1[d] + 2.0 * (v2[d] + v3[d]) + v4[d])
                    y[d] += dv
                    cv[d] += dv
                for i in range(N):
                    cu[i] += h6 * (u1[i] + 2.0 * (u2[i] + u3[i]) + u4[i])
            else:
                _stage(y, MT, a, b, offsets, kinds, x, v1, u1)
                for d in range(D):
                    dv = h * v1[d]
                    y[d] += dv
                    cv[d] += dv
                for i in range(N):
                    cu[i] += h * u1[i]
            for d in range(D):
                if not abs(y[d]) <= bound:
                    return ys, cvs, cus, n
            if k < K and n == steps[k]:
                ys[k, bi] = y
                cvs[k, bi] = cv
                cus[k, bi] = cu
                k += 1
    return ys, cvs, cus, -1
