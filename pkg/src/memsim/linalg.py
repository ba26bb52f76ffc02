"""Dense LU with partial pivoting and an explicit singularity test.

The kernels are compiled with numba so the transient loop can call them per
inner iteration without interpreter overhead.
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = ["SingularMatrix", "SINGULAR_RTOL", "factor", "solve_factored", "solve_linear", "lu_inplace", "lu_solve"]

SINGULAR_RTOL = 1e-13


class SingularMatrix(ArithmeticError):
    pass


@njit(cache=True)
def lu_inplace(a, piv):
    """Overwrite ``a`` with its LU factors (unit lower L). Returns the index of
    the first pivot below ``SINGULAR_RTOL * max|a|``, or -1."""
    n = a.shape[0]
    scale = 0.0
    for i in range(n):
        for j in range(n):
            v = abs(a[i, j])
            if v > scale:
                scale = v
    if scale == 0.0 or not np.isfinite(scale):
        return 0
    tiny = SINGULAR_RTOL * scale
    for k in range(n):
        p = k
        best = abs(a[k, k])
        for i in range(k + 1, n):
            v = abs(a[i, k])
            if v > best:
                best = v
                p = i
        piv[k] = p
        if best < tiny:
            return k
        if p != k:
            for j in range(n):
                tmp = a[k, j]
                a[k, j] = a[p, j]
                a[p, j] = tmp
        inv = 1.0 / a[k, k]
        for i in range(k + 1, n):
            f = a[i, k] * inv
            a[i, k] = f
            if f != 0.0:
                for j in range(k + 1, n):
                    a[i, j] -= f * a[k, j]
    return -1


@njit(cache=True)
def lu_solve(lu, piv, b):
    n = lu.shape[0]
    x = b.copy()
    for k in range(n):
        p = piv[k]
        if p != k:
            tmp = x[k]
            x[k] = x[p]
            x[p] = tmp
    for i in range(n):
        s = x[i]
        for j in range(i):
            s -= lu[i, j] * x[j]
        x[i] = s
    for i in range(n - 1, -1, -1):
        s = x[i]
        for j in range(i + 1, n):
            s -= lu[i, j] * x[j]
        x[i] = s / lu[i, i]
    return x


def factor(a: np.ndarray):
    """LU-factor a copy of ``a``; raise SingularMatrix on a tiny pivot."""
    lu = np.array(a, dtype=float, copy=True)
    if lu.ndim != 2 or lu.shape[0] != lu.shape[1] or lu.shape[0] == 0:
        raise SingularMatrix(f"need a non-empty square matrix, got shape {lu.shape}")
    piv = np.zeros(lu.shape[0], dtype=np.int64)
    bad = lu_inplace(lu, piv)
    if bad >= 0:
        raise SingularMatrix(f"pivot {bad} below {SINGULAR_RTOL:g} x max|A|")
    return lu, piv


def solve_factored(lu_piv, b: np.ndarray) -> np.ndarray:
    lu, piv = lu_piv
    return lu_solve(lu, piv, np.asarray(b, dtype=float))


def solve_linear(a, b) -> np.ndarray:
    """Solve ``a x = b`` by LU with partial pivoting."""
    return solve_factored(factor(np.asarray(a, dtype=float)), b)
