"""Hot numeric kernels, each with a numba and a pure-numpy implementation.

The numba path is used when numba imports cleanly and the environment
variable ``SESQUIOP_NUMBA`` is not set to ``0``.  Both paths compute the
same quantities; ``benchmarks/bench_accel.py`` times one against the other
and the test-suite checks that they agree.

Truncated power series are stored as complex arrays of shape
``(order + 1, m)``: row ``n`` holds the normalized coefficient
``f^(n)(x0) / n!`` for each of ``m`` expansion points.
"""
from __future__ import annotations

import os

import numpy as np

_FLAG = os.environ.get("SESQUIOP_NUMBA", "1").strip().lower()

try:
    if _FLAG in ("0", "false", "no", "off"):
        raise ImportError("numba disabled by SESQUIOP_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


# ---------------------------------------------------------------------------
# pure numpy implementations
# ---------------------------------------------------------------------------

def np_series_mul(a, b):
    order = a.shape[0] - 1
    out = np.zeros(a.shape, dtype=np.complex128)
    for n in range(order + 1):
        acc = out[n]
        for k in range(n + 1):
            acc += a[k] * b[n - k]
    return out


def np_series_div(a, b):
    order = a.shape[0] - 1
    out = np.zeros(a.shape, dtype=np.complex128)
    inv = 1.0 / b[0]
    for n in range(order + 1):
        acc = a[n].copy()
        for k in range(1, n + 1):
            acc -= b[k] * out[n - k]
        out[n] = acc * inv
    return out


def np_series_exp(g):
    order = g.shape[0] - 1
    out = np.zeros(g.shape, dtype=np.complex128)
    out[0] = np.exp(g[0])
    for n in range(1, order + 1):
        acc = np.zeros(g.shape[1], dtype=np.complex128)
        for k in range(1, n + 1):
            acc += k * g[k] * out[n - k]
        out[n] = acc / n
    return out


def np_series_sinhcosh(g, trig):
    """sinh/cosh pair of a series (sin/cos when ``trig`` is true)."""
    order = g.shape[0] - 1
    s = np.zeros(g.shape, dtype=np.complex128)
    c = np.zeros(g.shape, dtype=np.complex128)
    if trig:
        s[0] = np.sin(g[0])
        c[0] = np.cos(g[0])
        sign = -1.0
    else:
        s[0] = np.sinh(g[0])
        c[0] = np.cosh(g[0])
        sign = 1.0
    for n in range(1, order + 1):
        acc_s = np.zeros(g.shape[1], dtype=np.complex128)
        acc_c = np.zeros(g.shape[1], dtype=np.complex128)
        for k in range(1, n + 1):
            kg = k * g[k]
            acc_s += kg * c[n - k]
            acc_c += kg * s[n - k]
        s[n] = acc_s / n
        c[n] = sign * acc_c / n
    return s, c


def np_gauss_legendre(n, tol=1e-15, maxiter=100):
    i = np.arange(n, dtype=np.float64)
    x = np.cos(np.pi * (i + 0.75) / (n + 0.5))
    for _ in range(maxiter):
        p0 = np.ones(n)
        p1 = x.copy()
        for k in range(2, n + 1):
            p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
        dp = n * (x * p1 - p0) / (x * x - 1.0)
        dx = p1 / dp
        x = x - dx
        if np.max(np.abs(dx)) <= tol:
            break
    # derivative at the converged nodes for the weights
    p0 = np.ones(n)
    p1 = x.copy()
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    dp = n * (x * p1 - p0) / (x * x - 1.0)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    return x[::-1].copy(), w[::-1].copy()


def np_bary_diffmats(x, v):
    n = x.size
    dx = x[:, None] - x[None, :]
    np.fill_diagonal(dx, 1.0)
    inv = 1.0 / dx
    np.fill_diagonal(inv, 0.0)
    d1 = (v[None, :] / v[:, None]) * inv
    np.fill_diagonal(d1, 0.0)
    np.fill_diagonal(d1, -d1.sum(axis=1))
    d2 = 2.0 * d1 * (np.diag(d1)[:, None] - inv)
    np.fill_diagonal(d2, 0.0)
    np.fill_diagonal(d2, -d2.sum(axis=1))
    assert d1.shape == (n, n)
    return d1, d2


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def nb_series_mul(a, b):
        N, m = a.shape
        out = np.zeros((N, m), dtype=np.complex128)
        for n in range(N):
            for k in range(n + 1):
                for j in range(m):
                    out[n, j] += a[k, j] * b[n - k, j]
        return out

    @njit(cache=True)
    def nb_series_div(a, b):
        N, m = a.shape
        out = np.zeros((N, m), dtype=np.complex128)
        for j in range(m):
            inv = 1.0 / b[0, j]
            for n in range(N):
                acc = a[n, j]
                for k in range(1, n + 1):
                    acc -= b[k, j] * out[n - k, j]
                out[n, j] = acc * inv
        return out

    @njit(cache=True)
    def nb_series_exp(g):
        N, m = g.shape
        out = np.zeros((N, m), dtype=np.complex128)
        for j in range(m):
            out[0, j] = np.exp(g[0, j])
            for n in range(1, N):
                acc = 0j
                for k in range(1, n + 1):
                    acc += k * g[k, j] * out[n - k, j]
                out[n, j] = acc / n
        return out

    @njit(cache=True)
    def nb_series_sinhcosh(g, trig):
        N, m = g.shape
        s = np.zeros((N, m), dtype=np.complex128)
        c = np.zeros((N, m), dtype=np.complex128)
        sign = -1.0 if trig else 1.0
        for j in range(m):
            if trig:
                s[0, j] = np.sin(g[0, j])
                c[0, j] = np.cos(g[0, j])
            else:
                s[0, j] = np.sinh(g[0, j])
                c[0, j] = np.cosh(g[0, j])
            for n in range(1, N):
                acc_s = 0j
                acc_c = 0j
                for k in range(1, n + 1):
                    kg = k * g[k, j]
                    acc_s += kg * c[n - k, j]
                    acc_c += kg * s[n - k, j]
                s[n, j] = acc_s / n
                c[n, j] = sign * acc_c / n
        return s, c

    @njit(cache=True)
    def nb_gauss_legendre(n, tol=1e-15, maxiter=100):
        x = np.empty(n)
        w = np.empty(n)
        for i in range(n):
            xi = np.cos(np.pi * (i + 0.75) / (n + 0.5))
            dp = 1.0
            for it in range(maxiter + 1):
                p0 = 1.0
                p1 = xi
                for k in range(2, n + 1):
                    p2 = ((2 * k - 1) * xi * p1 - (k - 1) * p0) / k
                    p0 = p1
                    p1 = p2
                dp = n * (xi * p1 - p0) / (xi * xi - 1.0)
                if it == maxiter:
                    break
                dx = p1 / dp
                xi -= dx
                if abs(dx) <= tol:
                    # one more pass refreshes dp at the final node
                    p0 = 1.0
                    p1 = xi
                    for k in range(2, n + 1):
                        p2 = ((2 * k - 1) * xi * p1 - (k - 1) * p0) / k
                        p0 = p1
                        p1 = p2
                    dp = n * (xi * p1 - p0) / (xi * xi - 1.0)
                    break
            x[n - 1 - i] = xi
            w[n - 1 - i] = 2.0 / ((1.0 - xi * xi) * dp * dp)
        return x, w

    @njit(cache=True)
    def nb_bary_diffmats(x, v):
        n = x.size
        d1 = np.zeros((n, n))
        d2 = np.zeros((n, n))
        for i in range(n):
            s = 0.0
            for j in range(n):
                if i != j:
                    d1[i, j] = (v[j] / v[i]) / (x[i] - x[j])
                    s += d1[i, j]
            d1[i, i] = -s
        for i in range(n):
            s = 0.0
            for j in range(n):
                if i != j:
                    d2[i, j] = 2.0 * d1[i, j] * (d1[i, i] - 1.0 / (x[i] - x[j]))
                    s += d2[i, j]
            d2[i, i] = -s
        return d1, d2


def _select(name):
    if HAVE_NUMBA:
        return globals()["nb_" + name]
    return globals()["np_" + name]


series_mul = _select("series_mul")
series_div = _select("series_div")
series_exp = _select("series_exp")
series_sinhcosh = _select("series_sinhcosh")
gauss_legendre = _select("gauss_legendre")
bary_diffmats = _select("bary_diffmats")

BACKEND = "numba" if HAVE_NUMBA else "numpy"
