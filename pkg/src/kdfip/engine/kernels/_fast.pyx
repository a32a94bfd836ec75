# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernel core: fused single-pass loops plus BLAS dgemm.

Mirrors the interface of ``_py``. Matrix products call the same BLAS that
NumPy links against (via scipy's cython_blas); everything else is a fused C
loop, which avoids the temporaries and multiple passes of the NumPy
reference on the small matrices this package works with.
"""

import numpy as np

from libc.math cimport exp, log, sqrt, tanh as c_tanh
from scipy.linalg.cython_blas cimport dgemm


cdef inline double _max(double a, double b) nogil:
    return a if a > b else b


# ---------------------------------------------------------------------------
# matrix products (row-major arrays through column-major BLAS)

def matmul(double[:, ::1] a, double[:, ::1] b):
    cdef int m = a.shape[0], k = a.shape[1], n = b.shape[1]
    out = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] c = out
    cdef double alpha = 1.0, beta = 0.0
    if m == 0 or n == 0 or k == 0:
        out[:] = 0.0
        return out
    dgemm("N", "N", &n, &m, &k, &alpha, &b[0, 0], &n, &a[0, 0], &k, &beta, &c[0, 0], &n)
    return out


def matmul_nt(double[:, ::1] a, double[:, ::1] b):
    """a @ b.T with a (m,k), b (n,k)."""
    cdef int m = a.shape[0], k = a.shape[1], n = b.shape[0]
    out = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] c = out
    cdef double alpha = 1.0, beta = 0.0
    if m == 0 or n == 0 or k == 0:
        out[:] = 0.0
        return out
    dgemm("T", "N", &n, &m, &k, &alpha, &b[0, 0], &k, &a[0, 0], &k, &beta, &c[0, 0], &n)
    return out


def matmul_tn(double[:, ::1] a, double[:, ::1] b):
    """a.T @ b with a (k,m), b (k,n)."""
    cdef int k = a.shape[0], m = a.shape[1], n = b.shape[1]
    out = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] c = out
    cdef double alpha = 1.0, beta = 0.0
    if m == 0 or n == 0 or k == 0:
        out[:] = 0.0
        return out
    dgemm("N", "T", &n, &m, &k, &alpha, &b[0, 0], &n, &a[0, 0], &m, &beta, &c[0, 0], &n)
    return out


# ---------------------------------------------------------------------------
# elementwise

def add(a, b):
    out = np.empty_like(a)
    cdef double[::1] x = a.reshape(-1), y = b.reshape(-1), z = out.reshape(-1)
    cdef Py_ssize_t i, n = x.shape[0]
    for i in range(n):
        z[i] = x[i] + y[i]
    return out


def mul(a, b):
    out = np.empty_like(a)
    cdef double[::1] x = a.reshape(-1), y = b.reshape(-1), z = out.reshape(-1)
    cdef Py_ssize_t i, n = x.shape[0]
    for i in range(n):
        z[i] = x[i] * y[i]
    return out


def scale(a, double c):
    out = np.empty_like(a)
    cdef double[::1] x = a.reshape(-1), z = out.reshape(-1)
    cdef Py_ssize_t i, n = x.shape[0]
    for i in range(n):
        z[i] = x[i] * c
    return out


def relu(a):
    out = np.empty_like(a)
    cdef double[::1] x = a.reshape(-1), z = out.reshape(-1)
    cdef Py_ssize_t i, n = x.shape[0]
    for i in range(n):
        z[i] = _max(x[i], 0.0)
    return out


def relu_bwd(g, y):
    out = np.empty_like(g)
    cdef double[::1] gv = g.reshape(-1), yv = y.reshape(-1), z = out.reshape(-1)
    cdef Py_ssize_t i, n = gv.shape[0]
    for i in range(n):
        z[i] = gv[i] if yv[i] > 0.0 else 0.0
    return out


def tanh(a):
    out = np.empty_like(a)
    cdef double[::1] x = a.reshape(-1), z = out.reshape(-1)
    cdef Py_ssize_t i, n = x.shape[0]
    for i in range(n):
        z[i] = c_tanh(x[i])
    return out


def tanh_bwd(g, y):
    out = np.empty_like(g)
    cdef double[::1] gv = g.reshape(-1), yv = y.reshape(-1), z = out.reshape(-1)
    cdef Py_ssize_t i, n = gv.shape[0]
    for i in range(n):
        z[i] = gv[i] * (1.0 - yv[i] * yv[i])
    return out


# ---------------------------------------------------------------------------
# row-wise normalizations

def layernorm(double[:, ::1] x, double eps):
    cdef Py_ssize_t rows = x.shape[0], cols = x.shape[1], i, j
    y_arr = np.empty((rows, cols), dtype=np.float64)
    s_arr = np.empty(rows, dtype=np.float64)
    cdef double[:, ::1] y = y_arr
    cdef double[::1] inv_std = s_arr
    cdef double mean, var, d, s
    for i in range(rows):
        mean = 0.0
        for j in range(cols):
            mean += x[i, j]
        mean /= cols
        var = 0.0
        for j in range(cols):
            d = x[i, j] - mean
            var += d * d
        var /= cols
        s = 1.0 / sqrt(var + eps)
        inv_std[i] = s
        for j in range(cols):
            y[i, j] = (x[i, j] - mean) * s
    return y_arr, s_arr


def layernorm_bwd(double[:, ::1] g, double[:, ::1] y, double[::1] inv_std):
    cdef Py_ssize_t rows = g.shape[0], cols = g.shape[1], i, j
    out = np.empty((rows, cols), dtype=np.float64)
    cdef double[:, ::1] dx = out
    cdef double g_mean, gy_mean
    for i in range(rows):
        g_mean = 0.0
        gy_mean = 0.0
        for j in range(cols):
            g_mean += g[i, j]
            gy_mean += g[i, j] * y[i, j]
        g_mean /= cols
        gy_mean /= cols
        for j in range(cols):
            dx[i, j] = inv_std[i] * (g[i, j] - g_mean - y[i, j] * gy_mean)
    return out


def softmax(double[:, ::1] x):
    cdef Py_ssize_t rows = x.shape[0], cols = x.shape[1], i, j
    out = np.empty((rows, cols), dtype=np.float64)
    cdef double[:, ::1] p = out
    cdef double hi, total
    for i in range(rows):
        hi = x[i, 0]
        for j in range(1, cols):
            hi = _max(hi, x[i, j])
        total = 0.0
        for j in range(cols):
            p[i, j] = exp(x[i, j] - hi)
            total += p[i, j]
        for j in range(cols):
            p[i, j] /= total
    return out


def softmax_bwd(double[:, ::1] g, double[:, ::1] p):
    cdef Py_ssize_t rows = g.shape[0], cols = g.shape[1], i, j
    out = np.empty((rows, cols), dtype=np.float64)
    cdef double[:, ::1] dx = out
    cdef double dot
    for i in range(rows):
        dot = 0.0
        for j in range(cols):
            dot += g[i, j] * p[i, j]
        for j in range(cols):
            dx[i, j] = p[i, j] * (g[i, j] - dot)
    return out


def logsoftmax(double[:, ::1] x):
    cdef Py_ssize_t rows = x.shape[0], cols = x.shape[1], i, j
    out = np.empty((rows, cols), dtype=np.float64)
    cdef double[:, ::1] lp = out
    cdef double hi, total
    for i in range(rows):
        hi = x[i, 0]
        for j in range(1, cols):
            hi = _max(hi, x[i, j])
        total = 0.0
        for j in range(cols):
            total += exp(x[i, j] - hi)
        total = log(total)
        for j in range(cols):
            lp[i, j] = x[i, j] - hi - total
    return out


def logsoftmax_bwd(double[:, ::1] g, double[:, ::1] lp):
    cdef Py_ssize_t rows = g.shape[0], cols = g.shape[1], i, j
    out = np.empty((rows, cols), dtype=np.float64)
    cdef double[:, ::1] dx = out
    cdef double gsum
    for i in range(rows):
        gsum = 0.0
        for j in range(cols):
            gsum += g[i, j]
        for j in range(cols):
            dx[i, j] = g[i, j] - exp(lp[i, j]) * gsum
    return out


# ---------------------------------------------------------------------------
# gather/scatter

def row_gather(double[:, ::1] x, long[::1] idx):
    cdef Py_ssize_t rows = idx.shape[0], cols = x.shape[1], i, j, src
    out = np.empty((rows, cols), dtype=np.float64)
    cdef double[:, ::1] y = out
    for i in range(rows):
        src = idx[i]
        for j in range(cols):
            y[i, j] = x[src, j]
    return out


def row_gather_bwd(double[:, ::1] g, long[::1] idx, Py_ssize_t n_rows):
    cdef Py_ssize_t rows = idx.shape[0], cols = g.shape[1], i, j, dst
    out = np.zeros((n_rows, cols), dtype=np.float64)
    cdef double[:, ::1] dx = out
    for i in range(rows):
        dst = idx[i]
        for j in range(cols):
            dx[dst, j] += g[i, j]
    return out
