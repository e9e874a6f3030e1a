# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops.

Every function here has a numpy twin with the same signature in
``volterra._fallback``; ``volterra.backend`` picks one at import time.
Packed lower-triangular weights store row ``i`` (entries ``j = 0..i``) at
offset ``i*(i+1)/2``.
"""
import numpy as np

from libc.math cimport fabs, pow


cdef inline double _dot(const double* a, const double* b, Py_ssize_t n) noexcept nogil:
    # independent partial sums so the loop pipelines
    cdef double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0
    cdef Py_ssize_t j = 0
    while j + 4 <= n:
        s0 += a[j] * b[j]
        s1 += a[j + 1] * b[j + 1]
        s2 += a[j + 2] * b[j + 2]
        s3 += a[j + 3] * b[j + 3]
        j += 4
    while j < n:
        s0 += a[j] * b[j]
        j += 1
    return (s0 + s1) + (s2 + s3)


def volterra_sweep(const double[::1] weights, const double[::1] f, const double[::1] mus):
    """Solve ``u_i + mu * sum_{j<=i} w_ij u_j = f_i`` row by row for every mu.

    Returns ``(u, bad)`` with ``u`` of shape (len(mus), len(f)); ``bad`` is the
    first singular row index, or -1.
    """
    cdef Py_ssize_t m = f.shape[0]
    cdef Py_ssize_t nk = mus.shape[0]
    out = np.zeros((nk, m), dtype=np.float64)
    cdef double[:, ::1] u = out
    cdef Py_ssize_t i, j, k, row
    cdef double hist, denom, mu
    cdef Py_ssize_t bad = -1
    with nogil:
        for k in range(nk):
            mu = mus[k]
            for i in range(m):
                row = i * (i + 1) // 2
                hist = _dot(&weights[row], &u[k, 0], i)
                denom = 1.0 + mu * weights[row + i]
                if fabs(denom) <= 1e-14 * (1.0 + fabs(mu * weights[row + i])):
                    if bad < 0 or i < bad:
                        bad = i
                    break
                u[k, i] = (f[i] - mu * hist) / denom
    return out, bad


def packed_apply(const double[::1] weights, const double[:, ::1] values):
    """Return ``out[k, i] = sum_{j<=i} w_ij values[k, j]``."""
    cdef Py_ssize_t nk = values.shape[0]
    cdef Py_ssize_t m = values.shape[1]
    out = np.zeros((nk, m), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j, k, row
    cdef double acc
    with nogil:
        for k in range(nk):
            for i in range(m):
                row = i * (i + 1) // 2
                o[k, i] = _dot(&weights[row], &values[k, 0], i + 1)
    return out


def lower_toeplitz(const double[:, ::1] v, const double[:, :, ::1] x):
    """Return ``out[b, k, i] = sum_{j<=i} v[k, i-j] x[b, k, j]``."""
    cdef Py_ssize_t nb = x.shape[0]
    cdef Py_ssize_t nk = x.shape[1]
    cdef Py_ssize_t n = x.shape[2]
    out = np.zeros((nb, nk, n), dtype=np.float64)
    # reversed kernel: v[k, i-j] = vr[k, n-1-i+j], read forwards
    rev = np.ascontiguousarray(np.asarray(v)[:, n - 1 :: -1] if n else np.zeros((nk, 0)))
    cdef double[:, ::1] vr = rev
    cdef double[:, :, ::1] o = out
    cdef Py_ssize_t b, k, i
    if n == 0:
        return out
    with nogil:
        for b in range(nb):
            for k in range(nk):
                for i in range(n):
                    o[b, k, i] = _dot(&vr[k, n - 1 - i], &x[b, k, 0], i + 1)
    return out


def reformulated_sweep(
    const double[::1] decay,
    const double[::1] phi,
    const double[::1] lam,
    double c,
    const double[::1] mem,
    const double[::1] mem_first,
    const double[:, :, ::1] noise,
):
    """Causal stepping of the memory-driven Cauchy problem, mode by mode.

    ``y_i = decay*y_{i-1} + phi*(wt_{i-1} + c*W_{i-1})``,
    ``ws_i = -lam*y_i + W_i`` and
    ``wt_i = sum_{1<=j<=i} mem[i-j] ws_j + mem_first[i] ws_0``.
    """
    cdef Py_ssize_t nb = noise.shape[0]
    cdef Py_ssize_t nk = noise.shape[1]
    cdef Py_ssize_t n = noise.shape[2]
    y_arr = np.zeros((nb, nk, n), dtype=np.float64)
    wt_arr = np.zeros((nb, nk, n), dtype=np.float64)
    ws_arr = np.zeros((nb, nk, n), dtype=np.float64)
    cdef double[:, :, ::1] y = y_arr
    cdef double[:, :, ::1] wt = wt_arr
    cdef double[:, :, ::1] ws = ws_arr
    rev = np.ascontiguousarray(np.asarray(mem)[n - 1 :: -1]) if n else np.zeros(0)
    cdef double[::1] mr = rev
    cdef Py_ssize_t b, k, i
    if n == 0:
        return y_arr, wt_arr, ws_arr
    with nogil:
        for b in range(nb):
            for k in range(nk):
                y[b, k, 0] = 0.0
                ws[b, k, 0] = noise[b, k, 0]
                wt[b, k, 0] = mem_first[0] * ws[b, k, 0]
                for i in range(1, n):
                    y[b, k, i] = decay[k] * y[b, k, i - 1] + phi[k] * (
                        wt[b, k, i - 1] + c * noise[b, k, i - 1]
                    )
                    ws[b, k, i] = -lam[k] * y[b, k, i] + noise[b, k, i]
                    # mem[i-j] = mr[n-1-i+j] for j = 1..i
                    wt[b, k, i] = mem_first[i] * ws[b, k, 0] + _dot(&mr[n - i], &ws[b, k, 1], i)
    return y_arr, wt_arr, ws_arr


def slobodeckij_sum(const double[:, ::1] path, const double[::1] t, const double[::1] w, double s):
    """Return ``sum_{i != j} w_i w_j |x_i - x_j|^2 / |t_i - t_j|^s``.

    ``path`` has shape (len(t), K): one row per time.
    """
    cdef Py_ssize_t n = path.shape[0]
    cdef Py_ssize_t nk = path.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double total = 0.0
    cdef double d2, diff
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                d2 = 0.0
                for k in range(nk):
                    diff = path[i, k] - path[j, k]
                    d2 += diff * diff
                total += 2.0 * w[i] * w[j] * d2 / pow(t[j] - t[i], s)
    return total
