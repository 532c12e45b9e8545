# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled numerical kernels. Same signatures as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


cdef Py_ssize_t _find_left(const double[::1] t, double xv, Py_ssize_t lo,
                           Py_ssize_t hi) noexcept nogil:
    # largest l in [lo, hi] with t[l] <= xv (clamped)
    cdef Py_ssize_t a = lo, b = hi, mid
    if xv >= t[hi]:
        return hi
    if xv < t[lo + 1]:
        return lo
    while b - a > 1:
        mid = (a + b) // 2
        if t[mid] <= xv:
            a = mid
        else:
            b = mid
    return a


def bspline_rows(t_in, int p, x_in, int deriv):
    cdef const double[::1] t = np.ascontiguousarray(t_in, dtype=np.float64)
    cdef const double[::1] x = np.ascontiguousarray(x_in, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t m = t.shape[0] - p
    cdef int order = p - deriv
    vals_arr = np.zeros((n, p), dtype=np.float64)
    first_arr = np.zeros(n, dtype=np.intp)
    cdef double[:, ::1] vals = vals_arr
    cdef Py_ssize_t[::1] first = first_arr
    cdef double[::1] work = np.zeros(p, dtype=np.float64)
    cdef double[::1] prev = np.zeros(p, dtype=np.float64)
    cdef Py_ssize_t i, left, idx
    cdef int j, r, k
    cdef double xv, saved, term, tr, tl, acc

    with nogil:
        for i in range(n):
            xv = x[i]
            left = _find_left(t, xv, p - 1, m - 1)
            first[i] = left - p + 1
            work[0] = 1.0
            for j in range(1, order):
                saved = 0.0
                for r in range(j):
                    tr = t[left + r + 1]
                    tl = t[left + r + 1 - j]
                    term = work[r] / (tr - tl)
                    work[r] = saved + (tr - xv) * term
                    saved = (xv - tl) * term
                work[j] = saved
            for k in range(order + 1, p + 1):
                for r in range(k - 1):
                    prev[r] = work[r]
                for r in range(k):
                    idx = left - k + 1 + r
                    acc = 0.0
                    if r >= 1:
                        acc = acc + prev[r - 1] / (t[idx + k - 1] - t[idx])
                    if r <= k - 2:
                        acc = acc - prev[r] / (t[idx + k] - t[idx + 1])
                    work[r] = (k - 1) * acc
            for r in range(p):
                vals[i, r] = work[r]
    return vals_arr, first_arr


def band_gram(vals_in, first_in, w_in, Py_ssize_t m):
    cdef const double[:, ::1] vals = np.ascontiguousarray(vals_in, dtype=np.float64)
    cdef const Py_ssize_t[::1] first = np.ascontiguousarray(first_in, dtype=np.intp)
    cdef const double[::1] w = np.ascontiguousarray(w_in, dtype=np.float64)
    cdef Py_ssize_t n = vals.shape[0], p = vals.shape[1]
    ab_arr = np.zeros((p, m), dtype=np.float64)
    cdef double[:, ::1] ab = ab_arr
    cdef Py_ssize_t i, a, b, c0
    cdef double wa
    with nogil:
        for i in range(n):
            c0 = first[i]
            for a in range(p):
                wa = w[i] * vals[i, a]
                if wa == 0.0:
                    continue
                for b in range(a, p):
                    ab[b - a, c0 + a] += wa * vals[i, b]
    return ab_arr


def band_rhs(vals_in, first_in, w_in, y_in, Py_ssize_t m):
    cdef const double[:, ::1] vals = np.ascontiguousarray(vals_in, dtype=np.float64)
    cdef const Py_ssize_t[::1] first = np.ascontiguousarray(first_in, dtype=np.intp)
    cdef const double[::1] w = np.ascontiguousarray(w_in, dtype=np.float64)
    cdef const double[::1] y = np.ascontiguousarray(y_in, dtype=np.float64)
    cdef Py_ssize_t n = vals.shape[0], p = vals.shape[1]
    out_arr = np.zeros(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, a
    cdef double wy
    with nogil:
        for i in range(n):
            wy = w[i] * y[i]
            for a in range(p):
                out[first[i] + a] += vals[i, a] * wy
    return out_arr


def band_matvec_rows(vals_in, first_in, beta_in):
    cdef const double[:, ::1] vals = np.ascontiguousarray(vals_in, dtype=np.float64)
    cdef const Py_ssize_t[::1] first = np.ascontiguousarray(first_in, dtype=np.intp)
    cdef const double[::1] beta = np.ascontiguousarray(beta_in, dtype=np.float64)
    cdef Py_ssize_t n = vals.shape[0], p = vals.shape[1]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, a
    cdef double s
    with nogil:
        for i in range(n):
            s = 0.0
            for a in range(p):
                s += vals[i, a] * beta[first[i] + a]
            out[i] = s
    return out_arr


def band_qr_rows(vals_in, first_in, sw_in, Py_ssize_t m):
    cdef const double[:, ::1] vals = np.ascontiguousarray(vals_in, dtype=np.float64)
    cdef const Py_ssize_t[::1] first = np.ascontiguousarray(first_in, dtype=np.intp)
    cdef const double[::1] sw = np.ascontiguousarray(sw_in, dtype=np.float64)
    cdef Py_ssize_t n = vals.shape[0], p = vals.shape[1]
    R_arr = np.zeros((p, m), dtype=np.float64)
    cdef double[:, ::1] R = R_arr
    cdef double[::1] row = np.zeros(p, dtype=np.float64)
    cdef Py_ssize_t i, k, l, j, c0
    cdef double a, rjj, rad, c, s, t
    with nogil:
        for i in range(n):
            if sw[i] == 0.0:
                continue
            c0 = first[i]
            for k in range(p):
                row[k] = sw[i] * vals[i, k]
            for k in range(p):
                a = row[k]
                if a == 0.0:
                    continue
                j = c0 + k
                rjj = R[0, j]
                rad = sqrt(rjj * rjj + a * a)
                c = rjj / rad
                s = a / rad
                R[0, j] = rad
                for l in range(k + 1, p):
                    t = R[l - k, j]
                    R[l - k, j] = c * t + s * row[l]
                    row[l] = c * row[l] - s * t
    return R_arr


def band_cholesky(ab_in):
    L_arr = np.array(ab_in, dtype=np.float64, order="C", copy=True)
    cdef double[:, ::1] L = L_arr
    cdef Py_ssize_t bw = L.shape[0] - 1, m = L.shape[1]
    cdef Py_ssize_t i, j, k, kmin, kmax
    cdef double s, ljj, v
    cdef Py_ssize_t info = -1
    with nogil:
        for j in range(m):
            kmin = j - bw if j > bw else 0
            s = L[0, j]
            for k in range(kmin, j):
                v = L[j - k, k]
                s -= v * v
            if not s > 0.0:
                info = j
                break
            ljj = sqrt(s)
            L[0, j] = ljj
            kmax = j + bw + 1 if j + bw + 1 < m else m
            for i in range(j + 1, kmax):
                s = L[i - j, j]
                kmin = i - bw if i > bw else 0
                for k in range(kmin, j):
                    s -= L[i - k, k] * L[j - k, k]
                L[i - j, j] = s / ljj
    return L_arr, info


def band_cho_solve(L_in, rhs_in):
    cdef const double[:, ::1] L = np.ascontiguousarray(L_in, dtype=np.float64)
    z_arr = np.array(rhs_in, dtype=np.float64, copy=True)
    cdef double[::1] z = z_arr
    cdef Py_ssize_t bw = L.shape[0] - 1, m = L.shape[1]
    cdef Py_ssize_t i, j, k, kmin, imax
    cdef double s
    with nogil:
        for j in range(m):
            s = z[j]
            kmin = j - bw if j > bw else 0
            for k in range(kmin, j):
                s -= L[j - k, k] * z[k]
            z[j] = s / L[0, j]
        for j in range(m - 1, -1, -1):
            s = z[j]
            imax = j + bw + 1 if j + bw + 1 < m else m
            for i in range(j + 1, imax):
                s -= L[i - j, j] * z[i]
            z[j] = s / L[0, j]
    return z_arr


def band_selinv(L_in):
    cdef const double[:, ::1] L = np.ascontiguousarray(L_in, dtype=np.float64)
    cdef Py_ssize_t bw = L.shape[0] - 1, m = L.shape[1]
    S_arr = np.zeros((bw + 1, m), dtype=np.float64)
    cdef double[:, ::1] S = S_arr
    cdef Py_ssize_t i, j, k, kmax
    cdef double s, ljj
    with nogil:
        for j in range(m - 1, -1, -1):
            ljj = L[0, j]
            kmax = j + bw if j + bw < m - 1 else m - 1
            for i in range(kmax, j, -1):
                s = 0.0
                for k in range(j + 1, kmax + 1):
                    if i >= k:
                        s += L[k - j, j] * S[i - k, k]
                    else:
                        s += L[k - j, j] * S[k - i, i]
                S[i - j, j] = -s / ljj
            s = 0.0
            for k in range(j + 1, kmax + 1):
                s += L[k - j, j] * S[k - j, j]
            S[0, j] = (1.0 / ljj - s) / ljj
    return S_arr
