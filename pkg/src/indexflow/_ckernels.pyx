# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled B-spline and assembly kernels (same signatures as ``_pykernels``)."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef Py_ssize_t _span(const double[::1] knots, int p, Py_ssize_t nbasis, double x) noexcept nogil:
    cdef Py_ssize_t lo, hi, mid
    if x >= knots[nbasis]:
        return nbasis - 1
    if x <= knots[p]:
        return p
    lo = p
    hi = nbasis
    # knots[lo] <= x < knots[hi]
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if x < knots[mid]:
            hi = mid
        else:
            lo = mid
    return lo


def bspline_ders(knots, int degree, x, int nder):
    """Nonzero basis functions and derivatives at the points ``x``."""
    cdef const double[::1] U = np.ascontiguousarray(knots, dtype=np.float64)
    cdef const double[::1] X = np.ascontiguousarray(np.atleast_1d(x), dtype=np.float64)
    cdef int p = degree
    cdef Py_ssize_t nbasis = U.shape[0] - p - 1
    cdef Py_ssize_t npts = X.shape[0]
    spans_arr = np.empty(npts, dtype=np.intp)
    ders_arr = np.zeros((npts, nder + 1, p + 1), dtype=np.float64)
    cdef cnp.intp_t[::1] spans = spans_arr
    cdef double[:, :, ::1] ders = ders_arr
    cdef double[:, ::1] ndu = np.zeros((p + 1, p + 1))
    cdef double[:, ::1] a = np.zeros((2, p + 1))
    cdef double[::1] left = np.zeros(p + 1)
    cdef double[::1] right = np.zeros(p + 1)
    cdef Py_ssize_t q, i
    cdef int j, r, k, s1, s2, rk, pk, j1, j2, top
    cdef double u, saved, temp, d, fac
    top = nder if nder < p else p
    with nogil:
        for q in range(npts):
            u = X[q]
            i = _span(U, p, nbasis, u)
            spans[q] = i
            ndu[0, 0] = 1.0
            for j in range(1, p + 1):
                left[j] = u - U[i + 1 - j]
                right[j] = U[i + j] - u
                saved = 0.0
                for r in range(j):
                    ndu[j, r] = right[r + 1] + left[j - r]
                    temp = ndu[r, j - 1] / ndu[j, r]
                    ndu[r, j] = saved + right[r + 1] * temp
                    saved = left[j - r] * temp
                ndu[j, j] = saved
            for j in range(p + 1):
                ders[q, 0, j] = ndu[j, p]
            for r in range(p + 1):
                s1 = 0
                s2 = 1
                a[0, 0] = 1.0
                for k in range(1, top + 1):
                    d = 0.0
                    rk = r - k
                    pk = p - k
                    if r >= k:
                        a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                        d = a[s2, 0] * ndu[rk, pk]
                    j1 = 1 if rk >= -1 else -rk
                    j2 = k - 1 if r - 1 <= pk else p - r
                    for j in range(j1, j2 + 1):
                        a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                        d += a[s2, j] * ndu[rk + j, pk]
                    if r <= pk:
                        a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, r]
                        d += a[s2, k] * ndu[r, pk]
                    ders[q, k, r] = d
                    j = s1
                    s1 = s2
                    s2 = j
            fac = p
            for k in range(1, top + 1):
                for j in range(p + 1):
                    ders[q, k, j] *= fac
                fac *= p - k
    return spans_arr, ders_arr


def assemble_form(spans, ders, weights, coef, Py_ssize_t nbasis, Py_ssize_t nq):
    """Assemble the form matrix from derivative tables and coefficient samples."""
    cdef const cnp.intp_t[::1] S = np.ascontiguousarray(spans, dtype=np.intp)
    cdef const double[:, :, ::1] D = np.ascontiguousarray(ders, dtype=np.float64)
    cdef const double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef const double complex[:, :, :, :, ::1] P = np.ascontiguousarray(coef, dtype=np.complex128)
    cdef Py_ssize_t npts = D.shape[0]
    cdef Py_ssize_t nk = P.shape[1]
    cdef Py_ssize_t p1 = D.shape[2]
    cdef Py_ssize_t n = P.shape[4]
    A_arr = np.zeros((nbasis * n, nbasis * n), dtype=np.complex128)
    cdef double complex[:, ::1] A = A_arr
    # W[k, a, c, l, e] accumulates sum_k N_a^(k) p_kl for one point
    cdef double complex[:, :, :, ::1] W = np.zeros((p1, nk, n, n), dtype=np.complex128)
    cdef Py_ssize_t q, ia, ib, k, l, c, e, row0, col0, first
    cdef double complex acc
    cdef double wq
    with nogil:
        for q in range(npts):
            wq = w[q]
            first = S[q] - (p1 - 1)
            for ia in range(p1):
                for l in range(nk):
                    for c in range(n):
                        for e in range(n):
                            acc = 0.0
                            for k in range(nk):
                                acc = acc + D[q, k, ia] * P[q, k, l, c, e]
                            W[ia, l, c, e] = wq * acc
            for ia in range(p1):
                row0 = (first + ia) * n
                for ib in range(p1):
                    col0 = (first + ib) * n
                    for c in range(n):
                        for e in range(n):
                            acc = 0.0
                            for l in range(nk):
                                acc = acc + W[ia, l, c, e] * D[q, l, ib]
                            A[row0 + c, col0 + e] = A[row0 + c, col0 + e] + acc
    return A_arr
