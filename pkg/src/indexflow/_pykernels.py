"""Pure numpy B-spline and assembly kernels.

Reference implementations with the same signatures as the compiled
extension.  Loops run over the spline degree and the elements; the
quadrature points are vectorised.
"""
import numpy as np


def find_spans(knots, degree, x):
    """Knot span index of each point, with the right end folded into the last span."""
    knots = np.asarray(knots, dtype=float)
    nbasis = knots.size - degree - 1
    idx = np.searchsorted(knots, x, side="right") - 1
    return np.clip(idx, degree, nbasis - 1).astype(np.intp)


def bspline_ders(knots, degree, x, nder):
    """Nonzero basis functions and derivatives at the points ``x``.

    Returns ``(spans, ders)`` with ``ders[q, k, j]`` the ``k``-th derivative
    of basis function ``spans[q] - degree + j`` at ``x[q]``.
    Derivatives of order above ``degree`` are zero.
    """
    knots = np.asarray(knots, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    p = int(degree)
    spans = find_spans(knots, p, x)
    npts = x.size
    ndu = np.zeros((p + 1, p + 1, npts))
    left = np.zeros((p + 1, npts))
    right = np.zeros((p + 1, npts))
    ndu[0, 0] = 1.0
    for j in range(1, p + 1):
        left[j] = x - knots[spans + 1 - j]
        right[j] = knots[spans + j] - x
        saved = np.zeros(npts)
        for r in range(j):
            ndu[j, r] = right[r + 1] + left[j - r]
            temp = ndu[r, j - 1] / ndu[j, r]
            ndu[r, j] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        ndu[j, j] = saved

    ders = np.zeros((npts, nder + 1, p + 1))
    ders[:, 0, :] = ndu[:, p].T
    top = min(nder, p)
    a = np.zeros((2, p + 1, npts))
    for r in range(p + 1):
        s1, s2 = 0, 1
        a[0, 0] = 1.0
        for k in range(1, top + 1):
            d = np.zeros(npts)
            rk, pk = r - k, p - k
            if r >= k:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                d += a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                d += a[s2, j] * ndu[rk + j, pk]
            if r <= pk:
                a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, r]
                d += a[s2, k] * ndu[r, pk]
            ders[:, k, r] = d
            s1, s2 = s2, s1
    fac = float(p)
    for k in range(1, top + 1):
        ders[:, k, :] *= fac
        fac *= p - k
    return spans, ders


def assemble_form(spans, ders, weights, coef, nbasis, nq):
    """Assemble ``A[(i,c),(j,e)] = sum_q w_q sum_{k,l} N_i^(k) N_j^(l) coef[q,k,l,c,e]``.

    Points come in consecutive groups of ``nq`` sharing one knot span.
    ``ders`` has shape ``(npts, m+1, degree+1)`` and ``coef`` has shape
    ``(npts, m+1, m+1, n, n)``.
    """
    npts, _, p1 = ders.shape
    n = coef.shape[-1]
    A = np.zeros((nbasis * n, nbasis * n), dtype=complex)
    for start in range(0, npts, nq):
        sl = slice(start, start + nq)
        D = ders[sl] * weights[sl, None, None]
        # local[a, c, b, e]
        local = np.einsum("qka,qlb,qklce->acbe", D, ders[sl], coef[sl], optimize=True)
        first = (int(spans[start]) - (p1 - 1)) * n
        size = p1 * n
        A[first:first + size, first:first + size] += local.reshape(size, size)
    return A
