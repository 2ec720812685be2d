"""Random problem generators shared by the test modules."""
import numpy as np
import scipy.linalg as sla

from indexflow.hamiltonian import CoefficientFamily, SymplecticPath
from indexflow.polynomials import MatPoly
from indexflow.structures import BoundaryData, SubspaceFrame, SymplecticForm


def rc(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def herm(rng, n):
    A = rc(rng, n, n)
    return A + A.conj().T


def random_subspace(rng, d, k=None):
    k = int(rng.integers(0, d + 1)) if k is None else k
    if k == 0:
        return SubspaceFrame.zero(d)
    return SubspaceFrame.span(rc(rng, d, k), d)


def random_index_problem(rng, m=None, n=None, rho=1.0):
    """Family with a random positive definite leading block and degree <= 2 lower order.

    The family runs from ``diag(p_mm, 0)`` at ``s = 0`` to the full
    coefficients at ``s = 1``; the boundary space has random dimension.
    """
    m = int(rng.integers(1, 3)) if m is None else m
    n = int(rng.integers(1, 3)) if n is None else n
    T = float(rng.uniform(1, 3))
    A = rc(rng, n, n)
    pmm = MatPoly.constant(A @ A.conj().T / n + rho * np.eye(n))
    e1 = {}
    for k in range(m + 1):
        for l in range(k, m + 1):
            if (k, l) == (m, m):
                e1[(k, l)] = pmm
                continue
            deg = int(rng.integers(0, 3))
            P = MatPoly(rc(rng, deg + 1, n, n) * rng.uniform(0.5, 3))
            if k == l:
                P = 0.5 * (P + P.adjoint())
            e1[(k, l)] = P
            e1[(l, k)] = P.adjoint()
    e0 = {kl: MatPoly.zeros(n) for kl in e1}
    e0[(m, m)] = pmm
    fam = CoefficientFamily(m, n, T, e0, e1)
    bd = BoundaryData(m, n, random_subspace(rng, 2 * m * n))
    return fam, bd


def random_triangular_path(rng, d=None):
    """Block lower triangular symplectic path for the form built from a random ``K``.

    Returns ``(gamma, K)``.
    """
    d = int(rng.integers(1, 4)) if d is None else d
    K = rc(rng, d, d)
    X, Y = rc(rng, d, d) * 0.7, rc(rng, d, d) * 0.3
    H1, H2 = herm(rng, d), herm(rng, d)
    Ki = np.linalg.inv(K.conj().T)
    zero = np.zeros((d, d))

    def fn(t):
        M11 = sla.expm(t * X + t * t * Y)
        Mi = np.linalg.inv(M11).conj().T
        H = t * H1 + t * t * H2 * np.sin(3 * t)
        return np.block([[M11, zero], [Ki @ Mi @ H, Ki @ Mi @ K.conj().T]])
    T = float(rng.uniform(0.5, 2))
    return SymplecticPath(SymplecticForm.from_K(K), fn, T, grid=np.linspace(0, T, 41)), K


def random_frame_problem(rng):
    """First-order family, a polynomial frame ``a(t)`` and a boundary space.

    Half of the boundary spaces contain diagonal vectors ``(v, v)`` so that
    the frame change shift is frequently nonzero.
    """
    n = int(rng.integers(1, 3))
    T = float(rng.uniform(1, 4))
    A = rc(rng, n, n)
    p = MatPoly.constant(A @ A.conj().T + np.eye(n))
    q = MatPoly(np.stack([rc(rng, n, n) * 0.5, rc(rng, n, n) * 0.3]))
    r = MatPoly(np.stack([herm(rng, n), herm(rng, n) * 0.3]))
    fam = CoefficientFamily.from_pqr(p, q, r, T, p0=p, q0=MatPoly.zeros(n),
                                     r0=MatPoly.identity(n))
    a = MatPoly(np.stack([np.eye(n) * 2 + 0.3 * rc(rng, n, n), 0.3 * rc(rng, n, n),
                          0.1 * rc(rng, n, n)]))
    if rng.random() < 0.5:
        kd, kr = int(rng.integers(0, n + 1)), int(rng.integers(0, n + 1))
        V = rc(rng, n, kd)
        cols = np.hstack([np.vstack([V, V]), rc(rng, 2 * n, kr)])
        R = SubspaceFrame.span(cols, 2 * n) if cols.shape[1] else SubspaceFrame.zero(2 * n)
    else:
        R = random_subspace(rng, 2 * n)
    return fam, a, BoundaryData(1, n, R)
