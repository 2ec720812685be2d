"""Maslov indices of Lagrangian pair paths and Maslov-type indices.

The authoritative algorithm is eigenphase tracking of ``U(s) V(s)^{-1}``
where ``U, V`` are the unitary generators of the two legs in a fixed
symplectic splitting.  Crossing forms give an independent check when all
crossings are regular.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ArgumentError, PreconditionError, RegularityError, ValidationError
from .spectralflow import PHASE_TOL, ZERO_TOL, _fd_derivative, sf_unitary
from .structures import (RANK_TOL, SubspaceFrame, annihilator_K, annihilator_R2mb,
                         graph_frame, interleave_pairs, intersection_dim, is_lagrangian,
                         orth, principal_sines, restricted_form, stable_subspace,
                         subspace_intersection)

CROSSING_TOL = 1e-7


class LagrangianPairPath:
    """Path ``s -> (lambda(s), mu(s))`` of Lagrangian subspaces on ``[a, b]``.

    ``lam`` and ``mu`` return matrices whose columns span the subspaces.
    ``mu_constant`` marks a fixed second leg.  For graph paths
    ``graph_of`` holds the symplectic path so that crossing forms can use
    the analytic derivative.
    """

    def __init__(self, form, lam, mu, a=0.0, b=1.0, mu_constant=False, graph_of=None,
                 grid=None, check=True, tol=1e-8):
        self.form, self.lam, self.mu = form, lam, mu
        self.a, self.b = float(a), float(b)
        self.mu_constant = mu_constant
        self.graph_of = graph_of
        self.grid = grid
        if check:
            for s in np.linspace(self.a, self.b, 5):
                for F in (lam(s), mu(s)):
                    L = SubspaceFrame(orth(F))
                    if not is_lagrangian(L, form, tol):
                        raise ValidationError(f"leg is not Lagrangian at s={s:.6g}")

    def frames(self, s):
        return SubspaceFrame(orth(self.lam(s))), SubspaceFrame(orth(self.mu(s)))

    @classmethod
    def graph(cls, gamma, W, **kw):
        """``(Gr(gamma(t)), W)`` in the doubled space of ``gamma.form``."""
        form = gamma.form.doubled()
        d = gamma.form.dim
        eye = np.eye(d)
        Wc = W.columns

        def lam(t):
            return np.vstack([eye, gamma(t)])
        return cls(form, lam, lambda t: Wc, 0.0, gamma.T, mu_constant=True,
                   graph_of=gamma, grid=gamma.grid, **kw)


def _generators(path, splitting):
    sp = path.form.splitting if splitting is None else splitting
    Vc = sp.generator(path.mu(path.a)) if path.mu_constant else None

    def W(s):
        U = sp.generator(path.lam(s))
        V = Vc if Vc is not None else sp.generator(path.mu(s))
        return U @ np.linalg.inv(V)
    return W


def maslov_pair(path, splitting=None, phase_tol=PHASE_TOL):
    """``Mas = -sf{U(s) V(s)^{-1}}`` with eigenphase tracking."""
    W = _generators(path, splitting)
    grid = None if path.grid is None else np.asarray(path.grid)
    return -sf_unitary(W, path.a, path.b, phase_tol=phase_tol, grid=grid)


# ---------------------------------------------------------------------------
# crossing forms

def _q_form(path, leg, t, basis, h=1e-5):
    """``Q(leg, t)`` on the columns of ``basis`` via a Lagrangian complement.

    For ``v`` in the leg at ``t`` let ``w(s)`` be the point of the complement
    with ``v + w(s)`` in the leg at ``s``; the form is
    ``d/ds omega(u, w_v(s))`` at ``s = t``.
    """
    J = path.form.J
    sp = path.form.splitting
    F_t = leg(t)
    U_t = sp.generator(F_t)
    comp = sp.Ep - sp.Em @ U_t  # Gr(-U_t), transversal to Gr(U_t)

    def G(s):
        M = np.hstack([leg(s), -comp])
        coef = np.linalg.solve(M, basis)
        w = comp @ coef[F_t.shape[1]:]
        return w.conj().T @ J @ basis

    span = (path.b - path.a)
    Q = _fd_derivative(G, t, h * span, path.a, path.b)
    return 0.5 * (Q + Q.conj().T)


def crossing_form(path, t, rank_tol=CROSSING_TOL):
    """Crossing form ``Gamma = Q(lambda) - Q(mu)`` on the intersection at ``t``.

    Returns ``(Gamma, basis)`` where ``basis`` is an orthonormal frame of the
    intersection; ``Gamma`` is the Hermitian matrix of the form in that basis.
    """
    L, M = path.frames(t)
    X = subspace_intersection(L, M, rank_tol)
    if X.dim == 0:
        raise ArgumentError(f"t={t:.6g} is not a crossing")
    B = X.columns
    if path.graph_of is not None:
        gamma = path.graph_of
        d = gamma.form.dim
        g = gamma(t)
        dg = gamma.derivative(t)
        B2 = -gamma.form.J @ np.linalg.solve(g, dg)
        x = B[:d]
        Gam = x.conj().T @ B2 @ x
    else:
        Gam = _q_form(path, path.lam, t, B)
    if not path.mu_constant:
        Gam = Gam - _q_form(path, path.mu, t, B)
    return 0.5 * (Gam + Gam.conj().T), X


def _min_sine(path, s):
    L, M = path.frames(s)
    return float(principal_sines(L, M)[0])


@dataclass
class CrossingReport:
    t: float
    dim: int
    inertia: tuple
    contribution: int


@dataclass
class CrossingResult:
    value: int
    crossings: list = field(default_factory=list)


def locate_crossings(path, n0=257, loc_tol=1e-6, rank_tol=CROSSING_TOL, window=1e-6):
    """Parameters where the legs meet, found by minimising the smallest principal sine."""
    ts = np.linspace(path.a, path.b, n0)
    vals = np.array([_min_sine(path, s) for s in ts])
    span = path.b - path.a
    found = []
    if vals[0] <= rank_tol:
        found.append(path.a)
    for i in range(1, n0 - 1):
        if vals[i] <= vals[i - 1] and vals[i] <= vals[i + 1]:
            res = minimize_scalar(lambda s: _min_sine(path, s), bounds=(ts[i - 1], ts[i + 1]),
                                  method="bounded", options={"xatol": 1e-13 * span})
            if res.fun <= loc_tol:
                found.append(float(res.x))
    if vals[-1] <= rank_tol:
        found.append(path.b)
    # crossings that are too close are merged
    out = []
    for t in sorted(found):
        if out and t - out[-1] <= window * span:
            raise RegularityError(f"crossings near t={t:.6g} do not separate")
        out.append(t)
    return out


def maslov_via_crossings(path, zero_tol=ZERO_TOL, rank_tol=CROSSING_TOL, loc_tol=1e-6):
    """Crossing-form sum ``m^+(Gamma(a)) - m^-(Gamma(b)) + sum sign Gamma(t)``.

    Raises :class:`RegularityError` if a crossing form is degenerate.
    """
    total = 0
    reports = []
    for t in locate_crossings(path, loc_tol=loc_tol, rank_tol=rank_tol):
        tol = rank_tol if t in (path.a, path.b) else max(rank_tol, 10 * loc_tol)
        Gam, X = crossing_form(path, t, tol)
        w = np.linalg.eigvalsh(Gam)
        scale = max(np.max(np.abs(w)), 1e-300)
        if np.min(np.abs(w)) <= 1e-6 * scale or scale < 1e-12:
            raise RegularityError(f"degenerate crossing at t={t:.6g}")
        mp, mm = int(np.sum(w > 0)), int(np.sum(w < 0))
        if t == path.a:
            c = mp
        elif t == path.b:
            c = -mm
        else:
            c = mp - mm
        total += c
        reports.append(CrossingReport(float(t), X.dim, (mp, X.dim - mp - mm, mm), c))
    return CrossingResult(total, reports)


# ---------------------------------------------------------------------------
# Maslov-type index

def maslov_type_index(gamma, W, rank_tol=CROSSING_TOL, splitting=None):
    """``(i_W, nu)`` for a symplectic path ``gamma`` and a Lagrangian ``W``."""
    form = gamma.form.doubled()
    if not is_lagrangian(W, form):
        raise ValidationError("W is not Lagrangian in the doubled space")
    path = LagrangianPairPath.graph(gamma, W, check=False)
    iw = maslov_pair(path, splitting=splitting)
    nu = intersection_dim(graph_frame(gamma(gamma.T)), W, rank_tol)
    return iw, nu


def graph_pair_path(gamma, W):
    return LagrangianPairPath.graph(gamma, W, check=False)


# ---------------------------------------------------------------------------
# block-triangular paths

def check_triangular(gamma, K, tol=1e-8):
    """Validate ``M22^* K M11 = K`` and ``M11^* K^* M21`` self-adjoint on the grid."""
    K = np.asarray(K, dtype=complex)
    d = K.shape[0]
    for t in gamma.grid:
        g = gamma(t)
        M11, M12, M21, M22 = g[:d, :d], g[:d, d:], g[d:, :d], g[d:, d:]
        scale = max(1.0, np.linalg.norm(g)) ** 2
        if np.linalg.norm(M12) > tol * max(1.0, np.linalg.norm(g)):
            raise PreconditionError(f"path is not block lower triangular at t={t:.6g}")
        if np.linalg.norm(M22.conj().T @ K @ M11 - K) > tol * scale:
            raise PreconditionError(f"M22^* K M11 != K at t={t:.6g}")
        H = M11.conj().T @ K.conj().T @ M21
        if np.linalg.norm(H - H.conj().T) > tol * scale:
            raise PreconditionError(f"M11^* K^* M21 is not self-adjoint at t={t:.6g}")


def _blocks(g, d):
    return g[:d, :d], g[d:, :d]


def triangular_index(gamma, K, R, ts=(), rank_tol=RANK_TOL, zero_tol=ZERO_TOL, check=True,
                     reading="both-at-t"):
    """Closed formulas for block lower triangular symplectic paths.

    Returns ``(dims, index)``: ``dims[i]`` is the intersection dimension formula
    evaluated with both factors at ``ts[i]``; ``index`` is
    ``m^+(H(T)|S(T)) - m^+(H(0)|S(0)) + dim S(0) - dim S(T)`` with
    ``H = M11^* K^* M21`` and ``S(t) = {x : (x, M11(t) x) in R^K}``.
    With ``reading="end-left"`` the dimension formula pairs ``M11(T)^*``
    with ``M21(t)`` instead; that variant only agrees with the direct
    intersection dimension at ``t = T`` and is kept for comparison.
    """
    if reading not in ("both-at-t", "end-left"):
        raise ArgumentError(f"unknown reading {reading!r}")
    K = np.asarray(K, dtype=complex)
    d = K.shape[0]
    if check:
        check_triangular(gamma, K)
    RK = annihilator_K(K, R, rank_tol)
    diag = graph_frame(np.eye(d))
    offset = intersection_dim(diag, R, rank_tol) - intersection_dim(diag, RK, rank_tol)

    M11T = _blocks(gamma(gamma.T), d)[0]

    def pieces(t, left=None):
        M11, M21 = _blocks(gamma(t), d)
        S = stable_subspace(M11, RK, rank_tol)
        H = (M11 if left is None else left).conj().T @ K.conj().T @ M21
        Hs = restricted_form(H, S)
        thr = zero_tol * max(1.0, np.linalg.norm(H, 2))
        if not S.dim:
            return 0, 0, 0
        sv = np.linalg.svd(Hs, compute_uv=False)
        mplus = int(np.sum(np.linalg.eigvalsh(0.5 * (Hs + Hs.conj().T)) > thr))
        return S.dim, mplus, int(np.sum(sv <= thr))

    dims = []
    for t in ts:
        dimS, _, ker = pieces(t, None if reading == "both-at-t" else M11T)
        dims.append(ker + dimS + offset)
    dS0, mp0, _ = pieces(0.0)
    dST, mpT, _ = pieces(gamma.T)
    return dims, mpT - mp0 + dS0 - dST


def triangular_lagrangian(K, R, rank_tol=RANK_TOL):
    """``{(x1, x2, x3, x4) : (x1, x3) in R^K, (x2, x4) in R}``."""
    K = np.asarray(K, dtype=complex)
    return interleave_pairs(annihilator_K(K, R, rank_tol), R, K.shape[0])


# ---------------------------------------------------------------------------
# frame change

def printed_annihilator(a0, aT, R2b):
    """``{(x, y) : (a(0)^* x, a(T)^* y) in R2b}`` (kept for comparison only)."""
    n = a0.shape[0]
    D = np.zeros((2 * n, 2 * n), dtype=complex)
    D[:n, :n] = a0.conj().T
    D[n:, n:] = aT.conj().T
    Dinv = np.linalg.inv(D)
    if R2b.dim == 0:
        return R2b
    return SubspaceFrame.span(Dinv @ R2b.columns, 2 * n)


def frame_change_shift(a, bd, gamma, build, bd2, rank_tol=CROSSING_TOL):
    """Both sides of the frame change identity.

    ``gamma`` is the path of the original problem, ``build`` and ``bd2`` come
    from :func:`indexflow.hamiltonian.frame_change`.  The left side is
    ``i_{W(R')}(gamma') - i_{W(R)}(gamma)``; the right side is
    ``dim(Gr(I) cap R'^b) - dim(Gr(I) cap R^b)`` where ``R'^b`` is the
    annihilator of ``R'`` computed directly.
    """
    n = bd.n
    gamma2 = build(gamma)
    i1, _ = maslov_type_index(gamma, bd.W, rank_tol)
    i2, _ = maslov_type_index(gamma2, bd2.W, rank_tol)
    diag = graph_frame(np.eye(n))
    rhs = (intersection_dim(diag, annihilator_R2mb(bd2), rank_tol)
           - intersection_dim(diag, annihilator_R2mb(bd), rank_tol))
    return i2 - i1, rhs
