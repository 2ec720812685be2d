"""Finite-dimensional symplectic linear algebra.

Subspaces are stored as orthonormal frames.  Every rank decision goes
through a singular value threshold so that integer outputs are
reproducible for a fixed ``rank_tol``.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from .errors import ArgumentError, ValidationError

RANK_TOL = 1e-9
FORM_TOL = 1e-10
SYMP_TOL = 1e-8


# ---------------------------------------------------------------------------
# helpers

def _as_matrix(a, dtype=complex):
    a = np.asarray(a, dtype=dtype)
    if a.ndim != 2:
        raise ArgumentError(f"expected a 2-d array, got shape {a.shape}")
    return a


def null_space(M, rank_tol=RANK_TOL, scale=None):
    """Orthonormal basis of ker M with a relative singular value cutoff.

    Singular values below ``rank_tol * scale`` are treated as zero, where
    ``scale`` defaults to the largest singular value.  Pass an explicit
    ``scale`` when ``M`` is a residual that may vanish up to rounding.
    A zero matrix has full kernel.
    """
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    ncols = M.shape[1]
    if M.shape[0] == 0 or ncols == 0:
        return np.eye(ncols, dtype=complex)
    _, s, vh = np.linalg.svd(M)
    smax = s[0] if s.size else 0.0
    if smax == 0.0:
        return np.eye(ncols, dtype=complex)
    rank = int(np.sum(s > rank_tol * (smax if scale is None else scale)))
    return vh[rank:].conj().T


def orth(A, rank_tol=RANK_TOL):
    """Orthonormal basis for the column span of ``A`` (relative cutoff)."""
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    if A.size == 0:
        return np.zeros((A.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(A, full_matrices=False)
    if s[0] == 0.0:
        return np.zeros((A.shape[0], 0), dtype=complex)
    rank = int(np.sum(s > rank_tol * s[0]))
    return u[:, :rank]


def block_index(k, n):
    """Slice of block ``k`` for blocks of size ``n``."""
    return slice(k * n, (k + 1) * n)


# ---------------------------------------------------------------------------
# structure matrices

def structure_matrices(m, n):
    """Return ``(J, Theta, K)`` for even order ``2m`` and fibre dimension ``n``.

    ``J`` has block ``(-1)^(k+m) I`` at ``k + l = 2m - 1``; ``Theta`` has
    block ``(-1)^(k+m+1) I`` at ``k + l = 2m - 2`` with the centre block
    ``k = l = m - 1`` removed; ``K`` has block ``(-1)^l I`` at ``k + l = m - 1``.
    Block indices run from 0.
    """
    if int(m) != m or int(n) != n or m < 1 or n < 1:
        raise ArgumentError(f"m and n must be positive integers, got m={m}, n={n}")
    m, n = int(m), int(n)
    eye = np.eye(n)
    J = np.zeros((2 * m * n, 2 * m * n))
    Th = np.zeros_like(J)
    K = np.zeros((m * n, m * n))
    for k in range(2 * m):
        l = 2 * m - 1 - k
        J[block_index(k, n), block_index(l, n)] = (-1) ** (k + m) * eye
        l = 2 * m - 2 - k
        if 0 <= l < 2 * m and not (k == m - 1 and l == m - 1):
            Th[block_index(k, n), block_index(l, n)] = (-1) ** (k + m + 1) * eye
    for k in range(m):
        l = m - 1 - k
        K[block_index(k, n), block_index(l, n)] = (-1) ** l * eye
    return J, Th, K


def compatible_K(m, n):
    """``(-1)^(m+1) K`` so that ``J_of_K`` reproduces ``J`` for every ``m``.

    The plain ``K`` gives ``J_of_K(K) = (-1)^(m+1) J``; for even ``m`` the
    orientation is reversed, which flips Maslov indices computed against it.
    Annihilators are unaffected by the scalar factor.
    """
    return (-1) ** (m + 1) * structure_matrices(m, n)[2]


def J_of_K(K):
    """Return ``[[0, -K^*], [K, 0]]``."""
    K = _as_matrix(K)
    z = np.zeros_like(K)
    return np.block([[z, -K.conj().T], [K, z]])


# ---------------------------------------------------------------------------
# domain types

@dataclass(frozen=True, eq=False)
class SymplecticForm:
    """Form ``omega(x, y) = <J x, y> = y^* J x`` on ``C^dim``."""

    J: np.ndarray

    def __post_init__(self):
        J = _as_matrix(self.J)
        if J.shape[0] != J.shape[1]:
            raise ValidationError("J must be square")
        scale = max(np.linalg.norm(J, 2), 1.0)
        if np.linalg.norm(J + J.conj().T) > 1e-12 * scale:
            raise ValidationError("J is not skew-adjoint")
        if np.linalg.matrix_rank(J) < J.shape[0]:
            raise ValidationError("J is singular")
        J.setflags(write=False)
        object.__setattr__(self, "J", J)

    @property
    def dim(self):
        return self.J.shape[0]

    @classmethod
    def standard(cls, m, n):
        return cls(structure_matrices(m, n)[0])

    @classmethod
    def from_K(cls, K):
        return cls(J_of_K(K))

    def omega(self, x, y):
        return np.vdot(y, self.J @ x)

    def gram(self, F, G=None):
        """Matrix of ``omega`` between the columns of ``F`` and ``G``."""
        G = F if G is None else G
        return G.conj().T @ self.J @ F

    def doubled(self):
        """The form ``(-omega) + omega`` on ``C^dim + C^dim``."""
        return SymplecticForm(sla.block_diag(-self.J, self.J))

    @cached_property
    def splitting(self):
        return SymplecticSplitting.from_form(self)


@dataclass(frozen=True, eq=False)
class SubspaceFrame:
    """Subspace given by an orthonormal basis stored as columns."""

    columns: np.ndarray

    def __post_init__(self):
        F = np.asarray(self.columns, dtype=complex)
        if F.ndim == 1:
            F = F[:, None]
        if F.ndim != 2 or F.shape[1] > F.shape[0]:
            raise ValidationError(f"bad frame shape {F.shape}")
        if F.shape[1]:
            err = np.linalg.norm(F.conj().T @ F - np.eye(F.shape[1]))
            if err > 1e-12 * max(1, F.shape[1]) * 10:
                raise ValidationError(f"frame columns are not orthonormal ({err:.2e})")
        F.setflags(write=False)
        object.__setattr__(self, "columns", F)

    @property
    def ambient_dim(self):
        return self.columns.shape[0]

    @property
    def dim(self):
        return self.columns.shape[1]

    @classmethod
    def span(cls, vectors, ambient_dim=None, rank_tol=RANK_TOL):
        """Frame of the span of the columns of ``vectors``."""
        V = np.asarray(vectors, dtype=complex)
        if V.size == 0:
            if ambient_dim is None:
                raise ArgumentError("ambient dimension needed for an empty span")
            return cls.zero(ambient_dim)
        if V.ndim == 1:
            V = V[:, None]
        return cls(orth(V, rank_tol))

    @classmethod
    def zero(cls, d):
        return cls(np.zeros((d, 0), dtype=complex))

    @classmethod
    def full(cls, d):
        return cls(np.eye(d, dtype=complex))

    def projector(self):
        return self.columns @ self.columns.conj().T

    def complement_projector(self):
        return np.eye(self.ambient_dim) - self.projector()

    def orthogonal_complement(self):
        return SubspaceFrame(null_space(self.columns.conj().T) if self.dim
                             else np.eye(self.ambient_dim, dtype=complex))

    def distance(self, other):
        """Spectral norm of the projector difference (sine of the largest angle)."""
        if self.ambient_dim != other.ambient_dim:
            raise ArgumentError("ambient dimensions differ")
        return float(np.linalg.norm(self.projector() - other.projector(), 2))

    def same_as(self, other, tol=1e-9):
        return self.dim == other.dim and self.distance(other) <= tol

    def to_list(self):
        """Columns as lists of ``[re, im]`` pairs."""
        return [[[float(z.real) + 0.0, float(z.imag) + 0.0] for z in col] for col in self.columns.T]


def graph_frame(M, rank_tol=RANK_TOL):
    """Frame of ``{(x, M x)}``."""
    M = _as_matrix(M)
    return SubspaceFrame(orth(np.vstack([np.eye(M.shape[1]), M]), rank_tol))


def is_lagrangian(L, form, tol=FORM_TOL):
    """Half dimension and ``omega`` vanishing on ``L``."""
    if L.ambient_dim != form.dim or 2 * L.dim != form.dim:
        return False
    scale = max(np.linalg.norm(form.J, 2), 1.0)
    return bool(np.linalg.norm(form.gram(L.columns)) <= tol * scale)


def lagrangian_residual(L, form):
    scale = max(np.linalg.norm(form.J, 2), 1.0)
    return float(np.linalg.norm(form.gram(L.columns)) / scale)


@dataclass(frozen=True, eq=False)
class BoundaryData:
    """Boundary subspace ``R`` of ``C^{2mn}`` with derived annihilators."""

    m: int
    n: int
    R: SubspaceFrame
    rank_tol: float = RANK_TOL

    def __post_init__(self):
        if self.R.ambient_dim != 2 * self.m * self.n:
            raise ValidationError(
                f"R lives in C^{self.R.ambient_dim}, expected C^{2 * self.m * self.n}")

    @classmethod
    def dirichlet(cls, m, n):
        return cls(m, n, SubspaceFrame.zero(2 * m * n))

    @classmethod
    def periodic(cls, m, n):
        return cls(m, n, graph_frame(np.eye(m * n)))

    @classmethod
    def free(cls, m, n):
        return cls(m, n, SubspaceFrame.full(2 * m * n))

    @cached_property
    def R2mb(self):
        return annihilator_R2mb(self)

    @cached_property
    def W(self):
        return doubled_lagrangian(self)


# ---------------------------------------------------------------------------
# annihilators and Lagrangians

def boundary_pairing(m, n):
    """Matrix ``G`` with ``y^* G x`` equal to the boundary pairing of jets.

    Block ``k`` (1-based) of ``x`` pairs with block ``m - k + 1`` of ``y``
    with sign ``(-1)^(k-1)`` for ``k <= m`` and with block ``3m - k + 1``
    with sign ``(-1)^(k-m)`` for ``k > m``.
    """
    G = np.zeros((2 * m * n, 2 * m * n))
    eye = np.eye(n)
    for k in range(1, 2 * m + 1):
        if k <= m:
            j, sgn = m - k + 1, (-1) ** (k - 1)
        else:
            j, sgn = 3 * m - k + 1, (-1) ** (k - m)
        G[block_index(j - 1, n), block_index(k - 1, n)] = sgn * eye
    return G


def _annihilator(G, R, rank_tol):
    # x is admissible iff y^* G x = 0 for every basis vector y of R
    if R.dim == 0:
        return SubspaceFrame.full(R.ambient_dim)
    return SubspaceFrame(null_space(R.columns.conj().T @ G, rank_tol))


def annihilator_R2mb(bd):
    """Annihilator of ``R`` under the boundary pairing of jets."""
    G = boundary_pairing(bd.m, bd.n)
    return _annihilator(G, bd.R, bd.rank_tol)


def annihilator_K(K, R, rank_tol=RANK_TOL):
    """``{(x1, x2) : <K x1, y1> - <K x2, y2> = 0 for all (y1, y2) in R}``."""
    K = _as_matrix(K)
    if K.shape[0] != K.shape[1]:
        raise ArgumentError("K must be square")
    s = np.linalg.svd(K, compute_uv=False)
    if s[-1] <= 1e-12 * s[0]:
        raise ArgumentError("K is singular")
    if R.ambient_dim != 2 * K.shape[0]:
        raise ArgumentError("R and K dimensions do not match")
    return _annihilator(sla.block_diag(K, -K), R, rank_tol)


def interleave_pairs(first, second, half):
    """Frame of ``{(a1, b1, a2, b2)}`` with ``(a1, a2)`` in first, ``(b1, b2)`` in second."""
    d1, d2 = first.dim, second.dim
    out = np.zeros((4 * half, d1 + d2), dtype=complex)
    F, S = first.columns, second.columns
    out[0:half, :d1] = F[:half]
    out[2 * half:3 * half, :d1] = F[half:]
    out[half:2 * half, d1:] = S[:half]
    out[3 * half:, d1:] = S[half:]
    return SubspaceFrame(orth(out) if out.shape[1] else out)


def doubled_lagrangian(bd, K=None):
    """``{(x1, x2, x3, x4) : (x1, x3) in Rb, (x2, x4) in R}`` in ``C^{4mn}``.

    ``Rb`` is the jet annihilator, or the ``K``-annihilator when ``K`` is given.
    """
    Rb = bd.R2mb if K is None else annihilator_K(K, bd.R, bd.rank_tol)
    return interleave_pairs(Rb, bd.R, bd.m * bd.n)


def graph_lagrangian(M, form, tol=SYMP_TOL):
    """Frame of ``Gr(M)`` in the doubled space; ``M`` must preserve ``form``."""
    M = _as_matrix(M)
    res = symplectic_defect(M, form.J)
    if res > tol:
        raise ValidationError(f"matrix is not symplectic (defect {res:.2e})")
    return graph_frame(M)


def symplectic_defect(M, J):
    """Relative defect ``|M^* J M - J| / max(1, |M|^2)`` (Frobenius)."""
    nrm = max(1.0, np.linalg.norm(M, 2) ** 2)
    return float(np.linalg.norm(M.conj().T @ J @ M - J) / nrm)


# ---------------------------------------------------------------------------
# symplectic splitting and unitary generators

class SymplecticSplitting:
    """Splitting ``H+ + H-`` with ``-i omega`` definite on each summand.

    ``Ep`` and ``Em`` are bases normalised so that ``-i omega`` is the
    identity on ``H+`` and minus the identity on ``H-``.  A Lagrangian
    ``L = Gr(U)`` is then encoded by a unitary matrix ``U``.
    """

    def __init__(self, form, Ep, Em):
        self.form = form
        self.Ep = np.asarray(Ep, dtype=complex)
        self.Em = np.asarray(Em, dtype=complex)
        if self.Ep.shape[1] != self.Em.shape[1]:
            raise ValidationError("H+ and H- have different dimensions")
        self._E = np.hstack([self.Ep, self.Em])
        self._lu = sla.lu_factor(self._E)

    @classmethod
    def from_form(cls, form):
        # +-i eigenspaces of the unitary polar factor of J are the
        # positive and negative spectral spaces of the Hermitian -iJ
        w, Q = np.linalg.eigh(-1j * form.J)
        pos, neg = w > 0, w < 0
        Ep = Q[:, pos] / np.sqrt(w[pos])
        Em = Q[:, neg] / np.sqrt(-w[neg])
        return cls(form, Ep, Em)

    def transformed(self, S):
        """Image splitting under a symplectic map ``S``."""
        S = _as_matrix(S)
        if symplectic_defect(S, self.form.J) > SYMP_TOL:
            raise ValidationError("transforming matrix is not symplectic")
        return SymplecticSplitting(self.form, S @ self.Ep, S @ self.Em)

    @property
    def half(self):
        return self.Ep.shape[1]

    def coordinates(self, F):
        """Coordinates ``(A, B)`` with ``F = Ep A + Em B``."""
        C = sla.lu_solve(self._lu, np.asarray(F, dtype=complex))
        h = self.half
        return C[:h], C[h:]

    def generator(self, F):
        """Unitary ``U`` with ``span F = Gr(U)``; ``F`` spans a Lagrangian."""
        A, B = self.coordinates(F)
        return np.linalg.solve(A.T, B.T).T

    def lagrangian(self, U):
        """Frame of ``Gr(U)``."""
        return SubspaceFrame.span(self.Ep + self.Em @ U)


def unitary_generator(L, form, splitting=None, tol=FORM_TOL):
    """Unitary ``U`` from ``H+`` to ``H-`` whose graph is ``L``.

    Coordinates on ``H+-`` are orthonormal for the definite forms
    ``-+ i omega``, so ``U`` is a unitary matrix.
    """
    if not is_lagrangian(L, form, tol):
        raise ValidationError(
            f"subspace is not Lagrangian (dim {L.dim} in C^{form.dim}, "
            f"residual {lagrangian_residual(L, form):.2e})")
    sp = form.splitting if splitting is None else splitting
    return sp.generator(L.columns)


# ---------------------------------------------------------------------------
# intersections

def principal_sines(A, B):
    """Sines of the principal angles between ``span A`` and ``span B``, ascending.

    One value per column of ``A``; computed from ``(I - P_B) A`` for accuracy
    at small angles.
    """
    FA, FB = A.columns, B.columns
    if FA.shape[1] == 0:
        return np.zeros(0)
    resid = FA - FB @ (FB.conj().T @ FA) if FB.shape[1] else FA
    s = np.linalg.svd(resid, compute_uv=False)
    return np.sort(np.concatenate([s, np.zeros(FA.shape[1] - s.size)]))


def subspace_intersection(A, B, rank_tol=RANK_TOL):
    """Frame of ``A`` intersected with ``B``.

    A direction of ``A`` is kept when its principal angle sine to ``B`` is at
    most ``rank_tol`` (frames are orthonormal, so the scale is one).
    """
    if A.ambient_dim != B.ambient_dim:
        raise ArgumentError("ambient dimensions differ")
    FA, FB = A.columns, B.columns
    if FA.shape[1] == 0 or FB.shape[1] == 0:
        return SubspaceFrame.zero(A.ambient_dim)
    resid = FA - FB @ (FB.conj().T @ FA)
    _, s, vh = np.linalg.svd(resid)
    s = np.concatenate([s, np.zeros(FA.shape[1] - s.size)])
    keep = s <= rank_tol
    if not keep.any():
        return SubspaceFrame.zero(A.ambient_dim)
    V = vh.conj().T[:, keep]
    return SubspaceFrame(orth(FA @ V))


def intersection_dim(A, B, rank_tol=RANK_TOL):
    return subspace_intersection(A, B, rank_tol).dim


def stable_subspace(M11, RK, rank_tol=RANK_TOL):
    """Frame of ``S = {x : (x, M11 x) in RK}``."""
    M11 = _as_matrix(M11)
    d = M11.shape[0]
    if RK.ambient_dim != 2 * d:
        raise ArgumentError("RK dimension does not match M11")
    if RK.dim == 2 * d:
        return SubspaceFrame.full(d)
    X = np.vstack([np.eye(d), M11])
    resid = X - RK.columns @ (RK.columns.conj().T @ X) if RK.dim else X
    return SubspaceFrame(null_space(resid, rank_tol, scale=np.linalg.norm(X, 2)))


def restricted_form(H, S):
    """Compression ``S^* H S`` of a Hermitian matrix to a frame."""
    Z = S.columns
    A = Z.conj().T @ H @ Z
    return 0.5 * (A + A.conj().T)
