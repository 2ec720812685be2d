"""Conforming B-spline discretization of index forms.

The form ``I_s(x, y) = int sum_{k,l} <p_{k,l}(s,t) x^(l), y^(k)> dt`` is
assembled on splines of degree ``d >= m`` with uniform interior knots of
multiplicity one (continuity ``C^{d-1}``), restricted to the boundary space
``{x : jet(x) in R}`` and paired with the Gram matrix of the ``H^m`` inner
product.  Indices are read off the generalized Hermitian pencil ``(A, G)``.
"""
from dataclasses import dataclass, field
from math import ceil

import numpy as np
import scipy.linalg as sla

from . import kernels
from .errors import ArgumentError, DiscretizationError, PreconditionError
from .spectralflow import ZERO_TOL
from .structures import RANK_TOL, null_space

HERM_TOL = 1e-10
KERNEL_DECAY = 0.25
KERNEL_WINDOW = 1e-2


# ---------------------------------------------------------------------------
# spline spaces

class SplineSpace:
    """``C^{d-1}`` splines of degree ``d`` on ``E`` uniform elements, values in ``C^n``.

    Coefficients are ordered basis-function major: index ``i * n + c`` is
    basis function ``i`` times the unit vector ``e_c``.
    """

    def __init__(self, m, n, T, E, d=None):
        d = m + 1 if d is None else d
        if int(m) != m or int(n) != n or m < 1 or n < 1:
            raise ArgumentError("m and n must be positive integers")
        if d < m:
            raise DiscretizationError(f"degree {d} < m = {m} is not H^m conforming")
        if E < 2:
            raise DiscretizationError(f"need at least two elements, got {E}")
        if not T > 0:
            raise ArgumentError("T must be positive")
        self.m, self.n, self.T, self.E, self.d = int(m), int(n), float(T), int(E), int(d)
        self.breaks = np.linspace(0.0, self.T, self.E + 1)
        self.knots = np.concatenate([np.zeros(d), self.breaks, np.full(d, self.T)])
        self.nbasis = self.E + self.d

    @property
    def dim(self):
        return self.nbasis * self.n

    @property
    def continuity(self):
        return self.d - 1

    def refined(self):
        return SplineSpace(self.m, self.n, self.T, 2 * self.E, self.d)

    def evaluate(self, x, nder):
        """``(spans, ders)`` of the nonzero basis functions at ``x``."""
        return kernels.bspline_ders(self.knots, self.d, np.asarray(x, dtype=float), nder)

    def quadrature(self, nq):
        """Gauss-Legendre nodes and weights, ``nq`` per element, element by element."""
        xg, wg = np.polynomial.legendre.leggauss(nq)
        a, b = self.breaks[:-1, None], self.breaks[1:, None]
        x = 0.5 * (b - a) * xg[None, :] + 0.5 * (a + b)
        w = 0.5 * (b - a) * wg[None, :]
        return x.ravel(), w.ravel()

    def basis_matrix(self, x, k):
        """Dense ``(len(x), nbasis)`` matrix of ``k``-th derivatives (scalar basis)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        spans, ders = self.evaluate(x, k)
        out = np.zeros((x.size, self.nbasis))
        for j in range(self.d + 1):
            out[np.arange(x.size), spans - self.d + j] = ders[:, k, j]
        return out

    def trace_matrix(self):
        """Boundary jet ``(x^(m-1)(0), ..., x(0), x^(m-1)(T), ..., x(T))`` as a matrix."""
        m, n = self.m, self.n
        eye = np.eye(n)
        rows = []
        for x in (0.0, self.T):
            for k in range(m - 1, -1, -1):
                rows.append(np.kron(self.basis_matrix([x], k), eye))
        return np.vstack(rows).astype(complex)

    def __repr__(self):
        return f"SplineSpace(m={self.m}, n={self.n}, T={self.T}, E={self.E}, d={self.d})"


def build_space(m, n, T, E, d=None):
    """B-spline space of degree ``d`` (default ``m + 1``) on ``E`` elements."""
    return SplineSpace(m, n, T, E, d)


@dataclass
class ConstrainedSpace:
    """Orthonormal coefficient basis ``Z`` of the splines whose jet lies in ``R``."""

    space: SplineSpace
    Z: np.ndarray
    trace: np.ndarray

    @property
    def dim(self):
        return self.Z.shape[1]


def constrained_basis(space, bd, rank_tol=RANK_TOL):
    """Null space of ``(I - P_R) Tr`` where ``Tr`` is the boundary jet map.

    The projector is applied through an orthonormal basis of the
    orthogonal complement of ``R``, so ``R`` equal to the whole space
    leaves the basis unconstrained.
    """
    if (bd.m, bd.n) != (space.m, space.n):
        raise ArgumentError("boundary data and spline space have different (m, n)")
    Tr = space.trace_matrix()
    sv = np.linalg.svd(Tr, compute_uv=False)
    if sv[-1] <= rank_tol * sv[0]:
        raise DiscretizationError("trace map is rank deficient; refine the mesh")
    perp = bd.R.orthogonal_complement().columns
    if perp.shape[1] == 0:
        Z = np.eye(space.dim, dtype=complex)
    else:
        Z = null_space(perp.conj().T @ Tr, rank_tol)
    expected = space.dim - (2 * space.m * space.n - bd.R.dim)
    if Z.shape[1] != expected:
        raise DiscretizationError(
            f"constrained space has dimension {Z.shape[1]}, expected {expected}")
    return ConstrainedSpace(space, Z, Tr)


# ---------------------------------------------------------------------------
# assembly

@dataclass
class DiscretizedPencil:
    """Form matrix ``A`` and ``H^m`` Gram matrix ``G`` on a constrained basis."""

    A: np.ndarray
    G: np.ndarray
    elements: int
    s: float
    hermiticity: float = 0.0

    def eigenvalues(self):
        return sla.eigh(self.A, self.G, eigvals_only=True)

    def to_dict(self):
        def enc(M):
            return [[[float(z.real) + 0.0, float(z.imag) + 0.0] for z in row] for row in M]
        return {"elements": self.elements, "s": self.s, "A": enc(self.A), "G": enc(self.G)}


def quadrature_order(d, coef_degree):
    """Gauss-Legendre points per element that integrate the form exactly."""
    return int(ceil((2 * d + coef_degree + 1) / 2))


def _coefficient_samples(fam, s, x):
    m, n = fam.m, fam.n
    out = np.empty((x.size, m + 1, m + 1, n, n), dtype=complex)
    for k in range(m + 1):
        for l in range(m + 1):
            out[:, k, l] = fam.block(k, l, s).evaluate_many(x)
    return out


def _gram_samples(m, n, npts):
    out = np.zeros((npts, m + 1, m + 1, n, n), dtype=complex)
    for k in range(m + 1):
        out[:, k, k] = np.eye(n)
    return out


def _check_hermitian(M, what):
    scale = max(1.0, float(np.max(np.abs(M))))
    err = float(np.max(np.abs(M - M.conj().T)))
    if err > HERM_TOL * scale:
        raise DiscretizationError(f"{what} is not Hermitian (error {err:.2e})")
    return 0.5 * (M + M.conj().T), err


def assemble(fam, s, cspace, nq=None):
    """Pencil of ``I_s`` on the constrained spline space ``cspace``."""
    space = cspace.space
    if (fam.m, fam.n) != (space.m, space.n) or abs(fam.T - space.T) > 1e-14 * fam.T:
        raise ArgumentError("family and spline space do not match")
    need = quadrature_order(space.d, fam.max_degree)
    nq = need if nq is None else int(nq)
    if nq < need:
        raise DiscretizationError(
            f"{nq} quadrature points per element under-resolve degree "
            f"{2 * space.d + fam.max_degree} integrands (need {need})")
    x, w = space.quadrature(nq)
    spans, ders = space.evaluate(x, space.m)
    ders = np.ascontiguousarray(ders[:, :space.m + 1])
    coef = _coefficient_samples(fam, s, x)
    A = kernels.assemble_form(spans, ders, w, coef, space.nbasis, nq)
    G = kernels.assemble_form(spans, ders, w, _gram_samples(space.m, space.n, x.size),
                              space.nbasis, nq)
    Z = cspace.Z
    A, errA = _check_hermitian(Z.conj().T @ A @ Z, "form matrix")
    G, _ = _check_hermitian(Z.conj().T @ G @ Z, "Gram matrix")
    try:
        np.linalg.cholesky(G)
    except np.linalg.LinAlgError as exc:
        raise DiscretizationError("Gram matrix is not positive definite") from exc
    return DiscretizedPencil(A, G, space.E, float(s), errA)


# ---------------------------------------------------------------------------
# indices over refinement levels

@dataclass
class Discretization:
    """Mesh schedule: ``elements * 2**j`` for ``j = 0..refinements``."""

    elements: int = 16
    degree: int = None
    refinements: int = 2
    s_samples: int = 5

    def levels(self):
        return [self.elements * 2 ** j for j in range(self.refinements + 1)]

    def to_dict(self):
        return {"elements": self.elements, "degree": self.degree,
                "refinements": self.refinements, "s_samples": self.s_samples}


def _negative_count(eigs, zero_tol):
    thr = zero_tol * max(1.0, float(np.max(np.abs(eigs)))) if eigs.size else 0.0
    return int(np.sum(eigs < -thr))


def _stable(values):
    return len(values) >= 3 and len(set(values[-3:])) == 1


@dataclass
class IndexResult:
    """An integer computed on a refinement sequence, with its history."""

    value: int
    stabilized: bool
    history: list = field(default_factory=list)
    boundary_sensitive: bool = False

    def to_dict(self):
        return {"value": self.value, "stabilized": self.stabilized,
                "boundary_sensitive": self.boundary_sensitive,
                "history": [list(h) for h in self.history]}


class LevelSequence:
    """Constrained spaces and pencil eigenvalues cached per refinement level."""

    def __init__(self, fam, bd, disc=None, rank_tol=RANK_TOL):
        self.fam, self.bd = fam, bd
        self.disc = Discretization() if disc is None else disc
        self.rank_tol = rank_tol
        self._spaces = {}
        self._eigs = {}
        self.hermiticity = 0.0

    def cspace(self, E):
        if E not in self._spaces:
            space = SplineSpace(self.fam.m, self.fam.n, self.fam.T, E, self.disc.degree)
            self._spaces[E] = constrained_basis(space, self.bd, self.rank_tol)
        return self._spaces[E]

    def pencil(self, E, s):
        return assemble(self.fam, s, self.cspace(E))

    def eigenvalues(self, E, s):
        key = (E, float(s))
        if key not in self._eigs:
            pencil = self.pencil(E, s)
            self.hermiticity = max(self.hermiticity, pencil.hermiticity)
            self._eigs[key] = pencil.eigenvalues()
        return self._eigs[key]


def discrete_morse_index(seq, s=1.0, zero_tol=ZERO_TOL):
    """Morse index ``m^-`` of the pencil at ``s`` across the refinement levels.

    Refused with :class:`PreconditionError` unless ``p_{m,m}(s, .)`` is
    positive definite, because the index is infinite otherwise.
    """
    if not seq.fam.leading_positive_definite(s):
        raise PreconditionError(
            "leading coefficient is not positive definite; only relative indices are defined")
    hist = [(E, _negative_count(seq.eigenvalues(E, s), zero_tol)) for E in seq.disc.levels()]
    vals = [h[1] for h in hist]
    return IndexResult(vals[-1], _stable(vals), hist)


def _kernel_count(fine, coarse, zero_tol):
    """Eigenvalues of ``fine`` that are zero or decaying to zero relative to ``coarse``."""
    scale = max(1.0, float(np.max(np.abs(fine))))
    count = 0
    for lam in fine[np.abs(fine) <= KERNEL_WINDOW * scale]:
        if abs(lam) <= zero_tol * scale:
            count += 1
            continue
        prev = coarse[np.argmin(np.abs(coarse - lam))]
        if abs(lam) <= KERNEL_DECAY * abs(prev):
            count += 1
    return count


def kernel_dimension(seq, s=1.0, zero_tol=ZERO_TOL):
    """Nullity of the form at ``s``.

    An eigenvalue counts as kernel if it is below ``zero_tol`` or if it
    shrinks by at least ``KERNEL_DECAY`` over one mesh doubling while
    lying in a small window around zero; eigenvalues converging to a
    nonzero limit change by a factor close to one.
    """
    levels = seq.disc.levels()
    if len(levels) < 2:
        raise ArgumentError("kernel detection needs at least one refinement")
    eigs = [seq.eigenvalues(E, s) for E in levels]
    hist = [(levels[i], _kernel_count(eigs[i], eigs[i - 1], zero_tol))
            for i in range(1, len(levels))]
    vals = [h[1] for h in hist]
    stable = len(vals) >= 2 and vals[-1] == vals[-2]
    return IndexResult(vals[-1], stable, hist)


def form_spectral_flow(seq, zero_tol=ZERO_TOL):
    """``sf = m^-(A(0)) - m^-(A(1))`` on each mesh, reported at the finest.

    The endpoint identity holds on every fixed mesh even when the leading
    coefficient is indefinite and each Morse index grows with refinement.
    The interior ``s`` grid is sampled on the finest mesh only to report the
    negative counts along the path; kernels at either endpoint set the
    ``boundary_sensitive`` flag.
    """
    hist = []
    for E in seq.disc.levels():
        sf = (_negative_count(seq.eigenvalues(E, 0.0), zero_tol)
              - _negative_count(seq.eigenvalues(E, 1.0), zero_tol))
        hist.append((E, sf))
    vals = [h[1] for h in hist]
    sensitive = False
    if seq.disc.refinements >= 1:
        sensitive = (kernel_dimension(seq, 0.0, zero_tol).value > 0
                     or kernel_dimension(seq, 1.0, zero_tol).value > 0)
    return IndexResult(vals[-1], _stable(vals), hist, sensitive)


def negative_count_profile(seq, zero_tol=ZERO_TOL):
    """``(s, m^-)`` along the interior ``s`` grid on the finest mesh."""
    E = seq.disc.levels()[-1]
    ss = np.linspace(0.0, 1.0, max(2, seq.disc.s_samples))
    return [(float(s), _negative_count(seq.eigenvalues(E, s), zero_tol)) for s in ss]
