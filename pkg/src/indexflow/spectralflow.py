"""Spectral flow, inertia and relative Morse indices of finite Hermitian paths.

Endpoint convention: eigenvalues within ``zero_tol`` of zero count on the
non-negative side.  Two independent algorithms are provided for paths of
Hermitian matrices: the endpoint inertia difference and a crossing counter
that locates each crossing and sums local contributions.
"""
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, linear_sum_assignment

from .errors import ArgumentError, RegularityError, TrackingError, ValidationError
from .structures import SubspaceFrame, null_space, restricted_form

ZERO_TOL = 1e-8
PHASE_TOL = 1e-7


@dataclass(frozen=True)
class InertiaTriple:
    """``(m_plus, m_zero, m_minus)`` of a Hermitian form."""

    m_plus: int
    m_zero: int
    m_minus: int

    def as_tuple(self):
        return (self.m_plus, self.m_zero, self.m_minus)

    def to_dict(self):
        return {"m_plus": self.m_plus, "m_zero": self.m_zero, "m_minus": self.m_minus}


def _check_hermitian(H, tol=1e-12):
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    if H.shape[0] != H.shape[1]:
        raise ValidationError("matrix is not square")
    scale = max(1.0, np.linalg.norm(H))
    if np.linalg.norm(H - H.conj().T) > tol * scale:
        raise ValidationError("matrix is not Hermitian")
    return 0.5 * (H + H.conj().T)


def zero_threshold(eigs, zero_tol=ZERO_TOL):
    """Absolute threshold ``zero_tol * max |lambda|``."""
    return zero_tol * (np.max(np.abs(eigs)) if len(eigs) else 0.0)


def inertia_of_eigenvalues(w, zero_tol=ZERO_TOL):
    w = np.asarray(w, dtype=float)
    thr = zero_threshold(w, zero_tol)
    neg = int(np.sum(w < -thr))
    pos = int(np.sum(w > thr))
    return InertiaTriple(pos, len(w) - pos - neg, neg)


def inertia(H, zero_tol=ZERO_TOL):
    """Inertia with the cutoff ``zero_tol`` relative to the spectral norm."""
    H = _check_hermitian(H)
    if H.shape[0] == 0:
        return InertiaTriple(0, 0, 0)
    return inertia_of_eigenvalues(np.linalg.eigvalsh(H), zero_tol)


def morse_index(H, zero_tol=ZERO_TOL):
    return inertia(H, zero_tol).m_minus


# ---------------------------------------------------------------------------
# Hermitian paths

class HermitianPath:
    """Path ``s -> A(s)`` on ``[0, 1]``.

    ``fn`` evaluates the path and ``dfn`` (optional) its derivative.  When
    built from samples the path is the piecewise linear interpolant.
    ``hermitian=False`` allows matrices similar to Hermitian ones; their
    eigenvalues are real up to rounding and ordered by real part.
    """

    def __init__(self, fn, dfn=None, grid=None, hermitian=True):
        self.fn, self.dfn = fn, dfn
        self.hermitian = hermitian
        self.grid = np.linspace(0.0, 1.0, 33) if grid is None else np.asarray(grid, float)
        if self.grid[0] != 0.0 or self.grid[-1] != 1.0 or np.any(np.diff(self.grid) <= 0):
            raise ValidationError("grid must increase from 0 to 1")
        A0 = self(0.0)
        self.dim = A0.shape[0]
        if hermitian:
            for s in self.grid:
                _check_hermitian(self(s))

    def __call__(self, s):
        return np.atleast_2d(np.asarray(self.fn(float(s)), dtype=complex))

    def eigenvalues(self, s):
        A = self(s)
        if self.hermitian:
            return np.linalg.eigvalsh(0.5 * (A + A.conj().T))
        return np.sort(np.linalg.eigvals(A).real)

    def derivative(self, s, h=1e-6):
        if self.dfn is not None:
            return np.atleast_2d(np.asarray(self.dfn(float(s)), dtype=complex))
        return _fd_derivative(self, s, h, 0.0, 1.0)

    @classmethod
    def linear(cls, A0, A1):
        A0 = np.asarray(A0, dtype=complex)
        A1 = np.asarray(A1, dtype=complex)
        return cls(lambda s: (1 - s) * A0 + s * A1, dfn=lambda s: A1 - A0)

    @classmethod
    def from_samples(cls, s, mats):
        s = np.asarray(s, dtype=float)
        mats = np.asarray(mats, dtype=complex)

        def fn(x):
            i = min(max(np.searchsorted(s, x, side="right") - 1, 0), len(s) - 2)
            w = (x - s[i]) / (s[i + 1] - s[i])
            return (1 - w) * mats[i] + w * mats[i + 1]
        return cls(fn, grid=s)

    def restricted(self, a, b):
        """Path on ``[a, b]`` rescaled to ``[0, 1]``."""
        dfn = None if self.dfn is None else (lambda s: (b - a) * self.dfn(a + s * (b - a)))
        return HermitianPath(lambda s: self.fn(a + s * (b - a)), dfn=dfn,
                             hermitian=self.hermitian)


def _fd_derivative(f, t, h, lo, hi):
    """Central difference with one Richardson step; one-sided near the ends."""
    def d(hh):
        if t - hh < lo:
            return (-3 * f(t) + 4 * f(t + hh) - f(t + 2 * hh)) / (2 * hh)
        if t + hh > hi:
            return (3 * f(t) - 4 * f(t - hh) + f(t - 2 * hh)) / (2 * hh)
        return (f(t + hh) - f(t - hh)) / (2 * hh)
    return (4 * d(h / 2) - d(h)) / 3


@dataclass(frozen=True)
class FlowResult:
    value: int
    crossing_value: int = None
    boundary_sensitive: bool = False

    @property
    def agree(self):
        return self.crossing_value is None or self.crossing_value == self.value


def _boundary_sensitive(w, zero_tol, band=1e3):
    thr = zero_threshold(w, zero_tol)
    a = np.abs(w)
    return bool(np.any((a > thr) & (a <= band * thr)))


def sf_endpoints(path, zero_tol=ZERO_TOL):
    """``m^-(A(0)) - m^-(A(1))`` and a boundary sensitivity flag."""
    w0, w1 = path.eigenvalues(0.0), path.eigenvalues(1.0)
    val = (inertia_of_eigenvalues(w0, zero_tol).m_minus
           - inertia_of_eigenvalues(w1, zero_tol).m_minus)
    return val, _boundary_sensitive(w0, zero_tol) or _boundary_sensitive(w1, zero_tol)


def local_crossing_index(P, B, zero_tol=ZERO_TOL):
    """``(-m^-(B), m^+(B))`` for the crossing operator ``B`` on ``im P``.

    The first entry is the flow just after the crossing, the second the flow
    just before it.  ``P`` is a frame (or matrix with orthonormal columns);
    ``B`` is either already compressed to ``im P`` or a full matrix.
    """
    Z = P.columns if isinstance(P, SubspaceFrame) else np.asarray(P, dtype=complex)
    B = np.atleast_2d(np.asarray(B, dtype=complex))
    if B.shape[0] != Z.shape[1]:
        B = Z.conj().T @ B @ Z
    B = 0.5 * (B + B.conj().T)
    if B.shape[0] == 0:
        return 0, 0
    w = np.linalg.eigvalsh(B)
    scale = max(np.max(np.abs(w)), 1e-300)
    if np.min(np.abs(w)) <= zero_tol * scale or scale < 1e-14:
        raise RegularityError("crossing operator is degenerate")
    return -int(np.sum(w < 0)), int(np.sum(w > 0))


def _crossing_contributions(path, zero_tol, n0=65):
    """Sum of local crossing contributions along the path.

    Returns ``(total, crossings)`` with ``crossings`` a list of
    ``(s, contribution)`` pairs.
    """
    grid = np.union1d(np.linspace(0.0, 1.0, n0), path.grid)
    eigs = [path.eigenvalues(s) for s in grid]
    thrs = [zero_threshold(w, zero_tol) for w in eigs]
    total = 0
    crossings = []

    def branch(j):
        return lambda s: path.eigenvalues(s)[j]

    def sgn(x, thr):
        return 0 if abs(x) <= thr else (1 if x > 0 else -1)

    last = len(grid) - 1
    for i, s in enumerate(grid):
        k = int(np.sum(np.abs(eigs[i]) <= thrs[i]))
        if k == 0:
            continue
        fwd, bwd = _local_at(path, s, k, zero_tol)
        c = fwd if i == 0 else (bwd if i == last else fwd + bwd)
        total += c
        crossings.append((float(s), c))
    # interior crossings between grid points: sign changes of ordered branches
    roots = []
    for i in range(last):
        wa, wb = eigs[i], eigs[i + 1]
        for j in range(path.dim):
            if sgn(wa[j], thrs[i]) * sgn(wb[j], thrs[i + 1]) < 0:
                roots.append(brentq(branch(j), grid[i], grid[i + 1], xtol=1e-14))
    roots.sort()
    groups = []
    for r in roots:
        if groups and r - groups[-1][-1] <= 1e-9:
            groups[-1].append(r)
        else:
            groups.append([r])
    for g in groups:
        s = float(np.mean(g))
        fwd, bwd = _local_at(path, s, len(g), zero_tol)
        total += fwd + bwd
        crossings.append((s, fwd + bwd))
    return total, sorted(crossings)


def _local_at(path, s, k, zero_tol):
    """Local contributions ``(forward, backward)`` of the ``k`` smallest eigenvalues at ``s``."""
    A = path(s)
    D = path.derivative(s)
    if path.hermitian:
        w, V = np.linalg.eigh(0.5 * (A + A.conj().T))
        Z = V[:, np.argsort(np.abs(w))[:k]]
        return local_crossing_index(Z, Z.conj().T @ D @ Z, zero_tol)
    # similar to a Hermitian matrix: first-order perturbation of the small
    # eigenvalues from left and right eigenvectors
    w, Vr = np.linalg.eig(A)
    Wl = np.linalg.inv(Vr)
    idx = np.argsort(np.abs(w))[:k]
    lam = np.real(np.diag(Wl[idx] @ D @ Vr[:, idx]))
    if np.min(np.abs(lam)) <= zero_tol * max(1e-300, np.max(np.abs(lam))):
        raise RegularityError("crossing is degenerate")
    return -int(np.sum(lam < 0)), int(np.sum(lam > 0))


def sf_crossings(path, zero_tol=ZERO_TOL):
    """Spectral flow by locating crossings and adding local indices."""
    return _crossing_contributions(path, zero_tol)[0]


def sf_hermitian(path, zero_tol=ZERO_TOL, crossings=True):
    """Spectral flow of a Hermitian path.

    Returns a :class:`FlowResult` holding the endpoint value
    ``m^-(A(0)) - m^-(A(1))``, the crossing-count value (if requested) and the
    boundary sensitivity flag.
    """
    val, sens = sf_endpoints(path, zero_tol)
    cval = None
    if crossings:
        try:
            cval = sf_crossings(path, zero_tol)
        except (RegularityError, TrackingError):
            cval = None
    return FlowResult(val, cval, sens)


def relative_morse_index(A0, A1, zero_tol=ZERO_TOL):
    """Minus the spectral flow of the segment from ``A0`` to ``A1``."""
    A0, A1 = _check_hermitian(A0), _check_hermitian(A1)
    if A0.shape != A1.shape:
        raise ArgumentError("matrices differ in size")
    return -sf_endpoints(HermitianPath.linear(A0, A1), zero_tol)[0]


# ---------------------------------------------------------------------------
# unitary paths

def _principal_phase(z):
    th = np.angle(z)
    th[th <= -np.pi] += 2 * np.pi
    return th


def _match(za, zb):
    cost = np.abs(za[:, None] - zb[None, :])
    r, c = linear_sum_assignment(cost)
    out = np.empty_like(zb)
    out[r] = zb[c]
    return out


def sf_unitary(fn, a=0.0, b=1.0, n0=65, max_step=np.pi / 4, min_width=1e-12,
               phase_tol=PHASE_TOL, grid=None):
    """Net number of eigenphases crossing ``1`` counter-clockwise.

    An eigenphase at ``1`` counts on the upper (non-negative) side.  The
    path is sampled and every interval is bisected until matched eigenphases
    move by less than ``max_step``, the two halves of the step move alike,
    the interval midpoint gives the same continued phases and the summed
    increment agrees with the trapezoid rule applied to the phase velocity
    ``Im tr(U^{-1} U')``.  The velocity test exposes an eigenphase that turns
    almost a full circle between two samples.  The result is
    ``N(a) - N(b) + C`` where ``N`` counts eigenphases in ``(-pi, -phase_tol)``
    and ``C`` is the net number of counter-clockwise passages through ``-1``.
    """
    width = b - a
    base = np.linspace(a, b, n0)
    if grid is not None:
        base = np.union1d(base, np.clip(grid, a, b))
    cache = {}

    def eig(s):
        if s not in cache:
            cache[s] = np.linalg.eigvals(np.asarray(fn(s), dtype=complex))
        return cache[s]

    rates = {}
    hd = 1e-6 * width

    def rate(s):
        # d/ds of the summed eigenphases, by differences inside [a, b]
        if s not in rates:
            U = np.asarray(fn(s), dtype=complex)
            lo_, hi_ = max(a, s - hd), min(b, s + hd)
            dU = (np.asarray(fn(hi_), dtype=complex) - np.asarray(fn(lo_), dtype=complex))
            rates[s] = float(np.trace(np.linalg.solve(U, dU)).imag) / (hi_ - lo_)
        return rates[s]

    stack = [(base[i], base[i + 1]) for i in range(len(base) - 1)][::-1]
    wraps = 0
    # walk intervals left to right, carrying the matched eigenvalue order
    current = eig(a)
    while stack:
        lo, hi = stack.pop()
        zb = _match(current, eig(hi))
        dth = np.angle(zb / current)
        ok = np.max(np.abs(dth)) < max_step
        if ok:
            # a fast eigenphase can alias to a small increment; the midpoint
            # must reproduce the same continued phases
            mid = 0.5 * (lo + hi)
            zm = _match(current, eig(mid))
            d1 = np.angle(zm / current)
            d2 = np.angle(_match(zm, eig(hi)) / zm)
            # halves of a resolved step move alike; a reversal signals a
            # fast turn hidden between the samples
            ok = (max(np.max(np.abs(d1)), np.max(np.abs(d2))) < max_step
                  and np.max(np.abs(d1 - d2)) < 0.5 * max_step
                  and np.allclose(np.sort(d1 + d2), np.sort(dth), atol=1e-6))
        if ok:
            h = hi - lo
            trap = 0.5 * h * (rate(lo) + rate(hi))
            size = 0.5 * h * (abs(rate(lo)) + abs(rate(hi))) + float(np.sum(np.abs(dth)))
            ok = abs(float(np.sum(dth)) - trap) <= 0.1 * size + 1e-6 * dth.size
        if not ok:
            if hi - lo <= min_width * width:
                raise TrackingError("eigenphase increment not resolved", (lo, hi))
            mid = 0.5 * (lo + hi)
            stack.append((mid, hi))
            stack.append((lo, mid))
            continue
        # continuous continuation versus principal value: a difference of
        # +-2 pi means the eigenphase passed through -1
        end = _principal_phase(current) + dth
        wraps += int(np.sum(np.rint((end - _principal_phase(zb)) / (2 * np.pi))))
        current = zb
    n_start = int(np.sum(_principal_phase(eig(a)) < -phase_tol))
    n_end = int(np.sum(_principal_phase(current) < -phase_tol))
    return n_start - n_end + wraps


# ---------------------------------------------------------------------------
# finite-dimensional index formulas

def a_orthogonal(A, P, rank_tol=1e-9):
    """Frame of ``{x : <A x, y> = 0 for all y in im P}``."""
    Z = P.columns if isinstance(P, SubspaceFrame) else np.asarray(P, dtype=complex)
    A = np.asarray(A, dtype=complex)
    if Z.shape[1] == 0:
        return SubspaceFrame.full(A.shape[0])
    scale = max(np.linalg.norm(A, 2), 1e-300)
    return SubspaceFrame(null_space(Z.conj().T @ A, rank_tol, scale=scale))


def restriction_index(A, P, zero_tol=ZERO_TOL, rank_tol=1e-9):
    """Both sides of the restriction formula for ``A`` and a projection ``P``.

    ``P`` is a frame of ``im P`` (or an orthogonal projection matrix).
    Left side: relative Morse index from ``P A P`` to ``A``.  Right side:
    ``m^-(A|N) + dim ker(A|N) - dim ker A`` with ``N`` the ``A``-orthogonal
    complement of ``im P``.
    """
    A = _check_hermitian(A)
    if not isinstance(P, SubspaceFrame):
        Pm = np.asarray(P, dtype=complex)
        P = SubspaceFrame(SubspaceFrame.span(Pm, Pm.shape[0]).columns)
    Pm = P.projector()
    lhs = relative_morse_index(Pm @ A @ Pm, A, zero_tol)
    N = a_orthogonal(A, P, rank_tol)
    scale = np.linalg.norm(A, 2)
    AN = restricted_form(A, N)
    # inertia on N uses the global scale of A for the zero cutoff
    wN = np.linalg.eigvalsh(AN) if AN.size else np.zeros(0)
    thr = zero_tol * scale
    mneg = int(np.sum(wN < -thr))
    kerN = int(np.sum(np.abs(wN) <= thr))
    kerA = int(np.sum(np.abs(np.linalg.eigvalsh(A)) <= thr))
    return lhs, mneg + kerN - kerA


def _kernel_frame(B, rank_tol=1e-9):
    return SubspaceFrame(null_space(B, rank_tol))


def bordered(A, B):
    """``[[A, B^*], [B, 0]]``."""
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    return np.block([[A, B.conj().T], [B, np.zeros((B.shape[0], B.shape[0]))]])


def block_path_sf(A, B, zero_tol=ZERO_TOL, rank_tol=1e-9, crossings=False):
    """Spectral flow of ``D(s) = [[A(s), B(s)^*], [B(s), 0]]`` and its formula.

    ``A`` is a :class:`HermitianPath`; ``B`` a callable on ``[0, 1]``.
    The formula is ``m^-(A0|ker B0) - m^-(A1|ker B1) + dim ker B1 - dim ker B0``.
    """
    def D(s):
        return bordered(A(s), np.atleast_2d(B(s)))
    path = HermitianPath(D, grid=np.array([0.0, 1.0]))
    res = sf_hermitian(path, zero_tol, crossings=crossings)

    def part(s):
        As = _check_hermitian(A(s))
        Bs = np.atleast_2d(np.asarray(B(s), dtype=complex))
        if np.linalg.norm(Bs) > 0:
            K = _kernel_frame(Bs, rank_tol)
        else:
            K = SubspaceFrame.full(As.shape[0])
        w = np.linalg.eigvalsh(restricted_form(As, K)) if K.dim else np.zeros(0)
        thr = zero_tol * max(np.linalg.norm(As, 2), np.linalg.norm(Bs, 2), 1e-300)
        return int(np.sum(w < -thr)), K.dim
    m0, k0 = part(0.0)
    m1, k1 = part(1.0)
    return res.value, m0 - m1 + k1 - k0
