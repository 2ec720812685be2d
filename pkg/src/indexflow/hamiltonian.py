"""Coefficient families, first-order Hamiltonian data and fundamental paths.

State vectors are ordered ``u = (u^{2m-1}, ..., u^0)``: the first ``mn``
components are momenta, the last ``mn`` are the position jet
``(x^{(m-1)}, ..., x)``.
"""
from dataclasses import dataclass, field
from math import factorial

import numpy as np
from scipy.integrate import quad_vec, solve_ivp

from .errors import (AccuracyError, ArgumentError, ConsistencyError,
                     IntegrationAccuracyError, SingularCoefficientError,
                     ValidationError)
from .polynomials import MatPoly
from .structures import (SYMP_TOL, BoundaryData, SubspaceFrame, SymplecticForm,
                         block_index, structure_matrices, symplectic_defect)

INV_TOL = 1e-8
HOMOTOPIES = ("linear", "scale-lower-order")


# ---------------------------------------------------------------------------
# coefficient families

class CoefficientFamily:
    """Blocks ``p_{k,l}(s, t)``, ``0 <= k, l <= m``, polynomial in ``t``.

    ``entries0`` and ``entries1`` map ``(k, l)`` to the ``n x n`` matrix
    polynomials at ``s = 0`` and ``s = 1``.  Missing entries are zero.
    With ``homotopy="linear"`` the blocks are interpolated linearly in
    ``s``.  With ``"scale-lower-order"`` (``m = 1`` only) the leading block
    is the ``s = 1`` value and every other block is ``s`` times its
    ``s = 1`` value; ``entries0`` is ignored.
    """

    def __init__(self, m, n, T, entries0, entries1=None, homotopy="linear",
                 inv_tol=INV_TOL, check=True):
        if int(m) != m or int(n) != n or m < 1 or n < 1:
            raise ArgumentError("m and n must be positive integers")
        if not T > 0:
            raise ArgumentError("T must be positive")
        if homotopy not in HOMOTOPIES:
            raise ArgumentError(f"unknown homotopy {homotopy!r}")
        if homotopy == "scale-lower-order" and m != 1:
            raise ValidationError("the scale-lower-order homotopy needs m = 1")
        self.m, self.n, self.T = int(m), int(n), float(T)
        self.homotopy = homotopy
        self.inv_tol = inv_tol
        entries1 = entries0 if entries1 is None else entries1
        self.entries = (self._complete(entries0), self._complete(entries1))
        if homotopy == "scale-lower-order":
            e1 = self.entries[1]
            z = MatPoly.zeros(self.n)
            self.entries = ({kl: (e1[kl] if kl == (1, 1) else z) for kl in e1}, e1)
        if check:
            self.validate()

    def _complete(self, entries):
        m, n = self.m, self.n
        out = {}
        for k in range(m + 1):
            for l in range(m + 1):
                p = entries.get((k, l))
                if p is None:
                    p = MatPoly.zeros(n)
                elif not isinstance(p, MatPoly):
                    p = MatPoly.constant(np.atleast_2d(p))
                if p.shape != (n, n):
                    raise ValidationError(f"block ({k},{l}) has shape {p.shape}")
                out[(k, l)] = p
        return out

    # -- construction helpers ----------------------------------------------

    @classmethod
    def from_pqr(cls, p, q, r, T, homotopy="scale-lower-order", p0=None, q0=None, r0=None,
                 **kw):
        """First-order front end: ``<p x' + q x, y'> + <q^* x' + r x, y>``.

        Arguments are matrix polynomials or constant matrices; the
        ``*0`` arguments give the ``s = 0`` endpoint for the linear homotopy.
        """
        def poly(a):
            return a if isinstance(a, MatPoly) else MatPoly.constant(np.atleast_2d(a))
        p, q, r = poly(p), poly(q), poly(r)
        n = p.shape[0]
        e1 = {(1, 1): p, (1, 0): q, (0, 1): q.adjoint(), (0, 0): r}
        e0 = None
        if p0 is not None or q0 is not None or r0 is not None:
            z = MatPoly.zeros(n)
            p0 = p if p0 is None else poly(p0)
            q0 = z if q0 is None else poly(q0)
            r0 = z if r0 is None else poly(r0)
            e0 = {(1, 1): p0, (1, 0): q0, (0, 1): q0.adjoint(), (0, 0): r0}
            homotopy = "linear"
        return cls(1, n, T, e1 if e0 is None else e0, e1, homotopy=homotopy, **kw)

    def base_family(self):
        """Constant-in-``s`` family ``diag(p_{m,m}(1, t), 0)``."""
        z = MatPoly.zeros(self.n)
        m = self.m
        e = {(k, l): z for k in range(m + 1) for l in range(m + 1)}
        e[(m, m)] = self.entries[1][(m, m)]
        return CoefficientFamily(m, self.n, self.T, e, e, inv_tol=self.inv_tol)

    def endpoint_family(self, s):
        """Constant-in-``s`` family frozen at parameter ``s``."""
        e = {kl: self.block(kl[0], kl[1], s) for kl in self.entries[0]}
        return CoefficientFamily(self.m, self.n, self.T, e, e, inv_tol=self.inv_tol)

    # -- evaluation -----------------------------------------------------------

    def block(self, k, l, s):
        """Matrix polynomial ``p_{k,l}(s, .)``."""
        e0, e1 = self.entries
        if self.homotopy == "linear":
            if s == 0:
                return e0[(k, l)]
            if s == 1:
                return e1[(k, l)]
            return (1.0 - s) * e0[(k, l)] + s * e1[(k, l)]
        if (k, l) == (self.m, self.m):
            return e1[(k, l)]
        return s * e1[(k, l)]

    def blocks_at(self, s, t):
        """Array ``B[k, l] = p_{k,l}(s, t)`` of shape ``(m+1, m+1, n, n)``."""
        m, n = self.m, self.n
        out = np.empty((m + 1, m + 1, n, n), dtype=complex)
        for k in range(m + 1):
            for l in range(m + 1):
                out[k, l] = self.block(k, l, s)(t)
        return out

    def pmatrix(self, s, t):
        """``p_s(t) = (p_{m-k, m-l})_{k,l}`` as an ``(m+1)n`` square matrix."""
        B = self.blocks_at(s, t)[::-1, ::-1]
        return np.block([[B[k, l] for l in range(self.m + 1)] for k in range(self.m + 1)])

    @property
    def max_degree(self):
        return max(p.degree for e in self.entries for p in e.values())

    def leading_inverse(self, s, t):
        pmm = self.block(self.m, self.m, s)(t)
        sv = np.linalg.svd(pmm, compute_uv=False)
        if sv[-1] <= self.inv_tol * max(1.0, sv[0]):
            raise SingularCoefficientError(s, t, sv[-1])
        return np.linalg.inv(pmm)

    def is_constant_in_s(self):
        if self.homotopy != "linear":
            return all(self.entries[1][kl].allclose(MatPoly.zeros(self.n), 0.0)
                       for kl in self.entries[1] if kl != (self.m, self.m))
        return all(self.entries[0][kl].allclose(self.entries[1][kl], 0.0)
                   for kl in self.entries[0])

    def leading_positive_definite(self, s=1.0, npts=129):
        """Check ``p_{m,m}(s, t) > 0`` on a sampling grid."""
        pmm = self.block(self.m, self.m, s)
        for t in np.linspace(0.0, self.T, npts):
            P = pmm(t)
            if np.linalg.eigvalsh(0.5 * (P + P.conj().T))[0] <= 0:
                return False
        return True

    def validate(self, npts=65):
        """Block self-adjointness and invertibility of the leading block."""
        for e in self.entries:
            for (k, l), p in e.items():
                d = p - e[(l, k)].adjoint()
                scale = max(1.0, float(np.max(np.abs(p.c))))
                if np.max(np.abs(d.c)) > 1e-12 * scale:
                    raise ValidationError(f"p_({k},{l}) is not the adjoint of p_({l},{k})")
        for s in (0.0, 0.25, 0.5, 0.75, 1.0):
            for t in np.linspace(0.0, self.T, npts):
                self.leading_inverse(s, t)

    def to_dict(self):
        return {
            "m": self.m, "n": self.n, "T": self.T, "homotopy": self.homotopy,
            "entries": [{"k": k, "l": l, "s0": self.entries[0][(k, l)].to_list(),
                         "s1": self.entries[1][(k, l)].to_list()}
                        for (k, l) in sorted(self.entries[0])],
        }


# ---------------------------------------------------------------------------
# pointwise Hamiltonian data

def legendre_blocks(fam, s, t):
    """``P(p_s(t))`` assembled from the four block formulas."""
    m, n = fam.m, fam.n
    B = fam.blocks_at(s, t)
    pinv = fam.leading_inverse(s, t)
    P = np.zeros(((m + 1) * n, (m + 1) * n), dtype=complex)
    P[block_index(0, n), block_index(0, n)] = pinv
    for l in range(1, m + 1):
        P[block_index(0, n), block_index(l, n)] = -pinv @ B[m, m - l]
        P[block_index(l, n), block_index(0, n)] = -B[m - l, m] @ pinv
    for k in range(1, m + 1):
        for l in range(1, m + 1):
            P[block_index(k, n), block_index(l, n)] = (
                B[m - k, m - l] - B[m - k, m] @ pinv @ B[m, m - l])
    return P


def companion_matrix(fam, s, t):
    """First-order companion matrix ``C`` with ``u' = C u`` for kernel jets.

    Rows follow the derivative recursions of the jet components; the
    source term ``u^{2m}`` is dropped.
    """
    m, n = fam.m, fam.n
    B = fam.blocks_at(s, t)
    pinv = fam.leading_inverse(s, t)
    C = np.zeros((2 * m * n, 2 * m * n), dtype=complex)

    def pos(k):  # block position of u^k
        return block_index(2 * m - 1 - k, n)

    eye = np.eye(n)
    for k in range(m - 1):
        C[pos(k), pos(k + 1)] = eye
    # x^{(m)} = pinv (u^m - sum_{b<m} p_{m,b} u^b)
    C[pos(m - 1), pos(m)] = pinv
    for b in range(m):
        C[pos(m - 1), pos(b)] += -pinv @ B[m, b]
    for k in range(m, 2 * m):
        if k + 1 <= 2 * m - 1:
            C[pos(k), pos(k + 1)] += eye
        sgn = (-1) ** (m + k)
        a = 2 * m - k - 1
        C[pos(k), pos(m)] += sgn * B[a, m] @ pinv
        for b in range(m):
            C[pos(k), pos(b)] += sgn * (B[a, b] - B[a, m] @ pinv @ B[m, b])
    return C


def companion_coefficient(fam, s, t, tol=1e-10):
    """Return ``(C, b)`` with ``b = J^{-1} C`` self-adjoint."""
    J = structure_matrices(fam.m, fam.n)[0]
    C = companion_matrix(fam, s, t)
    b = -J @ C  # J^2 = -I
    scale = max(1.0, np.linalg.norm(b))
    if np.linalg.norm(b - b.conj().T) > tol * scale:
        raise ConsistencyError(f"b is not self-adjoint at (s={s}, t={t})")
    return C, b


def b_pattern_mismatch(fam, s, t):
    """Block-wise norm of ``b - (Theta + diag(0, P))``.

    Returns a ``2m x 2m`` array; entry ``(k, l)`` is the Frobenius norm of the
    mismatch in block ``(k, l)``.
    """
    m, n = fam.m, fam.n
    _, Th, _ = structure_matrices(m, n)
    _, b = companion_coefficient(fam, s, t)
    P = legendre_blocks(fam, s, t)
    ref = Th.astype(complex)
    ref[(m - 1) * n:, (m - 1) * n:] += P
    D = b - ref
    out = np.zeros((2 * m, 2 * m))
    for k in range(2 * m):
        for l in range(2 * m):
            out[k, l] = np.linalg.norm(D[block_index(k, n), block_index(l, n)])
    return out


def jet_transform(fam, s, t):
    """``(U, V)`` with ``(u^m, ..., u^0) = U (x^{(m)}, ..., x)`` and ``V = U^{-1}``."""
    m, n = fam.m, fam.n
    B = fam.blocks_at(s, t)
    fam.leading_inverse(s, t)
    U = np.eye((m + 1) * n, dtype=complex)
    for j in range(m + 1):
        U[block_index(0, n), block_index(j, n)] = B[m, m - j]
    V = np.linalg.solve(U, np.eye((m + 1) * n))
    return U, V


# ---------------------------------------------------------------------------
# exact operator and jets on polynomial inputs

def apply_operator(fam, s, x):
    """``L_s x = sum_{k,l} (-1)^k (p_{k,l} x^{(l)})^{(k)}`` for a polynomial ``x``."""
    m = fam.m
    out = MatPoly.zeros(fam.n, x.shape[1])
    for k in range(m + 1):
        for l in range(m + 1):
            term = (fam.block(k, l, s) @ x.deriv(l)).deriv(k)
            out = out + ((-1) ** k) * term
    return out


def jet_polynomials(fam, s, x):
    """List ``[u^0, ..., u^{2m}]`` of jet components for a polynomial ``x``."""
    m = fam.m
    u = [x.deriv(k) for k in range(m)]
    for k in range(m, 2 * m + 1):
        acc = MatPoly.zeros(fam.n, x.shape[1])
        for a in range(2 * m - k, m + 1):
            for b in range(m + 1):
                term = (fam.block(a, b, s) @ x.deriv(b)).deriv(a + k - 2 * m)
                acc = acc + ((-1) ** (a - m)) * term
        u.append(acc)
    return u


def jet_vector(u, t):
    """Stack ``(u^{2m-1}(t), ..., u^0(t))`` from :func:`jet_polynomials` output."""
    m2 = len(u) - 1
    return np.concatenate([u[k](t)[:, 0] for k in range(m2 - 1, -1, -1)])


# ---------------------------------------------------------------------------
# symplectic paths

class SymplecticPath:
    """Path ``t -> gamma(t)`` on ``[0, T]`` preserving ``form``.

    ``fn`` evaluates the path; ``dfn`` (optional) its derivative.  ``grid``
    holds the sample times used for diagnostics, ``values`` the samples.
    """

    def __init__(self, form, fn, T, dfn=None, grid=None, symp_tol=SYMP_TOL,
                 check=True, info=None):
        self.form, self.T = form, float(T)
        self._fn, self._dfn = fn, dfn
        self.grid = np.linspace(0.0, self.T, 33) if grid is None else np.asarray(grid)
        self.values = np.array([self(t) for t in self.grid])
        self.info = {} if info is None else dict(info)
        self.defect = max(symplectic_defect(M, form.J) for M in self.values)
        if check and self.defect > symp_tol:
            raise ValidationError(f"path is not symplectic (defect {self.defect:.2e})")

    def __call__(self, t):
        return np.asarray(self._fn(float(t)), dtype=complex)

    def derivative(self, t, h=1e-5):
        if self._dfn is not None:
            return np.asarray(self._dfn(float(t)), dtype=complex)
        # central differences with one Richardson step, one-sided at the ends
        t = float(t)
        lo, hi = 0.0, self.T

        def d(hh):
            a, b = max(lo, t - hh), min(hi, t + hh)
            return (self(b) - self(a)) / (b - a)
        return (4 * d(h / 2) - d(h)) / 3

    @property
    def has_derivative(self):
        return self._dfn is not None

    def reparametrized(self, phi, dphi=None, T=None):
        """Path ``tau -> gamma(phi(tau))`` on ``[0, T]`` for increasing ``phi``."""
        T = self.T if T is None else T
        dfn = None
        if self._dfn is not None and dphi is not None:
            def dfn(tau):
                return self._dfn(phi(tau)) * dphi(tau)
        return SymplecticPath(self.form, lambda tau: self._fn(phi(tau)), T, dfn=dfn,
                              check=False)


@dataclass
class ODEOptions:
    rtol: float = 1e-10
    atol: float = 1e-10
    method: str = "DOP853"
    symp_tol: float = SYMP_TOL
    retries: int = 2
    max_step: float = np.inf
    extra: dict = field(default_factory=dict)


def integrate_fundamental(fam, s, opts=None):
    """Fundamental solution of ``u' = J b(p_s) u`` with ``gamma(0) = I``.

    Adaptive explicit Runge-Kutta with dense output.  The symplectic defect
    is measured on the step grid and at step midpoints; it is reported and
    never projected away.  On failure the tolerances are tightened by a
    factor 100 and the integration is repeated.
    """
    opts = ODEOptions() if opts is None else opts
    m, n = fam.m, fam.n
    d = 2 * m * n
    J = structure_matrices(m, n)[0]
    form = SymplecticForm(J)

    def rhs(t, y):
        C = companion_matrix(fam, s, t)
        return (C @ y.reshape(d, d)).ravel()

    y0 = np.eye(d, dtype=complex).ravel()
    rtol, atol = opts.rtol, opts.atol
    last = None
    for attempt in range(opts.retries + 1):
        sol = solve_ivp(rhs, (0.0, fam.T), y0, method=opts.method, rtol=rtol,
                        atol=atol, dense_output=True, max_step=opts.max_step)
        if not sol.success:
            last = f"integrator failed: {sol.message}"
        else:
            dense = sol.sol
            ts = sol.t
            mids = 0.5 * (ts[1:] + ts[:-1])
            check_ts = np.sort(np.concatenate([ts, mids]))
            Ms = dense(check_ts).T.reshape(-1, d, d)
            defect = max(symplectic_defect(M, J) for M in Ms)
            if defect <= opts.symp_tol:
                break
            last = f"symplectic defect {defect:.2e} exceeds {opts.symp_tol:.1e}"
        rtol, atol = rtol / 100, atol / 100
    else:
        raise IntegrationAccuracyError(last)

    eye = np.eye(d, dtype=complex)

    def fn(t):
        if t == 0.0:
            return eye.copy()
        return dense(t).reshape(d, d)

    def dfn(t):
        return companion_matrix(fam, s, t) @ fn(t)

    path = SymplecticPath(form, fn, fam.T, dfn=dfn, grid=sol.t, check=False,
                          info={"rtol": rtol, "atol": atol, "steps": int(sol.t.size - 1),
                                "attempts": attempt + 1})
    path.defect = max(path.defect, defect)
    return path


# ---------------------------------------------------------------------------
# closed-form base path

def _leading_inverse_poly_fn(fam):
    pmm = fam.entries[1][(fam.m, fam.m)]

    def f(t):
        return np.linalg.inv(pmm(t))
    return f


def base_path_closed_form(fam, t):
    """Closed-form fundamental solution of ``diag(p_{m,m}(1, .), 0)`` at ``t``.

    Returns ``(gamma, E)`` where ``E`` is the ``mn x mn`` matrix with blocks
    ``int_0^T u^{2m-k-l-2} p_{m,m}(1, u)^{-1} du / ((m-k-1)! (m-l-1)!)``.
    """
    return base_path_closed_form_gamma(fam, t), base_gram_matrix(fam)


def base_gram_matrix(fam, T=None, epsabs=1e-13, epsrel=1e-12):
    """Block matrix ``(int_0^T u^{2m-k-l-2} p^{-1} du / ((m-k-1)!(m-l-1)!))_{k,l}``."""
    m, n = fam.m, fam.n
    T = fam.T if T is None else T
    pinv = _leading_inverse_poly_fn(fam)
    E = np.zeros((m * n, m * n), dtype=complex)
    for k in range(m):
        for l in range(m):
            c = 1.0 / (factorial(m - k - 1) * factorial(m - l - 1))
            val, err = quad_vec(lambda u: u ** (2 * m - k - l - 2) * pinv(u), 0.0, T,
                                epsabs=epsabs, epsrel=epsrel)
            if err > 1e-9 * max(1.0, np.abs(val).max()):
                raise AccuracyError(f"quadrature for block ({k},{l}) did not converge")
            E[block_index(k, n), block_index(l, n)] = c * val
    return E


def base_path(fam):
    """The closed-form base path as a :class:`SymplecticPath`."""
    form = SymplecticForm.standard(fam.m, fam.n)
    base = fam.base_family()

    def fn(t):
        return base_path_closed_form_gamma(fam, t)

    def dfn(t):
        return companion_matrix(base, 1.0, t) @ fn(t)
    return SymplecticPath(form, fn, fam.T, dfn=dfn)


def base_path_closed_form_gamma(fam, t):
    m, n = fam.m, fam.n
    pinv = _leading_inverse_poly_fn(fam)
    G = np.zeros((2 * m * n, 2 * m * n), dtype=complex)
    eye = np.eye(n)
    for k in range(2 * m):
        for l in range(k + 1):
            if k <= m - 1 or l >= m:
                G[block_index(k, n), block_index(l, n)] = t ** (k - l) / factorial(k - l) * eye
            elif t > 0.0:
                c = 1.0 / (factorial(k - m) * factorial(m - l - 1))
                val, err = quad_vec(
                    lambda u: u ** (m - l - 1) * (t - u) ** (k - m) * pinv(u),
                    0.0, t, epsabs=1e-13, epsrel=1e-12)
                if not np.all(np.isfinite(val)) or err > 1e-9 * max(1.0, np.abs(val).max()):
                    raise AccuracyError(f"quadrature for block ({k},{l}) did not converge")
                G[block_index(k, n), block_index(l, n)] = c * val
    return G


# ---------------------------------------------------------------------------
# frame change (first order)

def _transform_first_order(entries, a):
    p, q, r = entries[(1, 1)], entries[(1, 0)], entries[(0, 0)]
    qs = entries[(0, 1)]
    ad, ah, adh = a.deriv(), a.adjoint(), a.deriv().adjoint()
    pp = ah @ p @ a
    qp = ah @ (p @ ad + q @ a)
    rp = adh @ (p @ ad + q @ a) + ah @ (qs @ ad + r @ a)
    return {(1, 1): pp, (1, 0): qp, (0, 1): qp.adjoint(), (0, 0): rp}


def frame_change(a, fam, bd, npts=65):
    """Coefficients, boundary space and path builder after ``x -> a x``.

    ``a`` is an ``n x n`` matrix polynomial, invertible on ``[0, T]``.
    Returns ``(fam2, bd2, build)`` where ``build(gamma)`` maps a symplectic
    path of the original problem to ``diag(a^*, a^{-1}) gamma diag(a(0)^{-*}, a(0))``.
    """
    if fam.m != 1:
        raise ArgumentError("frame change is defined for m = 1")
    if not isinstance(a, MatPoly):
        a = MatPoly.constant(np.atleast_2d(a))
    n, T = fam.n, fam.T
    for t in np.linspace(0.0, T, npts):
        sv = np.linalg.svd(a(t), compute_uv=False)
        if sv[-1] <= 1e-10 * max(1.0, sv[0]):
            raise ArgumentError(f"a(t) is singular at t={t:.6g}")
    e0 = _transform_first_order({kl: fam.block(*kl, 0.0) for kl in fam.entries[0]}, a)
    e1 = _transform_first_order({kl: fam.block(*kl, 1.0) for kl in fam.entries[1]}, a)
    fam2 = CoefficientFamily(1, n, T, e0, e1, homotopy="linear", inv_tol=fam.inv_tol)

    a0, aT = a(0.0), a(T)
    Dinv = np.zeros((2 * n, 2 * n), dtype=complex)
    Dinv[:n, :n] = np.linalg.inv(a0)
    Dinv[n:, n:] = np.linalg.inv(aT)
    R2 = SubspaceFrame.span(Dinv @ bd.R.columns, 2 * n) if bd.R.dim else bd.R
    bd2 = BoundaryData(1, n, R2, rank_tol=bd.rank_tol)

    left0 = np.zeros((2 * n, 2 * n), dtype=complex)
    left0[:n, :n] = np.linalg.inv(a0).conj().T
    left0[n:, n:] = a0

    def build(gamma):
        def P(t):
            at = a(t)
            out = np.zeros((2 * n, 2 * n), dtype=complex)
            out[:n, :n] = at.conj().T
            out[n:, n:] = np.linalg.inv(at)
            return out

        def fn(t):
            return P(t) @ gamma(t) @ left0
        return SymplecticPath(gamma.form, fn, gamma.T, check=False)

    return fam2, bd2, build
