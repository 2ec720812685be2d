"""Randomized oracle suites shared by the command line self test and the tests.

Each suite draws its instances from a ``numpy.random.Generator`` and
returns a :class:`SuiteResult` with the count of instances where two
independent computations agree.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .maslov import LagrangianPairPath, maslov_pair, maslov_type_index
from .hamiltonian import SymplecticPath
from .spectralflow import (ZERO_TOL, HermitianPath, block_path_sf, inertia,
                           restriction_index)
from .structures import (BoundaryData, SubspaceFrame, SymplecticForm, annihilator_R2mb,
                         is_lagrangian, orth)

# eigenphase tolerance for paths given in closed form (no integration error)
ANALYTIC_PHASE_TOL = 1e-10


@dataclass
class SuiteResult:
    name: str
    passed: int = 0
    total: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self):
        return self.passed == self.total

    def record(self, good, detail):
        self.total += 1
        if good:
            self.passed += 1
        elif len(self.failures) < 5:
            self.failures.append(detail)

    def to_dict(self):
        return {"passed": self.passed, "total": self.total,
                "verdict": "PASS" if self.ok else "FAIL", "failures": self.failures}


# ---------------------------------------------------------------------------
# random generators

def random_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_hermitian(rng, d, rank=None):
    """Hermitian matrix; with ``rank`` set it has a kernel of dimension ``d - rank``."""
    A = random_complex(rng, d, d)
    H = A + A.conj().T
    if rank is None or rank >= d:
        return H
    Q, _ = np.linalg.qr(random_complex(rng, d, d))
    w = rng.standard_normal(rank)
    w += np.sign(w) * 0.5
    return (Q[:, :rank] * w) @ Q[:, :rank].conj().T


def random_subspace(rng, d, k):
    if k == 0:
        return SubspaceFrame.zero(d)
    return SubspaceFrame(orth(random_complex(rng, d, k)))


def random_symplectic(rng, form, scale=1.0):
    """``expm(J^{-1} H)`` for a random Hermitian ``H``."""
    H = random_hermitian(rng, form.dim) * scale
    return sla.expm(np.linalg.solve(form.J, H))


def random_lagrangian(rng, form):
    d = form.dim // 2
    U = sla.expm(1j * random_hermitian(rng, d))
    return form.splitting.lagrangian(U)


def random_symplectic_path(rng, form, T=1.0, scale=1.0):
    """``t -> expm(t X + t^2 Y) M`` with ``X, Y`` in the Lie algebra and ``M`` symplectic."""
    X = np.linalg.solve(form.J, random_hermitian(rng, form.dim)) * scale
    Y = np.linalg.solve(form.J, random_hermitian(rng, form.dim)) * scale
    M = random_symplectic(rng, form, 0.3 * scale)

    def fn(t):
        return sla.expm(t * X + t * t * Y) @ M
    return fn


# ---------------------------------------------------------------------------
# suites

def inertia_suite(rng, count=50, zero_tol=ZERO_TOL):
    """Inertia of matrices with prescribed spectra."""
    res = SuiteResult("inertia")
    for _ in range(count):
        d = int(rng.integers(1, 11))
        p = int(rng.integers(0, d + 1))
        z = int(rng.integers(0, d - p + 1))
        q = d - p - z
        w = np.concatenate([rng.uniform(0.1, 2, p), np.zeros(z), -rng.uniform(0.1, 2, q)])
        Q, _ = np.linalg.qr(random_complex(rng, d, d))
        H = (Q * w) @ Q.conj().T
        got = inertia(0.5 * (H + H.conj().T), zero_tol).as_tuple()
        res.record(got == (p, z, q), {"expected": [p, z, q], "got": list(got)})
    return res


def restriction_suite(rng, count=200, zero_tol=ZERO_TOL):
    """Relative index of ``P A P`` against the inertia of ``A`` on the ``A``-orthogonal of ``P``."""
    res = SuiteResult("restriction_index")
    for _ in range(count):
        d = int(rng.integers(1, 13))
        rank = int(rng.integers(1, d + 1)) if rng.random() < 0.5 else None
        A = random_hermitian(rng, d, rank)
        P = random_subspace(rng, d, int(rng.integers(0, d + 1)))
        lhs, rhs = restriction_index(A, P, zero_tol)
        res.record(lhs == rhs, {"dim": d, "lhs": lhs, "rhs": rhs})
    return res


def block_path_suite(rng, count=200, zero_tol=ZERO_TOL):
    """Spectral flow of bordered paths versus the kernel formula."""
    res = SuiteResult("block_path_sf")
    for _ in range(count):
        d = int(rng.integers(1, 7))
        k = int(rng.integers(1, 7))
        A0 = random_hermitian(rng, d, int(rng.integers(0, d + 1)))
        A1 = random_hermitian(rng, d, int(rng.integers(0, d + 1)))
        r0, r1 = int(rng.integers(0, min(d, k) + 1)), int(rng.integers(0, min(d, k) + 1))
        B0 = random_complex(rng, k, r0) @ random_complex(rng, r0, d) if r0 else np.zeros((k, d))
        B1 = random_complex(rng, k, r1) @ random_complex(rng, r1, d) if r1 else np.zeros((k, d))
        A = HermitianPath.linear(A0, A1)
        # the interior of the path is irrelevant for the endpoint identity
        sf, formula = block_path_sf(A, lambda s: (1 - s) * B0 + s * B1, zero_tol)
        res.record(sf == formula, {"dims": [d, k], "sf": sf, "formula": formula})
    return res


def annihilator_suite(rng, count=50):
    """``(R^b)^b = R`` and ``W(R)`` Lagrangian for random ``R``."""
    res = SuiteResult("annihilator_reflexivity")
    for _ in range(count):
        m, n = int(rng.integers(1, 3)), int(rng.integers(1, 3))
        d = 2 * m * n
        bd = BoundaryData(m, n, random_subspace(rng, d, int(rng.integers(0, d + 1))))
        Rb = annihilator_R2mb(bd)
        back = annihilator_R2mb(BoundaryData(m, n, Rb))
        form = SymplecticForm.standard(m, n).doubled()
        good = (back.same_as(bd.R, 1e-8) and Rb.dim == d - bd.R.dim
                and is_lagrangian(bd.W, form, 1e-9))
        res.record(good, {"m": m, "n": n, "dim_R": bd.R.dim})
    return res


def _random_pair_path(rng, form):
    L0, M0 = random_lagrangian(rng, form), random_lagrangian(rng, form)
    f = random_symplectic_path(rng, form, scale=0.7)
    g = random_symplectic_path(rng, form, scale=0.7)
    return (lambda s: f(s) @ L0.columns), (lambda s: g(s) @ M0.columns)


def symplectic_invariance_suite(rng, count=20, phase_tol=ANALYTIC_PHASE_TOL):
    """``Mas(M lam, M mu) = Mas(lam, mu)`` and independence of the splitting.

    The paths are closed-form matrix exponentials, so endpoint eigenphases
    are resolved far below the default tolerance meant for integrated paths.
    An ill-conditioned ``M`` shrinks the eigenphase of a nearly
    intersecting endpoint pair by orders of magnitude without making it zero.
    """
    res = SuiteResult("symplectic_invariance")
    for _ in range(count):
        form = SymplecticForm.standard(int(rng.integers(1, 3)), int(rng.integers(1, 3)))
        lam, mu = _random_pair_path(rng, form)
        base = maslov_pair(LagrangianPairPath(form, lam, mu, check=False), phase_tol=phase_tol)
        M = random_symplectic(rng, form)
        moved = maslov_pair(LagrangianPairPath(form, lambda s: M @ lam(s),
                                               lambda s: M @ mu(s), check=False),
                            phase_tol=phase_tol)
        S = random_symplectic(rng, form, 0.3)
        split = form.splitting.transformed(S)
        resplit = maslov_pair(LagrangianPairPath(form, lam, mu, check=False), splitting=split,
                              phase_tol=phase_tol)
        res.record(base == moved == resplit,
                   {"dim": form.dim, "mas": base, "moved": moved, "resplit": resplit})
    return res


def composition_shift_suite(rng, count=20):
    """``i_W(g3 g2 g1) = i_{W'}(g2) + i_W(g3 g2(0) g1)`` with ``W' = diag(g1(1), g3(1)^{-1}) W``."""
    res = SuiteResult("composition_shift")
    for _ in range(count):
        form = SymplecticForm.standard(int(rng.integers(1, 3)), 1)
        d = form.dim
        g1, g2, g3 = (random_symplectic_path(rng, form, scale=0.6) for _ in range(3))
        W = random_lagrangian(rng, form.doubled())
        g20 = g2(0.0)

        def path(fn):
            return SymplecticPath(form, fn, 1.0, check=False)
        full = maslov_type_index(path(lambda s: g3(s) @ g2(s) @ g1(s)), W)[0]
        frozen = maslov_type_index(path(lambda s: g3(s) @ g20 @ g1(s)), W)[0]
        D = sla.block_diag(g1(1.0), np.linalg.inv(g3(1.0)))
        W2 = SubspaceFrame(orth(D @ W.columns))
        middle = maslov_type_index(path(g2), W2)[0]
        res.record(full == middle + frozen,
                   {"dim": d, "full": full, "middle": middle, "frozen": frozen})
    return res


SUITES = {
    "inertia": inertia_suite,
    "restriction_index": restriction_suite,
    "block_path_sf": block_path_suite,
    "annihilator_reflexivity": annihilator_suite,
    "symplectic_invariance": symplectic_invariance_suite,
    "composition_shift": composition_shift_suite,
}


def run_all(seed=0, zero_tol=ZERO_TOL, scale=1.0):
    """Run every suite with a fixed seed; ``scale`` multiplies the instance counts."""
    out = {}
    for i, (name, fn) in enumerate(SUITES.items()):
        rng = np.random.default_rng([seed, i])
        kw = {}
        if name in ("inertia", "restriction_index", "block_path_sf"):
            kw["zero_tol"] = zero_tol
        defaults = fn.__defaults__
        count = max(1, int(round(defaults[0] * scale)))
        out[name] = fn(rng, count, **kw)
    return out
