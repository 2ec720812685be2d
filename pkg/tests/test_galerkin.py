import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.interpolate import BSpline

from indexflow import _pykernels, kernels
from indexflow.errors import DiscretizationError, PreconditionError
from indexflow.galerkin import (Discretization, LevelSequence, SplineSpace, assemble,
                                constrained_basis, discrete_morse_index, form_spectral_flow,
                                kernel_dimension, negative_count_profile, quadrature_order)
from indexflow.hamiltonian import CoefficientFamily
from indexflow.polynomials import MatPoly
from indexflow.structures import BoundaryData

from problems import random_index_problem, random_subspace
from test_hamiltonian import const, sturm

try:
    from indexflow import _ckernels
except ImportError:  # extension not built
    _ckernels = None

seeds = st.integers(0, 2**32 - 1)
needs_ext = pytest.mark.skipif(_ckernels is None, reason="compiled kernels not built")


def test_backend_is_reported():
    assert kernels.BACKEND in ("cython", "python")


@given(st.integers(1, 5), st.integers(2, 12), st.integers(0, 3))
def test_basis_derivatives_match_scipy(degree, E, nder):
    sp = SplineSpace(1, 1, 2.0, E, degree)
    x = np.linspace(0.0, sp.T, 37)
    for k in range(min(nder, degree) + 1):
        ours = sp.basis_matrix(x, k)
        for i in range(sp.nbasis):
            spl = BSpline(sp.knots, np.eye(sp.nbasis)[i], degree)
            ref = (spl.derivative(k) if k else spl)(x)
            assert np.allclose(ours[:, i], ref, atol=1e-10 * max(1.0, E ** k))


@given(st.integers(1, 5), st.integers(2, 20))
def test_partition_of_unity(degree, E):
    sp = SplineSpace(1, 1, 1.0, E, degree)
    x = np.linspace(0, 1, 51)
    assert np.allclose(sp.basis_matrix(x, 0).sum(axis=1), 1.0)
    assert np.allclose(sp.basis_matrix(x, 1).sum(axis=1), 0.0, atol=1e-9 * E)


@needs_ext
@given(st.integers(1, 5), st.integers(2, 16), st.integers(0, 3))
def test_compiled_basis_matches_python(degree, E, nder):
    sp = SplineSpace(1, 1, 3.0, E, degree)
    x = np.linspace(0, 3.0, 41)
    s1, d1 = _pykernels.bspline_ders(sp.knots, degree, x, nder)
    s2, d2 = _ckernels.bspline_ders(sp.knots, degree, x, nder)
    assert np.array_equal(s1, s2)
    assert np.allclose(d1, d2, atol=1e-13, rtol=1e-13)


@needs_ext
@given(seeds, st.integers(1, 2), st.integers(1, 3))
@settings(max_examples=15)
def test_compiled_assembly_matches_python(seed, m, n):
    rng = np.random.default_rng(seed)
    sp = SplineSpace(m, n, 2.0, 6, m + 1)
    nq = 4
    x, w = sp.quadrature(nq)
    spans, ders = sp.evaluate(x, m)
    coef = rng.standard_normal((x.size, m + 1, m + 1, n, n)) \
        + 1j * rng.standard_normal((x.size, m + 1, m + 1, n, n))
    A1 = _pykernels.assemble_form(spans, ders, w, coef, sp.nbasis, nq)
    A2 = _ckernels.assemble_form(spans, ders, w, coef, sp.nbasis, nq)
    assert np.allclose(A1, A2, atol=1e-12 * np.abs(A1).max())


def test_assembly_of_mass_and_stiffness_matches_quadrature():
    sp = SplineSpace(1, 1, 1.0, 4, 2)
    fam = CoefficientFamily(1, 1, 1.0, {(1, 1): const(1.0), (0, 0): const(2.0)})
    full = constrained_basis(sp, BoundaryData.free(1, 1))
    P = assemble(fam, 1.0, full)
    # the same entries computed independently with dense basis matrices
    x, w = sp.quadrature(10)
    B0, B1 = sp.basis_matrix(x, 0), sp.basis_matrix(x, 1)
    ref = B1.T @ (w[:, None] * B1) + 2 * B0.T @ (w[:, None] * B0)
    assert np.allclose(P.A, ref, atol=1e-12)
    assert np.allclose(P.G, B1.T @ (w[:, None] * B1) + B0.T @ (w[:, None] * B0), atol=1e-12)


def test_under_resolved_quadrature_is_refused():
    fam = sturm(1.0)
    cs = constrained_basis(SplineSpace(1, 1, 1.0, 4), BoundaryData.dirichlet(1, 1))
    need = quadrature_order(2, fam.max_degree)
    with pytest.raises(DiscretizationError):
        assemble(fam, 1.0, cs, nq=need - 1)


def test_spline_space_checks():
    with pytest.raises(DiscretizationError):
        SplineSpace(2, 1, 1.0, 8, 1)
    with pytest.raises(DiscretizationError):
        SplineSpace(1, 1, 1.0, 1)


@pytest.mark.parametrize("m,n", [(1, 1), (1, 2), (2, 1), (2, 2)])
def test_constrained_dimensions(m, n):
    sp = SplineSpace(m, n, 1.0, 8)
    assert constrained_basis(sp, BoundaryData.dirichlet(m, n)).dim == sp.dim - 2 * m * n
    assert constrained_basis(sp, BoundaryData.free(m, n)).dim == sp.dim
    assert constrained_basis(sp, BoundaryData.periodic(m, n)).dim == sp.dim - m * n


@given(seeds, st.integers(1, 2), st.integers(1, 2))
def test_constrained_traces_lie_in_R(seed, m, n):
    rng = np.random.default_rng(seed)
    bd = BoundaryData(m, n, random_subspace(rng, 2 * m * n))
    cs = constrained_basis(SplineSpace(m, n, 1.5, 8), bd)
    traces = cs.trace @ cs.Z
    resid = traces - bd.R.projector() @ traces
    assert np.linalg.norm(resid) <= 1e-9 * max(1.0, np.linalg.norm(traces))


def test_sturm_benchmark_morse_index():
    seq = LevelSequence(sturm(3.5 * np.pi), BoundaryData.dirichlet(1, 1))
    mo = discrete_morse_index(seq)
    assert (mo.value, mo.stabilized) == (3, True)
    assert kernel_dimension(seq).value == 0
    sf = form_spectral_flow(seq)
    assert (-sf.value, sf.stabilized, sf.boundary_sensitive) == (3, True, False)


@pytest.mark.parametrize("T,expected", [(0.5 * np.pi, 0), (1.5 * np.pi, 1), (2.2 * np.pi, 2)])
def test_dirichlet_sturm_counts(T, expected):
    # eigenvalues (k pi / T)^2 - 1 of -x'' - x with Dirichlet ends
    seq = LevelSequence(sturm(T), BoundaryData.dirichlet(1, 1))
    assert discrete_morse_index(seq).value == expected


def test_kernel_at_conjugate_point():
    seq = LevelSequence(sturm(np.pi), BoundaryData.dirichlet(1, 1))
    ker = kernel_dimension(seq)
    assert (ker.value, ker.stabilized) == (1, True)
    assert form_spectral_flow(seq).boundary_sensitive


def test_periodic_free_particle_kernel():
    fam = CoefficientFamily(1, 1, 2.0, {(1, 1): const(1.0)})
    seq = LevelSequence(fam, BoundaryData.periodic(1, 1))
    assert kernel_dimension(seq).value == 1
    assert discrete_morse_index(seq).value == 0


@given(seeds)
@settings(max_examples=8)
def test_negative_count_grows_with_refinement(seed):
    # nested spline spaces: min-max makes the count non-decreasing
    rng = np.random.default_rng(seed)
    fam, bd = random_index_problem(rng)
    seq = LevelSequence(fam, bd, Discretization(8, refinements=2))
    counts = [h[1] for h in discrete_morse_index(seq).history]
    assert counts == sorted(counts)


def test_morse_index_needs_positive_leading_block():
    fam = CoefficientFamily(1, 1, 1.0, {(1, 1): const(-1.0)})
    with pytest.raises(PreconditionError):
        discrete_morse_index(LevelSequence(fam, BoundaryData.dirichlet(1, 1)))


def test_indefinite_leading_block_still_has_a_flow():
    # negative leading block: both Morse indices grow with the mesh but the flow does not
    fam = CoefficientFamily(1, 1, 2.0, {(1, 1): const(-1.0)},
                            {(1, 1): const(-1.0), (0, 0): const(3.0)})
    seq = LevelSequence(fam, BoundaryData.dirichlet(1, 1))
    sf = form_spectral_flow(seq)
    assert sf.stabilized


def test_negative_count_profile_endpoints():
    seq = LevelSequence(sturm(3.5 * np.pi), BoundaryData.dirichlet(1, 1))
    prof = negative_count_profile(seq)
    assert prof[0] == (0.0, 0) and prof[-1] == (1.0, 3)
    assert [c for _, c in prof] == sorted(c for _, c in prof)


def test_higher_degree_gives_same_indices():
    fam, bd = random_index_problem(np.random.default_rng(7), m=2, n=1)
    a = form_spectral_flow(LevelSequence(fam, bd, Discretization(16)))
    b = form_spectral_flow(LevelSequence(fam, bd, Discretization(16, degree=4)))
    assert a.value == b.value


def test_polynomial_coefficient_degree_raises_quadrature():
    p = MatPoly(np.array([[[1.0]], [[0.5]], [[0.25]]]))
    fam = CoefficientFamily(1, 1, 1.0, {(1, 1): p})
    assert quadrature_order(2, fam.max_degree) == 4
