import numpy as np
import pytest
from hypothesis import given, strategies as st

from indexflow.errors import ArgumentError, ValidationError
from indexflow.structures import (BoundaryData, SubspaceFrame, SymplecticForm, J_of_K,
                                  annihilator_K, annihilator_R2mb, compatible_K, graph_frame,
                                  intersection_dim, is_lagrangian, null_space, orth,
                                  principal_sines, stable_subspace, structure_matrices,
                                  subspace_intersection, symplectic_defect)
from indexflow.suites import annihilator_suite, random_symplectic

from problems import rc, random_subspace

mn = st.tuples(st.integers(1, 3), st.integers(1, 3))
seeds = st.integers(0, 2**32 - 1)


def test_J_for_second_order_scalar():
    J, Th, K = structure_matrices(1, 1)
    assert np.array_equal(J, [[0, -1], [1, 0]])
    assert not Th.any()
    assert np.array_equal(K, [[1]])


def test_J_antidiagonal_signs_fourth_order():
    J, _, _ = structure_matrices(2, 1)
    assert np.array_equal(np.fliplr(J).diagonal(), [1, -1, 1, -1])


@given(mn)
def test_structure_matrix_identities(dims):
    m, n = dims
    J, Th, K = structure_matrices(m, n)
    d = 2 * m * n
    assert np.array_equal(J.T, -J)
    assert np.allclose(J @ J, -np.eye(d))
    assert np.array_equal(Th, Th.T)
    assert np.allclose(J_of_K(K), (-1) ** (m + 1) * J)
    assert np.allclose(J_of_K(compatible_K(m, n)), J)


def test_structure_matrices_reject_bad_sizes():
    with pytest.raises(ArgumentError):
        structure_matrices(0, 1)
    with pytest.raises(ArgumentError):
        structure_matrices(1.5, 1)


@given(seeds, st.integers(1, 8), st.integers(1, 8))
def test_null_space_and_orth(seed, rows, rank):
    rng = np.random.default_rng(seed)
    cols = rows + 2
    r = min(rank, rows)
    M = rc(rng, rows, r) @ rc(rng, r, cols)
    N = null_space(M)
    assert N.shape[1] == cols - r
    assert np.linalg.norm(M @ N) <= 1e-9 * np.linalg.norm(M)
    Q = orth(M)
    assert Q.shape[1] == r
    assert np.allclose(Q.conj().T @ Q, np.eye(r))


def test_null_space_of_vanishing_residual_with_scale():
    resid = 1e-17 * np.ones((4, 2))
    assert null_space(resid).shape[1] == 1
    assert null_space(resid, scale=1.0).shape[1] == 2


def test_subspace_frame_basics():
    F = SubspaceFrame.span(np.array([[1.0, 1.0], [0.0, 0.0], [0.0, 0.0]]))
    assert F.dim == 1 and F.ambient_dim == 3
    assert np.allclose(F.projector() + F.complement_projector(), np.eye(3))
    assert F.orthogonal_complement().dim == 2
    assert SubspaceFrame.zero(3).dim == 0 and SubspaceFrame.full(3).dim == 3


@given(seeds, st.integers(2, 8))
def test_intersection_of_shared_directions(seed, d):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(0, d // 2 + 1))
    common = rc(rng, d, k)
    a = int(rng.integers(0, (d - 2 * k) // 2 + 1)) if d - 2 * k > 0 else 0
    A = SubspaceFrame.span(np.hstack([common, rc(rng, d, a)]), d)
    B = SubspaceFrame.span(np.hstack([common, rc(rng, d, a)]), d)
    assert intersection_dim(A, B) == k
    X = subspace_intersection(A, B)
    assert np.allclose(principal_sines(X, A), 0, atol=1e-8)


@given(seeds, mn)
def test_annihilator_is_reflexive_and_complementary(seed, dims):
    m, n = dims
    rng = np.random.default_rng(seed)
    d = 2 * m * n
    bd = BoundaryData(m, n, random_subspace(rng, d))
    Rb = annihilator_R2mb(bd)
    assert Rb.dim == d - bd.R.dim
    assert annihilator_R2mb(BoundaryData(m, n, Rb)).same_as(bd.R, 1e-8)
    assert is_lagrangian(bd.W, SymplecticForm.standard(m, n).doubled(), 1e-9)


def test_annihilator_suite_passes():
    assert annihilator_suite(np.random.default_rng(3), 30).ok


@pytest.mark.parametrize("m,n", [(1, 1), (1, 2), (2, 1), (2, 2)])
def test_presets_are_self_annihilating_or_swap(m, n):
    d = 2 * m * n
    dir_ = BoundaryData.dirichlet(m, n)
    assert dir_.R.dim == 0 and dir_.R2mb.dim == d
    free = BoundaryData.free(m, n)
    assert free.R2mb.dim == 0
    per = BoundaryData.periodic(m, n)
    assert per.R.dim == m * n
    assert per.R2mb.same_as(per.R, 1e-10)


@pytest.mark.parametrize("m,n", [(1, 1), (1, 2), (2, 1), (2, 3)])
def test_stable_subspace_presets(m, n):
    eye = np.eye(m * n)
    assert stable_subspace(eye, BoundaryData.dirichlet(m, n).R2mb).dim == m * n
    # the periodic annihilator is periodic, so every x satisfies (x, x) in it
    assert stable_subspace(eye, BoundaryData.periodic(m, n).R2mb).dim == m * n
    assert stable_subspace(eye, BoundaryData.free(m, n).R2mb).dim == 0


@given(seeds, st.integers(1, 3))
def test_K_annihilator_of_full_and_zero(seed, d):
    rng = np.random.default_rng(seed)
    K = rc(rng, d, d)
    assert annihilator_K(K, SubspaceFrame.zero(2 * d)).dim == 2 * d
    assert annihilator_K(K, SubspaceFrame.full(2 * d)).dim == 0
    R = random_subspace(rng, 2 * d)
    assert annihilator_K(K, R).dim == 2 * d - R.dim


def test_annihilator_K_rejects_singular():
    with pytest.raises(ArgumentError):
        annihilator_K(np.zeros((2, 2)), SubspaceFrame.zero(4))


@given(seeds, mn)
def test_graph_of_symplectic_is_lagrangian(seed, dims):
    rng = np.random.default_rng(seed)
    form = SymplecticForm.standard(*dims)
    M = random_symplectic(rng, form, 0.5)
    assert symplectic_defect(M, form.J) < 1e-9
    assert is_lagrangian(graph_frame(M), form.doubled(), 1e-8)


@given(seeds, mn)
def test_splitting_generator_round_trip(seed, dims):
    rng = np.random.default_rng(seed)
    form = SymplecticForm.standard(*dims)
    sp = form.splitting
    h = sp.half
    H = rc(rng, h, h)
    U = np.linalg.qr(H)[0]
    L = sp.lagrangian(U)
    assert is_lagrangian(L, form, 1e-9)
    assert np.allclose(sp.generator(L.columns), U, atol=1e-9)


def test_symplectic_form_validation():
    with pytest.raises(ValidationError):
        SymplecticForm(np.eye(2))
    with pytest.raises(ValidationError):
        SymplecticForm(np.zeros((2, 2)))


def test_boundary_dimension_mismatch():
    with pytest.raises(ValidationError):
        BoundaryData(1, 1, SubspaceFrame.zero(4))
