"""
数值核心模块测试
"""
import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from etaspec.errors import (
    ComplexSpectrum,
    DefectiveMatrix,
    NonSquare,
    NotHermitian,
    NotPositive,
    NotPositiveDefinite,
    ShapeMismatch,
)
from etaspec.numcore import (
    apply_spectral_propagator,
    condition_number_diag,
    fix_phases,
    frobenius_norm,
    general_eigen,
    hermitian_eigen,
    hermiticity_residual,
    positive_sqrt,
    spectral_propagator,
)


def random_hermitian(n, seed=0):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (A + A.conj().T)


def test_hermitian_eigen_two_by_two():
    eig = hermitian_eigen(np.array([[2.0, 1.0], [1.0, 2.0]]))
    assert_allclose(eig.values, [1.0, 3.0], atol=1e-14)
    V = eig.vectors
    assert_allclose(V.conj().T @ V, np.eye(2), atol=1e-14)


def test_hermitian_eigen_diagonal_is_exact():
    eig = hermitian_eigen(np.diag([3.0, 1.0, 2.0]))
    assert_array_equal(eig.values, [1.0, 2.0, 3.0])
    assert_array_equal(np.abs(eig.vectors), np.eye(3)[:, [1, 2, 0]])


def test_hermitian_eigen_reconstructs_random_matrix():
    A = random_hermitian(12, seed=3)
    eig = hermitian_eigen(A)
    assert np.all(np.diff(eig.values) >= 0)
    rebuilt = eig.vectors @ np.diag(eig.values) @ eig.vectors.conj().T
    assert_allclose(rebuilt, A, atol=1e-12)


def test_hermitian_eigen_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        hermitian_eigen(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_non_square_inputs():
    with pytest.raises(NonSquare):
        hermitian_eigen(np.zeros((2, 3)))
    with pytest.raises(NonSquare):
        general_eigen(np.zeros((3, 2)))
    with pytest.raises(ShapeMismatch):
        general_eigen(np.zeros(3))


def test_hermiticity_residual():
    assert hermiticity_residual(np.zeros((3, 3))) == 0.0
    assert hermiticity_residual(random_hermitian(5)) < 1e-15
    assert hermiticity_residual(np.array([[0.0, 1.0], [0.0, 0.0]])) == pytest.approx(np.sqrt(2.0))


def test_general_eigen_upper_triangular():
    eig = general_eigen(np.array([[1.0, 2.0], [0.0, 3.0]]))
    assert_allclose(eig.values, [1.0, 3.0], atol=1e-14)
    assert eig.residual < 1e-14
    assert_allclose(np.linalg.norm(eig.vectors, axis=0), [1.0, 1.0], atol=1e-14)


def test_general_eigen_sorted_by_real_part():
    A = np.diag([3.0, -1.0, 2.0]) + np.diag([0.5, 0.5], 1)
    eig = general_eigen(A)
    assert_allclose(eig.values.real, [-1.0, 2.0, 3.0], atol=1e-12)


def test_general_eigen_jordan_block_is_defective():
    with pytest.raises(DefectiveMatrix):
        general_eigen(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_general_eigen_phase_convention():
    rng = np.random.default_rng(7)
    A = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    eig = general_eigen(A)
    V = eig.vectors
    pivots = V[np.argmax(np.abs(V), axis=0), np.arange(6)]
    assert_allclose(pivots.imag, 0.0, atol=1e-14)
    assert np.all(pivots.real > 0)


def test_positive_sqrt_diagonal():
    assert_allclose(positive_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-15)


def test_positive_sqrt_squares_back():
    A = random_hermitian(8, seed=5) + 10.0 * np.eye(8)
    R = positive_sqrt(A)
    assert_allclose(R @ R, A, atol=1e-12 * frobenius_norm(A))
    assert hermiticity_residual(R) < 1e-12
    assert np.all(np.linalg.eigvalsh(0.5 * (R + R.conj().T)) > 0)


def test_positive_sqrt_rejects_indefinite():
    with pytest.raises(NotPositiveDefinite) as info:
        positive_sqrt(np.diag([1.0, -1.0]))
    assert info.value.eigenvalue == -1.0


def test_condition_number_diag():
    assert condition_number_diag([1.0, 4.0, 2.0]) == 4.0
    with pytest.raises(NotPositive) as info:
        condition_number_diag([1.0, 0.0])
    assert info.value.index == 1


def test_spectral_propagator_identity_at_zero():
    eig = hermitian_eigen(random_hermitian(5))
    assert_array_equal(spectral_propagator(eig.values, eig.vectors, 0.0), np.eye(5))


def test_spectral_propagator_is_unitary_and_composes():
    eig = hermitian_eigen(random_hermitian(6, seed=11))
    U1 = spectral_propagator(eig.values, eig.vectors, 0.7)
    U2 = spectral_propagator(eig.values, eig.vectors, 1.3)
    assert_allclose(U1.conj().T @ U1, np.eye(6), atol=1e-12)
    assert_allclose(U1 @ U2, spectral_propagator(eig.values, eig.vectors, 2.0), atol=1e-12)


def test_apply_spectral_propagator_matches_matrix():
    eig = hermitian_eigen(random_hermitian(6, seed=2))
    v = np.arange(6, dtype=complex)
    U = spectral_propagator(eig.values, eig.vectors, 0.4)
    assert_allclose(apply_spectral_propagator(eig.values, eig.vectors, 0.4, v), U @ v, atol=1e-12)
    assert_array_equal(apply_spectral_propagator(eig.values, eig.vectors, 0.0, v), v)


def test_spectral_propagator_rejects_complex_energies():
    with pytest.raises(ComplexSpectrum):
        spectral_propagator(np.array([1.0, 1.0 + 1e-3j]), np.eye(2), 1.0)


def test_fix_phases_makes_pivot_real_positive():
    V = np.array([[1j, 0.1], [0.2, -2.0]])
    fixed = fix_phases(V)
    assert_allclose(fixed[0, 0], 1.0)
    assert_allclose(fixed[1, 1], 2.0)
    assert_allclose(np.abs(fixed), np.abs(V))


def test_general_eigen_under_diagonal_similarity():
    rho = np.diag([1.0, 10.0, 100.0])
    A = np.linalg.inv(rho) @ np.diag([1.0, 2.0, 3.0]) @ rho
    eig = general_eigen(A, 1e-8, 1e-12)
    assert_allclose(eig.values, [1.0, 2.0, 3.0], atol=1e-10)


def test_general_eigen_values_invariant_under_similarity():
    rng = np.random.default_rng(3)
    P = np.eye(6) + 0.2 * (rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6)))
    A = P @ np.diag(np.arange(1.0, 7.0)) @ np.linalg.inv(P)
    S = np.eye(6) + 0.1 * rng.standard_normal((6, 6))
    assert np.linalg.cond(S) < 10.0
    before = general_eigen(A, 1e-8, 1e-12)
    after = general_eigen(np.linalg.inv(S) @ A @ S, 1e-8, 1e-12)
    assert_allclose(after.values, before.values, atol=1e-10)
    assert_allclose(after.values.real, np.arange(1.0, 7.0), atol=1e-10)


def test_spectral_propagator_half_period_phases():
    U = spectral_propagator(np.array([0.0, np.pi]), np.eye(2), 1.0)
    assert_allclose(U, np.diag([1.0, -1.0]), atol=1e-14)

    omega = 1.7
    H = random_hermitian(2, seed=5)
    _, vectors = np.linalg.eigh(H)
    values = np.array([omega / 2, 3 * omega / 2])
    U = spectral_propagator(values, vectors, 2 * np.pi / omega)
    assert_allclose(U, -np.eye(2), atol=1e-14)
