"""
度量模块测试
"""
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from etaspec.discretize import Grid, algebraic_model, build_metric, quadrature_weights
from etaspec.errors import LinearlyDependent, NotHermitian, NotPositiveDefinite, ShapeMismatch
from etaspec.metric import (
    eta_adjoint,
    eta_gram_schmidt,
    eta_inner,
    eta_inner_paths,
    eta_norm,
    expectation_value,
    is_eta_self_adjoint,
    make_metric,
    physical_observable,
    pseudo_hermiticity_residual,
)
from etaspec.models import OscillatorModel, psi, sample_on_grid
from etaspec.numcore import frobenius_norm


def random_matrix(n, rng):
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


def random_metric(n, seed=0):
    rng = np.random.default_rng(seed)
    A = random_matrix(n, rng)
    return make_metric(A @ A.conj().T + n * np.eye(n))


def random_vector(n, rng):
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def algebraic_pair(n=10, seed=42):
    rng = np.random.default_rng(seed)
    A = random_matrix(n, rng)
    h = 0.5 * (A + A.conj().T)
    rho = np.exp(rng.uniform(math.log(0.1), math.log(10.0), n))
    H, eta = algebraic_model(h, rho)
    return H, make_metric(eta)


def test_make_metric_identity():
    m = make_metric(np.eye(4))
    assert_array_equal(m.rho, np.eye(4))
    assert_array_equal(m.rho_inv, np.eye(4))
    assert m.condition == 1.0
    assert m.min_eigenvalue == 1.0


def test_make_metric_exponential_diagonal():
    grid = Grid(-3.0, 3.0, 21)
    m = make_metric(build_metric(grid, 0.3))
    assert m.diagonal
    assert_allclose(m.rho, np.diag(np.exp(0.3 * grid.points)), rtol=1e-14)


def test_make_metric_dense_invariants():
    m = random_metric(8, seed=4)
    scale = frobenius_norm(m.eta)
    assert_allclose(m.rho @ m.rho, m.eta, atol=1e-10 * scale)
    assert_allclose(m.rho @ m.rho_inv, np.eye(8), atol=1e-10)
    assert_allclose(m.rho, m.rho.conj().T, atol=1e-12 * frobenius_norm(m.rho))
    assert m.min_eigenvalue > 0


def test_make_metric_rejects_indefinite_and_non_hermitian():
    with pytest.raises(NotPositiveDefinite) as info:
        make_metric(np.diag([1.0, -1.0]))
    assert info.value.eigenvalue == -1.0
    with pytest.raises(NotHermitian):
        make_metric(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_pseudo_hermiticity_residual_reductions():
    rng = np.random.default_rng(0)
    A = random_matrix(6, rng)
    h = 0.5 * (A + A.conj().T)
    assert pseudo_hermiticity_residual(h, make_metric(np.eye(6))) < 1e-15
    H, m = algebraic_pair()
    assert pseudo_hermiticity_residual(H, m) <= 1e-12
    with pytest.raises(ShapeMismatch):
        pseudo_hermiticity_residual(np.eye(3), make_metric(np.eye(4)))


def test_pseudo_hermiticity_residual_dense_matches_diagonal_path():
    H, m = algebraic_pair(seed=9)
    defect = H.conj().T @ m.eta - m.eta @ H
    expected = frobenius_norm(defect) / (frobenius_norm(H) * frobenius_norm(m.eta))
    assert pseudo_hermiticity_residual(H, m) == pytest.approx(expected, abs=1e-15)


def test_eta_inner_identity_is_standard_product():
    rng = np.random.default_rng(1)
    x, y = random_vector(5, rng), random_vector(5, rng)
    assert eta_inner(x, y, make_metric(np.eye(5))) == pytest.approx(np.vdot(x, y), abs=1e-14)


def test_eta_inner_basis_vectors_with_weights():
    d = np.array([1.0, 2.0, 3.0])
    w = np.array([0.5, 0.25, 2.0])
    m = make_metric(np.diag(d))
    e = np.eye(3)
    for j in range(3):
        for k in range(3):
            expected = w[j] * d[j] if j == k else 0.0
            assert eta_inner(e[j], e[k], m, w) == pytest.approx(expected, abs=1e-15)


def test_eta_inner_two_paths_agree():
    rng = np.random.default_rng(2)
    m = random_metric(7, seed=2)
    x, y = random_vector(7, rng), random_vector(7, rng)
    direct, via_rho = eta_inner_paths(x, y, m)
    bound = 1e-12 * np.linalg.norm(m.rho @ x) * np.linalg.norm(m.rho @ y)
    assert abs(direct - via_rho) <= bound


def test_eta_inner_conjugate_symmetry_and_positivity():
    rng = np.random.default_rng(3)
    m = random_metric(6, seed=3)
    x, y = random_vector(6, rng), random_vector(6, rng)
    assert eta_inner(x, y, m) == pytest.approx(np.conj(eta_inner(y, x, m)), abs=1e-12)
    self_product = eta_inner(x, x, m)
    assert abs(self_product.imag) < 1e-12 * abs(self_product)
    assert self_product.real > 0
    assert eta_norm(x, m) == pytest.approx(math.sqrt(self_product.real), rel=1e-12)


def test_eta_inner_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        eta_inner(np.ones(3), np.ones(4), make_metric(np.eye(3)))


def test_sampled_oscillator_states_are_eta_orthogonal():
    grid = Grid(-10.0, 10.0, 801)
    model = OscillatorModel(alpha=0.3, omega=1.0)
    m = make_metric(build_metric(grid, 0.3))
    w = quadrature_weights(grid)
    psi0 = sample_on_grid(psi(0, model), grid)
    psi1 = sample_on_grid(psi(1, model), grid)
    assert abs(eta_inner(psi0, psi1, m, w)) < 1e-8
    assert eta_inner(psi0, psi0, m, w).real == pytest.approx(1.0, abs=1e-8)


def test_eta_adjoint_reductions_and_involution():
    rng = np.random.default_rng(5)
    A = random_matrix(5, rng)
    assert_allclose(eta_adjoint(A, make_metric(np.eye(5))), A.conj().T, atol=1e-15)
    m = random_metric(5, seed=5)
    assert_allclose(eta_adjoint(eta_adjoint(A, m), m), A, atol=1e-12 * frobenius_norm(A) * m.condition)


def test_algebraic_hamiltonian_is_eta_self_adjoint():
    H, m = algebraic_pair()
    ok, residual = is_eta_self_adjoint(H, m, tol=1e-12)
    assert ok, residual


def test_eta_symmetry_of_pseudo_hermitian_hamiltonian():
    H, m = algebraic_pair(seed=7)
    rng = np.random.default_rng(8)
    x, y = random_vector(10, rng), random_vector(10, rng)
    lhs = eta_inner(x, H @ y, m)
    rhs = eta_inner(H @ x, y, m)
    scale = np.linalg.norm(x) * np.linalg.norm(y) * frobenius_norm(H) * frobenius_norm(m.eta)
    assert abs(lhs - rhs) <= 1e-10 * scale


def test_gram_schmidt_hand_example():
    m = make_metric(np.diag([1.0, 4.0]))
    q = eta_gram_schmidt([np.array([1.0, 0.0]), np.array([1.0, 1.0])], m)
    assert_allclose(q[0], [1.0, 0.0], atol=1e-15)
    assert_allclose(q[1], [0.0, 0.5], atol=1e-15)


def test_gram_schmidt_keeps_orthonormal_input():
    m = make_metric(np.diag([1.0, 4.0, 9.0]))
    vectors = [np.array([1.0, 0, 0]), np.array([0, 0.5, 0]), np.array([0, 0, 1.0 / 3.0])]
    out = eta_gram_schmidt(vectors, m)
    for v, q in zip(vectors, out):
        assert_allclose(q, v, atol=1e-12)


def test_gram_schmidt_detects_duplicate():
    v = np.array([1.0, 2.0, 3.0])
    with pytest.raises(LinearlyDependent) as info:
        eta_gram_schmidt([v, v], make_metric(np.eye(3)))
    assert info.value.index == 1


def test_gram_schmidt_random_gram_is_identity():
    rng = np.random.default_rng(6)
    m = random_metric(9, seed=6)
    vectors = [random_vector(9, rng) for _ in range(6)]
    Q = np.column_stack(eta_gram_schmidt(vectors, m))
    assert_allclose(Q.conj().T @ m.eta @ Q, np.eye(6), atol=1e-10)


def test_physical_observable_is_eta_self_adjoint():
    H, m = algebraic_pair(seed=11)
    rng = np.random.default_rng(12)
    A = random_matrix(10, rng)
    O = physical_observable(0.5 * (A + A.conj().T), m)
    ok, residual = is_eta_self_adjoint(O, m, tol=1e-10)
    assert ok, residual
    value = expectation_value(O, random_vector(10, rng), m)
    assert abs(value.imag) < 1e-10 * (abs(value) + 1.0)
