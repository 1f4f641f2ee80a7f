import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from matlea.hermitian import (
    EigenConvergenceError,
    HermitianError,
    SpectralOverflowError,
    apply_spectral,
    density_matrix,
    eig_hermitian,
    hermitian,
    inner,
    jacobi_eigh,
    matrix_exp_normalized,
    norms,
    partial_trace,
    random_density,
    random_hermitian,
    relative_entropy_vs_mixed,
    von_neumann_entropy,
)

X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)


def rng(seed=0):
    return np.random.default_rng(seed)


class TestConstruction:
    def test_symmetrizes_small_asymmetry(self):
        A = np.array([[1, 2 + 1e-13], [2, 3]], dtype=complex)
        H = hermitian(A)
        assert np.array_equal(H, H.conj().T)

    def test_rejects_non_hermitian(self):
        with pytest.raises(HermitianError):
            hermitian(np.array([[0, 1], [0, 0]], dtype=complex))

    def test_rejects_non_square(self):
        with pytest.raises(HermitianError):
            hermitian(np.zeros((2, 3)))

    def test_density_checks(self):
        density_matrix(np.eye(3) / 3)
        with pytest.raises(HermitianError):
            density_matrix(np.eye(3) / 2)
        with pytest.raises(HermitianError):
            density_matrix(np.diag([1.5, -0.5]))

    def test_result_is_complex(self):
        assert hermitian(np.eye(2)).dtype == np.complex128


@pytest.mark.parametrize("method", ["lapack", "jacobi"])
class TestEig:
    def test_identity(self, method):
        e = eig_hermitian(np.eye(2, dtype=complex), method=method)
        assert np.allclose(e.values, [1, 1])
        assert np.allclose(e.vectors.conj().T @ e.vectors, np.eye(2), atol=1e-12)

    def test_pauli_x(self, method):
        assert np.allclose(eig_hermitian(X, method=method).values, [-1, 1], atol=1e-14)

    def test_random_reconstruction(self, method):
        A = random_hermitian(6, rng(1))
        e = eig_hermitian(A, method=method)
        assert np.all(np.diff(e.values) >= 0)
        assert np.linalg.norm(e.reconstruct() - A) <= 1e-10 * (1 + np.linalg.norm(A))
        assert np.linalg.norm(e.vectors.conj().T @ e.vectors - np.eye(6)) <= 1e-10 * 6

    def test_deterministic(self, method):
        A = random_hermitian(5, rng(2))
        a, b = eig_hermitian(A, method=method), eig_hermitian(A.copy(), method=method)
        assert np.array_equal(a.values, b.values) and np.array_equal(a.vectors, b.vectors)


def test_jacobi_matches_lapack_spectrum():
    for d in (1, 2, 7, 16):
        A = random_hermitian(d, rng(d))
        assert np.allclose(jacobi_eigh(A).values, np.linalg.eigvalsh(A), atol=1e-11)


def test_jacobi_degenerate_and_diagonal():
    A = np.diag([3.0, 1.0, 3.0, -2.0]).astype(complex)
    assert np.allclose(jacobi_eigh(A).values, [-2, 1, 3, 3])


def test_jacobi_iteration_cap_reports_residual():
    with pytest.raises(EigenConvergenceError) as exc:
        jacobi_eigh(random_hermitian(6, rng(3)), max_rotations=1)
    assert exc.value.residual > 0


class TestSpectral:
    def test_identity_function(self):
        A = random_hermitian(4, rng(4))
        assert np.allclose(apply_spectral(A, lambda x: x), A, atol=1e-12)

    def test_exp_of_zero(self):
        assert np.allclose(apply_spectral(np.zeros((3, 3), complex), np.exp), np.eye(3))

    def test_square_of_pauli_x(self):
        assert np.allclose(apply_spectral(X, lambda x: x**2), X @ X)

    def test_matches_expm(self):
        A = random_hermitian(5, rng(5))
        assert np.allclose(apply_spectral(A, np.exp), scipy.linalg.expm(A), atol=1e-10)

    def test_multiplicative(self):
        A = random_hermitian(5, rng(6))
        f, g = np.sin, np.cosh
        assert np.allclose(apply_spectral(A, f) @ apply_spectral(A, g), apply_spectral(A, lambda x: f(x) * g(x)),
                           atol=1e-10)

    def test_commutes(self):
        A = random_hermitian(5, rng(7))
        F = apply_spectral(A, np.tanh)
        assert np.allclose(F @ A, A @ F, atol=1e-10)

    def test_overflow_names_eigenvalue(self):
        with pytest.raises(SpectralOverflowError) as exc:
            apply_spectral(np.diag([1.0, 1000.0]).astype(complex), np.exp)
        assert exc.value.eigenvalue == 1000.0


class TestInnerNorms:
    def test_inner_identity_density(self):
        assert inner(np.eye(4), random_density(4, rng(8))) == pytest.approx(1.0, abs=1e-12)

    def test_inner_self_is_frobenius(self):
        A = random_hermitian(4, rng(9))
        assert inner(A, A) == pytest.approx(np.linalg.norm(A) ** 2)

    def test_inner_xz(self):
        assert inner(X, Z) == 0.0

    def test_inner_dimension_mismatch(self):
        with pytest.raises(HermitianError):
            inner(np.eye(2), np.eye(3))

    def test_norms_identity(self):
        n = norms(np.eye(5))
        assert n.op == pytest.approx(1) and n.trace == pytest.approx(5) and n.frobenius == pytest.approx(math.sqrt(5))

    def test_norms_diag(self):
        n = norms(np.diag([2.0, -1.0]))
        assert (n.op, n.trace) == pytest.approx((2, 3)) and n.frobenius == pytest.approx(math.sqrt(5))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 8), st.integers(0, 2**32 - 1))
    def test_norm_ordering(self, d, seed):
        A = random_hermitian(d, rng(seed))
        n = norms(A)
        assert n.op <= n.frobenius * (1 + 1e-12) and n.frobenius <= n.trace * (1 + 1e-12)
        assert n.op == pytest.approx(np.linalg.norm(A, 2))
        assert n.trace == pytest.approx(np.linalg.norm(A, "nuc"))


class TestPartialTrace:
    def test_product_state(self):
        a, b = random_density(2, rng(10)), random_density(4, rng(11))
        assert np.allclose(partial_trace(np.kron(a, b), [2, 4], [0]), a)
        assert np.allclose(partial_trace(np.kron(a, b), [2, 4], [1]), b)

    def test_bell_state(self):
        psi = np.array([1, 0, 0, 1]) / math.sqrt(2)
        assert np.allclose(partial_trace(np.outer(psi, psi.conj()), [2, 2], [0]), np.eye(2) / 2)

    def test_against_einsum(self):
        rho = random_density(16, rng(12))
        T = rho.reshape([2] * 8)
        # keep qubits 0, 1: contract 2 with 6 and 3 with 7
        ref = np.einsum("abcdefcd->abef", T).reshape(4, 4)
        out = partial_trace(rho, [2, 2, 2, 2], [0, 1])
        assert np.allclose(out, ref) and np.trace(out).real == pytest.approx(1.0)
        assert np.array_equal(out, out.conj().T)

    def test_bad_dims(self):
        with pytest.raises(HermitianError):
            partial_trace(np.eye(6), [2, 2], [0])


class TestEntropy:
    def test_mixed(self):
        assert relative_entropy_vs_mixed(np.eye(5) / 5) == pytest.approx(0.0, abs=1e-14)

    def test_pure(self):
        assert relative_entropy_vs_mixed(random_density(6, rng(13), rank=1)) == pytest.approx(math.log(6))

    def test_half_half(self):
        assert relative_entropy_vs_mixed(np.diag([0.5, 0.5, 0, 0])) == pytest.approx(math.log(2))

    def test_range_and_entropy_relation(self):
        for seed in range(10):
            X = random_density(5, rng(seed))
            s = relative_entropy_vs_mixed(X)
            assert 0 <= s <= math.log(5)
            assert s == pytest.approx(math.log(5) - von_neumann_entropy(X), abs=1e-12)


class TestMatrixExp:
    def test_zero(self):
        assert np.allclose(matrix_exp_normalized(np.zeros((4, 4))), np.eye(4) / 4)

    def test_dominant(self):
        assert np.allclose(matrix_exp_normalized(np.diag([0.0, -1e4])), np.diag([1.0, 0.0]))

    def test_softmax(self):
        e = math.e
        ref = np.array([e, e * e]) / (e + e * e)
        assert np.allclose(np.diag(matrix_exp_normalized(np.diag([1.0, 2.0]))).real, ref, atol=1e-15)

    def test_huge_shift_stable(self):
        out = matrix_exp_normalized(np.diag([5000.0, 4999.0]))
        assert np.trace(out).real == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(np.diag(out).real, [1 / (1 + math.exp(-1)), math.exp(-1) / (1 + math.exp(-1))])


class TestClassicalInequalities:
    def test_golden_thompson(self):
        r = rng(14)
        for _ in range(1000):
            d = int(r.integers(1, 9))
            A, B = random_hermitian(d, r), random_hermitian(d, r)
            lhs = np.trace(scipy.linalg.expm(A + B)).real
            rhs = np.trace(scipy.linalg.expm(A) @ scipy.linalg.expm(B)).real
            assert lhs <= rhs + 1e-9 * max(1.0, abs(rhs))

    def test_von_neumann_trace(self):
        r = rng(15)
        for _ in range(200):
            d = int(r.integers(1, 7))
            A, B = random_hermitian(d, r), random_hermitian(d, r)
            bound = float(np.dot(np.linalg.eigvalsh(A), np.linalg.eigvalsh(B)))
            assert inner(A, B) <= bound + 1e-10
        # equality in a shared eigenbasis
        V = np.linalg.qr(random_hermitian(4, r))[0]
        a, b = np.array([-1.0, 0.5, 2, 3]), np.array([-2.0, 0, 1, 4])
        A, B = V @ np.diag(a) @ V.conj().T, V @ np.diag(b) @ V.conj().T
        assert inner(A, B) == pytest.approx(float(a @ b))

    def test_disentangle(self):
        r = rng(16)
        for _ in range(500):
            d = int(r.integers(1, 7))
            A, B = random_hermitian(d, r), random_hermitian(d, r)
            lhs = np.trace(A @ B @ A @ B).real
            rhs = np.trace(A @ A @ B @ B).real
            assert lhs <= rhs + 1e-10 * max(1.0, abs(rhs))
