import numpy as np
import pytest

from lowrank.core import (
    ConvergenceError,
    DenseOperator,
    NotPSDError,
    adjoint_mismatch,
    as_matrix,
    cholesky,
    householder_qr,
    least_squares,
    orthonormalize_double_gs,
    pivoted_qr,
    small_eig_hermitian,
    small_svd,
    spectral_norm_estimate,
)
from lowrank.oracle import haar_basis, jacobi_singular_values


def _orth_defect(Q):
    k = Q.shape[1]
    return np.linalg.norm(Q.conj().T @ Q - np.eye(k))


class TestHouseholderQR:
    def test_identity(self):
        Q, R = householder_qr(np.eye(3))
        assert np.allclose(Q, np.eye(3))
        assert np.allclose(R, np.eye(3))
        assert np.all(np.diag(R) >= 0)

    def test_hand_column(self):
        Q, R = householder_qr(np.array([[3.0], [4.0]]))
        assert np.allclose(R, [[5.0]])
        assert np.allclose(Q, [[0.6], [0.8]])

    def test_random_reconstruction(self):
        rng = np.random.default_rng(7)
        A = rng.standard_normal((8, 5))
        Q, R = householder_qr(A)
        assert np.linalg.norm(Q @ R - A) <= 1e-13 * np.linalg.norm(A)
        assert _orth_defect(Q) <= 1e-13

    @pytest.mark.parametrize("trial", range(40))
    def test_property_sweep(self, trial):
        # sampled slice of the 1000-instance invariant; the full sweep runs below
        rng = np.random.default_rng(100 + trial)
        m, n = rng.integers(1, 65, size=2)
        A = rng.standard_normal((m, n))
        Q, R = householder_qr(A)
        assert _orth_defect(Q) <= 1e-12 * Q.shape[1]
        assert np.linalg.norm(Q @ R - A) <= 1e-12 * max(np.linalg.norm(A), 1e-30)

    def test_thousand_instances(self):
        rng = np.random.default_rng(42)
        for _ in range(1000):
            m, n = rng.integers(1, 65, size=2)
            A = rng.standard_normal((m, n))
            Q, R = householder_qr(A)
            assert _orth_defect(Q) <= 1e-12 * Q.shape[1]
            assert np.linalg.norm(Q @ R - A) <= 1e-12 * max(np.linalg.norm(A), 1e-30)

    def test_complex(self):
        rng = np.random.default_rng(3)
        A = rng.standard_normal((6, 4)) + 1j * rng.standard_normal((6, 4))
        Q, R = householder_qr(A)
        assert np.linalg.norm(Q @ R - A) <= 1e-13 * np.linalg.norm(A)
        d = np.diag(R)
        assert np.allclose(d.imag, 0) and np.all(d.real >= 0)


class TestDoubleGramSchmidt:
    def test_collinear_columns(self):
        Q = orthonormalize_double_gs(np.array([[1.0, 2.0], [0.0, 0.0]]), tol=1e-10)
        assert Q.shape == (2, 1)
        assert np.allclose(np.abs(Q[:, 0]), [1.0, 0.0])

    def test_identity(self):
        Q = orthonormalize_double_gs(np.eye(4))
        assert np.allclose(np.abs(Q), np.eye(4))

    def test_near_dependent_column_dropped(self):
        rng = np.random.default_rng(11)
        Y = rng.standard_normal((100, 10))
        Y[:, 1] = 1e-14 * Y[:, 0]
        Q = orthonormalize_double_gs(Y)
        # rank oracle: the dense SVD of Y sees 9 significant directions
        sv = np.linalg.svd(Y, compute_uv=False)
        assert np.sum(sv > 1e-10 * sv[0]) == 9
        assert Q.shape[1] == 9
        assert _orth_defect(Q) <= 1e-12

    def test_zero_matrix(self):
        Q = orthonormalize_double_gs(np.zeros((5, 3)))
        assert Q.shape == (5, 0)

    def test_span_containment(self):
        rng = np.random.default_rng(12)
        Y = rng.standard_normal((20, 6))
        Q = orthonormalize_double_gs(Y)
        # range(Q) inside range(Y): projecting Q onto Y's full column space is lossless
        U = np.linalg.svd(Y, full_matrices=False)[0]
        assert np.linalg.norm(Q - U @ (U.T @ Q)) <= 1e-11


class TestPivotedQR:
    def test_pivot_order_and_leading_diag(self):
        f = pivoted_qr(np.array([[1.0, 3.0], [0.0, 4.0]]))
        assert list(f.perm) == [1, 0]
        assert f.diag_profile[0] == pytest.approx(5.0)

    def test_identity_tie_break(self):
        f = pivoted_qr(np.eye(2))
        assert list(f.perm) == [0, 1]
        assert np.allclose(f.R, np.eye(2))

    def test_exact_rank_one(self):
        f = pivoted_qr(np.array([[1.0, 2.0], [2.0, 4.0]]), tol=0.0)
        if len(f.diag_profile) > 1:
            assert f.diag_profile[1] <= 1e-14 * f.diag_profile[0]

    def test_reconstruction_and_profile(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            m, n = rng.integers(2, 40, size=2)
            A = rng.standard_normal((m, n))
            f = pivoted_qr(A)
            assert np.linalg.norm(f.Q @ f.R - A) <= 1e-12 * np.linalg.norm(A)
            assert np.all(np.diff(f.diag_profile) <= 1e-12 * f.diag_profile[0])
            # R is upper triangular in pivot order
            Rp = f.R[:, f.perm]
            assert np.allclose(Rp, np.triu(Rp))

    def test_early_halt(self):
        rng = np.random.default_rng(6)
        B = rng.standard_normal((30, 4)) @ rng.standard_normal((4, 30))
        f = pivoted_qr(B, tol=1e-10 * np.linalg.norm(B))
        assert f.Q.shape[1] <= 6
        assert np.linalg.norm(f.Q @ f.R - B) <= 1e-9 * np.linalg.norm(B)


class TestSmallSVD:
    def test_diagonal(self):
        assert np.allclose(small_svd(np.diag([3.0, 1.0])).sigma, [3.0, 1.0])

    def test_permutation(self):
        assert np.allclose(small_svd(np.array([[0.0, 1.0], [1.0, 0.0]])).sigma, [1.0, 1.0])

    def test_golden_ratio_values(self):
        # eigenvalues of A*A are (3 +- sqrt(5))/2; singular values follow
        s = small_svd(np.array([[1.0, 1.0], [0.0, 1.0]])).sigma
        assert s[0] == pytest.approx(1.6180339887, abs=1e-9)
        assert s[1] == pytest.approx(0.6180339887, abs=1e-9)

    def test_reconstruction_and_invariants(self):
        rng = np.random.default_rng(8)
        B = rng.standard_normal((7, 9))
        f = small_svd(B)
        m, n = B.shape
        assert np.all(np.diff(f.sigma) <= 0)
        recon = (f.U * f.sigma) @ f.V.conj().T
        assert np.linalg.norm(recon - B) <= 1e-12 * max(m, n) * f.sigma[0]
        assert _orth_defect(f.U) <= 1e-12
        assert _orth_defect(f.V) <= 1e-12

    def test_sign_convention_deterministic(self):
        rng = np.random.default_rng(9)
        B = rng.standard_normal((5, 5))
        f1, f2 = small_svd(B), small_svd(B.copy())
        assert np.array_equal(f1.U, f2.U)
        for j in range(5):
            col = f1.U[:, j]
            nz = np.nonzero(np.abs(col) > 1e-10 * np.abs(col).max())[0]
            assert col[nz[0]] > 0

    def test_jacobi_oracle_cross_check(self):
        rng = np.random.default_rng(10)
        for trial in range(20):
            A = rng.standard_normal((10, 7))
            s_kernel = small_svd(A).sigma
            s_oracle = jacobi_singular_values(A)
            assert np.allclose(s_kernel, s_oracle, rtol=1e-9, atol=1e-12)


class TestSmallEig:
    def test_magnitude_order(self):
        V, lam = small_eig_hermitian(np.diag([2.0, -5.0]))
        assert np.allclose(lam, [-5.0, 2.0])
        assert np.allclose(np.abs(V), [[0, 1], [1, 0]])

    def test_equal_magnitude_tie(self):
        V, lam = small_eig_hermitian(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert np.allclose(lam, [1.0, -1.0])

    def test_constructed_spectrum(self):
        rng = np.random.default_rng(21)
        Q = haar_basis(6, 6, rng)
        D = np.arange(6, 0, -1).astype(float)
        B = (Q * D) @ Q.T
        V, lam = small_eig_hermitian(B)
        assert np.allclose(lam, D, atol=1e-10)
        assert _orth_defect(V) <= 1e-12


class TestCholesky:
    def test_hand_example(self):
        C = cholesky(np.array([[4.0, 2.0], [2.0, 2.0]]))
        assert np.allclose(C, [[2.0, 1.0], [0.0, 1.0]])

    def test_identity(self):
        assert np.allclose(cholesky(np.eye(4)), np.eye(4))

    def test_not_psd(self):
        with pytest.raises(NotPSDError):
            cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_semidefinite_clamped(self):
        B = np.array([[1.0, 1.0], [1.0, 1.0]])
        C = cholesky(B)
        assert np.linalg.norm(C.conj().T @ C - B) <= 1e-12 * np.linalg.norm(B)

    def test_random_psd(self):
        rng = np.random.default_rng(13)
        G = rng.standard_normal((8, 8))
        B = G @ G.T
        C = cholesky(B)
        assert np.allclose(C, np.triu(C))
        assert np.linalg.norm(C.T @ C - B) <= 1e-12 * np.linalg.norm(B, 2) * 8


class TestLeastSquares:
    def test_identity(self):
        B = np.arange(6.0).reshape(3, 2)
        assert np.allclose(least_squares(np.eye(3), B), B)

    def test_mean(self):
        X = least_squares(np.array([[1.0], [1.0]]), np.array([[0.0], [2.0]]))
        assert np.allclose(X, [[1.0]])

    def test_consistent_recovery(self):
        rng = np.random.default_rng(14)
        A = rng.standard_normal((20, 5))
        X0 = rng.standard_normal((5, 3))
        X = least_squares(A, A @ X0)
        assert np.linalg.norm(X - X0) <= 1e-11 * np.linalg.norm(X0)

    def test_normal_equation_stationarity(self):
        rng = np.random.default_rng(15)
        for m, n in [(12, 5), (30, 8)]:
            A = rng.standard_normal((m, n))
            B = rng.standard_normal((m, 2))
            X = least_squares(A, B)
            grad = A.T @ (A @ X - B)
            assert np.linalg.norm(grad) <= 1e-10 * np.linalg.norm(A.T @ B)

    def test_rank_deficient_stationarity(self):
        rng = np.random.default_rng(16)
        base = rng.standard_normal((15, 3))
        A = base @ rng.standard_normal((3, 6))
        B = rng.standard_normal(15)
        X = least_squares(A, B)
        assert np.linalg.norm(A.T @ (A @ X - B)) <= 1e-9 * np.linalg.norm(B)

    def test_underdetermined_min_norm(self):
        rng = np.random.default_rng(17)
        A = rng.standard_normal((4, 9))
        B = rng.standard_normal(4)
        X = least_squares(A, B)
        assert np.linalg.norm(A @ X - B) <= 1e-11 * np.linalg.norm(B)
        # minimum norm: solution lies in the row space of A
        P = A.T @ np.linalg.solve(A @ A.T, A)
        assert np.linalg.norm(P @ X - X) <= 1e-10 * np.linalg.norm(X)


class TestSpectralNormEstimate:
    def test_known_dominant(self):
        est = spectral_norm_estimate(DenseOperator(np.diag([5.0, 1.0, 0.0])), 50, seed=2)
        assert est == pytest.approx(5.0, abs=1e-8)

    def test_zero_operator(self):
        assert spectral_norm_estimate(DenseOperator(np.zeros((3, 3))), 10, seed=0) == 0.0

    def test_lower_bound_window(self):
        rng = np.random.default_rng(19)
        Q = haar_basis(8, 8, rng)
        A = (Q * np.array([1.0, 0.999] + [0.1] * 6)) @ Q.T
        for seed in range(5):
            est = spectral_norm_estimate(DenseOperator(A), 6, seed=seed)
            assert 0.999 - 1e-9 <= est <= 1.0 + 1e-12

    def test_monotone_in_iters(self):
        rng = np.random.default_rng(20)
        A = rng.standard_normal((12, 9))
        ests = [spectral_norm_estimate(DenseOperator(A), it, seed=4) for it in range(1, 12)]
        assert all(b >= a - 1e-12 for a, b in zip(ests, ests[1:]))


class TestOperators:
    def test_adjoint_consistency(self):
        rng = np.random.default_rng(22)
        op = DenseOperator(rng.standard_normal((9, 6)))
        assert adjoint_mismatch(op, seed=1) <= 1e-10

    def test_counters(self):
        rng = np.random.default_rng(23)
        op = DenseOperator(rng.standard_normal((9, 6)))
        op.apply(rng.standard_normal((6, 3)))
        op.apply_adjoint(rng.standard_normal((9, 2)))
        assert op.counters.matvecs == 3
        assert op.counters.adjoint_matvecs == 2
        assert op.counters.passes == 2


class TestValidation:
    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            as_matrix(np.array([[1.0, np.nan]]))

    def test_rejects_wrong_ndim(self):
        with pytest.raises(ValueError):
            as_matrix(np.ones(3))
