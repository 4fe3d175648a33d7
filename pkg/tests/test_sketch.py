import numpy as np
import pytest

from lowrank.sketch import (
    GsrftOperator,
    SketchSpec,
    SrftOperator,
    dft,
    gaussian_matrix,
    gsrft_apply,
    gsrft_operator,
    haar_orthonormal,
    op_count,
    reset_op_count,
    srft_apply,
    srft_operator,
)
from lowrank.core import spectral_norm_estimate, DenseOperator


def dense_dft(n):
    p, q = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    return np.exp(-2j * np.pi * p * q / n) / np.sqrt(n)


def dense_givens_chain(perm, thetas, n):
    P = np.zeros((n, n))
    for j in range(n):
        P[perm[j], j] = 1.0
    M = P.astype(complex)
    for i, t in enumerate(thetas):
        G = np.eye(n, dtype=complex)
        G[i, i] = np.cos(t)
        G[i, i + 1] = np.sin(t)
        G[i + 1, i] = -np.sin(t)
        G[i + 1, i + 1] = np.cos(t)
        M = M @ G
    return M


def dense_srft(op):
    n = op.n
    R = np.zeros((n, op.ell))
    for t, c in enumerate(op.picks):
        R[c, t] = 1.0
    return op.scale * np.diag(op.d) @ dense_dft(n) @ R


def dense_gsrft(op):
    n = op.n
    R = np.zeros((n, op.ell))
    for t, c in enumerate(op.picks):
        R[c, t] = 1.0
    return op.scale * (
        np.diag(op.d_outer)
        @ dense_givens_chain(op.perm_outer, op.thetas_outer, n)
        @ np.diag(op.d_mid)
        @ dense_givens_chain(op.perm_inner, op.thetas_inner, n)
        @ np.diag(op.d_inner)
        @ dense_dft(n)
        @ R
    )


class TestGaussian:
    def test_determinism(self):
        a = gaussian_matrix(3, 2, seed=7)
        b = gaussian_matrix(3, 2, seed=7)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, gaussian_matrix(3, 2, seed=8))

    def test_moments(self):
        g = gaussian_matrix(10_000, 1, seed=1)[:, 0]
        n = len(g)
        assert abs(g.mean()) <= 4 / np.sqrt(n)
        assert abs(g.var() - 1.0) <= 0.1

    def test_semicircle_edge(self):
        n = 2000
        G = gaussian_matrix(n, n, seed=3)
        est = spectral_norm_estimate(DenseOperator(G), 40, seed=0)
        assert 1.8 * np.sqrt(n) <= est <= 2.2 * np.sqrt(n)

    def test_haar_orthonormal(self):
        Q = haar_orthonormal(30, 6, seed=2)
        assert np.linalg.norm(Q.T @ Q - np.eye(6)) <= 1e-12


class TestDFT:
    def test_impulse_n2(self):
        assert np.allclose(dft(np.array([1.0, 0.0])), np.array([1, 1]) / np.sqrt(2))

    def test_constant_n4(self):
        assert np.allclose(dft(np.ones(4)), [2, 0, 0, 0])

    @pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 12, 16, 100, 200, 257])
    def test_unitarity(self, n):
        rng = np.random.default_rng(n)
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        w = dft(v)
        assert abs(np.linalg.norm(w) - np.linalg.norm(v)) <= 1e-12 * np.linalg.norm(v)

    @pytest.mark.parametrize("n", [2, 3, 7, 12, 16, 100])
    def test_matches_dense_dft(self, n):
        rng = np.random.default_rng(10 + n)
        v = rng.standard_normal(n)
        assert np.abs(dft(v) - dense_dft(n) @ v).max() <= 1e-11 * max(1.0, np.linalg.norm(v))

    def test_matrix_rows(self):
        rng = np.random.default_rng(44)
        X = rng.standard_normal((5, 12))
        out = dft(X, axis=1)
        for i in range(5):
            assert np.allclose(out[i], dft(X[i]), atol=1e-13)

    def test_counter_growth_ratio(self):
        # n log n scaling: quadrupling n costs a factor 4 * (12/10) = 4.8,
        # never the 16x of a quadratic kernel
        reset_op_count()
        dft(np.zeros((1, 1024)))
        c1024 = op_count()
        reset_op_count()
        dft(np.zeros((1, 4096)))
        c4096 = op_count()
        assert c4096 <= 5.0 * c1024
        assert c4096 >= 4.0 * c1024


class TestSrft:
    def test_spec_validation(self):
        with pytest.raises(ValueError):
            srft_operator(4, 5, seed=0)
        with pytest.raises(ValueError):
            SketchSpec(kind="nope", ell=2)

    def test_operator_invariants(self):
        op = srft_operator(50, 12, seed=5)
        assert np.allclose(np.abs(op.d), 1.0)
        assert len(set(op.picks.tolist())) == 12
        assert all(0 <= p < 50 for p in op.picks)

    def test_identity_input_gives_dense_operator(self):
        op = srft_operator(16, 4, seed=9)
        Y = srft_apply(np.eye(16), op)
        assert np.abs(Y - dense_srft(op)).max() <= 1e-12

    def test_fast_matches_dense_product(self):
        rng = np.random.default_rng(6)
        A = rng.standard_normal((16, 16))
        op = srft_operator(16, 4, seed=1)
        assert np.abs(srft_apply(A, op) - A @ dense_srft(op)).max() <= 1e-12

    @pytest.mark.parametrize("n", [12, 100, 200])
    def test_fast_matches_dense_nonpow2(self, n):
        rng = np.random.default_rng(n)
        A = rng.standard_normal((8, n))
        op = srft_operator(n, 5, seed=2)
        dense = dense_srft(op)
        err = np.abs(srft_apply(A, op) - A @ dense).max()
        assert err <= 1e-11 * max(1.0, np.abs(A).max() * n)

    def test_norm_identity(self):
        op = srft_operator(32, 8, seed=3)
        sv = np.linalg.svd(dense_srft(op), compute_uv=False)
        assert sv[0] == pytest.approx(np.sqrt(32 / 8), rel=1e-12)

    def test_unitary_chain(self):
        # sqrt(ell/n) * Omega has exactly orthonormal columns
        for n in (64, 200, 1024):
            op = srft_operator(n, 10, seed=4)
            W = np.sqrt(op.ell / op.n) * dense_srft(op)
            assert np.linalg.norm(W.conj().T @ W - np.eye(10)) <= 1e-10

    def test_complex_input(self):
        rng = np.random.default_rng(8)
        A = rng.standard_normal((6, 20)) + 1j * rng.standard_normal((6, 20))
        op = srft_operator(20, 4, seed=6)
        assert np.abs(srft_apply(A, op) - A @ dense_srft(op)).max() <= 1e-11


class TestGsrft:
    def test_degenerate_rotations_reduce_to_srft_with_diagonals(self):
        n, ell = 4, 4
        base = gsrft_operator(n, ell, seed=0)
        op = GsrftOperator(
            n=n, ell=ell,
            d_outer=base.d_outer, perm_outer=np.arange(n),
            thetas_outer=np.zeros(n - 1),
            d_mid=base.d_mid, perm_inner=np.arange(n),
            thetas_inner=np.zeros(n - 1),
            d_inner=base.d_inner, picks=np.arange(ell), scale=1.0,
        )
        Y = gsrft_apply(np.eye(n), op)
        d_all = base.d_outer * base.d_mid * base.d_inner
        expected = np.diag(d_all) @ dense_dft(n)
        assert np.abs(Y - expected).max() <= 1e-12

    def test_fast_matches_dense_construction(self):
        rng = np.random.default_rng(9)
        A = rng.standard_normal((16, 16))
        op = gsrft_operator(16, 5, seed=4)
        assert np.abs(gsrft_apply(A, op) - A @ dense_gsrft(op)).max() <= 1e-12

    def test_isometry_of_rotation_diagonal_chain(self):
        rng = np.random.default_rng(10)
        n = 30
        op = gsrft_operator(n, 6, seed=5)
        x = rng.standard_normal(n)
        full = dense_gsrft(op) / op.scale  # strip subsampling scale
        # the chain before subsampling is unitary, so the full transform
        # applied to any vector preserves its norm
        chain = (
            np.diag(op.d_outer)
            @ dense_givens_chain(op.perm_outer, op.thetas_outer, n)
            @ np.diag(op.d_mid)
            @ dense_givens_chain(op.perm_inner, op.thetas_inner, n)
            @ np.diag(op.d_inner)
            @ dense_dft(n)
        )
        assert abs(np.linalg.norm(x @ chain) - np.linalg.norm(x)) <= 1e-12
        assert full.shape == (n, 6)

    def test_determinism(self):
        a = gsrft_apply(np.eye(8), SketchSpec(kind="gsrft", ell=3, seed=11))
        b = gsrft_apply(np.eye(8), SketchSpec(kind="gsrft", ell=3, seed=11))
        assert np.array_equal(a, b)
