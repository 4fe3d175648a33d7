"""Stage B: convert a range basis or raw sketch into standard factorizations.

Postprocessing routes, in increasing order of thrift with the matrix data:

* direct paths form Q*A (or Q*AQ) explicitly, preserving the Stage A error;
* row-extraction paths touch only k rows of A through an interpolative
  decomposition of the basis, trading a bounded error amplification for
  speed;
* the Nystrom path exploits positive semidefiniteness for a sharper
  approximation at the same cost as the direct Hermitian route;
* one-pass paths reconstruct the reduced matrix from the sketch alone,
  never revisiting A.

All routines are pure and thread-safe; the only passes over the matrix
happen inside explicit operator applications.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import config
from .core import (
    NotPSDError,
    as_operator,
    cholesky,
    householder_qr,
    least_squares,
    orthonormalize_double_gs,
    pivoted_qr,
    small_eig_hermitian,
    small_svd,
    solve_triangular_trunc,
)
from .sketch import gaussian_matrix


@dataclass
class PartialSVD:
    """A ~= U @ diag(sigma) @ V*, with orthonormal factors and sigma descending."""

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    def compose(self):
        return (self.U * self.sigma) @ self.V.conj().T


@dataclass
class PartialEig:
    """Hermitian A ~= U @ diag(lam) @ U*; lam real, descending magnitude."""

    U: np.ndarray
    lam: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def compose(self):
        return (self.U * self.lam) @ self.U.conj().T


@dataclass
class InterpolativeDecomp:
    """Index skeleton plus bounded interpolation coefficients.

    Row form: M ~= X @ M[J, :] with X[J, :] the identity and |X| <= 2.
    Column form: M ~= M[:, J] @ X with X[:, J] the identity and |X| <= 2.
    """

    J: np.ndarray
    X: np.ndarray
    side: str


@dataclass
class PartialQR:
    """A ~= Q @ R with R weakly upper triangular under `perm`."""

    Q: np.ndarray
    R: np.ndarray
    perm: np.ndarray


@dataclass
class NystromFactors:
    """PSD approximation A ~= F @ F* via an approximate Cholesky factor."""

    F: np.ndarray


@dataclass
class SampleBundle:
    """Everything Stage A knows: test matrices, samples, and bases.

    One-sided bundles (Hermitian work) carry Omega, Y = A Omega, and Q.  The
    two-sided form adds Omega_tilde, Y_tilde = A* Omega_tilde, and Q_tilde.
    q_choice records whether Q came from Gram-Schmidt on Y or from the k
    leading left singular vectors of Y.
    """

    Omega: np.ndarray
    Y: np.ndarray
    Q: np.ndarray
    Omega_tilde: np.ndarray | None = None
    Y_tilde: np.ndarray | None = None
    Q_tilde: np.ndarray | None = None
    q_choice: str = "gs"
    seed: int | None = None


def _basis_from_samples(Y, rank=None, ortho_tol=config.GS_DROP_TOL):
    if rank is None:
        return orthonormalize_double_gs(Y, tol=ortho_tol), "gs"
    f = small_svd(Y)
    return f.U[:, :rank], "svd"


def sample_bundle(A, ell, seed, rank=None):
    """Draw a one-sided bundle (Omega, Y = A Omega, Q) in a single pass.

    With `rank` given, Q is the matrix of that many leading left singular
    vectors of Y, the oversampled variant that conditions the one-pass
    solve; otherwise Q orthonormalizes Y directly.
    """
    op = as_operator(A)
    Omega = gaussian_matrix(op.n, ell, seed)
    Y = op.apply(Omega)
    Q, choice = _basis_from_samples(Y, rank)
    return SampleBundle(Omega=Omega, Y=Y, Q=Q, q_choice=choice, seed=seed)


def sample_bundle_two_sided(A, ell, ell_tilde=None, seed=0, rank=None):
    """Draw sketches of A and A* in one pass and orthonormalize both."""
    op = as_operator(A)
    if ell_tilde is None:
        ell_tilde = ell
    Omega = gaussian_matrix(op.n, ell, seed)
    Omega_t = gaussian_matrix(op.m, ell_tilde, seed + 1)
    Y = op.apply(Omega)
    Yt = op.apply_adjoint(Omega_t)
    Q, choice = _basis_from_samples(Y, rank)
    Qt, _ = _basis_from_samples(Yt, rank)
    return SampleBundle(Omega=Omega, Y=Y, Q=Q, Omega_tilde=Omega_t, Y_tilde=Yt,
                        Q_tilde=Qt, q_choice=choice, seed=seed)


# ---------------------------------------------------------------------------
# Direct paths


def direct_svd(A, Q):
    """Partial SVD through the reduced matrix B = Q*A.

    The approximation error equals the basis residual ||A - QQ*A||; no
    degradation occurs in this route.
    """
    op = as_operator(A)
    if Q.shape[0] != op.m:
        raise ValueError("basis rows must match matrix rows")
    B = op.apply_adjoint(Q).conj().T
    f = small_svd(B)
    return PartialSVD(U=Q @ f.U, sigma=f.sigma, V=f.V)


def _hermitian_probe(op, seed=0, tol=1e-8):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(op.n)
    y = rng.standard_normal(op.n)
    ax = op.apply(x)
    ay = op.apply(y)
    lhs = np.vdot(y, ax)
    rhs = np.vdot(ay, x)
    denom = max(abs(lhs), abs(rhs), 1e-300)
    if abs(lhs - rhs) / denom > tol:
        raise ValueError("operator failed the Hermitian probe")


def direct_eig_hermitian(A, Q):
    """Partial eigendecomposition of a Hermitian matrix via B = Q*AQ.

    The factorization error is at most twice the basis residual.  A seeded
    probe rejects operators that are not Hermitian.
    """
    op = as_operator(A)
    _hermitian_probe(op)
    B = Q.conj().T @ op.apply(Q)
    V, lam = small_eig_hermitian(B)
    return PartialEig(U=Q @ V, lam=lam)


# ---------------------------------------------------------------------------
# Interpolative decomposition and row extraction


def _column_id(B, k, trunc_tol=config.TRIANGULAR_TRUNC_TOL):
    """Column ID of B: indices J and coefficients T over the free columns.

    Gu-Eisenstat style refinement with bound parameter 2: whenever some
    coefficient magnitude exceeds 2, the offending pivot and free column are
    swapped and the triangular factors recomputed; each swap grows the
    pivot-block determinant by that factor, so the loop terminates.  The
    step cap guards against floating-point cycling.
    """
    B = np.asarray(B)
    n = B.shape[1]
    if not 1 <= k <= min(B.shape):
        raise ValueError("k must satisfy 1 <= k <= min(m, n)")
    f = pivoted_qr(B, max_rank=k)
    perm = list(f.perm)
    cap = max(int(3 * k * math.log(max(n, 2))), 8)

    def coefficients(order):
        R = np.linalg.qr(B[:, order], mode="r")
        return solve_triangular_trunc(R[:k, :k], R[:k, k:], trunc_tol=trunc_tol)

    T = solve_triangular_trunc(f.R[:, f.perm][:k, :k], f.R[:, f.perm][:k, k:],
                               trunc_tol=trunc_tol)
    swaps = 0
    while T.size and np.abs(T).max() > 2.0 * (1.0 + 1e-12):
        i, j = np.unravel_index(int(np.argmax(np.abs(T))), T.shape)
        perm[i], perm[k + j] = perm[k + j], perm[i]
        T = coefficients(perm)
        swaps += 1
        if swaps > cap:
            raise RuntimeError("interpolative decomposition refinement did not settle")
    return np.asarray(perm[:k]), np.asarray(perm[k:]), T


def row_id(M, k):
    """Row interpolative decomposition M ~= X @ M[J, :].

    Computed as a column ID of M*; X contains the k-by-k identity on the
    selected rows exactly and no entry larger than 2 in magnitude after
    refinement.  k may exceed the numerical rank, in which case the trailing
    coefficients are exact by construction.
    """
    M = np.asarray(M)
    J, free, T = _column_id(M.conj().T, k)
    m = M.shape[0]
    X = np.zeros((m, k), dtype=np.promote_types(T.dtype, M.dtype))
    X[J, :] = np.eye(k)
    X[free, :] = T.conj().T
    return InterpolativeDecomp(J=J, X=X, side="row")


def column_id(M, k):
    """Column interpolative decomposition M ~= M[:, J] @ X."""
    M = np.asarray(M)
    J, free, T = _column_id(M, k)
    n = M.shape[1]
    X = np.zeros((k, n), dtype=np.promote_types(T.dtype, M.dtype))
    X[:, J] = np.eye(k)
    X[:, free] = T
    return InterpolativeDecomp(J=J, X=X, side="column")


def two_sided_id(M, k):
    """Two-sided skeleton M ~= W @ M[J_row, J_col] @ X from composed one-sided IDs."""
    rid = row_id(M, k)
    cid = column_id(np.asarray(M)[rid.J, :], k)
    return rid, cid


def svd_via_row_extraction(A, QorY):
    """Partial SVD touching only k rows of A (row ID of the basis).

    Accepts the orthonormal basis Q or, preferably, the raw sample matrix Y.
    The error is at most (1 + sqrt(1 + 4k(n-k))) times the basis residual.
    """
    A = np.asarray(A)
    QorY = np.asarray(QorY)
    k = QorY.shape[1]
    rid = row_id(QorY, k)
    rows = A[rid.J, :]
    W, Rh = householder_qr(rows.conj().T)
    Z = rid.X @ Rh.conj().T
    f = small_svd(Z)
    return PartialSVD(U=f.U, sigma=f.sigma, V=W @ f.V)


def eig_via_row_extraction(A, QorY):
    """Hermitian eigendecomposition touching only the (J, J) block of A."""
    A = np.asarray(A)
    QorY = np.asarray(QorY)
    k = QorY.shape[1]
    rid = row_id(QorY, k)
    V, R = householder_qr(rid.X)
    Z = R @ A[np.ix_(rid.J, rid.J)] @ R.conj().T
    W, lam = small_eig_hermitian(Z)
    return PartialEig(U=V @ W, lam=lam)


# ---------------------------------------------------------------------------
# PSD and one-pass paths


def eig_nystrom(A, Q):
    """Nystrom eigendecomposition of a PSD matrix.

    Builds the approximation (AQ)(Q*AQ)^(-1)(AQ)* = F F* through a Cholesky
    factorization and a triangular solve, then reads the eigenpairs off an
    SVD of F.  Its spectral error never exceeds the basis residual, so it
    dominates the direct Hermitian route on PSD inputs.

    If Q*AQ fails the PSD tolerance the routine falls back to an
    eigendecomposition with eigenvalue clamping at zero and flags the event
    in the diagnostics (callers that require strict PSD inputs should treat
    the flag as a numerical failure).
    """
    op = as_operator(A)
    B1 = op.apply(Q)
    B2 = Q.conj().T @ B1
    B2 = 0.5 * (B2 + B2.conj().T)
    diagnostics = {}
    try:
        C = cholesky(B2)
        # F = B1 C^{-1}: solve F C = B1 against the upper-triangular factor
        Ft = solve_triangular_trunc(C.conj().T[::-1, ::-1], B1.conj().T[::-1])[::-1]
        F = Ft.conj().T
    except NotPSDError as exc:
        # clamp the projected block at zero and pseudo-invert its square root
        V, lam = small_eig_hermitian(B2)
        diagnostics["not_psd_fallback"] = True
        diagnostics["min_projected_eigenvalue"] = float(lam.min())
        diagnostics["detail"] = str(exc)
        lam_c = np.clip(lam, 0.0, None)
        inv_root = np.where(lam_c > 1e-15 * max(lam_c.max(), 1e-300),
                            1.0 / np.sqrt(np.where(lam_c > 0, lam_c, 1.0)), 0.0)
        F = B1 @ (V * inv_root)
    f = small_svd(F)
    lam = f.sigma ** 2
    return PartialEig(U=f.U, lam=lam, diagnostics=diagnostics), NystromFactors(F=F)


def eig_one_pass(bundle):
    """Hermitian eigendecomposition from the sketch alone (no access to A).

    Solves B (Q* Omega) ~= Q* Y in least squares, symmetrizes (the
    minimum-residual projection onto Hermitian matrices), and rotates the
    eigenvectors back through Q.  The conditioning of Q* Omega governs the
    accuracy; its smallest singular value is reported, with a warning flag
    when the condition number passes the configured threshold.  Oversampled
    bundles whose Q stems from the leading left singular vectors of Y give
    an overdetermined, better-conditioned system.
    """
    Q = bundle.Q
    M = Q.conj().T @ bundle.Omega
    N = Q.conj().T @ bundle.Y
    B = least_squares(M.conj().T, N.conj().T).conj().T
    B = 0.5 * (B + B.conj().T)
    diagnostics = {"q_choice": bundle.q_choice}
    sv = small_svd(M).sigma
    tau_min = float(sv.min()) if sv.size else 0.0
    diagnostics["tau_min"] = tau_min
    if sv.size and (tau_min == 0.0 or sv.max() / max(tau_min, 1e-300) > config.ONE_PASS_COND_WARN):
        diagnostics["ill_conditioned"] = True
    V, lam = small_eig_hermitian(B)
    return PartialEig(U=Q @ V, lam=lam, diagnostics=diagnostics)


def svd_one_pass_general(bundle):
    """General one-pass SVD from a two-sided bundle.

    Finds the reduced matrix B minimizing
    ||B (Q~* Omega) - Q* Y||_F^2 + ||B* (Q* Omega~) - Q~* Y~||_F^2
    through dense least squares over vec(B) (equal weighting of the two
    blocks), then returns the SVD of Q B Q~* in factored form.  Refuses
    reduced problems beyond the configured dimension cap; use a two-pass
    route for those.
    """
    if bundle.Omega_tilde is None or bundle.Y_tilde is None or bundle.Q_tilde is None:
        raise ValueError("two-sided bundle required")
    Q, Qt = bundle.Q, bundle.Q_tilde
    k, kt = Q.shape[1], Qt.shape[1]
    if k * kt > config.ONE_PASS_DIM_CAP:
        raise ValueError(
            f"reduced problem has {k * kt} unknowns, above the cap "
            f"{config.ONE_PASS_DIM_CAP}; use the two-pass path"
        )
    if k == 0 or kt == 0:
        dt = bundle.Y.dtype
        return PartialSVD(U=np.zeros((Q.shape[0], 0), dt), sigma=np.zeros(0),
                          V=np.zeros((Qt.shape[0], 0), dt))
    P = Qt.conj().T @ bundle.Omega          # kt x ell
    N1 = Q.conj().T @ bundle.Y              # k x ell
    S = Q.conj().T @ bundle.Omega_tilde     # k x ell~
    N2 = Qt.conj().T @ bundle.Y_tilde       # kt x ell~
    dt = np.promote_types(P.dtype, N1.dtype)
    eye_k = np.eye(k, dtype=dt)
    eye_kt = np.eye(kt, dtype=dt)
    # vec(B P) = (P^T kron I_k) vec(B); vec(S* B) = (I_kt kron S*) vec(B)
    M_top = np.kron(P.T, eye_k)
    M_bot = np.kron(eye_kt, S.conj().T)
    rhs = np.concatenate([N1.reshape(-1, order="F"), N2.conj().T.reshape(-1, order="F")])
    sol = least_squares(np.vstack([M_top, M_bot]), rhs)
    B = sol.reshape((k, kt), order="F")
    f = small_svd(B)
    return PartialSVD(U=Q @ f.U, sigma=f.sigma, V=Qt @ f.V)


# ---------------------------------------------------------------------------
# Truncation and conversions


def truncate_rank(f, k):
    """Keep the k spectrally largest components of a factorization.

    For a partial SVD the post-truncation error is at most
    sigma_{k+1}(A) + ||(I - P)A|| on top of the input's residual; truncating
    to the full current rank is the identity.
    """
    if isinstance(f, PartialSVD):
        if k > len(f.sigma):
            raise ValueError("k exceeds current rank")
        return PartialSVD(U=f.U[:, :k], sigma=f.sigma[:k], V=f.V[:, :k])
    if isinstance(f, PartialEig):
        if k > len(f.lam):
            raise ValueError("k exceeds current rank")
        order = np.argsort(-np.abs(f.lam), kind="stable")[:k]
        order = np.sort(order)
        return PartialEig(U=f.U[:, order], lam=f.lam[order],
                          diagnostics=dict(f.diagnostics))
    raise TypeError("expected PartialSVD or PartialEig")


def convert_cb(C, B, target):
    """Turn a low-rank product A ~= C @ B into a standard factorization.

    target="qr":  C = Q1 R1; D = R1 B; pivoted QR of D gives Q2, R; the
                  result is (Q1 Q2, R, perm).
    target="svd": same head, then the small SVD of D, U = Q1 U2.
    target="id":  column ID of B lifts to a column skeleton of A (the error
                  may amplify by the usual interpolation factor).
    """
    C = np.asarray(C)
    B = np.asarray(B)
    if target == "id":
        return column_id(B, min(B.shape))
    Q1, R1 = householder_qr(C)
    D = R1 @ B
    if target == "qr":
        f = pivoted_qr(D)
        return PartialQR(Q=Q1 @ f.Q, R=f.R, perm=f.perm)
    if target == "svd":
        f = small_svd(D)
        return PartialSVD(U=Q1 @ f.U, sigma=f.sigma, V=f.V)
    raise ValueError("target must be one of 'qr', 'svd', 'id'")
