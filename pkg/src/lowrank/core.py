"""Deterministic dense linear-algebra kernels.

Everything downstream (sketching, range finding, postprocessing) is built on
the routines here: QR factorizations, double-orthogonalized Gram-Schmidt,
column-pivoted QR with early halting, small dense SVD / Hermitian
eigendecompositions, a tolerant Cholesky, pivoted least squares, and a power
method norm estimator.  All kernels accept real-double or complex-double
input and are pure functions, safe to call concurrently.

Output conventions are pinned so golden tests are deterministic: QR forces
r_jj real and nonnegative, the SVD forces the first nonzero entry of each
left singular vector onto the positive real axis, and pivot ties break
toward the lowest column index.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import config


class ConvergenceError(RuntimeError):
    """An iterative kernel (SVD/eig) failed to converge."""


class NotPSDError(ValueError):
    """Cholesky encountered a pivot too negative for the PSD tolerance."""


def as_matrix(a, name="matrix"):
    """Validate and return `a` as a 2-D float64/complex128 array.

    Raises ValueError on wrong dimensionality or non-finite entries.  This is
    the single ingestion checkpoint used by I/O readers and the CLI.
    """
    arr = np.asarray(a)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} must be nonempty")
    if np.iscomplexobj(arr):
        arr = arr.astype(np.complex128, copy=False)
    else:
        arr = arr.astype(np.float64, copy=False)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def _phases(values):
    """Unit phases of `values`; exact zeros map to 1."""
    v = np.asarray(values)
    mag = np.abs(v)
    out = np.ones_like(v)
    nz = mag > 0
    out[nz] = v[nz] / mag[nz]
    return out


# ---------------------------------------------------------------------------
# QR factorizations


def householder_qr(A, economy=True):
    """QR factorization with the diagonal of R forced real nonnegative.

    Returns (Q, R) with Q m-by-l orthonormal (l = min(m, n) in economy mode,
    l = m otherwise) and R upper triangular such that Q @ R == A.
    """
    A = np.asarray(A)
    mode = "reduced" if economy else "complete"
    Q, R = np.linalg.qr(A, mode=mode)
    k = min(A.shape)
    ph = _phases(np.diagonal(R)[:k])
    if Q.shape[1] >= k:
        Q[:, :k] *= ph
    R[:k, :] *= np.conj(ph)[:, None]
    return Q, R


def orthonormalize_double_gs(Y, tol=config.GS_DROP_TOL):
    """Orthonormalize the columns of Y by doubly reorthogonalized Gram-Schmidt.

    Columns whose residual after the first projection pass falls below
    tol * ||Y||_F are treated as numerically dependent and dropped, so the
    result has full numerical column rank.  The span of the output is
    contained in the span of Y.  An all-zero Y yields a zero-column result.

    Passing tol=0 keeps every column with a nonzero residual, reproducing the
    behavior of a plain QR step with no rank decision.
    """
    Y = np.asarray(Y)
    m = Y.shape[0]
    scale = np.linalg.norm(Y)
    cols = []
    for j in range(Y.shape[1]):
        w = Y[:, j].astype(np.complex128 if np.iscomplexobj(Y) else np.float64)
        if cols:
            Q = np.column_stack(cols)
            w = w - Q @ (Q.conj().T @ w)
        norm1 = np.linalg.norm(w)
        if norm1 <= tol * scale or norm1 == 0.0:
            continue
        if cols:
            w = w - Q @ (Q.conj().T @ w)
        norm2 = np.linalg.norm(w)
        if norm2 == 0.0:
            continue
        cols.append(w / norm2)
    if not cols:
        return np.zeros((m, 0), dtype=Y.dtype)
    return np.column_stack(cols)


@dataclass
class PivotedQRFactors:
    """Column-pivoted QR with halting: A[:, perm] ~= Q @ R[:, perm].

    R is stored in original column order, so R[:, perm] is upper triangular
    and A ~= Q @ R directly.  diag_profile holds |r_11| >= |r_22| >= ... for
    the steps actually taken.
    """

    Q: np.ndarray
    R: np.ndarray
    perm: np.ndarray
    diag_profile: np.ndarray


def pivoted_qr(A, tol=None, max_rank=None):
    """Businger-Golub column-pivoted Householder QR.

    Pivots on the largest remaining column norm (ties break to the lowest
    index) and halts early once the Frobenius norm of the untouched block
    drops to `tol` (or after `max_rank` steps).  The diagonal magnitude
    profile is weakly decreasing.
    """
    A = np.asarray(A)
    complex_in = np.iscomplexobj(A)
    W = A.astype(np.complex128 if complex_in else np.float64, copy=True)
    m, n = W.shape
    steps = min(m, n) if max_rank is None else min(max_rank, m, n)
    perm = np.arange(n)
    reflectors = []
    taken = 0
    for j in range(steps):
        norms = np.linalg.norm(W[j:, j:], axis=0)
        if tol is not None and np.linalg.norm(norms) <= tol:
            break
        piv = int(np.argmax(norms)) + j
        if piv != j:
            W[:, [j, piv]] = W[:, [piv, j]]
            perm[[j, piv]] = perm[[piv, j]]
        x = W[j:, j]
        xnorm = np.linalg.norm(x)
        if xnorm > 0:
            ph = x[0] / abs(x[0]) if abs(x[0]) > 0 else 1.0
            v = x.copy()
            v[0] += ph * xnorm
            vnorm = np.linalg.norm(v)
            if vnorm > 0:
                v = v / vnorm
                W[j:, j:] -= 2.0 * np.outer(v, v.conj() @ W[j:, j:])
                reflectors.append((j, v))
        taken = j + 1
    k = taken
    Rp = np.triu(W[:k, :])
    # accumulate economy Q by applying reflectors to the leading identity block
    Q = np.zeros((m, k), dtype=W.dtype)
    Q[:k, :k] = np.eye(k, dtype=W.dtype)
    for j, v in reversed(reflectors):
        Q[j:, :] -= 2.0 * np.outer(v, v.conj() @ Q[j:, :])
    # normalize phases so the diagonal of R is real nonnegative
    ph = _phases(np.diagonal(Rp))
    Q[:, : len(ph)] *= ph
    Rp *= np.conj(ph)[:, None]
    diag_profile = np.abs(np.diagonal(Rp)).astype(np.float64)
    R = np.zeros((k, n), dtype=W.dtype)
    R[:, perm] = Rp
    return PivotedQRFactors(Q=Q, R=R, perm=perm, diag_profile=diag_profile)


# ---------------------------------------------------------------------------
# Small dense spectral kernels


@dataclass
class SmallSVD:
    """Full SVD B = U @ diag(sigma) @ V*, singular values descending."""

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray


def small_svd(B):
    """Full SVD of a dense matrix with deterministic sign convention.

    Backed by LAPACK: the fast divide-and-conquer driver first, retried with
    the slower QR-iteration driver on the rare graded matrices where the
    former stalls.  A non-converging iteration surfaces as ConvergenceError
    rather than a silent bad result.  The first nonzero entry of each left
    singular vector is rotated onto the positive real axis (the matching
    right vector absorbs the conjugate phase).
    """
    B = np.asarray(B)
    try:
        U, s, Vh = np.linalg.svd(B, full_matrices=False)
    except np.linalg.LinAlgError:
        import scipy.linalg

        try:
            U, s, Vh = scipy.linalg.svd(B, full_matrices=False,
                                        lapack_driver="gesvd")
        except Exception as exc:
            raise ConvergenceError(f"SVD did not converge: {exc}") from exc
    V = Vh.conj().T
    for j in range(U.shape[1]):
        col = U[:, j]
        mags = np.abs(col)
        nz = np.nonzero(mags > 1e-10 * (mags.max() if mags.size else 0.0))[0]
        if nz.size == 0:
            continue
        ph = col[nz[0]] / abs(col[nz[0]])
        U[:, j] *= np.conj(ph)
        V[:, j] *= np.conj(ph)
    return SmallSVD(U=U, sigma=s.astype(np.float64), V=V)


def small_eig_hermitian(B):
    """Eigendecomposition of a Hermitian matrix, symmetrized internally.

    Returns (V, lam) with real eigenvalues ordered by descending magnitude
    (equal magnitudes in descending value) and orthonormal V.
    """
    B = np.asarray(B)
    H = 0.5 * (B + B.conj().T)
    try:
        lam, V = np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigendecomposition did not converge: {exc}") from exc
    order = np.lexsort((-lam, -np.abs(lam)))
    return V[:, order], lam[order].astype(np.float64)


def cholesky(B, tol=config.PSD_TOL):
    """Upper-triangular C with B = C* @ C for Hermitian PSD B.

    Pivots within [-tol*||B||, 0] are clamped to zero (semidefinite
    tolerance); a pivot below -tol*||B|| raises NotPSDError.
    """
    B = np.asarray(B)
    n = B.shape[0]
    if B.shape[0] != B.shape[1]:
        raise ValueError("cholesky requires a square matrix")
    scale = np.linalg.norm(B, 2) if n else 0.0
    C = np.zeros_like(B, dtype=np.complex128 if np.iscomplexobj(B) else np.float64)
    for i in range(n):
        d = B[i, i].real - np.real(C[:i, i].conj() @ C[:i, i])
        if d < -tol * scale:
            raise NotPSDError(f"matrix is not PSD: pivot {d:.3e} at index {i}")
        d = max(d, 0.0)
        C[i, i] = np.sqrt(d)
        if i + 1 < n:
            if C[i, i] > 0:
                C[i, i + 1:] = (B[i, i + 1:] - C[:i, i].conj() @ C[:i, i + 1:]) / C[i, i]
            else:
                C[i, i + 1:] = 0.0
    return C


def solve_triangular_trunc(R, B, trunc_tol=config.TRIANGULAR_TRUNC_TOL):
    """Back-substitution for upper-triangular R with rank truncation.

    Rows whose diagonal falls below trunc_tol * |r_11| get zero solution
    components, which realizes the minimum-residual basic solution for
    rank-deficient systems.
    """
    R = np.asarray(R)
    B = np.asarray(B)
    k = R.shape[0]
    dtype = np.promote_types(R.dtype, B.dtype)
    X = np.zeros((k,) + B.shape[1:], dtype=dtype)
    diag = np.abs(np.diagonal(R))
    cutoff = trunc_tol * (diag.max() if k else 0.0)
    for i in range(k - 1, -1, -1):
        if diag[i] <= cutoff:
            continue
        resid = B[i] - R[i, i + 1:] @ X[i + 1:]
        X[i] = resid / R[i, i]
    return X


def least_squares(A, B):
    """Minimize ||A @ X - B||_F by column-pivoted QR.

    Overdetermined (m >= n) systems get the pivoted-QR basic solution with
    truncated back-substitution on rank deficiency; underdetermined systems
    return the minimum-norm solution through a pivoted QR of A*.  Residuals
    are stationary: A*(A @ X - B) vanishes to roundoff.
    """
    A = np.asarray(A)
    B = np.asarray(B)
    vector_rhs = B.ndim == 1
    B2 = B[:, None] if vector_rhs else B
    m, n = A.shape
    if m >= n:
        f = pivoted_qr(A)
        C = f.Q.conj().T @ B2
        Y = solve_triangular_trunc(f.R[:, f.perm][:, : f.Q.shape[1]], C)
        X = np.zeros((n, B2.shape[1]), dtype=Y.dtype)
        X[f.perm[: Y.shape[0]], :] = Y
    else:
        # min-norm: A = P R* Q* from pivoted QR of A*, solution in range(Q)
        f = pivoted_qr(A.conj().T)
        k = f.Q.shape[1]
        Rp = f.R[:, f.perm][:, :k]
        Bp = B2[f.perm[:k], :]
        # solve Rp* w = Bp (lower triangular) via conjugated back-substitution
        W = solve_triangular_trunc(Rp.conj().T[::-1, ::-1], Bp[::-1])[::-1]
        X = f.Q @ W
    return X[:, 0] if vector_rhs else X


# ---------------------------------------------------------------------------
# Matrix-free operators


@dataclass
class OperatorCounters:
    matvecs: int = 0
    adjoint_matvecs: int = 0
    passes: int = 0
    flops: int = 0

    def reset(self):
        self.matvecs = self.adjoint_matvecs = self.passes = self.flops = 0


class MatVecOperator:
    """Abstract m-by-n linear map with matvec / pass / flop accounting.

    Subclasses implement `_apply` and `_apply_adjoint` on column blocks.
    Each blocked application counts as one pass over the operator's data,
    which is the quantity the pass-efficiency contracts track.
    """

    def __init__(self, m, n):
        self.m = int(m)
        self.n = int(n)
        self.counters = OperatorCounters()

    @property
    def shape(self):
        return (self.m, self.n)

    def apply(self, X):
        X = np.asarray(X)
        cols = 1 if X.ndim == 1 else X.shape[1]
        self.counters.matvecs += cols
        self.counters.passes += 1
        self.counters.flops += 2 * self.m * self.n * cols
        return self._apply(X)

    def apply_adjoint(self, Y):
        Y = np.asarray(Y)
        cols = 1 if Y.ndim == 1 else Y.shape[1]
        self.counters.adjoint_matvecs += cols
        self.counters.passes += 1
        self.counters.flops += 2 * self.m * self.n * cols
        return self._apply_adjoint(Y)

    def _apply(self, X):  # pragma: no cover - abstract
        raise NotImplementedError

    def _apply_adjoint(self, Y):  # pragma: no cover - abstract
        raise NotImplementedError


class DenseOperator(MatVecOperator):
    """MatVecOperator view of an in-memory dense matrix."""

    def __init__(self, A):
        A = as_matrix(A)
        super().__init__(*A.shape)
        self.array = A

    def _apply(self, X):
        return self.array @ X

    def _apply_adjoint(self, Y):
        return self.array.conj().T @ Y


def as_operator(A):
    """Wrap a dense array as DenseOperator; pass operators through."""
    if isinstance(A, MatVecOperator):
        return A
    return DenseOperator(A)


def adjoint_mismatch(op, seed=0, trials=4):
    """Largest relative defect of <Ax, y> == <x, A*y> over sampled probes."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        x = rng.standard_normal(op.n)
        y = rng.standard_normal(op.m)
        ax = op.apply(x)
        aty = op.apply_adjoint(y)
        lhs = np.vdot(y, ax)
        rhs = np.vdot(aty, x)
        denom = max(abs(lhs), abs(rhs), 1e-300)
        worst = max(worst, abs(lhs - rhs) / denom)
    return worst


def spectral_norm_estimate(op, iters, seed=0):
    """Monotone nondecreasing lower estimate of ||A|| by the power method.

    Runs `iters` iterations of the power method on A*A from a seeded random
    start and returns the final Rayleigh-quotient root, which never exceeds
    the true spectral norm.  A zero operator returns 0.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    op = as_operator(op)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(op.n)
    nrm = np.linalg.norm(v)
    if nrm == 0:
        return 0.0
    v = v / nrm
    est = 0.0
    for _ in range(iters):
        w = op.apply(v)
        wn = np.linalg.norm(w)
        if wn == 0:
            return 0.0
        est = wn
        v = op.apply_adjoint(w)
        vn = np.linalg.norm(v)
        if vn == 0:
            return float(est)
        v = v / vn
    return float(est)
