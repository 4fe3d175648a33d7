"""Stage A: randomized construction of an orthonormal range basis.

Given a matrix (or matrix-free operator) A, these routines build Q with
orthonormal columns such that A is close to Q Q* A.  The fixed-rank path
draws a Gaussian or structured sketch of prescribed size; the fixed-precision
path grows the basis adaptively, monitoring Gaussian probe vectors until r
consecutive residual norms fall below the tolerance-derived threshold.  A
power/subspace scheme sharpens flat spectra by alternating applications of A
and A*, with the subspace variant reorthonormalizing between applications
for floating-point robustness.

The returned RangeBasis carries provenance: samples drawn, the pass-count
formula for the scheme (basic 1; power and subspace 2q+2, counting the
postprocessing pass by the full-pipeline convention; adaptive 1 plus its
probe matvecs), the sketch configuration, and any a-posteriori error
estimate attached to it.

Fixed-rank finders are data-parallel over sample columns.  The adaptive
finder is a sequential state machine whose correctness depends on probe
ordering; do not share its state across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import config
from .core import as_operator, orthonormalize_double_gs
from .sketch import SketchSpec, gaussian_matrix, gsrft_apply, rng_for, srft_apply


@dataclass
class RangeBasis:
    """Orthonormal basis with draw provenance."""

    Q: np.ndarray
    samples_used: int
    passes: int
    est_error: float | None
    spec: SketchSpec
    saturated: bool = False
    probe_matvecs: int = 0
    diagnostics: dict = field(default_factory=dict)


def randomized_range_finder(A, ell, seed, ortho_tol=config.GS_DROP_TOL):
    """Basic fixed-rank range finder: orthonormalize A @ Omega, one pass.

    Omega is an n-by-ell Gaussian draw keyed by `seed`.  A zero sample
    matrix yields a zero-column basis with est_error 0.
    """
    op = as_operator(A)
    if not 1 <= ell <= min(op.shape):
        raise ValueError("ell must satisfy 1 <= ell <= min(m, n)")
    spec = SketchSpec(kind="gaussian", ell=ell, seed=seed)
    Y = op.apply(gaussian_matrix(op.n, ell, seed))
    Q = orthonormalize_double_gs(Y, tol=ortho_tol)
    est = 0.0 if Q.shape[1] == 0 else None
    return RangeBasis(Q=Q, samples_used=ell, passes=1, est_error=est, spec=spec)


def posterior_error_estimate(A, Q, r=config.DEFAULT_PROBES,
                             alpha=config.DEFAULT_ALPHA, seed=0):
    """Probabilistic upper bound on ||(I - QQ*)A|| from r Gaussian probes.

    Returns alpha * sqrt(2/pi) * max_i ||(I - QQ*) A w_i|| over r fresh
    standard Gaussian probes; the bound fails with probability at most
    alpha^(-r).  Costs r matvecs with A.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    if alpha <= 1:
        raise ValueError("alpha must exceed 1")
    op = as_operator(A)
    W = rng_for(seed, 0x70726F62).standard_normal((op.n, r))
    Z = op.apply(W)
    if Q.shape[1]:
        Z = Z - Q @ (Q.conj().T @ Z)
    return float(alpha * math.sqrt(2.0 / math.pi) * np.linalg.norm(Z, axis=0).max())


def _probe_threshold(eps, alpha):
    return eps / (alpha * math.sqrt(2.0 / math.pi))


def adaptive_range_finder(A, eps, r=config.DEFAULT_PROBES, seed=0,
                          alpha=config.DEFAULT_ALPHA, block=1):
    """Fixed-precision range finder with built-in error estimation.

    Grows the basis one probe at a time: each pending residual vector
    y_i = (I - QQ*) A w_i doubles as the next basis candidate and as an
    error-estimator sample.  The loop stops once r consecutive probe norms
    fall below eps / (alpha * sqrt(2/pi)), which certifies
    ||A - QQ*A|| <= eps with failure probability about min(m,n) * alpha^-r.

    Probes are reprojected against the current basis before normalization
    (the double-orthogonalization safeguard) and pending probes are
    downdated incrementally as each new basis vector is accepted.  `block`
    batches the draw-and-multiply steps for throughput; the stopping rule is
    unchanged.

    If the basis reaches min(m, n) columns the run returns with the
    `saturated` flag set.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if r < 1:
        raise ValueError("r must be >= 1")
    block = max(int(block), 1)
    op = as_operator(A)
    m, n = op.shape
    threshold = _probe_threshold(eps, alpha)
    spec = SketchSpec(kind="gaussian", ell=1, seed=seed)

    draws = 0

    def draw_probes(count):
        nonlocal draws
        W = rng_for(seed, 0x61646170, draws).standard_normal((n, count))
        draws += count
        return op.apply(W)

    pending = []
    cols = []
    saturated = False
    while True:
        # keep at least r pending probes, each held at (I - QQ*) A w
        while len(pending) < r:
            fresh = draw_probes(block)
            if cols:
                Qc = np.column_stack(cols)
                fresh = fresh - Qc @ (Qc.conj().T @ fresh)
            pending.extend(fresh[:, i] for i in range(fresh.shape[1]))
        if max(np.linalg.norm(y) for y in pending[:r]) <= threshold:
            break
        y = pending.pop(0)
        Q = np.column_stack(cols) if cols else np.zeros((m, 0))
        y = y - Q @ (Q.conj().T @ y)
        nrm = np.linalg.norm(y)
        if nrm == 0.0:
            continue
        q = y / nrm
        cols.append(q)
        if len(cols) >= min(m, n):
            saturated = True
            break
        for i in range(len(pending)):
            pending[i] = pending[i] - q * (np.vdot(q, pending[i]))
    Q = np.column_stack(cols) if cols else np.zeros((m, 0))
    est = alpha * math.sqrt(2.0 / math.pi) * max(
        np.linalg.norm(y) for y in pending[:r]
    ) if pending else 0.0
    return RangeBasis(
        Q=Q, samples_used=draws, passes=1, est_error=float(est), spec=spec,
        saturated=saturated, probe_matvecs=r,
    )


def adaptive_range_finder_blocked(A, eps, r=config.DEFAULT_PROBES, seed=0,
                                  alpha=config.DEFAULT_ALPHA,
                                  block=config.ADAPTIVE_BLOCK):
    """Blocked adaptive finder: draws probes in batches of `block`."""
    return adaptive_range_finder(A, eps, r=r, seed=seed, alpha=alpha, block=block)


def _plain_gs(Y):
    """Single-pass classical Gram-Schmidt with no reorthogonalization or drop.

    This is the naive textbook orthonormalization; on nearly dependent
    columns its output loses orthonormality.  Kept as a diagnostic to expose
    the roundoff vulnerability of the unsafeguarded power scheme.
    """
    Y = np.asarray(Y, dtype=np.complex128 if np.iscomplexobj(Y) else np.float64)
    Q = Y.copy()
    for j in range(Q.shape[1]):
        for i in range(j):
            Q[:, j] -= Q[:, i] * np.vdot(Q[:, i], Q[:, j])
        nrm = np.linalg.norm(Q[:, j])
        if nrm > 0:
            Q[:, j] /= nrm
    return Q


def power_iteration_range(A, ell, q, seed, ortho_tol=config.GS_DROP_TOL,
                          safeguarded=True):
    """Power-scheme range finder: orthonormalize (A A*)^q A Omega.

    Sharpened sampling for slowly decaying spectra; the sample matrix sees
    singular values raised to the 2q+1 power.  Forming the powered samples
    without intermediate orthonormalization extinguishes every singular
    mode below roughly eps_machine^(1/(2q+1)) * ||A||, so prefer
    subspace_iteration_range when that matters.  q = 0 reproduces the basic
    finder draw for draw.

    With safeguarded=False the final orthonormalization is a single-pass
    classical Gram-Schmidt with no column drops (the naive scheme), which
    makes the roundoff failure observable instead of being masked by the
    double orthogonalization.
    """
    if q < 0:
        raise ValueError("q must be nonnegative")
    op = as_operator(A)
    if not 1 <= ell <= min(op.shape):
        raise ValueError("ell must satisfy 1 <= ell <= min(m, n)")
    spec = SketchSpec(kind="gaussian", ell=ell, power_q=q, seed=seed)
    Y = op.apply(gaussian_matrix(op.n, ell, seed))
    for _ in range(q):
        Y = op.apply(op.apply_adjoint(Y))
    if safeguarded:
        Q = orthonormalize_double_gs(Y, tol=ortho_tol)
    else:
        Q = _plain_gs(Y)
    est = 0.0 if Q.shape[1] == 0 else None
    return RangeBasis(Q=Q, samples_used=ell, passes=2 * q + 2, est_error=est,
                      spec=spec)


def subspace_iteration_range(A, ell, q, seed, ortho_tol=config.GS_DROP_TOL):
    """Power scheme with reorthonormalization between operator applications.

    Algebraically identical to power_iteration_range in exact arithmetic but
    keeps every retained mode at unit scale, so small singular modes survive
    floating point.  This is the recommended power-scheme implementation.
    """
    if q < 0:
        raise ValueError("q must be nonnegative")
    op = as_operator(A)
    if not 1 <= ell <= min(op.shape):
        raise ValueError("ell must satisfy 1 <= ell <= min(m, n)")
    spec = SketchSpec(kind="gaussian", ell=ell, power_q=q, seed=seed)
    Y = op.apply(gaussian_matrix(op.n, ell, seed))
    Q = orthonormalize_double_gs(Y, tol=ortho_tol)
    for _ in range(q):
        Yt = op.apply_adjoint(Q)
        Qt = orthonormalize_double_gs(Yt, tol=ortho_tol)
        Y = op.apply(Qt)
        Q = orthonormalize_double_gs(Y, tol=ortho_tol)
    est = 0.0 if Q.shape[1] == 0 else None
    return RangeBasis(Q=Q, samples_used=ell, passes=2 * q + 2, est_error=est,
                      spec=spec)


def fast_range_finder(A, ell, seed, kind="srft", ortho_tol=config.GS_DROP_TOL):
    """Structured-sketch range finder for dense in-memory matrices.

    Forms Y = A @ Omega with a subsampled FFT (or its Givens-chain variant)
    in O(m n log n) scalar operations and orthonormalizes.  Real inputs are
    promoted to complex; the basis is complex and the diagnostics record the
    largest imaginary magnitude observed in Y for real inputs.
    """
    A = np.asarray(A)
    if kind not in ("srft", "gsrft"):
        raise ValueError("kind must be 'srft' or 'gsrft'")
    spec = SketchSpec(kind=kind, ell=ell, seed=seed)
    apply_fn = srft_apply if kind == "srft" else gsrft_apply
    Y = apply_fn(A, spec)
    diagnostics = {}
    if not np.iscomplexobj(A):
        diagnostics["max_imag_sample"] = float(np.abs(Y.imag).max())
    Q = orthonormalize_double_gs(Y, tol=ortho_tol)
    est = 0.0 if Q.shape[1] == 0 else None
    return RangeBasis(Q=Q, samples_used=ell, passes=1, est_error=est, spec=spec,
                      diagnostics=diagnostics)
