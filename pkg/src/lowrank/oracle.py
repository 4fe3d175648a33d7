"""Independent brute-force reference computations for verification.

Everything here checks the randomized pipeline from the outside: exact
residuals by dense arithmetic, optimal errors from the full SVD, synthetic
matrices with prescribed spectra, the smooth-kernel integral-operator test
matrix, Monte Carlo estimators of Gaussian-matrix statistics, and a cyclic
Jacobi eigensolver that cross-checks the SVD kernel without sharing its code
path.  Nothing in this module calls into the rangefinder or factor modules.

Monte Carlo reductions use exact compensated summation, so they are
order-independent and trials can be distributed by derived per-trial seeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import small_svd
from .sketch import rng_for


def exact_projection_error(A, Q, norm="spectral"):
    """||(I - QQ*)A|| by explicit residual formation.

    Spectral norm via the dense SVD of the residual; Frobenius by entry
    sums.  A zero-column Q gives the norm of A itself.
    """
    A = np.asarray(A)
    R = A - Q @ (Q.conj().T @ A) if Q.shape[1] else A
    if norm == "spectral":
        return float(small_svd(R).sigma[0]) if min(R.shape) else 0.0
    if norm == "frobenius":
        return float(np.linalg.norm(R))
    raise ValueError("norm must be 'spectral' or 'frobenius'")


def optimal_error(A, j, norm="spectral"):
    """Best achievable rank-j approximation error of A.

    Spectral: sigma_{j+1}.  Frobenius: root of the tail sum past j.
    """
    A = np.asarray(A)
    s = small_svd(A).sigma
    if j >= len(s):
        return 0.0
    if norm == "spectral":
        return float(s[j])
    if norm == "frobenius":
        return float(np.sqrt(np.sum(s[j:] ** 2)))
    raise ValueError("norm must be 'spectral' or 'frobenius'")


# ---------------------------------------------------------------------------
# Synthetic test matrices


@dataclass
class SyntheticSpec:
    """Prescription for a random matrix with known singular values.

    kind in {"exact_rank", "power_decay", "exp_decay", "flat", "explicit"},
    with `param` carrying the rank k / exponent alpha / ratio rho /
    (value, count) pair / explicit value list respectively.
    """

    m: int
    n: int
    kind: str
    param: object
    seed: int = 0


def spectrum_values(spec):
    """Ground-truth singular values for a SyntheticSpec, length min(m, n)."""
    r = min(spec.m, spec.n)
    j = np.arange(1, r + 1, dtype=np.float64)
    if spec.kind == "exact_rank":
        k = int(spec.param)
        if not 0 <= k <= r:
            raise ValueError("exact_rank parameter out of range")
        s = np.where(j <= k, 1.0, 0.0)
    elif spec.kind == "power_decay":
        s = j ** (-float(spec.param))
    elif spec.kind == "exp_decay":
        rho = float(spec.param)
        if not 0 < rho < 1:
            raise ValueError("exp_decay ratio must lie in (0, 1)")
        s = rho**j
    elif spec.kind == "flat":
        value, count = spec.param
        s = np.where(j <= int(count), float(value), 0.0)
    elif spec.kind == "explicit":
        vals = np.asarray(spec.param, dtype=np.float64)
        s = np.zeros(r)
        s[: min(r, len(vals))] = vals[:r]
    else:
        raise ValueError(f"unknown spectrum kind {spec.kind!r}")
    s = np.sort(s)[::-1]
    if np.any(s < 0):
        raise ValueError("singular values must be nonnegative")
    return s


def haar_basis(rows, cols, rng):
    g = rng.standard_normal((rows, cols))
    q, r = np.linalg.qr(g, mode="reduced")
    d = np.diagonal(r)
    return q * np.where(np.abs(d) > 0, np.sign(d), 1.0)


def synthetic_matrix(spec):
    """A = U diag(s) V* with Haar-random factors and exact prescribed s.

    Returns (A, s) where s is the ground-truth spectrum, reproduced by the
    SVD of A to near machine precision.
    """
    s = spectrum_values(spec)
    r = len(s)
    rng = rng_for(spec.seed, 0x73796E74)
    U = haar_basis(spec.m, r, rng)
    V = haar_basis(spec.n, r, rng)
    A = (U * s) @ V.T
    return A, s


def synthetic_psd(n, spec_kind, param, seed=0):
    """Hermitian PSD A = U diag(s) U* with prescribed eigenvalues."""
    spec = SyntheticSpec(m=n, n=n, kind=spec_kind, param=param, seed=seed)
    s = spectrum_values(spec)
    rng = rng_for(seed, 0x70736421)
    U = haar_basis(n, n, rng)
    return (U * s) @ U.T, s


def laplace_bie_matrix(n_nodes):
    """Discretized single-layer logarithmic kernel between two circles.

    Sources sit on the unit circle, targets on the concentric circle of
    radius two, both with n_nodes equispaced points; the integral is
    approximated by the trapezoidal rule (superalgebraically accurate for
    this smooth kernel) and the result is normalized to unit spectral norm.
    Singular values decay geometrically, reaching the double-precision floor
    well before index n_nodes.
    """
    if n_nodes < 4:
        raise ValueError("need at least 4 quadrature nodes")
    t = 2.0 * np.pi * np.arange(n_nodes) / n_nodes
    src = np.column_stack([np.cos(t), np.sin(t)])
    tgt = 2.0 * np.column_stack([np.cos(t), np.sin(t)])
    diff = tgt[:, None, :] - src[None, :, :]
    dist = np.sqrt(np.sum(diff**2, axis=2))
    weight = 2.0 * np.pi / n_nodes
    A = np.log(dist) * weight
    return A / small_svd(A).sigma[0]


# ---------------------------------------------------------------------------
# Monte Carlo estimators of Gaussian-matrix statistics


def monte_carlo_pinv_norms(k, p, trials, seed=0):
    """Empirical mean ||G+||_F^2 and ||G+|| for k x (k+p) standard Gaussians.

    The Frobenius moment requires p >= 2 (it diverges below); both norms are
    read off the reciprocal singular values of each draw.
    """
    if p < 2:
        raise ValueError("p must be >= 2 for the inverse Frobenius moment")
    fro_terms = []
    spec_terms = []
    for t in range(trials):
        g = rng_for(seed, 0x70696E76, t).standard_normal((k, k + p))
        s = small_svd(g).sigma
        fro_terms.append(float(np.sum(1.0 / s**2)))
        spec_terms.append(float(1.0 / s.min()))
    return {
        "mean_fro_sq": math.fsum(fro_terms) / trials,
        "mean_spec": math.fsum(spec_terms) / trials,
        "fro_sq_samples": np.asarray(fro_terms),
        "spec_samples": np.asarray(spec_terms),
    }


def monte_carlo_scaled_gauss(S, T, trials, seed=0):
    """Empirical mean ||S G T||_F^2 and ||S G T|| over standard Gaussians G."""
    S = np.asarray(S, dtype=np.float64)
    T = np.asarray(T, dtype=np.float64)
    fro_terms = []
    spec_terms = []
    for t in range(trials):
        g = rng_for(seed, 0x73677421, t).standard_normal((S.shape[1], T.shape[0]))
        M = S @ g @ T
        fro_terms.append(float(np.sum(M**2)))
        spec_terms.append(float(small_svd(M).sigma[0]))
    return {
        "mean_fro_sq": math.fsum(fro_terms) / trials,
        "mean_spec": math.fsum(spec_terms) / trials,
    }


def principal_angles(Q1, Q2):
    """Canonical angles between the column spans of two orthonormal bases.

    Cosines come from the singular values of Q1* Q2, clamped into [0, pi/2].
    Small angles are refined through the sine route (singular values of the
    projected difference), which avoids the square-root accuracy loss of the
    arccosine near 1.
    """
    Q1 = np.asarray(Q1)
    Q2 = np.asarray(Q2)
    if Q1.shape[1] == 0 or Q2.shape[1] == 0:
        return np.zeros(0)
    c = small_svd(Q1.conj().T @ Q2).sigma
    angles = np.arccos(np.clip(c, -1.0, 1.0))
    S = Q2 - Q1 @ (Q1.conj().T @ Q2)
    sines = np.sort(small_svd(S).sigma) if min(S.shape) else np.zeros(0)
    if len(sines) == len(angles):
        refined = np.arcsin(np.clip(sines, 0.0, 1.0))
        angles = np.where(c > 0.99, refined, angles)
    return np.clip(angles, 0.0, np.pi / 2.0)


# ---------------------------------------------------------------------------
# Cyclic Jacobi eigensolver (independent cross-check for the SVD kernel)


def jacobi_eigenvalues(B, sweeps=60, tol=1e-14):
    """Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.

    Kept deliberately separate from the LAPACK-backed kernels so the SVD
    cross-check has an independent second route.
    """
    A = np.array(B, dtype=np.float64, copy=True)
    if A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    if np.iscomplexobj(B):
        raise ValueError("the Jacobi oracle handles real symmetric input only")
    if not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A).max())):
        raise ValueError("matrix must be symmetric")
    n = A.shape[0]
    scale = max(np.abs(A).max(), 1e-300)
    for _ in range(sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                off = max(off, abs(apq))
                if abs(apq) <= tol * scale:
                    continue
                theta = 0.5 * math.atan2(2.0 * apq, A[p, p] - A[q, q])
                c, s = math.cos(theta), math.sin(theta)
                rot = np.array([[c, -s], [s, c]])
                A[[p, q], :] = rot.T @ A[[p, q], :]
                A[:, [p, q]] = A[:, [p, q]] @ rot
        if off <= tol * scale:
            break
    return np.sort(np.diagonal(A))[::-1]


def jacobi_singular_values(A):
    """Singular values of A from the Jacobi eigenvalues of A^T A."""
    A = np.asarray(A, dtype=np.float64)
    lam = jacobi_eigenvalues(A.T @ A)
    return np.sqrt(np.clip(lam, 0.0, None))
