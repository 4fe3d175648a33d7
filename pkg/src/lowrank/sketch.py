"""Random test matrices and their fast-apply routines.

Three sketch families are provided: dense Gaussian, the subsampled random
Fourier transform (unimodular diagonal, unitary DFT, uniform coordinate
subsampling without replacement), and its Givens-chain variant that wraps
the transform in random rotations and extra random diagonals.

Every draw is a pure function of (dimensions, seed) through a counter-based
Philox generator, so identical arguments give bitwise identical sketches on
any platform.  The FFT kernel is instrumented with a scalar-operation
counter used by the complexity tests and the benchmark command; it has a
radix-2 fast path and falls back to a chirp convolution for arbitrary
lengths, so no dimension restrictions apply.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


# ---------------------------------------------------------------------------
# Seeding

_STREAM_GAUSS = 0x67617573
_STREAM_SRFT = 0x73726674
_STREAM_GSRFT = 0x67737266
_STREAM_ORTHO = 0x6F727468


def rng_for(seed, stream=0, index=0):
    """Counter-based generator for one named draw.

    The Philox key mixes (seed, stream, index) so independent draws never
    share a stream and repeated calls are reproducible across platforms and
    thread counts.
    """
    key = (int(seed) & (2**64 - 1)) | ((int(stream) & (2**32 - 1)) << 64) | (
        (int(index) & (2**32 - 1)) << 96
    )
    return np.random.Generator(np.random.Philox(key=key))


# ---------------------------------------------------------------------------
# Operation counter (merged additively; single counter per process)

_OPS = 0


def reset_op_count():
    global _OPS
    _OPS = 0


def op_count():
    return _OPS


def _count(n):
    global _OPS
    _OPS += int(n)


# ---------------------------------------------------------------------------
# Sketch configuration


@dataclass
class SketchSpec:
    """Configuration of one randomized sketch draw.

    kind is one of {"gaussian", "srft", "gsrft"}; ell is the sample count
    (k + oversampling in fixed-rank use); power_q the power-scheme exponent;
    seed fully determines every random draw.
    """

    kind: str = "gaussian"
    ell: int = 1
    power_q: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("gaussian", "srft", "gsrft"):
            raise ValueError(f"unknown sketch kind {self.kind!r}")
        if self.ell < 1:
            raise ValueError("sample count ell must be >= 1")
        if self.power_q < 0:
            raise ValueError("power exponent must be nonnegative")

    @classmethod
    def fixed_rank(cls, kind, k, p=5, q=0, seed=0):
        return cls(kind=kind, ell=int(k) + int(p), power_q=q, seed=seed)


def gaussian_matrix(n, ell, seed):
    """n-by-ell matrix of i.i.d. standard normals, keyed by seed."""
    if n < 1 or ell < 1:
        raise ValueError("dimensions must be >= 1")
    return rng_for(seed, _STREAM_GAUSS).standard_normal((n, ell))


def haar_orthonormal(n, ell, seed):
    """n-by-ell sample from the uniform distribution on orthonormal frames."""
    g = rng_for(seed, _STREAM_ORTHO).standard_normal((n, ell))
    q, r = np.linalg.qr(g, mode="reduced")
    d = np.diagonal(r)
    ph = np.where(np.abs(d) > 0, np.sign(d), 1.0)
    return q * ph


# ---------------------------------------------------------------------------
# Instrumented FFT: radix-2 plus chirp convolution for general lengths

_BITREV = {}


def _bitrev_indices(n):
    idx = _BITREV.get(n)
    if idx is None:
        bits = n.bit_length() - 1
        idx = np.zeros(n, dtype=np.intp)
        for i in range(n):
            idx[i] = int(format(i, f"0{bits}b")[::-1], 2) if bits else 0
        _BITREV[n] = idx
    return idx


def _fft_pow2(X, inverse=False):
    """Unnormalized radix-2 FFT along the last axis (length a power of two)."""
    n = X.shape[-1]
    rows = int(np.prod(X.shape[:-1])) if X.ndim > 1 else 1
    Y = np.ascontiguousarray(X[..., _bitrev_indices(n)], dtype=np.complex128)
    sign = 2j if inverse else -2j
    m = 2
    while m <= n:
        half = m // 2
        w = np.exp(sign * np.pi * np.arange(half) / m)
        blocks = Y.reshape(Y.shape[:-1] + (n // m, m))
        even = blocks[..., :half]
        odd = blocks[..., half:]
        t = odd * w
        blocks[..., half:] = even - t
        blocks[..., :half] = even + t
        # one complex multiply (6 flops) and two complex adds (4 flops)
        _count(10 * rows * (n // 2))
        m *= 2
    return Y


def _next_pow2(n):
    return 1 << max(n - 1, 0).bit_length() if n > 1 else 1


def _fft_bluestein(X, inverse=False):
    """Arbitrary-length DFT along the last axis via chirp convolution."""
    n = X.shape[-1]
    rows = int(np.prod(X.shape[:-1])) if X.ndim > 1 else 1
    sign = 1.0 if inverse else -1.0
    idx = np.arange(n, dtype=np.int64)
    half_sq = (idx * idx) % (2 * n)  # e^{i pi t^2 / n} has period 2n in t^2
    chirp = np.exp(sign * 1j * np.pi * half_sq / n)
    L = _next_pow2(2 * n - 1)
    a = np.zeros(X.shape[:-1] + (L,), dtype=np.complex128)
    a[..., :n] = X * chirp
    _count(6 * rows * n)
    b = np.zeros(L, dtype=np.complex128)
    b[:n] = np.conj(chirp)
    b[L - n + 1:] = np.conj(chirp[1:][::-1])
    fa = _fft_pow2(a)
    fb = _fft_pow2(b.reshape(1, L))[0]
    conv = _fft_pow2(fa * fb, inverse=True) / L
    _count(6 * rows * L + 2 * rows * L)
    out = conv[..., :n] * chirp
    _count(6 * rows * n)
    return out


def dft(v, axis=-1):
    """Unitary discrete Fourier transform along `axis` for any length.

    Entries follow f_pq = n^{-1/2} exp(-2*pi*i*(p-1)(q-1)/n); power-of-two
    lengths take the radix-2 path and everything else the chirp path, so the
    cost is O(n log n) scalar operations per transformed vector.
    """
    v = np.asarray(v)
    if v.ndim == 0:
        raise ValueError("dft expects a vector or matrix")
    X = np.moveaxis(v, axis, -1).astype(np.complex128)
    n = X.shape[-1]
    if n == 1:
        out = X.copy()
    elif n & (n - 1) == 0:
        out = _fft_pow2(X)
    else:
        out = _fft_bluestein(X)
    out = out / np.sqrt(n)
    rows = int(np.prod(X.shape[:-1])) if X.ndim > 1 else 1
    _count(2 * rows * n)
    return np.moveaxis(out, -1, axis)


# ---------------------------------------------------------------------------
# SRFT and GSRFT operators


@dataclass
class SrftOperator:
    """Materialized SRFT draw: scale * D F R with unimodular diagonal d."""

    n: int
    ell: int
    d: np.ndarray
    picks: np.ndarray
    scale: float

    def to_dense(self):
        return srft_apply(np.eye(self.n), self)


@dataclass
class GsrftOperator:
    """Givens-chain SRFT draw.

    Applied to a row vector x as
    x D'' Theta' D' Theta D F R, where each Theta is a random permutation
    followed by the ascending chain of plane rotations G(i, i+1; theta_i).
    """

    n: int
    ell: int
    d_outer: np.ndarray
    perm_outer: np.ndarray
    thetas_outer: np.ndarray
    d_mid: np.ndarray
    perm_inner: np.ndarray
    thetas_inner: np.ndarray
    d_inner: np.ndarray
    picks: np.ndarray
    scale: float

    def to_dense(self):
        return gsrft_apply(np.eye(self.n), self)


def _unimodular(rng, n):
    return np.exp(2j * np.pi * rng.random(n))


def srft_operator(n, ell, seed):
    if ell > n:
        raise ValueError("sample count exceeds dimension")
    rng = rng_for(seed, _STREAM_SRFT)
    d = _unimodular(rng, n)
    picks = rng.permutation(n)[:ell]
    return SrftOperator(n=n, ell=ell, d=d, picks=picks, scale=float(np.sqrt(n / ell)))


def gsrft_operator(n, ell, seed):
    if ell > n:
        raise ValueError("sample count exceeds dimension")
    rng = rng_for(seed, _STREAM_GSRFT)
    d_outer = _unimodular(rng, n)
    perm_outer = rng.permutation(n)
    thetas_outer = rng.uniform(0.0, 2.0 * np.pi, max(n - 1, 0))
    d_mid = _unimodular(rng, n)
    perm_inner = rng.permutation(n)
    thetas_inner = rng.uniform(0.0, 2.0 * np.pi, max(n - 1, 0))
    d_inner = _unimodular(rng, n)
    picks = rng.permutation(n)[:ell]
    return GsrftOperator(
        n=n, ell=ell,
        d_outer=d_outer, perm_outer=perm_outer, thetas_outer=thetas_outer,
        d_mid=d_mid, perm_inner=perm_inner, thetas_inner=thetas_inner,
        d_inner=d_inner, picks=picks, scale=float(np.sqrt(n / ell)),
    )


def _apply_givens_chain(X, perm, thetas):
    """Right-multiply row blocks by Pi G(1,2;t_1) ... G(n-1,n;t_{n-1})."""
    Y = X[:, perm].astype(np.complex128, copy=True)
    c = np.cos(thetas)
    s = np.sin(thetas)
    rows = Y.shape[0]
    for i in range(len(thetas)):
        a = Y[:, i].copy()
        b = Y[:, i + 1]
        Y[:, i] = c[i] * a - s[i] * b
        Y[:, i + 1] = s[i] * a + c[i] * b
    _count(12 * rows * max(len(thetas), 0))
    return Y


def _resolve(spec_or_op, n, op_type, builder):
    if isinstance(spec_or_op, op_type):
        op = spec_or_op
    elif isinstance(spec_or_op, SketchSpec):
        op = builder(n, spec_or_op.ell, spec_or_op.seed)
    else:
        raise TypeError("expected a SketchSpec or a materialized operator")
    if op.n != n:
        raise ValueError("operator dimension does not match matrix columns")
    return op


def srft_apply(A, spec_or_op):
    """Y = A @ Omega for an SRFT Omega, computed row-by-row with the FFT.

    The result is complex and agrees with the explicit dense product to
    roundoff; cost is O(m n log n) scalar operations.
    """
    A = np.asarray(A)
    op = _resolve(spec_or_op, A.shape[1], SrftOperator, srft_operator)
    rows = A.shape[0]
    B = A * op.d[None, :]
    _count(6 * rows * op.n)
    C = dft(B, axis=1)
    Y = C[:, op.picks] * op.scale
    _count(2 * rows * op.ell)
    return Y


def gsrft_apply(A, spec_or_op):
    """Y = A @ Omega for a Givens-chain SRFT Omega (same contract as srft_apply)."""
    A = np.asarray(A)
    op = _resolve(spec_or_op, A.shape[1], GsrftOperator, gsrft_operator)
    rows = A.shape[0]
    Y = A * op.d_outer[None, :]
    Y = _apply_givens_chain(Y, op.perm_outer, op.thetas_outer)
    Y = Y * op.d_mid[None, :]
    Y = _apply_givens_chain(Y, op.perm_inner, op.thetas_inner)
    Y = Y * op.d_inner[None, :]
    _count(3 * 6 * rows * op.n)
    C = dft(Y, axis=1)
    out = C[:, op.picks] * op.scale
    _count(2 * rows * op.ell)
    return out


def sketch_apply(A, spec):
    """Dispatch A @ Omega for the sketch family named in `spec`."""
    A = np.asarray(A)
    n = A.shape[1]
    if spec.kind == "gaussian":
        return A @ gaussian_matrix(n, spec.ell, spec.seed)
    if spec.kind == "srft":
        return srft_apply(A, spec)
    return gsrft_apply(A, spec)


def dense_sketch_matrix(n, spec):
    """Materialize the test matrix Omega itself (reference path for oracles)."""
    if spec.kind == "gaussian":
        return gaussian_matrix(n, spec.ell, spec.seed)
    if spec.kind == "srft":
        return srft_operator(n, spec.ell, spec.seed).to_dense()
    return gsrft_operator(n, spec.ell, spec.seed).to_dense()
