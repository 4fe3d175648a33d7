"""Randomized low-rank matrix approximation toolkit.

Two-stage pipeline: a randomized range finder compresses the input to a
small orthonormal basis (Gaussian, structured-FFT, adaptive, or powered
sketches), and deterministic postprocessing converts the compressed matrix
into a partial SVD, Hermitian eigendecomposition, interpolative
decomposition, QR, or Nystrom factorization, including one-pass variants
that never revisit the input.  Closed-form bound evaluators and brute-force
oracles verify every randomized result.
"""

from .core import (
    ConvergenceError,
    DenseOperator,
    MatVecOperator,
    NotPSDError,
    cholesky,
    householder_qr,
    least_squares,
    orthonormalize_double_gs,
    pivoted_qr,
    small_eig_hermitian,
    small_svd,
    spectral_norm_estimate,
)
from .factor import (
    InterpolativeDecomp,
    NystromFactors,
    PartialEig,
    PartialQR,
    PartialSVD,
    SampleBundle,
    column_id,
    convert_cb,
    direct_eig_hermitian,
    direct_svd,
    eig_nystrom,
    eig_one_pass,
    eig_via_row_extraction,
    row_id,
    sample_bundle,
    sample_bundle_two_sided,
    svd_one_pass_general,
    svd_via_row_extraction,
    truncate_rank,
)
from .rangefinder import (
    RangeBasis,
    adaptive_range_finder,
    adaptive_range_finder_blocked,
    fast_range_finder,
    posterior_error_estimate,
    power_iteration_range,
    randomized_range_finder,
    subspace_iteration_range,
)
from .sketch import (
    SketchSpec,
    dft,
    gaussian_matrix,
    gsrft_apply,
    gsrft_operator,
    haar_orthonormal,
    srft_apply,
    srft_operator,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
