"""Package-wide numerical defaults.

These are deliberate choices, not derived constants; every one of them is
overridable through keyword arguments on the functions that consume it.
"""

# Numerical-rank tolerance inside Gram-Schmidt orthonormalization: a column
# whose residual after projection falls below this times ||Y||_F is dropped.
GS_DROP_TOL = 1e-10

# Triangular solves treat diagonal entries below this times |r_11| as zero.
TRIANGULAR_TRUNC_TOL = 1e-12

# Cholesky pivot tolerance relative to ||B||: pivots in [-tol*||B||, 0] are
# clamped to zero, anything lower is an error.
PSD_TOL = 1e-12

# Fixed-rank sketches default to k + DEFAULT_OVERSAMPLE samples.
DEFAULT_OVERSAMPLE = 5

# Posterior error estimator: probe count and inflation factor.
DEFAULT_PROBES = 10
DEFAULT_ALPHA = 10.0

# Blocked adaptive range finder batch size.
ADAPTIVE_BLOCK = 8

# One-pass SVD solves a dense system over vec(B); refuse above this size.
ONE_PASS_DIM_CAP = 250_000

# Condition threshold above which one-pass solvers attach a warning.
ONE_PASS_COND_WARN = 1e12
