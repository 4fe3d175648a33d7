"""Closed-form evaluators for the theoretical error bounds.

Each evaluator is a deterministic, side-effect-free function of the spectrum
and the sketch parameters, returning the bound value (and, for the
probabilistic statements, the attached failure probability).  Nothing here is
asserted per trial; the guarantees are distributional, so the test suite
checks them as frequency statements against the Monte Carlo oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

_E = math.e


@dataclass
class SpectrumView:
    """A full or partial singular-value profile of an m-by-n matrix.

    Values must be nonnegative and weakly decreasing; indices past the end
    of a partial list are treated as zero.
    """

    sigma: np.ndarray
    m: int
    n: int

    def __post_init__(self):
        s = np.asarray(self.sigma, dtype=np.float64)
        if s.ndim != 1:
            raise ValueError("sigma must be a vector")
        if np.any(s < 0) or np.any(np.diff(s) > 1e-12 * (s[0] if s.size else 1.0)):
            raise ValueError("sigma must be nonnegative and weakly decreasing")
        self.sigma = s

    def value(self, j):
        """sigma_j with 1-based indexing, zero past the stored profile."""
        if j < 1:
            raise ValueError("singular value indices are 1-based")
        return float(self.sigma[j - 1]) if j <= len(self.sigma) else 0.0

    def tail_sq_sum(self, k):
        """sum_{j>k} sigma_j^2."""
        return float(np.sum(self.sigma[k:] ** 2))

    def tail_root(self, k):
        return math.sqrt(self.tail_sq_sum(k))

    def tail_power_root(self, k, power):
        """(sum_{j>k} sigma_j^(2*power))^(1/2), used by the power scheme."""
        return float(np.sqrt(np.sum(self.sigma[k:] ** (2 * power))))


@dataclass
class BoundReport:
    """One evaluated bound: name, value, parameters, failure probability."""

    name: str
    value: float
    params: dict = field(default_factory=dict)
    failure_prob: float | None = None


def _as_view(sigma, m=None, n=None):
    if isinstance(sigma, SpectrumView):
        return sigma
    s = np.asarray(sigma, dtype=np.float64)
    return SpectrumView(sigma=s, m=m or len(s), n=n or len(s))


def det_bound_rhs(sigma_tail, Omega1, Omega2, norm="spectral"):
    """Right side of the deterministic bound: sqrt(||S2||^2 + ||S2 O2 O1+||^2).

    sigma_tail holds the singular values past the split index; Omega1 and
    Omega2 are the corresponding blocks of the test matrix in the right
    singular basis.  Omega1 must have full numerical row rank (the Gaussian
    draw has it almost surely; rank-deficient draws are a caller-side skip).
    """
    s2 = np.asarray(sigma_tail, dtype=np.float64)
    Omega1 = np.asarray(Omega1)
    Omega2 = np.asarray(Omega2)
    sv1 = np.linalg.svd(Omega1, compute_uv=False)
    if sv1.size == 0 or sv1.min() <= 1e-12 * sv1.max():
        raise ValueError("Omega1 is numerically rank-deficient; skip this draw")
    cross = (s2[:, None] * Omega2) @ np.linalg.pinv(Omega1)
    if norm == "spectral":
        head = s2[0] if s2.size else 0.0
        tail = np.linalg.norm(cross, 2) if cross.size else 0.0
    elif norm == "frobenius":
        head = math.sqrt(float(np.sum(s2**2)))
        tail = np.linalg.norm(cross)
    else:
        raise ValueError("norm must be 'spectral' or 'frobenius'")
    return math.sqrt(head**2 + tail**2)


def gauss_mean_frobenius(k, p, sigma, m=None, n=None):
    """Mean Frobenius error bound (1 + k/(p-1))^(1/2) * tail root; needs p >= 2."""
    if p < 2:
        raise ValueError("oversampling p must be >= 2")
    view = _as_view(sigma, m, n)
    return math.sqrt(1.0 + k / (p - 1.0)) * view.tail_root(k)


def gauss_mean_spectral(k, p, sigma, m=None, n=None):
    """Mean spectral error bound; needs k >= 2 and p >= 2.

    (1 + sqrt(k/(p-1))) sigma_{k+1} + (e sqrt(k+p)/p) * tail root.
    """
    if k < 2:
        raise ValueError("target rank k must be >= 2")
    if p < 2:
        raise ValueError("oversampling p must be >= 2")
    view = _as_view(sigma, m, n)
    return (1.0 + math.sqrt(k / (p - 1.0))) * view.value(k + 1) + (
        _E * math.sqrt(k + p) / p
    ) * view.tail_root(k)


def gauss_deviation(k, p, sigma, t=math.e, u=None, norm="spectral", m=None, n=None):
    """Deviation bound value and failure probability; needs p >= 4, t, u >= 1.

    Spectral form:
      [(1 + t sqrt(12k/p)) sigma_{k+1} + t e sqrt(k+p)/(p+1) tailroot]
      + u t e sqrt(k+p)/(p+1) sigma_{k+1},    failure <= 5 t^-p + e^(-u^2/2).
    Frobenius form:
      (1 + t sqrt(12k/p)) tailroot + u t e sqrt(k+p)/(p+1) sigma_{k+1},
      failure <= 5 t^-p + 2 e^(-u^2/2).
    """
    if p < 4:
        raise ValueError("deviation bounds require p >= 4")
    if u is None:
        u = math.sqrt(2.0 * p)
    if t < 1 or u < 1:
        raise ValueError("t and u must be >= 1")
    view = _as_view(sigma, m, n)
    s_next = view.value(k + 1)
    tail = view.tail_root(k)
    dev = _E * math.sqrt(k + p) / (p + 1.0)
    if norm == "spectral":
        value = (1.0 + t * math.sqrt(12.0 * k / p)) * s_next + t * dev * tail \
            + u * t * dev * s_next
        fail = 5.0 * t ** (-p) + math.exp(-(u**2) / 2.0)
    elif norm == "frobenius":
        value = (1.0 + t * math.sqrt(12.0 * k / p)) * tail + u * t * dev * s_next
        fail = 5.0 * t ** (-p) + 2.0 * math.exp(-(u**2) / 2.0)
    else:
        raise ValueError("norm must be 'spectral' or 'frobenius'")
    return value, fail


def simplified_deviation_spectral(k, p, sigma, form=1, m=None, n=None):
    """The two simplified spectral deviation forms; needs p >= 4.

    form=1: (1 + 17 sqrt(1 + k/p)) sigma_{k+1} + 8 sqrt(k+p)/(p+1) tailroot,
            failure <= 6 e^-p.
    form=2: (1 + 8 sqrt((k+p) p log p)) sigma_{k+1} + 3 sqrt(k+p) tailroot,
            failure <= 6 p^-p.
    """
    if p < 4:
        raise ValueError("simplified deviation bounds require p >= 4")
    view = _as_view(sigma, m, n)
    s_next = view.value(k + 1)
    tail = view.tail_root(k)
    if form == 1:
        value = (1.0 + 17.0 * math.sqrt(1.0 + k / p)) * s_next \
            + 8.0 * math.sqrt(k + p) / (p + 1.0) * tail
        fail = 6.0 * math.exp(-p)
    elif form == 2:
        value = (1.0 + 8.0 * math.sqrt((k + p) * p * math.log(p))) * s_next \
            + 3.0 * math.sqrt(k + p) * tail
        fail = 6.0 * p ** (-p)
    else:
        raise ValueError("form must be 1 or 2")
    return value, fail


def power_scheme_bound(k, p, q, sigma, m=None, n=None):
    """Mean spectral error bound for the power scheme at exponent q.

    [(1 + sqrt(k/(p-1))) sigma_{k+1}^(2q+1)
     + (e sqrt(k+p)/p) (sum_{j>k} sigma_j^(2(2q+1)))^(1/2)]^(1/(2q+1)).
    Reduces to the plain mean spectral bound at q = 0.
    """
    if k < 2:
        raise ValueError("target rank k must be >= 2")
    if p < 2:
        raise ValueError("oversampling p must be >= 2")
    if q < 0:
        raise ValueError("q must be nonnegative")
    view = _as_view(sigma, m, n)
    d = 2 * q + 1
    inner = (1.0 + math.sqrt(k / (p - 1.0))) * view.value(k + 1) ** d + (
        _E * math.sqrt(k + p) / p
    ) * view.tail_power_root(k, d)
    return inner ** (1.0 / d)


def srft_sample_size(k, n, require_feasible=False):
    """Smallest structured-sketch size with a geometry guarantee.

    ceil(4 (sqrt(k) + sqrt(8 log(k n)))^2 log(k)), natural logarithm;
    k >= 2 is required for the logarithm to be positive.  The guarantee
    hypothesis also needs the result to fit the dimension (ell <= n); pass
    require_feasible=True to turn a too-large requirement into an error
    instead of a plain value.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    if n < k:
        raise ValueError("n must be at least k")
    ell = 4.0 * (math.sqrt(k) + math.sqrt(8.0 * math.log(k * n))) ** 2 * math.log(k)
    ell_min = int(math.ceil(ell))
    if require_feasible and ell_min > n:
        raise ValueError(
            f"required sample count {ell_min} exceeds the dimension {n}; "
            "the guarantee does not apply at this size"
        )
    return ell_min


def srft_error_bound(n, ell, k, sigma, norm="spectral", m=None):
    """Structured-sketch error bound sqrt(1 + 7n/ell) times the baseline.

    Spectral: factor times sigma_{k+1}; Frobenius: factor times the tail
    root.  The failure probability is order 1/k with an unspecified
    constant, reported as k^-1 and flagged order-only.  If ell is below the
    guaranteed sample size, the report carries a warning flag instead of a
    guarantee.
    """
    if not 1 <= ell <= n:
        raise ValueError("ell must satisfy 1 <= ell <= n")
    view = _as_view(sigma, m, n)
    factor = math.sqrt(1.0 + 7.0 * n / ell)
    if norm == "spectral":
        value = factor * view.value(k + 1)
    elif norm == "frobenius":
        value = factor * view.tail_root(k)
    else:
        raise ValueError("norm must be 'spectral' or 'frobenius'")
    params = {"n": n, "ell": ell, "k": k, "failure_prob_order_only": True}
    try:
        ell_min = srft_sample_size(k, n)
        params["ell_min"] = ell_min
        params["guaranteed"] = ell >= ell_min
    except ValueError:
        params["guaranteed"] = False
    return BoundReport(name=f"srft_{norm}", value=value, params=params,
                       failure_prob=1.0 / k)


def id_amplification(k, n):
    """Row-extraction error amplification factor 1 + sqrt(1 + 4k(n-k))."""
    if k < 0 or n < k:
        raise ValueError("need 0 <= k <= n")
    return 1.0 + math.sqrt(1.0 + 4.0 * k * (n - k))


def intro_mean_spectral(k, p, m, n, sigma):
    """Simplified headline mean bound [1 + 4 sqrt(k+p)/(p-1) sqrt(min(m,n))] sigma_{k+1}.

    Always at least as large as the detailed mean spectral bound on the same
    inputs.
    """
    if p < 2:
        raise ValueError("oversampling p must be >= 2")
    view = _as_view(sigma, m, n)
    return (1.0 + 4.0 * math.sqrt(k + p) / (p - 1.0) * math.sqrt(min(m, n))) \
        * view.value(k + 1)


def intro_power_spectral(k, q, m, n, sigma):
    """Headline power-scheme bound at sample size 2k.

    [1 + 4 sqrt(2 min(m,n)/(k-1))]^(1/(2q+1)) sigma_{k+1}; add sigma_{k+1}
    for the truncated variant (see intro_truncated_spectral).
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    view = _as_view(sigma, m, n)
    return (1.0 + 4.0 * math.sqrt(2.0 * min(m, n) / (k - 1.0))) ** (
        1.0 / (2 * q + 1)
    ) * view.value(k + 1)


def intro_truncated_spectral(k, q, m, n, sigma):
    """Headline truncated-rank bound: one extra additive sigma_{k+1} term."""
    view = _as_view(sigma, m, n)
    return view.value(k + 1) + intro_power_spectral(k, q, m, n, view)
