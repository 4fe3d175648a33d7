import math

import numpy as np
import pytest

from lowrank.bounds import (
    BoundReport,
    SpectrumView,
    det_bound_rhs,
    gauss_deviation,
    gauss_mean_frobenius,
    gauss_mean_spectral,
    id_amplification,
    intro_mean_spectral,
    intro_power_spectral,
    intro_truncated_spectral,
    power_scheme_bound,
    simplified_deviation_spectral,
    srft_error_bound,
    srft_sample_size,
)


def flat_view(value, count, m=100, n=100):
    return SpectrumView(sigma=np.full(count, float(value)), m=m, n=n)


class TestDetBound:
    def test_zero_tail(self):
        rng = np.random.default_rng(1)
        O1 = rng.standard_normal((3, 6))
        O2 = rng.standard_normal((5, 6))
        assert det_bound_rhs(np.zeros(5), O1, O2) == 0.0

    def test_zero_perturbation_block(self):
        rng = np.random.default_rng(2)
        O1 = rng.standard_normal((3, 6))
        tail = np.array([0.5, 0.25, 0.1])
        assert det_bound_rhs(tail, O1, np.zeros((3, 6))) == pytest.approx(0.5)
        assert det_bound_rhs(tail, O1, np.zeros((3, 6)), "frobenius") == pytest.approx(
            np.linalg.norm(tail))

    def test_rank_deficient_rejected(self):
        O1 = np.zeros((2, 5))
        with pytest.raises(ValueError):
            det_bound_rhs(np.ones(3), O1, np.ones((3, 5)))


class TestGaussMeans:
    def test_zero_tail(self):
        assert gauss_mean_frobenius(5, 5, flat_view(1.0, 5)) == 0.0

    def test_single_tail_value(self):
        view = SpectrumView(sigma=np.r_[np.full(20, 2.0), 1.0], m=50, n=50)
        val = gauss_mean_frobenius(20, 10, view)
        assert val == pytest.approx(math.sqrt(1 + 20 / 9), rel=1e-12)
        assert val == pytest.approx(1.795, abs=1e-3)

    def test_spectral_flat_tail(self):
        sigma = np.r_[np.ones(5), np.full(95, 0.1)]
        view = SpectrumView(sigma=sigma, m=100, n=100)
        val = gauss_mean_spectral(5, 5, view)
        expected = (1 + math.sqrt(5 / 4)) * 0.1 + math.e * math.sqrt(10) / 5 * \
            math.sqrt(95) * 0.1
        assert val == pytest.approx(expected, rel=1e-12)
        assert val >= 0.1

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            gauss_mean_frobenius(5, 1, flat_view(1.0, 10))
        with pytest.raises(ValueError):
            gauss_mean_spectral(1, 5, flat_view(1.0, 10))

    def test_intro_form_dominates(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            n = int(rng.integers(20, 120))
            k = int(rng.integers(2, 10))
            p = int(rng.integers(2, 10))
            sigma = np.sort(rng.random(n))[::-1]
            view = SpectrumView(sigma=sigma, m=n, n=n)
            assert intro_mean_spectral(k, p, n, n, view) >= \
                gauss_mean_spectral(k, p, view) * (1 - 1e-12)


class TestDeviationBounds:
    def test_k_equals_p_coefficient(self):
        val, _ = simplified_deviation_spectral(6, 6, flat_view(1.0, 6 + 1, 20, 20))
        # on a spectrum with sigma_{k+1}=1 and a single tail entry the first
        # term carries the 1 + 17 sqrt(2) coefficient
        assert val >= 1 + 17 * math.sqrt(2)
        assert (1 + 17 * math.sqrt(2)) == pytest.approx(25.04, abs=5e-3)

    def test_failure_probability_at_t_e(self):
        _, fail = gauss_deviation(10, 6, flat_view(1.0, 20), t=math.e,
                                  u=math.sqrt(12), norm="spectral")
        assert fail == pytest.approx(6 * math.exp(-6), rel=1e-12)
        _, fail1 = simplified_deviation_spectral(10, 6, flat_view(1.0, 20))
        assert fail1 == pytest.approx(6 * math.exp(-6), rel=1e-12)

    def test_domain(self):
        with pytest.raises(ValueError):
            gauss_deviation(5, 3, flat_view(1.0, 10))

    def test_frobenius_form(self):
        val, fail = gauss_deviation(4, 4, flat_view(1.0, 10), t=2.0, u=2.0,
                                    norm="frobenius")
        assert val > 0 and 0 < fail < 1


class TestPowerSchemeBound:
    def test_q0_matches_mean_spectral(self):
        sigma = np.sort(np.random.default_rng(4).random(60))[::-1]
        view = SpectrumView(sigma=sigma, m=60, n=60)
        assert power_scheme_bound(6, 4, 0, view) == pytest.approx(
            gauss_mean_spectral(6, 4, view), rel=1e-12)

    def test_flat_tail_limit(self):
        m = n = 100
        sigma = np.r_[np.ones(10), np.full(90, 0.5)]
        view = SpectrumView(sigma=sigma, m=m, n=n)
        k, p = 10, 5
        q_big = math.ceil(math.log(min(m, n)))
        assert power_scheme_bound(k, p, q_big, view) <= 3 * 0.5
        vals = [power_scheme_bound(k, p, q, view) for q in range(6)]
        assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


class TestSrftBounds:
    def test_sample_size_formula(self):
        k, n = 10, 1024
        expected = math.ceil(
            4 * (math.sqrt(k) + math.sqrt(8 * math.log(k * n))) ** 2 * math.log(k))
        assert srft_sample_size(k, n) == expected

    def test_sample_size_exceeding_dimension_errors(self):
        assert srft_sample_size(8, 256) > 256
        with pytest.raises(ValueError):
            srft_sample_size(8, 256, require_feasible=True)

    def test_monotone(self):
        assert srft_sample_size(10, 4096) >= srft_sample_size(10, 2048)
        assert srft_sample_size(12, 65536) >= srft_sample_size(10, 65536)

    def test_domain(self):
        with pytest.raises(ValueError):
            srft_sample_size(1, 100)

    def test_error_bound_full_sampling_factor(self):
        view = flat_view(1.0, 10, 64, 64)
        rep = srft_error_bound(64, 64, 5, view, norm="spectral")
        assert isinstance(rep, BoundReport)
        assert rep.value == pytest.approx(math.sqrt(8.0), rel=1e-12)
        assert rep.failure_prob == pytest.approx(1 / 5)
        assert rep.params["failure_prob_order_only"]

    def test_zero_tail_frobenius(self):
        view = flat_view(1.0, 5, 64, 64)
        rep = srft_error_bound(64, 32, 5, view, norm="frobenius")
        assert rep.value == 0.0

    def test_guarantee_flag(self):
        view = flat_view(1.0, 10, 100, 100)
        rep = srft_error_bound(100, 8, 4, view)
        assert rep.params["guaranteed"] is False


class TestIdAmplification:
    def test_k_zero(self):
        assert id_amplification(0, 10) == 2.0

    def test_known_value(self):
        assert id_amplification(8, 50) == pytest.approx(1 + math.sqrt(1345), rel=1e-12)
        assert id_amplification(8, 50) == pytest.approx(37.67, abs=5e-3)

    def test_monotone_in_n(self):
        vals = [id_amplification(6, n) for n in range(12, 60)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))


class TestIntroBounds:
    def test_power_and_truncated_forms(self):
        view = flat_view(0.5, 30, 80, 80)
        base = intro_power_spectral(10, 1, 80, 80, view)
        assert intro_truncated_spectral(10, 1, 80, 80, view) == pytest.approx(
            base + 0.5, rel=1e-12)

    def test_spectrum_view_validation(self):
        with pytest.raises(ValueError):
            SpectrumView(sigma=np.array([1.0, 2.0]), m=5, n=5)
        with pytest.raises(ValueError):
            SpectrumView(sigma=np.array([1.0, -0.5]), m=5, n=5)
