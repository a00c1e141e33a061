import numpy as np
import pytest

from oracles import R_naive, lambda_naive, r_naive
from panelcp import (
    CorrelationStructure,
    DegenerateDataError,
    KernelSpec,
    ParameterError,
    build_lambda,
    compute_residuals,
    cumulative_autocorrelation,
    empirical_autocorrelation,
    estimate_covariance_pipeline,
    kernel_value,
    shifted_cumulative_correlation,
    sigma2_hat,
)
from panelcp.covariance import EstimationError, bartlett, fit_covariance, flat_kernel, parzen, psd_repair
from panelcp.datagen import ScenarioConfig, generate_panel

PARZEN = KernelSpec("parzen", 2.0)


class TestKernels:
    def test_parzen_values(self):
        assert kernel_value(PARZEN, 0.0) == 1.0
        assert kernel_value(PARZEN, 1.0) == 0.0
        assert kernel_value(PARZEN, 1.5) == 0.0

    def test_parzen_half_from_both_branches(self):
        inner = 1 - 6 * 0.5**2 + 6 * 0.5**3
        outer = 2 * (1 - 0.5) ** 3
        assert inner == outer == 0.25
        assert kernel_value(PARZEN, 0.5) == 0.25

    def test_parzen_continuous(self):
        eps = 1e-9
        assert abs(parzen(0.5 - eps) - parzen(0.5 + eps)) < 1e-8
        assert abs(parzen(1 - eps)) < 1e-8

    def test_bartlett(self):
        assert kernel_value(KernelSpec("bartlett"), 0.5) == 0.5
        assert kernel_value(KernelSpec("bartlett"), -2.0) == 0.0

    @pytest.mark.parametrize("fn", [parzen, bartlett])
    def test_even_and_bounded(self, fn):
        x = np.linspace(-3, 3, 1201)
        np.testing.assert_array_equal(fn(x), fn(-x))
        assert np.all(np.abs(fn(x)) <= 1)
        assert fn(0.0) == 1.0

    def test_custom_kernel_checked(self):
        with pytest.raises(ParameterError):
            KernelSpec("custom", 2.0, func=lambda x: np.exp(-np.asarray(x)))
        with pytest.raises(ParameterError):
            KernelSpec("custom", 2.0, func=lambda x: 2 * np.ones_like(x))
        KernelSpec("custom", 2.0, func=lambda x: np.exp(-np.asarray(x) ** 2))

    @pytest.mark.parametrize("h", [0.0, -1.0, np.nan])
    def test_bad_bandwidth(self, h):
        with pytest.raises(ParameterError):
            KernelSpec("parzen", h)

    def test_unknown_kind(self):
        with pytest.raises(ParameterError):
            KernelSpec("epanechnikov")


class TestMoments:
    def test_sigma2(self):
        assert sigma2_hat(np.array([[1.0, -1.0], [-1.0, 1.0]])) == 1.0
        assert sigma2_hat(np.array([[-1.0, 1.0, 0.0]])) == pytest.approx(2 / 3, abs=1e-15)

    def test_sigma2_scales_quadratically(self, rng):
        e = rng.normal(size=(4, 6))
        assert sigma2_hat(3 * e) == pytest.approx(9 * sigma2_hat(e), rel=1e-13)

    def test_sigma2_degenerate(self):
        with pytest.raises(DegenerateDataError):
            sigma2_hat(np.zeros((3, 4)))

    def test_rho_hand(self):
        rho = empirical_autocorrelation(np.array([[-1.0, 1.0]]), 1.0)
        np.testing.assert_allclose(rho, [1.0, -0.5])

    def test_rho_zero_is_exactly_one(self, rng):
        for _ in range(200):
            e = rng.normal(scale=rng.uniform(1e-3, 1e3), size=(int(rng.integers(1, 30)), int(rng.integers(2, 26))))
            assert empirical_autocorrelation(e, sigma2_hat(e))[0] == 1.0

    def test_rho_nt_divisor(self, rng):
        e = rng.normal(size=(3, 5))
        s2 = sigma2_hat(e)
        rho = empirical_autocorrelation(e, s2)
        for t in range(5):
            direct = sum(e[i, s] * e[i, s + t] for i in range(3) for s in range(5 - t)) / (s2 * 15)
            assert rho[t] == pytest.approx(np.clip(direct, -1, 1), abs=1e-13)

    def test_rho_clamped(self):
        rho = empirical_autocorrelation(np.array([[1.0, 1.0, 1.0]]), 0.1)
        assert np.all(np.abs(rho) <= 1)

    def test_rho_rejects_zero_variance(self):
        with pytest.raises(DegenerateDataError):
            empirical_autocorrelation(np.ones((2, 3)), 0.0)

    def test_iid_residual_autocorrelations(self):
        data = generate_panel(ScenarioConfig(2000, 10, 10, seed=11))
        res = compute_residuals(data, 10)
        rho = empirical_autocorrelation(res, sigma2_hat(res))
        # demeaning a length-T white-noise segment gives E rho_t = -(T-t) / (T (T-1))
        t = np.arange(1, 10)
        np.testing.assert_allclose(rho[1:], -(10 - t) / 90, atol=0.02)


class TestCumulativeSums:
    def test_white_noise(self):
        rho = np.r_[1.0, np.zeros(7)]
        for spec in (None, PARZEN, KernelSpec("bartlett", 3.0), flat_kernel()):
            np.testing.assert_array_equal(cumulative_autocorrelation(rho, spec), np.arange(1, 9))
            np.testing.assert_array_equal(shifted_cumulative_correlation(rho, spec), 0.0)

    def test_ar1_flat_kernel(self):
        rho = 0.3 ** np.arange(4)
        assert cumulative_autocorrelation(rho, flat_kernel())[1] == pytest.approx(2.6)

    def test_parzen_h2(self):
        rho = np.array([1.0, 0.4, 0.2, 0.1])
        r = cumulative_autocorrelation(rho, PARZEN)
        assert r[0] == 1.0
        assert r[1] == pytest.approx(2 + 0.5 * 0.4)
        R = shifted_cumulative_correlation(rho, PARZEN)
        assert R[0, 1] == pytest.approx(0.25 * 0.4)

    def test_single_lag_flat(self):
        rho = np.array([1.0, 0.35, 0.0, 0.0, 0.0])
        R = shifted_cumulative_correlation(rho, flat_kernel())
        for t in range(1, 5):
            assert R[t - 1, t] == pytest.approx(0.35)

    @pytest.mark.parametrize("spec", [PARZEN, KernelSpec("parzen", 4.5), KernelSpec("bartlett", 3.0)])
    def test_against_naive(self, rng, spec):
        rho = np.r_[1.0, rng.uniform(-0.5, 0.5, size=9)]
        k = lambda x: float(spec(x))  # noqa: E731
        h = spec.bandwidth
        np.testing.assert_allclose(cumulative_autocorrelation(rho, spec), r_naive(rho, k, h), atol=1e-12)
        R = shifted_cumulative_correlation(rho, spec)
        for t in range(1, 10):
            for v in range(t + 1, 11):
                assert R[t - 1, v - 1] == pytest.approx(R_naive(rho, k, h, t, v), abs=1e-12)
        assert np.all(np.tril(R) == 0)


class TestLambda:
    @pytest.mark.parametrize("T", [2, 3, 10, 25])
    def test_iid_is_min(self, T):
        lam = build_lambda(CorrelationStructure.iid(T))
        idx = np.arange(1, T + 1)
        np.testing.assert_array_equal(lam.matrix, np.minimum.outer(idx, idx))

    def test_t2_iid(self):
        np.testing.assert_array_equal(build_lambda(CorrelationStructure.iid(2)).matrix, [[1, 1], [1, 2]])

    def test_ar1_flat_t2(self):
        s = CorrelationStructure.from_rho(0.3 ** np.arange(2), flat_kernel())
        np.testing.assert_allclose(build_lambda(s).matrix, [[1.0, 1.3], [1.3, 2.6]])

    def test_matches_covariance_of_partial_sums(self, rng):
        # Lambda_tv = Cov(S_t, S_v) = sum_{s<=t, u<=v} g(|u-s|)
        rho = np.r_[1.0, rng.uniform(-0.3, 0.3, size=7)]
        s = CorrelationStructure.from_rho(rho, PARZEN)
        k = lambda x: float(PARZEN(x))  # noqa: E731
        np.testing.assert_allclose(build_lambda(s).matrix, lambda_naive(rho, k, 2.0), atol=1e-12)

    def test_true_ar1_is_population_covariance(self):
        T, phi = 6, 0.3
        lam = build_lambda(CorrelationStructure.ar1(T, phi)).matrix
        gamma = phi ** np.abs(np.subtract.outer(np.arange(T), np.arange(T)))
        L = np.tril(np.ones((T, T)))
        np.testing.assert_allclose(lam, L @ gamma @ L.T, atol=1e-12)

    def test_symmetric_and_psd_after_repair(self, rng):
        for _ in range(50):
            rho = np.r_[1.0, rng.uniform(-1, 1, size=9)]
            try:
                lam = build_lambda(CorrelationStructure.from_rho(rho, KernelSpec("parzen", 5.0)))
            except EstimationError:
                continue
            m = lam.matrix
            np.testing.assert_array_equal(m, m.T)
            w = np.linalg.eigvalsh(m)
            assert w[0] >= -1e-8 * w[-1]

    def test_repair_refuses_far_from_psd(self):
        with pytest.raises(EstimationError):
            psd_repair(np.array([[1.0, 0.0], [0.0, -1.0]]))

    def test_repair_clips(self):
        m = np.array([[1.0, 1.02], [1.02, 1.0]])
        fixed, lo = psd_repair(m)
        assert lo < 0
        assert np.linalg.eigvalsh(fixed)[0] >= -1e-12


class TestPipeline:
    def test_iid_large_panel(self):
        data = generate_panel(ScenarioConfig(2000, 10, 10, seed=5))
        lam = estimate_covariance_pipeline(data, PARZEN)
        idx = np.arange(1, 11)
        target = np.minimum.outer(idx, idx)
        assert lam.source == "estimated"
        assert np.all(np.abs(lam.matrix - target) <= 0.15 * target)
        # against the structure implied by the demeaning bias the fit is tight
        rho = np.r_[1.0, -(10 - idx[:-1]) / 90]
        expected = build_lambda(CorrelationStructure.from_rho(rho, PARZEN)).matrix
        assert np.abs(lam.matrix - expected).max() < 0.15

    def test_constant_data(self):
        with pytest.raises(DegenerateDataError):
            estimate_covariance_pipeline(np.full((5, 6), 3.0))

    def test_strong_change_does_not_leak(self):
        cfg = ScenarioConfig(2000, 10, 5, change_fraction=1.0, change_range=(4.0, 6.0), seed=9)
        data, mu, delta = generate_panel(cfg, return_truth=True)
        fit = fit_covariance(data, PARZEN)
        assert fit.changepoint.tau_hat == 5
        # same errors without the jump give the same residual autocorrelations
        clean = data.values - delta[:, None] * (np.arange(1, 11) > 5)
        res = compute_residuals(clean, 5)
        np.testing.assert_allclose(fit.structure.rho, empirical_autocorrelation(res, sigma2_hat(res)),
                                   atol=1e-10)
        # two demeaned white-noise segments of length 5: E rho_1 = -4/20 = -0.2
        assert fit.structure.rho[1] == pytest.approx(-0.2, abs=0.03)

    def test_short_horizon(self):
        with pytest.raises(ValueError, match="T ≥ 4"):
            estimate_covariance_pipeline(np.arange(9.0).reshape(3, 3))
