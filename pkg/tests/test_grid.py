"""Domain, kernel, measure, and conditioning tests."""

import numpy as np
import pytest

from gridsur.errors import NumericalError, ParameterError
from gridsur.grid import (
    Domain,
    GaussianMeasure,
    KernelSpec,
    Observation,
    build_prior,
    condition,
    predictive_sd,
    regular_grid,
    sample_path,
    sample_paths,
    simulate_observation,
)

# Closed-form kernel oracle values, lengthscale 0.3, variance 1,
# evaluated by hand with mpmath at 20 digits:
#   matern52(r) = (1 + sqrt(5) r + 5 r^2 / 3) exp(-sqrt(5) r), r = d / 0.3
M52_ORACLE = {0.5: 0.2252108203390087148, 1.0: 0.015626958834649823049}
# matern32, lengthscale 0.4: (1 + sqrt(3) r) exp(-sqrt(3) r), r = 0.7 / 0.4
M32_ORACLE_07_L04 = 0.19455266682497052898
# squared exponential, lengthscale 0.6: exp(-r^2 / 2), r = 0.9 / 0.6
SQEXP_ORACLE_09_L06 = 0.3246524673583497298


def unit_domain(n, noise=0.0):
    return regular_grid((0.0, 1.0), n, noise_sd=noise)


class TestDomain:
    def test_invariants(self):
        with pytest.raises(ParameterError):
            Domain(points=np.zeros((2, 1)), weights=np.array([0.0, 0.0]), noise_sd=np.zeros(2))
        with pytest.raises(ParameterError):
            Domain(points=np.zeros((2, 1)), weights=np.array([1.0, -0.1]), noise_sd=np.zeros(2))
        with pytest.raises(ParameterError):
            Domain(points=np.zeros((2, 3)), weights=np.ones(2), noise_sd=np.zeros(2))

    def test_regular_grid_mass_equals_volume(self):
        dom = regular_grid((0.0, 2.0), 11)
        assert dom.total_mass == pytest.approx(2.0)
        dom2 = regular_grid(((0.0, 1.0), (0.0, 3.0)), 5)
        assert dom2.size == 25 and dom2.dim == 2
        assert dom2.total_mass == pytest.approx(3.0)

    def test_immutability(self):
        dom = unit_domain(5)
        with pytest.raises(ValueError):
            dom.weights[0] = 2.0


class TestKernelSpec:
    def test_zero_distance_is_variance(self):
        ker = KernelSpec("squared_exponential", 1.7, 0.3)
        dom = Domain(points=np.array([[0.2]]), weights=np.ones(1), noise_sd=np.zeros(1))
        assert build_prior(dom, 0.0, ker).cov[0, 0] == pytest.approx(1.7)

    def test_duplicate_points_fully_correlated(self):
        ker = KernelSpec("squared_exponential", 1.0, 0.3)
        pts = np.array([[0.4], [0.4]])
        cov = ker.matrix(pts)
        np.testing.assert_allclose(cov, np.ones((2, 2)))

    def test_matern52_oracle(self):
        ker = KernelSpec("matern52", 1.0, 0.3)
        cov = ker.matrix(np.array([[0.0], [0.5], [1.0]]))
        assert cov[0, 1] == pytest.approx(M52_ORACLE[0.5], abs=1e-14)
        assert cov[1, 2] == pytest.approx(M52_ORACLE[0.5], abs=1e-14)
        assert cov[0, 2] == pytest.approx(M52_ORACLE[1.0], abs=1e-14)

    def test_matern32_and_sqexp_oracles(self):
        m32 = KernelSpec("matern32", 1.0, 0.4).matrix(np.array([[0.0], [0.7]]))
        assert m32[0, 1] == pytest.approx(M32_ORACLE_07_L04, abs=1e-14)
        se = KernelSpec("squared_exponential", 1.0, 0.6).matrix(np.array([[0.0], [0.9]]))
        assert se[0, 1] == pytest.approx(SQEXP_ORACLE_09_L06, abs=1e-14)

    def test_psd_on_grids(self):
        for family in ("squared_exponential", "matern32", "matern52"):
            ker = KernelSpec(family, 1.3, 0.2)
            cov = ker.matrix(np.linspace(0, 1, 17)[:, None])
            w = np.linalg.eigvalsh(cov)
            assert w.min() >= -1e-8 * np.trace(cov) / 17

    def test_anisotropic_lengthscales(self):
        ker = KernelSpec("squared_exponential", 1.0, [0.5, 2.0])
        pts = np.array([[0.0, 0.0], [0.5, 2.0]])
        # scaled distance sqrt(1 + 1) = sqrt(2)
        assert ker.matrix(pts)[0, 1] == pytest.approx(np.exp(-1.0), abs=1e-14)

    def test_parameter_validation(self):
        with pytest.raises(ParameterError):
            KernelSpec("matern52", 0.0, 0.3)
        with pytest.raises(ParameterError):
            KernelSpec("matern52", 1.0, -0.3)
        with pytest.raises(ParameterError):
            KernelSpec("cubic", 1.0, 0.3)


class TestCondition:
    def setup_method(self):
        self.dom = unit_domain(11)
        self.ker = KernelSpec("matern52", 1.0, 0.3)
        self.prior = build_prior(self.dom, 0.0, self.ker)

    def test_noiseless_exact_interpolation(self):
        post = condition(self.prior, [Observation(3, 1.5)])
        assert post.mean[3] == pytest.approx(1.5, abs=1e-10)
        assert abs(post.cov[3, 3]) <= 1e-10
        assert np.max(np.abs(post.cov[3, :])) <= 1e-10

    def test_zero_kernel_prior_unchanged(self):
        measure = GaussianMeasure(
            domain=self.dom, mean=np.linspace(-1, 1, 11), cov=np.zeros((11, 11))
        )
        post = condition(measure, [Observation(2, 5.0)])
        np.testing.assert_allclose(post.mean, measure.mean)
        np.testing.assert_allclose(post.cov, 0.0)

    def test_duplicate_noiseless_observation_idempotent(self):
        once = condition(self.prior, [Observation(4, 0.9)])
        twice = condition(self.prior, [Observation(4, 0.9), Observation(4, 0.9)])
        np.testing.assert_allclose(once.mean, twice.mean, atol=1e-8)
        np.testing.assert_allclose(once.cov, twice.cov, atol=1e-8)

    def test_batch_equals_sequential(self):
        obs = [Observation(1, 0.3), Observation(6, -1.1), Observation(9, 0.7)]
        batch = condition(self.prior, obs)
        seq = self.prior
        for o in obs:
            seq = condition(seq, [o])
        np.testing.assert_allclose(batch.mean, seq.mean, atol=1e-8)
        np.testing.assert_allclose(batch.cov, seq.cov, atol=1e-8)

    def test_variance_monotone(self):
        post = condition(self.prior, [Observation(2, 0.4), Observation(8, -0.2)])
        assert np.all(np.diag(post.cov) <= np.diag(self.prior.cov) + 1e-10)

    def test_posterior_psd(self):
        post = condition(self.prior, [Observation(0, 2.0), Observation(10, -2.0)])
        assert post.min_eigenvalue_margin() >= 0.0

    def test_dense_noiseless_design_resolves_everything(self):
        obs = [Observation(i, float(i) / 10) for i in range(11)]
        post = condition(self.prior, obs)
        assert np.max(np.abs(post.cov)) <= 1e-10
        np.testing.assert_allclose(post.mean, np.arange(11) / 10, atol=1e-8)

    def test_noisy_observation_shrinks_not_interpolates(self):
        noisy = regular_grid((0.0, 1.0), 11, noise_sd=0.5)
        prior = build_prior(noisy, 0.0, self.ker)
        post = condition(prior, [Observation(5, 2.0)])
        assert 0 < post.cov[5, 5] < prior.cov[5, 5]
        assert 0 < post.mean[5] < 2.0

    def test_index_validation(self):
        with pytest.raises(ParameterError):
            condition(self.prior, [Observation(11, 0.0)])

    def test_no_observations_is_identity(self):
        assert condition(self.prior, []) is self.prior


class TestPredictiveSd:
    def test_pythagorean_combination(self):
        dom = regular_grid((0.0, 1.0), 3, noise_sd=0.4)
        cov = np.diag([0.09, 0.0, 1.0])
        m = GaussianMeasure(domain=dom, mean=np.zeros(3), cov=cov)
        assert predictive_sd(m, 0) == pytest.approx(0.5)
        assert predictive_sd(m, 1) == pytest.approx(0.4)

    def test_noiseless_zero_variance(self):
        dom = unit_domain(3)
        m = GaussianMeasure(domain=dom, mean=np.zeros(3), cov=np.zeros((3, 3)))
        assert predictive_sd(m, 1) == 0.0


class TestSampling:
    def test_degenerate_returns_mean(self):
        dom = unit_domain(4)
        mean = np.array([0.0, 1.0, -2.0, 0.5])
        m = GaussianMeasure(domain=dom, mean=mean, cov=np.zeros((4, 4)))
        np.testing.assert_array_equal(sample_path(m, 123), mean)

    def test_seed_determinism(self):
        dom = unit_domain(7)
        m = build_prior(dom, 0.0, KernelSpec("matern32", 1.0, 0.2))
        a = sample_path(m, 42)
        b = sample_path(m, 42)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, sample_path(m, 43))

    def test_law_of_large_numbers_scalar(self):
        dom = Domain(points=np.zeros((1, 1)), weights=np.ones(1), noise_sd=np.zeros(1))
        m = GaussianMeasure(domain=dom, mean=np.zeros(1), cov=np.ones((1, 1)))
        draws = np.array([sample_path(m, s)[0] for s in range(3000)])
        assert abs(draws.mean()) <= 0.06
        assert abs(draws.var(ddof=1) - 1.0) <= 0.1
        # the vectorized path agrees with the scalar contract
        block = sample_paths(m, 100_000, 0)[0]
        assert abs(block.mean()) <= 0.02
        assert abs(block.var(ddof=1) - 1.0) <= 0.05

    def test_covariance_reproduced(self):
        dom = unit_domain(5)
        m = build_prior(dom, 0.0, KernelSpec("squared_exponential", 1.0, 0.4))
        paths = sample_paths(m, 200_000, 9)
        emp = np.cov(paths)
        np.testing.assert_allclose(emp, m.cov, atol=0.02)

    def test_degenerate_posterior_sampling(self):
        # fully resolved posterior: draws collapse to the mean
        dom = unit_domain(6)
        prior = build_prior(dom, 0.0, KernelSpec("matern52", 1.0, 0.3))
        post = condition(prior, [Observation(i, 0.1 * i) for i in range(6)])
        path = sample_path(post, 77)
        np.testing.assert_allclose(path, post.mean, atol=1e-6)


class TestSimulateObservation:
    def test_noiseless_reads_truth(self):
        dom = unit_domain(5)
        truth = np.linspace(0, 1, 5)
        obs = simulate_observation(truth, dom, 3, 1)
        assert obs == Observation(3, truth[3])

    def test_noise_scale(self):
        dom = regular_grid((0.0, 1.0), 5, noise_sd=1.0)
        truth = np.zeros(5)
        vals = np.array(
            [simulate_observation(truth, dom, 2, s).value for s in range(3000)]
        )
        assert abs(vals.std(ddof=1) - 1.0) <= 0.06

    def test_seed_reproducibility(self):
        dom = regular_grid((0.0, 1.0), 5, noise_sd=0.3)
        truth = np.ones(5)
        assert (
            simulate_observation(truth, dom, 0, 9).value
            == simulate_observation(truth, dom, 0, 9).value
        )


class TestGaussianMeasureValidation:
    def test_asymmetric_covariance_rejected(self):
        dom = unit_domain(2)
        cov = np.array([[1.0, 0.5], [0.2, 1.0]])
        with pytest.raises(ParameterError):
            GaussianMeasure(domain=dom, mean=np.zeros(2), cov=cov)

    def test_small_negative_diagonal_clamps(self):
        dom = unit_domain(2)
        cov = np.array([[1.0, 0.0], [0.0, -1e-12]])
        m = GaussianMeasure(domain=dom, mean=np.zeros(2), cov=cov)
        assert m.cov[1, 1] == 0.0

    def test_large_negative_diagonal_rejected(self):
        dom = unit_domain(2)
        cov = np.array([[1.0, 0.0], [0.0, -1e-3]])
        with pytest.raises(NumericalError):
            GaussianMeasure(domain=dom, mean=np.zeros(2), cov=cov)

    def test_shape_mismatch_rejected(self):
        dom = unit_domain(3)
        with pytest.raises(ParameterError):
            GaussianMeasure(domain=dom, mean=np.zeros(2), cov=np.zeros((3, 3)))
