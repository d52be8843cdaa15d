"""Uncertainty-functional tests: frozen atoms, MC oracles, invariants."""

import numpy as np
import pytest

from gridsur.errors import ParameterError, StateError
from gridsur.functionals import (
    FunctionalSpec,
    eval_ei,
    eval_ibv,
    eval_kg,
    eval_vev,
    evaluate,
    zero_variance_set,
)
from gridsur.grid import (
    Domain,
    GaussianMeasure,
    KernelSpec,
    Observation,
    build_prior,
    condition,
    regular_grid,
    sample_paths,
)


def atoms(means, cov, weights=None, noise=0.0):
    n = len(means)
    dom = Domain(
        points=np.arange(n, dtype=float)[:, None],
        weights=np.full(n, 1.0 / n) if weights is None else np.asarray(weights, float),
        noise_sd=np.full(n, float(noise)),
    )
    m = GaussianMeasure(domain=dom, mean=np.asarray(means, float), cov=np.asarray(cov, float))
    return dom, m


def five_point_posterior():
    dom = regular_grid((0.0, 1.0), 5)
    prior = build_prior(dom, 0.0, KernelSpec("matern52", 1.0, 0.4))
    post = condition(prior, [Observation(1, 0.8)])
    return dom, post


class TestFunctionalSpec:
    def test_threshold_presence(self):
        with pytest.raises(ParameterError):
            FunctionalSpec("ibv")
        with pytest.raises(ParameterError):
            FunctionalSpec("kg", threshold=0.5)
        with pytest.raises(ParameterError):
            FunctionalSpec("nope")

    def test_parameter_bounds(self):
        with pytest.raises(ParameterError):
            FunctionalSpec("kg", mc_samples=0)
        with pytest.raises(ParameterError):
            FunctionalSpec("ei", zero_sd_tol=-1.0)


class TestIbv:
    def test_degenerate_measure_is_zero(self):
        dom, m = atoms([0.3, 0.3, -1.0], np.zeros((3, 3)))
        # includes a mean exactly at the threshold: indicator convention
        assert eval_ibv(m, dom, 0.3).value == 0.0

    def test_single_atom_at_threshold(self):
        dom, m = atoms([0.5], [[1.0]], weights=[1.0])
        assert eval_ibv(m, dom, 0.5).value == pytest.approx(0.25)

    def test_mc_oracle_mixed_grid(self):
        dom, post = five_point_posterior()
        threshold = 0.4
        value = eval_ibv(post, dom, threshold).value
        paths = sample_paths(post, 1_000_000, 3)
        ind = (paths >= threshold).astype(float)
        p_hat = ind.mean(axis=1)
        mc = float(dom.weights @ (p_hat * (1 - p_hat)))
        # delta-method stderr per point, summed (conservative)
        se = float(
            dom.weights
            @ (np.abs(1 - 2 * p_hat) * np.sqrt(p_hat * (1 - p_hat) / ind.shape[1]))
        )
        assert abs(value - mc) <= 3 * se + 1e-6

    def test_bound_quarter_mass(self):
        dom, post = five_point_posterior()
        assert eval_ibv(post, dom, 0.0).value <= 0.25 * dom.total_mass + 1e-12


class TestVev:
    def test_degenerate_measure_is_zero(self):
        dom, m = atoms([1.0, -1.0], np.zeros((2, 2)))
        assert eval_vev(m, dom, 0.0).value == 0.0

    def test_single_atom_bernoulli_variance(self):
        dom, m = atoms([0.5], [[1.0]], weights=[1.0])
        assert eval_vev(m, dom, 0.5).value == pytest.approx(0.25, abs=1e-12)

    def test_two_correlated_atoms(self):
        # means at threshold, unit sds, correlation 1/2:
        # 2 (1/4 1/4) + 2 (1/4 * 1/12) = 1/6 via the orthant oracle
        dom, m = atoms([0.0, 0.0], [[1.0, 0.5], [0.5, 1.0]], weights=[0.5, 0.5])
        assert eval_vev(m, dom, 0.0).value == pytest.approx(1.0 / 6.0, abs=1e-10)

    def test_two_atoms_against_path_mc(self):
        dom, m = atoms([0.0, 0.0], [[1.0, 0.5], [0.5, 1.0]], weights=[0.5, 0.5])
        paths = sample_paths(m, 1_000_000, 5)
        volumes = dom.weights @ (paths >= 0.0)
        assert abs(eval_vev(m, dom, 0.0).value - volumes.var(ddof=1)) <= 3 * 3e-4

    def test_single_atom_reduces_to_weighted_ibv(self):
        dom, m = atoms([0.2], [[0.7]], weights=[0.6])
        ibv = eval_ibv(m, dom, 0.0).value
        vev = eval_vev(m, dom, 0.0).value
        assert vev == pytest.approx(ibv * 0.6, abs=1e-12)

    def test_bound_quarter_mass_squared(self):
        dom, post = five_point_posterior()
        assert eval_vev(post, dom, 0.0).value <= 0.25 * dom.total_mass**2 + 1e-12


class TestKg:
    def test_degenerate_measure_is_zero(self):
        dom, m = atoms([3.0, 1.0], np.zeros((2, 2)))
        v = eval_kg(m, 1000, 0)
        assert v.value == 0.0 and v.stderr == 0.0

    def test_single_atom_is_zero_without_mc(self):
        dom, m = atoms([0.0], [[1.0]])
        v = eval_kg(m, 1, 0)
        assert v.value == 0.0 and v.stderr == 0.0

    def test_two_iid_atoms_closed_form(self):
        dom, m = atoms([0.0, 0.0], np.eye(2))
        v = eval_kg(m, 400_000, 11)
        assert abs(v.value - 1.0 / np.sqrt(np.pi)) <= 3 * v.stderr

    def test_mean_shift_invariance(self):
        dom, m = atoms([0.0, 0.2, -0.3], KernelSpec("matern32", 1.0, 1.5).matrix(np.arange(3.0)[:, None]))
        shifted = GaussianMeasure(domain=dom, mean=m.mean + 5.0, cov=m.cov)
        a = eval_kg(m, 50_000, 3)
        b = eval_kg(shifted, 50_000, 3)
        assert abs(a.value - b.value) <= 3 * np.hypot(a.stderr, b.stderr) + 1e-9

    def test_single_draw_flags_stderr(self):
        dom, m = atoms([0.0, 0.0], np.eye(2))
        v = eval_kg(m, 1, 0)
        assert v.stderr == 0.0 and not v.stderr_valid


class TestEi:
    def test_requires_noiseless_domain(self):
        dom = regular_grid((0.0, 1.0), 3, noise_sd=0.1)
        m = build_prior(dom, 0.0, KernelSpec("matern52", 1.0, 0.3))
        with pytest.raises(ParameterError):
            eval_ei(m, dom, 100, 1e-9, 0)

    def test_requires_observed_point(self):
        dom = regular_grid((0.0, 1.0), 3)
        m = build_prior(dom, 0.0, KernelSpec("matern52", 1.0, 0.3))
        with pytest.raises(StateError):
            eval_ei(m, dom, 100, 1e-9, 0)

    def test_degenerate_measure_is_zero(self):
        dom, m = atoms([1.0, 2.0], np.zeros((2, 2)))
        assert eval_ei(m, dom, 100, 1e-9, 0).value == 0.0

    def test_one_free_point_matches_expected_positive_part(self):
        from gridsur.normals import expected_positive_part

        # both ends observed, middle free with mean below the best
        cov = np.zeros((3, 3))
        cov[1, 1] = 0.49
        dom, m = atoms([1.0, 0.2, 0.6], cov)
        v = eval_ei(m, dom, 400_000, 1e-9, 7)
        want = expected_positive_part(0.2 - 1.0, 0.49)
        assert abs(v.value - want) <= 3 * max(v.stderr, 1e-9)

    def test_tied_observed_values(self):
        cov = np.zeros((3, 3))
        cov[1, 1] = 1.0
        dom, m = atoms([0.9, 0.0, 0.9], cov)
        known = zero_variance_set(m, 1e-9)
        assert known.tolist() == [True, False, True]
        v = eval_ei(m, dom, 50_000, 1e-9, 1)
        assert v.value >= 0.0


class TestEvaluateDispatch:
    def test_matches_direct_calls(self):
        dom, post = five_point_posterior()
        assert (
            evaluate(FunctionalSpec("ibv", threshold=0.4), post, dom, 0).value
            == eval_ibv(post, dom, 0.4).value
        )
        assert (
            evaluate(FunctionalSpec("vev", threshold=0.4), post, dom, 0).value
            == eval_vev(post, dom, 0.4).value
        )
        kg_spec = FunctionalSpec("kg", mc_samples=2000)
        assert (
            evaluate(kg_spec, post, dom, 42).value == eval_kg(post, 2000, 42).value
        )

    def test_seed_determinism(self):
        dom, post = five_point_posterior()
        spec = FunctionalSpec("kg", mc_samples=500)
        assert evaluate(spec, post, dom, 9).value == evaluate(spec, post, dom, 9).value

    def test_wrong_domain_rejected(self):
        dom, post = five_point_posterior()
        other = regular_grid((0.0, 1.0), 5)
        with pytest.raises(ParameterError):
            eval_ibv(post, other, 0.4)

    def test_all_kinds_nonnegative_on_random_posteriors(self):
        rng = np.random.default_rng(0)
        for _ in range(5):
            dom = regular_grid((0.0, 1.0), 9)
            prior = build_prior(dom, 0.0, KernelSpec("matern52", 1.0, 0.3))
            post = condition(
                prior, [Observation(int(rng.integers(9)), float(rng.standard_normal()))]
            )
            for spec in (
                FunctionalSpec("ibv", threshold=0.2),
                FunctionalSpec("vev", threshold=0.2),
                FunctionalSpec("kg", mc_samples=500),
                FunctionalSpec("ei", mc_samples=500),
            ):
                assert evaluate(spec, post, dom, 1).value >= 0.0
