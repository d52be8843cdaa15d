"""Randomized verification suites.

Each suite generates seeded random instances and checks an inequality
or an agreement between two independent computation routes:

* `supermartingale_suite` -- the one-step criterion never exceeds the
  current uncertainty, for every functional, on random conditioned
  posteriors.
* `closed_form_suite` -- the closed-form expected-improvement and
  knowledge-gradient gains against their quadrature / Monte Carlo
  references.
* `quadrature_vs_mc_suite` -- the lookahead quadrature against a plain
  Monte Carlo simulation of the next observation.
* `functional_oracle_suite` -- functional values against path-sampling
  Monte Carlo and closed-form identities.

The suites are used both by the command-line `check` command and by the
acceptance tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .criteria import ei_closed, j_quadrature, kg_exact, lookahead_measure
from .functionals import FunctionalSpec, eval_kg, eval_vev, evaluate
from .grid import (
    Domain,
    GaussianMeasure,
    KernelSpec,
    build_prior,
    condition,
    predictive_sd,
    regular_grid,
    sample_path,
    sample_paths,
    simulate_observation,
)
from .normals import bvn_orthant, gauss_hermite_rule
from .strategy import check_supermartingale

_KERNELS = ("squared_exponential", "matern32", "matern52")


@dataclass
class SuiteReport:
    """Outcome of one randomized suite."""

    name: str
    passed: bool
    n_instances: int
    worst_margin: float
    notes: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" ({self.notes})" if self.notes else ""
        return (
            f"[{status}] {self.name}: {self.n_instances} instances, "
            f"worst margin {self.worst_margin:.3e}{extra}"
        )


def _random_posterior(
    rng: np.random.Generator,
    max_grid: int,
    noiseless: bool,
    min_obs: int = 1,
) -> tuple[Domain, GaussianMeasure, np.ndarray, float]:
    """A conditioned posterior on a random grid, with the truth path it
    was conditioned on and a threshold near the truth's range."""
    n = int(rng.integers(5, max_grid + 1))
    noise = 0.0 if noiseless else float(rng.choice([0.0, 0.05, 0.2]))
    dom = regular_grid((0.0, 1.0), n, noise_sd=noise)
    kernel = KernelSpec(
        family=_KERNELS[int(rng.integers(len(_KERNELS)))],
        variance=float(rng.uniform(0.3, 2.0)),
        lengthscale=float(rng.uniform(0.1, 0.5)),
    )
    prior = build_prior(dom, float(rng.uniform(-0.5, 0.5)), kernel)
    truth = sample_path(prior, int(rng.integers(2**31)))
    k = int(rng.integers(min_obs, 6))
    ix = rng.choice(n, size=min(k, n), replace=False)
    obs = [simulate_observation(truth, dom, int(i), int(rng.integers(2**31))) for i in ix]
    post = condition(prior, obs)
    threshold = float(np.quantile(truth, rng.uniform(0.3, 0.9)))
    return dom, post, truth, threshold


def supermartingale_suite(
    seed: int = 0,
    n_posteriors: int = 50,
    max_grid: int = 31,
    tol: float = 1e-6,
    kinds: tuple[str, ...] = ("ibv", "vev", "kg", "ei"),
    mc_samples: int = 2048,
    rule_nodes: int = 25,
    corrupt: bool = False,
) -> list[SuiteReport]:
    """Criterion <= uncertainty at every candidate of random posteriors.

    Pass requires gain >= -(tol + 3 * stderr) everywhere; `corrupt`
    negates the gains to demonstrate the check can fail.
    """
    rule = gauss_hermite_rule(rule_nodes)
    kind_tags = {"ibv": 1, "vev": 2, "kg": 3, "ei": 4}
    reports = []
    for kind in kinds:
        rng = np.random.default_rng(np.random.SeedSequence([seed, kind_tags[kind]]))
        worst = np.inf
        for i in range(n_posteriors):
            dom, post, truth, threshold = _random_posterior(
                rng, max_grid, noiseless=kind == "ei"
            )
            if kind in ("ibv", "vev"):
                spec = FunctionalSpec(kind, threshold=threshold)
            else:
                spec = FunctionalSpec(kind, mc_samples=mc_samples)
            rep = check_supermartingale(
                post, dom, spec, range(dom.size), rule,
                seed=int(rng.integers(2**31)), tol=tol, corrupt=corrupt,
            )
            worst = min(worst, rep.worst_margin)
        reports.append(
            SuiteReport(
                name=f"supermartingale[{kind}]",
                passed=worst >= 0.0,
                n_instances=n_posteriors,
                worst_margin=float(worst),
            )
        )
    return reports


def closed_form_suite(
    seed: int = 0,
    n_instances: int = 100,
    mc_samples: int = 4096,
    kg_mc_draws: int = 1_000_000,
) -> list[SuiteReport]:
    """Closed forms against quadrature / Monte Carlo references.

    The expected-improvement gain must match the quadrature criterion
    within 3 standard errors; the exact knowledge-gradient expectation
    must match a large Monte Carlo average of max(a + b V).
    """
    rng = np.random.default_rng(seed)
    rule = gauss_hermite_rule(25)

    worst_ei = np.inf
    for _ in range(n_instances):
        dom, post, truth, _ = _random_posterior(rng, 15, noiseless=True)
        spec = FunctionalSpec("ei", mc_samples=mc_samples)
        index = int(rng.integers(dom.size))
        closed = ei_closed(post, dom, index, spec.zero_sd_tol)
        quad = j_quadrature(post, dom, index, spec, rule, seed=int(rng.integers(2**31)))
        band = 3.0 * max(quad.stderr, 1e-12)
        worst_ei = min(worst_ei, band - abs(closed.gain - quad.gain))
    ei_report = SuiteReport(
        name="ei_closed vs j_quadrature",
        passed=worst_ei >= 0.0,
        n_instances=n_instances,
        worst_margin=float(worst_ei),
    )

    worst_kg = np.inf
    for _ in range(n_instances):
        dom, post, truth, _ = _random_posterior(rng, 10, noiseless=False)
        informative = [c for c in range(dom.size) if predictive_sd(post, c) > 1e-6]
        index = int(rng.choice(informative)) if informative else 0
        exact = kg_exact(post, dom, index, mc_samples=2).gain
        s = predictive_sd(post, index)
        a = post.mean
        b = post.cov[:, index] / s if s > 0 else np.zeros(dom.size)
        v = rng.standard_normal(kg_mc_draws)
        samples = (a[:, None] + b[:, None] * v[None, :]).max(axis=0)
        mc_gain = float(samples.mean() - a.max())
        stderr = samples.std(ddof=1) / np.sqrt(kg_mc_draws)
        worst_kg = min(worst_kg, 3.0 * stderr - abs(exact - mc_gain))
    kg_report = SuiteReport(
        name="kg_exact vs monte carlo",
        passed=worst_kg >= 0.0,
        n_instances=n_instances,
        worst_margin=float(worst_kg),
    )
    return [ei_report, kg_report]


def _mc_lookahead(
    measure: GaussianMeasure,
    dom: Domain,
    index: int,
    spec: FunctionalSpec,
    n_draws: int,
    seed: int,
) -> tuple[float, float]:
    """Monte Carlo estimate of the criterion: simulate the next
    observation, condition, evaluate the functional.  Returns
    (mean, batch-means standard error)."""
    rng = np.random.default_rng(seed)
    vs = rng.standard_normal(n_draws)
    vals = np.array(
        [
            evaluate(spec, lookahead_measure(measure, dom, index, float(v)), dom, 0).value
            for v in vs
        ]
    )
    n_batches = 40
    batches = vals[: n_draws - n_draws % n_batches].reshape(n_batches, -1).mean(axis=1)
    return float(vals.mean()), float(batches.std(ddof=1) / np.sqrt(n_batches))


def quadrature_vs_mc_suite(
    seed: int = 0,
    n_instances: int = 5,
    n_draws: int = 4000,
) -> list[SuiteReport]:
    """Lookahead quadrature against direct simulation of the next
    observation, for the two deterministic functionals."""
    rule = gauss_hermite_rule(25)
    reports = []
    for kind in ("ibv", "vev"):
        rng = np.random.default_rng(np.random.SeedSequence([seed, 1 + (kind == "vev")]))
        worst = np.inf
        for _ in range(n_instances):
            dom, post, truth, threshold = _random_posterior(rng, 9, noiseless=False)
            spec = FunctionalSpec(kind, threshold=threshold)
            index = int(rng.integers(dom.size))
            quad = j_quadrature(post, dom, index, spec, rule)
            mc, stderr = _mc_lookahead(
                post, dom, index, spec, n_draws, int(rng.integers(2**31))
            )
            band = 3.0 * max(stderr, 1e-12)
            worst = min(worst, band - abs(quad.residual - mc))
        reports.append(
            SuiteReport(
                name=f"j_quadrature[{kind}] vs next-observation MC",
                passed=worst >= 0.0,
                n_instances=n_instances,
                worst_margin=float(worst),
            )
        )
    return reports


def functional_oracle_suite(seed: int = 0, n_paths: int = 1_000_000) -> list[SuiteReport]:
    """Functional values against independent oracles: the pairwise
    excursion-volume variance against path sampling, the orthant
    probability at the origin against the arcsine identity, and the
    knowledge-gradient value of two independent points against the
    closed form 1/sqrt(pi)."""
    rng = np.random.default_rng(seed)
    reports = []

    worst = np.inf
    for _ in range(3):
        dom, post, truth, threshold = _random_posterior(rng, 5, noiseless=False)
        value = eval_vev(post, dom, threshold).value
        paths = sample_paths(post, n_paths, int(rng.integers(2**31)))
        volumes = dom.weights @ (paths >= threshold)
        n_batches = 50
        batches = volumes[: n_paths - n_paths % n_batches].reshape(n_batches, -1)
        batch_vars = batches.var(axis=1, ddof=1)
        stderr = float(batch_vars.std(ddof=1) / np.sqrt(n_batches))
        worst = min(worst, 3.0 * stderr - abs(value - float(volumes.var(ddof=1))))
    reports.append(
        SuiteReport(
            name="eval_vev vs path-sampling MC",
            passed=worst >= 0.0,
            n_instances=3,
            worst_margin=float(worst),
        )
    )

    rhos = np.arange(-0.9, 0.91, 0.3)
    identity = 0.25 + np.arcsin(rhos) / (2.0 * np.pi)
    err = np.abs(bvn_orthant(0.0, 0.0, rhos) - identity).max()
    reports.append(
        SuiteReport(
            name="bvn_orthant arcsine identity",
            passed=err <= 1e-8,
            n_instances=rhos.size,
            worst_margin=float(1e-8 - err),
        )
    )

    dom2 = Domain(points=np.array([[0.0], [1.0]]), weights=np.array([0.5, 0.5]),
                  noise_sd=np.zeros(2))
    iid = GaussianMeasure(domain=dom2, mean=np.zeros(2), cov=np.eye(2))
    val = eval_kg(iid, 1_000_000, int(rng.integers(2**31)))
    target = 1.0 / np.sqrt(np.pi)
    band = 3.0 * val.stderr
    reports.append(
        SuiteReport(
            name="eval_kg two independent points vs 1/sqrt(pi)",
            passed=abs(val.value - target) <= band,
            n_instances=1,
            worst_margin=float(band - abs(val.value - target)),
        )
    )
    return reports


def run_all_suites(seed: int = 0, corrupt: bool = False) -> list[SuiteReport]:
    """Default check battery (smaller instance counts than the
    acceptance tests, same machinery)."""
    reports = []
    reports += supermartingale_suite(seed=seed, n_posteriors=10, corrupt=corrupt)
    reports += closed_form_suite(seed=seed, n_instances=20, kg_mc_draws=200_000)
    reports += quadrature_vs_mc_suite(seed=seed, n_instances=3, n_draws=2000)
    reports += functional_oracle_suite(seed=seed, n_paths=200_000)
    return reports
