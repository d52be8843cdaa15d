"""Lookahead criteria: expected residual uncertainty after one more observation.

For a measure nu, a candidate grid index x and an uncertainty
functional H, the criterion is

    J_x(nu) = int H( nu conditioned at x on mean(x) + v * s(x) ) phi(v) dv

with s(x) the predictive standard deviation at x.  The integral over
the standardized observation v is discretized by a Gauss-Hermite rule
(`j_quadrature`).  The expected gain is G_x = H(nu) - J_x(nu), which is
nonnegative for every functional here (supermartingale inequality).

Because the conditioned covariance does not depend on the observed
value, all quadrature nodes share one covariance and differ only in
their means; `j_quadrature` exploits this but remains numerically equal
to evaluating the functional at `lookahead_measure` node by node.

Closed-form fast paths, used for candidate selection:

* ``kg_exact`` -- the posterior means are affine in the observation, so
  E[max over the grid] is the exact Gaussian expectation of a
  piecewise-affine convex envelope.
* ``ei_closed`` -- the gain equals the expected positive part of
  f(x) - current best, a one-dimensional Gaussian integral.
* ``vev_criterion_total_variance`` -- by the law of total variance the
  gain equals Var_v of the expected excursion volume, a scalar smooth
  function of v, quadratured with the same rule.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import ParameterError, StateError
from .functionals import (
    FunctionalSpec,
    FunctionalValue,
    _check_bound,
    _pairwise_parts,
    _vev_value,
    evaluate,
    eval_ibv,
    eval_ei,
    eval_kg,
    eval_vev,
    zero_variance_set,
)
from .grid import Domain, GaussianMeasure, Observation, _factor, condition, predictive_sd
from .normals import QuadratureRule, excursion_prob, expected_positive_part, std_normal_pdf


@dataclass(frozen=True)
class CriterionValue:
    """Expected residual uncertainty after a candidate observation.

    ``residual`` is the criterion value itself, ``gain`` the expected
    uncertainty reduction (current uncertainty minus residual), and
    ``stderr`` the Monte Carlo standard error of the gain estimate
    (zero for closed-form evaluations).
    """

    residual: float
    gain: float
    stderr: float = 0.0

    def __post_init__(self):
        if self.residual < 0 or self.stderr < 0:
            raise ParameterError("residual and stderr must be nonnegative")


def lookahead_measure(
    measure: GaussianMeasure, domain: Domain, index: int, v: float
) -> GaussianMeasure:
    """Posterior after a synthetic observation at `index` with value
    mean + v * predictive_sd.  Identity when the predictive sd is zero
    (the observation is almost surely known already)."""
    _check_bound(measure, domain)
    s = predictive_sd(measure, index)
    if s == 0.0:
        return measure
    z = float(measure.mean[index] + v * s)
    return condition(measure, [Observation(index, z)])


@dataclass(frozen=True)
class _LookaheadFamily:
    """One-observation lookahead at a fixed index: shared conditioned
    covariance, plus means affine in the standardized observation."""

    base_mean: np.ndarray
    slope: np.ndarray
    cov: np.ndarray
    s: float
    parent: GaussianMeasure

    def measure_at(self, v: float) -> GaussianMeasure:
        if self.s == 0.0:
            return self.parent
        return GaussianMeasure(
            domain=self.parent.domain,
            mean=self.base_mean + self.slope * v,
            cov=self.cov,
            scale=self.parent.scale,
        )

    def means(self, nodes: np.ndarray) -> np.ndarray:
        """(N, K) matrix of conditioned means, one column per node."""
        return self.base_mean[:, None] + self.slope[:, None] * nodes[None, :]


def _family(measure: GaussianMeasure, index: int) -> _LookaheadFamily:
    s = predictive_sd(measure, index)
    if s == 0.0:
        return _LookaheadFamily(
            base_mean=measure.mean,
            slope=np.zeros(measure.size),
            cov=measure.cov,
            s=0.0,
            parent=measure,
        )
    base = condition(measure, [Observation(index, float(measure.mean[index]))])
    slope = measure.cov[:, index] / s
    return _LookaheadFamily(
        base_mean=base.mean, slope=slope, cov=base.cov, s=s, parent=measure
    )


def _sub_seed(seed: int, index: int) -> int:
    """Deterministic per-candidate seed; schedule-independent."""
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1)[0])


def _mc_criterion(
    measure: GaussianMeasure,
    fam: _LookaheadFamily,
    rule: QuadratureRule,
    spec: FunctionalSpec,
    seed: int,
) -> tuple[FunctionalValue, float, float]:
    """Monte Carlo evaluation of an MC functional (kg or ei) at the
    measure and at every lookahead node.

    The nodes share one block of standard normal draws (common random
    numbers: the conditioned covariance is node-independent, so node
    values differ only through their means); the current-measure
    estimate uses an independent block, so the standard error of the
    gain is the standard error of the difference actually reported.
    Returns (h_estimate, j, stderr_of_j).
    """
    n = measure.size
    n_paths = spec.mc_samples
    node_rng, h_rng = np.random.SeedSequence(seed).spawn(2)
    z = np.random.default_rng(node_rng).standard_normal((n, n_paths))

    if spec.kind == "kg":
        ref0 = float(measure.mean.max())
    else:
        known = zero_variance_set(measure, spec.zero_sd_tol)
        ref0 = float(measure.mean[known].max())

    L0 = _factor(measure)
    if L0 is None or n == 1:
        s0 = np.full(n_paths, float(measure.mean.max()))
    else:
        z0 = np.random.default_rng(h_rng).standard_normal((n, n_paths))
        s0 = (measure.mean[:, None] + L0 @ z0).max(axis=0)
    h_raw = float(s0.mean() - ref0)
    h_stderr = float(s0.std(ddof=1) / np.sqrt(n_paths)) if n_paths > 1 else 0.0
    h_val = FunctionalValue(
        value=max(h_raw, 0.0),
        stderr=h_stderr,
        stderr_valid=n_paths > 1,
        raw=h_raw,
    )

    node_measure0 = fam.measure_at(0.0)
    L1 = _factor(node_measure0)
    means = fam.means(rule.nodes)
    if spec.kind == "kg":
        refs = means.max(axis=0)
    else:
        known1 = zero_variance_set(node_measure0, spec.zero_sd_tol)
        refs = means[known1].max(axis=0)

    k = len(rule)
    if L1 is None or n == 1:
        s1 = np.repeat(means.max(axis=0)[:, None], n_paths, axis=1)
    else:
        shifted = L1 @ z
        s1 = np.empty((k, n_paths))
        for i in range(k):
            s1[i] = (means[:, i : i + 1] + shifted).max(axis=0)

    node_raw = s1.mean(axis=1) - refs
    j = float(rule.weights @ np.maximum(node_raw, 0.0))
    j_paths = rule.weights @ s1
    stderr_j = float(j_paths.std(ddof=1) / np.sqrt(n_paths)) if n_paths > 1 else 0.0
    return h_val, j, stderr_j


def j_quadrature(
    measure: GaussianMeasure,
    domain: Domain,
    index: int,
    spec: FunctionalSpec,
    rule: QuadratureRule,
    seed: int = 0,
    h: FunctionalValue | None = None,
) -> CriterionValue:
    """Quadrature criterion: weighted sum of functional values over the
    lookahead-node measures.

    For Monte Carlo functionals the nodes share common random numbers
    (their covariance is identical, only the means differ) while the
    current-uncertainty term uses an independent block; the reported
    stderr combines both.  For deterministic functionals the standard
    error is zero.
    """
    _check_bound(measure, domain)
    fam = _family(measure, index)

    if spec.kind == "ibv":
        if h is None:
            h = eval_ibv(measure, domain, spec.threshold)
        sd1 = np.sqrt(np.maximum(np.diagonal(fam.cov), 0.0))
        p = excursion_prob(fam.means(rule.nodes), sd1[:, None], spec.threshold)
        node_vals = domain.weights @ (p * (1.0 - p))
        j = float(rule.weights @ node_vals)
        return CriterionValue(residual=max(j, 0.0), gain=h.value - j)

    if spec.kind == "vev":
        if h is None:
            h = eval_vev(measure, domain, spec.threshold)
        active, s, rho = _pairwise_parts(fam.cov)
        means = fam.means(rule.nodes)
        node_vals = np.array(
            [
                max(
                    _vev_value(means[:, i], domain.weights, active, s, rho, spec.threshold),
                    0.0,
                )
                for i in range(len(rule))
            ]
        )
        j = float(rule.weights @ node_vals)
        return CriterionValue(residual=max(j, 0.0), gain=h.value - j)

    h_mc, j, stderr_j = _mc_criterion(measure, fam, rule, spec, seed)
    if h is None:
        h = h_mc
    stderr_total = float(np.hypot(h.stderr, stderr_j))
    return CriterionValue(residual=max(j, 0.0), gain=h.value - j, stderr=stderr_total)


def _expected_max_affine(a: np.ndarray, b: np.ndarray) -> float:
    """E[max_j (a_j + b_j V)] for V ~ N(0, 1), exactly.

    The maximum of affine functions is piecewise affine and convex; the
    expectation sums Gaussian moments over the segments of the upper
    envelope.  Lines with slopes equal within round-off are merged
    keeping the larger intercept.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    atol = 1e-12 * max(1.0, float(np.abs(b).max()))
    order = np.lexsort((a, b))
    a, b = a[order], b[order]

    slopes: list[float] = []
    icepts: list[float] = []
    for ai, bi in zip(a, b):
        if slopes and bi - slopes[-1] <= atol:
            icepts[-1] = max(icepts[-1], ai)
        else:
            slopes.append(float(bi))
            icepts.append(float(ai))

    hull_a: list[float] = []
    hull_b: list[float] = []
    cuts: list[float] = []  # cuts[i]: breakpoint between hull lines i and i+1
    for ai, bi in zip(icepts, slopes):
        while hull_a:
            x = (hull_a[-1] - ai) / (bi - hull_b[-1])
            if cuts and x <= cuts[-1]:
                hull_a.pop()
                hull_b.pop()
                cuts.pop()
                continue
            cuts.append(x)
            break
        hull_a.append(ai)
        hull_b.append(bi)

    lo = np.array([-np.inf] + cuts)
    hi = np.array(cuts + [np.inf])
    ha = np.array(hull_a)
    hb = np.array(hull_b)
    return float(np.sum(ha * (ndtr(hi) - ndtr(lo)) + hb * (std_normal_pdf(lo) - std_normal_pdf(hi))))


def kg_exact(
    measure: GaussianMeasure,
    domain: Domain,
    index: int,
    h: FunctionalValue | None = None,
    mc_samples: int = 4096,
    seed: int = 0,
) -> CriterionValue:
    """Exact knowledge-gradient criterion at one candidate.

    The conditioned means are affine in the standardized observation,
    a_u + b_u V with b_u = cov(u, x) / predictive_sd(x), so the gain
    E[max(a + bV)] - max(a) is computed exactly from the upper envelope.
    Only the functional value itself (for the residual) uses Monte Carlo.
    """
    _check_bound(measure, domain)
    s = predictive_sd(measure, index)
    a = measure.mean
    b = measure.cov[:, index] / s if s > 0 else np.zeros(measure.size)
    gain = max(_expected_max_affine(a, b) - float(a.max()), 0.0)
    if h is None:
        h = eval_kg(measure, mc_samples, seed)
    return CriterionValue(
        residual=max(h.value - gain, 0.0), gain=gain, stderr=h.stderr
    )


def ei_closed(
    measure: GaussianMeasure,
    domain: Domain,
    index: int,
    zero_sd_tol: float = 1e-9,
    h: FunctionalValue | None = None,
    mc_samples: int = 4096,
    seed: int = 0,
) -> CriterionValue:
    """Closed-form expected-improvement criterion at one candidate.

    The gain is E[(f(x) - best)^+], the expected positive part of a
    Gaussian; re-observing a numerically known point gains exactly zero.
    """
    _check_bound(measure, domain)
    if not domain.noiseless():
        raise ParameterError("ei requires a noiseless domain")
    known = zero_variance_set(measure, zero_sd_tol)
    if not np.any(known):
        raise StateError("ei is undefined before the first noiseless observation")
    best = float(measure.mean[known].max())
    var = 0.0 if known[index] else max(float(measure.cov[index, index]), 0.0)
    gain = float(expected_positive_part(float(measure.mean[index]) - best, var))
    if h is None:
        h = eval_ei(measure, domain, mc_samples, zero_sd_tol, seed)
    return CriterionValue(
        residual=max(h.value - gain, 0.0), gain=gain, stderr=h.stderr
    )


def _probit_panels(breaks: np.ndarray, n_nodes: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on [0, 1] honoring interior break
    points, with panels refined geometrically toward 0 and 1 where the
    probit transform steepens."""
    edges = [0.0]
    for e in (2.0 ** -np.arange(10, 0, -1)):
        edges.append(float(e))
    edges.extend(float(b) for b in breaks)
    for e in (1.0 - 2.0 ** -np.arange(1, 11)):
        edges.append(float(e))
    edges.append(1.0)
    edges = np.unique(np.clip(edges, 0.0, 1.0))
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    lo, hi = edges[:-1], edges[1:]
    keep = hi - lo > 1e-12  # a narrower panel contributes below round-off
    lo, hi = lo[keep], hi[keep]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    eps = np.finfo(float).eps
    return np.clip(nodes, eps, 1.0 - eps), weights


def vev_criterion_total_variance(
    measure: GaussianMeasure,
    domain: Domain,
    index: int,
    threshold: float,
    rule: QuadratureRule,
    h: FunctionalValue | None = None,
) -> CriterionValue:
    """Excursion-volume-variance criterion via the law of total variance.

    The gain equals the variance, over the standardized observation v,
    of the conditioned expected excursion volume -- a scalar function of
    v -- which avoids the quadratic pairwise sum per quadrature node.
    The curve is smooth except for jumps where a point's conditioned
    variance vanishes while its mean still depends on v (the candidate
    itself under noiseless observation); the integral is therefore taken
    in probit space with panel boundaries at every jump.  Agrees with
    `j_quadrature` up to quadrature error.
    """
    _check_bound(measure, domain)
    if h is None:
        h = eval_vev(measure, domain, threshold)
    fam = _family(measure, index)
    var1 = np.maximum(np.diagonal(fam.cov), 0.0)
    sd1 = np.sqrt(var1)
    w = domain.weights

    # Classify points exactly as the pairwise expansion does: a point
    # whose conditioned variance is resolved contributes a constant
    # indicator, unless its mean genuinely moves with the observation
    # (the candidate itself under tau = 0), which is a jump of the
    # conditional-volume curve.
    resolved = var1 <= 1e-14 * max(float(var1.max()), 1e-300)
    real_slope = np.abs(fam.slope) > 1e-7 * np.sqrt(max(measure.scale, 1e-300))
    jumpers = resolved & real_slope
    frozen = resolved & ~real_slope

    # Steep sigmoids (conditioned sd much smaller than the mean's slope
    # in v) behave like jumps at this quadrature resolution; give the
    # panels a boundary at each crossing, and snap the steepest ones to
    # exact steps (the odd part of sigmoid-minus-step cancels, leaving a
    # second-order error in the transition width).
    with np.errstate(divide="ignore", invalid="ignore"):
        width = np.where(np.abs(fam.slope) > 0, sd1 / np.abs(fam.slope), np.inf)
    width = np.where(np.isnan(width), np.inf, width)
    steep = ~resolved & (width < 0.2)
    snap = ~resolved & (width < 1e-3)
    sd_eff = np.where(snap, 0.0, sd1)
    sharp = jumpers | steep

    def volumes(v_nodes: np.ndarray) -> np.ndarray:
        p = excursion_prob(fam.means(v_nodes), sd_eff[:, None], threshold)
        if np.any(frozen):
            p[frozen, :] = (fam.base_mean[frozen] >= threshold).astype(float)[:, None]
        return w @ p

    if not np.any(sharp):
        volume = volumes(rule.nodes)
        mean_vol = float(rule.weights @ volume)
        gain = float(rule.weights @ volume**2) - mean_vol**2
    else:
        v_star = (threshold - fam.base_mean[sharp]) / fam.slope[sharp]
        u_nodes, u_weights = _probit_panels(ndtr(v_star))
        volume = volumes(ndtri(u_nodes))
        mean_vol = float(u_weights @ volume)
        gain = float(u_weights @ volume**2) - mean_vol**2

    gain = min(max(gain, 0.0), h.value)
    return CriterionValue(residual=h.value - gain, gain=gain)


def evaluate_candidates(
    measure: GaussianMeasure,
    domain: Domain,
    spec: FunctionalSpec,
    candidates: Sequence[int],
    rule: QuadratureRule,
    seed: int = 0,
    method: str = "fast",
    h: FunctionalValue | None = None,
) -> list[CriterionValue]:
    """Criterion values at every candidate index.

    ``method="fast"`` selects the best available evaluation per kind
    (closed forms for kg/ei, total-variance quadrature for vev,
    quadrature for ibv); ``method="quadrature"`` forces the node-sum
    quadrature for every kind, which is the reference path.  Candidate
    evaluations are independent, each seeded from (seed, index).
    """
    if method not in ("fast", "quadrature"):
        raise ParameterError("method must be 'fast' or 'quadrature'")
    candidates = list(candidates)
    if not candidates:
        raise ParameterError("candidates must be nonempty")
    if h is None and not (method == "quadrature" and spec.kind in ("kg", "ei")):
        h = evaluate(spec, measure, domain, seed)

    out: list[CriterionValue] = []
    for c in candidates:
        sub = _sub_seed(seed, c)
        if method == "quadrature":
            out.append(j_quadrature(measure, domain, c, spec, rule, seed=sub, h=h))
        elif spec.kind == "ibv":
            out.append(j_quadrature(measure, domain, c, spec, rule, seed=sub, h=h))
        elif spec.kind == "vev":
            out.append(
                vev_criterion_total_variance(measure, domain, c, spec.threshold, rule, h=h)
            )
        elif spec.kind == "kg":
            out.append(kg_exact(measure, domain, c, h=h))
        else:
            out.append(ei_closed(measure, domain, c, spec.zero_sd_tol, h=h))
    return out


def max_expected_gain(
    measure: GaussianMeasure,
    domain: Domain,
    spec: FunctionalSpec,
    candidates: Sequence[int],
    rule: QuadratureRule,
    seed: int = 0,
) -> tuple[int, CriterionValue]:
    """Candidate with the largest expected gain (ties: lowest grid index)."""
    candidates = list(candidates)
    values = evaluate_candidates(measure, domain, spec, candidates, rule, seed)
    gains = np.array([v.gain for v in values])
    pos = int(np.lexsort((candidates, -gains))[0])
    return candidates[pos], values[pos]
