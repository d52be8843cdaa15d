"""Residual-uncertainty functionals of a Gaussian measure on a grid.

Four functionals share one evaluation contract (`evaluate`):

* ``ibv`` -- integrated Bernoulli variance of the excursion indicators
  above a threshold, weighted by the grid measure.
* ``vev`` -- variance of the excursion volume, expanded over pairwise
  indicator covariances.
* ``kg``  -- knowledge-gradient uncertainty E[max f] - max E[f],
  estimated by Monte Carlo over sampled paths.
* ``ei``  -- expected-improvement uncertainty E[max f] - best value at
  points of (numerically) zero posterior variance; defined only for
  noiseless domains after at least one observation.

Values are nonnegative; Monte Carlo estimates are clamped at zero and
the unclamped estimate is preserved in ``FunctionalValue.raw``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import NumericalError, ParameterError, StateError
from .grid import Domain, GaussianMeasure, _factor
from .normals import bvn_orthant, excursion_prob

FUNCTIONAL_KINDS = ("ibv", "vev", "kg", "ei")

# Marginals whose variance is below this fraction of the largest grid
# variance are treated as resolved in the pairwise expansion (their
# indicator is constant, so their covariance contribution vanishes).
_VEV_DEGENERATE_RTOL = 1e-14

# Cross-covariances of conditioned measures carry absolute round-off up
# to roughly machine epsilon amplified by the pseudo-inverse cutoff
# (1e-10 of the largest eigenvalue), i.e. ~1e-6 of the variance scale on
# near-singular kernels.  The PSD check of each 2x2 block is therefore
# |c| - s1*s2 <= tol * max variance in covariance units; admissible
# overshoots project onto [-1, 1].
_VEV_PSD_TOL = 1e-5


@dataclass(frozen=True)
class FunctionalSpec:
    """Choice of uncertainty functional and its parameters."""

    kind: str
    threshold: float | None = None
    mc_samples: int = 4096
    zero_sd_tol: float = 1e-9

    def __post_init__(self):
        if self.kind not in FUNCTIONAL_KINDS:
            raise ParameterError(f"unknown functional kind {self.kind!r}")
        needs_threshold = self.kind in ("ibv", "vev")
        if needs_threshold and self.threshold is None:
            raise ParameterError(f"{self.kind} requires a threshold")
        if not needs_threshold and self.threshold is not None:
            raise ParameterError(f"{self.kind} does not take a threshold")
        if self.mc_samples < 1:
            raise ParameterError("mc_samples must be >= 1")
        if self.zero_sd_tol < 0:
            raise ParameterError("zero_sd_tol must be nonnegative")


@dataclass(frozen=True)
class FunctionalValue:
    """A functional evaluation: nonnegative value plus MC standard error.

    ``raw`` is the estimate before clamping at zero; ``stderr_valid`` is
    False when the standard error cannot be estimated (single MC draw).
    """

    value: float
    stderr: float = 0.0
    stderr_valid: bool = True
    raw: float | None = None

    def __post_init__(self):
        if self.value < 0 or self.stderr < 0:
            raise ParameterError("value and stderr must be nonnegative")
        if self.raw is None:
            object.__setattr__(self, "raw", self.value)


def _check_bound(measure: GaussianMeasure, domain: Domain) -> None:
    if measure.domain is not domain:
        raise ParameterError("measure is not bound to the given domain")


def eval_ibv(measure: GaussianMeasure, domain: Domain, threshold: float) -> FunctionalValue:
    """Integrated Bernoulli variance: sum of w(u) p(u) (1 - p(u))."""
    _check_bound(measure, domain)
    p = excursion_prob(measure.mean, measure.sd(), threshold)
    value = float(domain.weights @ (p * (1.0 - p)))
    return FunctionalValue(value=max(value, 0.0))


def _pairwise_parts(cov: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Active-point mask, standard deviations, and pairwise correlation
    matrix of a covariance, with resolved points dropped and round-off
    correlations projected into [-1, 1]."""
    d = np.maximum(np.diagonal(cov), 0.0)
    scale = float(d.max()) if d.size else 0.0
    active = d > _VEV_DEGENERATE_RTOL * max(scale, 1e-300)
    if not np.any(active):
        return active, np.zeros(0), np.zeros((0, 0))
    s = np.sqrt(d[active])
    sub = cov[np.ix_(active, active)]
    bound = np.outer(s, s)
    if float((np.abs(sub) - bound).max()) > _VEV_PSD_TOL * scale:
        raise NumericalError("pairwise covariance beyond PSD tolerance")
    return active, s, np.clip(sub / bound, -1.0, 1.0)


def _vev_value(
    mean: np.ndarray,
    weights: np.ndarray,
    active: np.ndarray,
    s: np.ndarray,
    rho: np.ndarray,
    threshold: float,
) -> float:
    """Weighted double sum of indicator covariances for given marginals.

    Only the strict upper triangle goes through the orthant quadrature;
    the diagonal is the exact Bernoulli variance p(1-p).
    """
    if s.size == 0:
        return 0.0
    h = (threshold - mean[active]) / s
    p = ndtr(-h)
    w = weights[active]
    value = float(w @ (w * p * (1.0 - p)))
    if s.size > 1:
        iu, ju = np.triu_indices(s.size, k=1)
        joint = bvn_orthant(h[iu], h[ju], rho[iu, ju])
        value += 2.0 * float((w[iu] * w[ju]) @ (joint - p[iu] * p[ju]))
    return value


def eval_vev(measure: GaussianMeasure, domain: Domain, threshold: float) -> FunctionalValue:
    """Variance of the excursion volume via the pairwise expansion
    sum_{u,v} w(u) w(v) cov(1_{f(u)>=T}, 1_{f(v)>=T})."""
    _check_bound(measure, domain)
    active, s, rho = _pairwise_parts(measure.cov)
    value = _vev_value(measure.mean, domain.weights, active, s, rho, threshold)
    return FunctionalValue(value=max(value, 0.0), raw=value)


def _path_maxima(measure: GaussianMeasure, n_paths: int, seed: int) -> np.ndarray | None:
    """Per-path maxima of MC draws, or None when the measure is a point
    mass (the maximum is then max(mean) exactly)."""
    L = _factor(measure)
    if L is None:
        return None
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((measure.size, n_paths))
    return (measure.mean[:, None] + L @ z).max(axis=0)


def _mc_value(maxima: np.ndarray | None, reference: float, exact_max: float) -> FunctionalValue:
    """Clamped MC estimate of E[max f] - reference with its standard error."""
    if maxima is None:
        raw = exact_max - reference
        return FunctionalValue(value=max(raw, 0.0), raw=raw)
    raw = float(maxima.mean() - reference)
    n = maxima.size
    if n > 1:
        stderr = float(maxima.std(ddof=1) / np.sqrt(n))
        return FunctionalValue(value=max(raw, 0.0), stderr=stderr, raw=raw)
    return FunctionalValue(value=max(raw, 0.0), stderr=0.0, stderr_valid=False, raw=raw)


def eval_kg(measure: GaussianMeasure, mc_samples: int, seed: int) -> FunctionalValue:
    """Knowledge-gradient uncertainty E[max f] - max E[f].

    A single-point domain and the degenerate measure short-circuit to 0
    without Monte Carlo.
    """
    if mc_samples < 1:
        raise ParameterError("mc_samples must be >= 1")
    best_mean = float(measure.mean.max())
    if measure.size == 1 or measure.is_degenerate():
        return FunctionalValue(value=0.0)
    maxima = _path_maxima(measure, mc_samples, seed)
    return _mc_value(maxima, best_mean, best_mean)


def zero_variance_set(measure: GaussianMeasure, zero_sd_tol: float) -> np.ndarray:
    """Boolean mask of points whose posterior variance is numerically zero,
    relative to max(1, largest current variance)."""
    d = np.maximum(np.diagonal(measure.cov), 0.0)
    scale = max(1.0, float(d.max()) if d.size else 0.0)
    return d <= zero_sd_tol * scale


def eval_ei(
    measure: GaussianMeasure,
    domain: Domain,
    mc_samples: int,
    zero_sd_tol: float,
    seed: int,
) -> FunctionalValue:
    """Expected-improvement uncertainty E[max f] - best resolved value.

    Requires a noiseless domain and at least one point of numerically
    zero posterior variance (the current best is undefined otherwise).
    """
    _check_bound(measure, domain)
    if mc_samples < 1:
        raise ParameterError("mc_samples must be >= 1")
    if not domain.noiseless():
        raise ParameterError("ei requires a noiseless domain (noise_sd == 0)")
    known = zero_variance_set(measure, zero_sd_tol)
    if not np.any(known):
        raise StateError("ei is undefined before the first noiseless observation")
    best_known = float(measure.mean[known].max())
    if measure.is_degenerate():
        raw = float(measure.mean.max()) - best_known
        return FunctionalValue(value=max(raw, 0.0), raw=raw)
    maxima = _path_maxima(measure, mc_samples, seed)
    return _mc_value(maxima, best_known, float(measure.mean.max()))


def evaluate(
    spec: FunctionalSpec, measure: GaussianMeasure, domain: Domain, seed: int
) -> FunctionalValue:
    """Evaluate the functional selected by ``spec``; deterministic given seed."""
    if spec.kind == "ibv":
        return eval_ibv(measure, domain, spec.threshold)
    if spec.kind == "vev":
        return eval_vev(measure, domain, spec.threshold)
    if spec.kind == "kg":
        _check_bound(measure, domain)
        return eval_kg(measure, spec.mc_samples, seed)
    return eval_ei(measure, domain, spec.mc_samples, spec.zero_sd_tol, seed)
