"""Finite grids, covariance kernels, Gaussian measures, and conditioning.

A `Domain` is a finite set of points in R^d (d = 1 or 2) carrying
nonnegative integration weights and per-point observation-noise
standard deviations.  A `GaussianMeasure` is a mean vector and
covariance matrix over the points of a bound domain; conditioning on
(possibly noisy, possibly rank-deficient) observations produces a fresh
measure via a pseudo-inverse update:

    mean'  = mean + C[:, ix] K^+ (z - mean[ix])
    cov'   = cov  - C[:, ix] K^+ C[ix, :]

with K = C[ix, ix] + diag(noise_sd[ix]^2) and K^+ the eigenvalue
pseudo-inverse.  All objects are immutable after construction; every
random draw takes an explicit seed, so the module is safe under
concurrent use of shared inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .errors import NumericalError, ParameterError

KERNEL_FAMILIES = ("squared_exponential", "matern32", "matern52")

# Relative eigenvalue cutoff of the pseudo-inverse: eigenvalues below
# 1e-10 times the largest one are inverted as zero.
_PINV_RTOL = 1e-10

# Diagonal entries of a covariance in [-1e-8 * scale, 0) are round-off
# and clamp to zero; anything more negative is treated as a bug.
_DIAG_CLAMP_RTOL = 1e-8

# A covariance whose largest entry is below this (relative to the mean
# magnitude) is treated as the exactly-degenerate Gaussian.
_DEGENERATE_RTOL = 1e-12


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Domain:
    """Grid points with integration weights and noise standard deviations."""

    points: np.ndarray
    weights: np.ndarray
    noise_sd: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[1] not in (1, 2):
            raise ParameterError("points must be (N,) or (N, d) with d in {1, 2}")
        w = np.asarray(self.weights, dtype=float)
        tau = np.asarray(self.noise_sd, dtype=float)
        n = pts.shape[0]
        if n < 1 or w.shape != (n,) or tau.shape != (n,):
            raise ParameterError("points, weights, noise_sd must share length >= 1")
        if np.any(w < 0) or not w.sum() > 0:
            raise ParameterError("weights must be nonnegative with positive total")
        if np.any(tau < 0):
            raise ParameterError("noise_sd must be nonnegative")
        object.__setattr__(self, "points", _readonly(pts))
        object.__setattr__(self, "weights", _readonly(w))
        object.__setattr__(self, "noise_sd", _readonly(tau))

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def noiseless(self) -> bool:
        return bool(np.all(self.noise_sd == 0))


def regular_grid(
    extent,
    resolution: int,
    *,
    weights: np.ndarray | None = None,
    noise_sd: float | np.ndarray = 0.0,
) -> Domain:
    """Regular grid over an interval (1-d) or rectangle (2-d).

    `extent` is (lo, hi) or ((lo1, hi1), (lo2, hi2)).  Uniform weights
    give each point an equal share of the extent's volume, so the total
    mass equals the length/area.  `resolution` is the per-axis point
    count (the 2-d grid has resolution**2 points).
    """
    ext = np.asarray(extent, dtype=float)
    if resolution < 2:
        raise ParameterError("resolution must be >= 2")
    if ext.shape == (2,):
        pts = np.linspace(ext[0], ext[1], resolution)[:, None]
        volume = float(ext[1] - ext[0])
    elif ext.shape == (2, 2):
        axes = [np.linspace(lo, hi, resolution) for lo, hi in ext]
        xx, yy = np.meshgrid(*axes, indexing="ij")
        pts = np.column_stack([xx.ravel(), yy.ravel()])
        volume = float(np.prod(ext[:, 1] - ext[:, 0]))
    else:
        raise ParameterError("extent must be (lo, hi) or ((lo, hi), (lo, hi))")
    if volume <= 0:
        raise ParameterError("extent must have positive volume")
    n = pts.shape[0]
    if weights is None:
        weights = np.full(n, volume / n)
    noise = np.broadcast_to(np.asarray(noise_sd, dtype=float), (n,))
    return Domain(points=pts, weights=np.asarray(weights, dtype=float), noise_sd=noise)


@dataclass(frozen=True)
class KernelSpec:
    """Stationary covariance kernel: family, variance, per-axis lengthscale."""

    family: str
    variance: float
    lengthscale: np.ndarray

    def __post_init__(self):
        if self.family not in KERNEL_FAMILIES:
            raise ParameterError(f"unknown kernel family {self.family!r}")
        if not self.variance > 0:
            raise ParameterError("variance must be positive")
        ell = np.atleast_1d(np.asarray(self.lengthscale, dtype=float))
        if np.any(ell <= 0):
            raise ParameterError("lengthscales must be positive")
        object.__setattr__(self, "variance", float(self.variance))
        object.__setattr__(self, "lengthscale", _readonly(ell))

    def matrix(self, points: np.ndarray, other: np.ndarray | None = None) -> np.ndarray:
        """Covariance matrix between two point sets (symmetric if one set)."""
        a = np.atleast_2d(np.asarray(points, dtype=float))
        b = a if other is None else np.atleast_2d(np.asarray(other, dtype=float))
        ell = np.broadcast_to(self.lengthscale, (a.shape[1],))
        diff = (a[:, None, :] - b[None, :, :]) / ell
        r = np.sqrt(np.sum(diff * diff, axis=-1))
        if self.family == "squared_exponential":
            k = np.exp(-0.5 * r * r)
        elif self.family == "matern32":
            c = np.sqrt(3.0) * r
            k = (1.0 + c) * np.exp(-c)
        else:  # matern52
            c = np.sqrt(5.0) * r
            k = (1.0 + c + c * c / 3.0) * np.exp(-c)
        out = self.variance * k
        if other is None:
            out = 0.5 * (out + out.T)
        return out


class Observation(NamedTuple):
    """A single observation: grid index and observed value."""

    index: int
    value: float


@dataclass(frozen=True, eq=False)
class GaussianMeasure:
    """Gaussian measure on a grid: mean vector and covariance matrix.

    The covariance is symmetrized on construction and must be symmetric
    to 1e-12 relative; diagonal round-off in [-1e-8 * scale, 0) clamps
    to zero, anything below raises.  `scale` defaults to the largest
    covariance magnitude; producers of derived measures (conditioning)
    pass the scale of the parent so fully-resolved posteriors validate.
    """

    domain: Domain
    mean: np.ndarray
    cov: np.ndarray
    scale: float = field(default=0.0, compare=False)

    def __post_init__(self):
        n = self.domain.size
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if mean.shape != (n,) or cov.shape != (n, n):
            raise ParameterError("mean/cov shapes must match the domain size")
        mag = float(np.max(np.abs(cov))) if cov.size else 0.0
        asym = float(np.max(np.abs(cov - cov.T)))
        if asym > 1e-12 * max(mag, 1e-300):
            raise ParameterError("covariance is not symmetric within tolerance")
        cov = 0.5 * (cov + cov.T)
        scale = float(self.scale) if self.scale > 0 else max(mag, 1e-12)
        d = np.diagonal(cov).copy()
        neg = d < 0
        if np.any(d < -_DIAG_CLAMP_RTOL * scale):
            raise NumericalError(
                "covariance diagonal has negative entries beyond round-off"
            )
        if np.any(neg):
            cov = cov.copy()
            np.fill_diagonal(cov, np.where(neg, 0.0, d))
        object.__setattr__(self, "mean", _readonly(mean))
        object.__setattr__(self, "cov", _readonly(cov))
        object.__setattr__(self, "scale", scale)

    @property
    def size(self) -> int:
        return self.domain.size

    def sd(self) -> np.ndarray:
        """Pointwise posterior standard deviations (clamped diagonal)."""
        return np.sqrt(np.maximum(np.diagonal(self.cov), 0.0))

    def is_degenerate(self) -> bool:
        """True when the covariance is zero up to round-off, i.e. the
        measure is a point mass at its mean."""
        mag = float(np.max(np.abs(self.cov)))
        ref = max(1.0, float(np.max(np.abs(self.mean))) if self.size else 1.0)
        return mag <= _DEGENERATE_RTOL * ref

    def min_eigenvalue_margin(self) -> float:
        """Smallest eigenvalue plus the documented PSD tolerance
        (1e-8 * trace/N); nonnegative for a numerically PSD matrix."""
        w = np.linalg.eigvalsh(self.cov)
        tol = _DIAG_CLAMP_RTOL * max(float(np.trace(self.cov)) / self.size, 0.0)
        return float(w.min() + tol)


def build_prior(domain: Domain, mean_const: float, kernel: KernelSpec) -> GaussianMeasure:
    """Constant-mean Gaussian prior with the kernel's covariance on the grid."""
    cov = kernel.matrix(domain.points)
    mean = np.full(domain.size, float(mean_const))
    return GaussianMeasure(domain=domain, mean=mean, cov=cov, scale=kernel.variance)


def _pseudo_inverse(K: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(K)
    cut = _PINV_RTOL * max(float(w.max()), 0.0)
    inv = np.where(w > cut, 1.0, 0.0) / np.where(w > cut, w, 1.0)
    return (V * inv) @ V.T


def condition(measure: GaussianMeasure, observations: Iterable[Observation]) -> GaussianMeasure:
    """Posterior measure given a batch of observations.

    Batch conditioning agrees with one-at-a-time conditioning; repeated
    or contradictory noiseless observations are resolved by the
    pseudo-inverse (rank-deficient systems project onto the consistent
    subspace).
    """
    obs = list(observations)
    if not obs:
        return measure
    n = measure.size
    ix = np.array([o.index for o in obs], dtype=int)
    if np.any(ix < 0) or np.any(ix >= n):
        raise ParameterError("observation index out of range")
    z = np.array([o.value for o in obs], dtype=float)

    cov = measure.cov
    tau2 = measure.domain.noise_sd[ix] ** 2
    K = cov[np.ix_(ix, ix)] + np.diag(tau2)
    Kdag = _pseudo_inverse(K)
    cross = cov[:, ix]
    mean_n = measure.mean + cross @ (Kdag @ (z - measure.mean[ix]))
    cov_n = cov - cross @ Kdag @ cross.T
    cov_n = 0.5 * (cov_n + cov_n.T)
    return GaussianMeasure(
        domain=measure.domain, mean=mean_n, cov=cov_n, scale=measure.scale
    )


def predictive_sd(measure: GaussianMeasure, index: int) -> float:
    """Standard deviation of the next observation at a grid index:
    sqrt(posterior variance + noise variance)."""
    if not 0 <= index < measure.size:
        raise ParameterError("index out of range")
    var = max(float(measure.cov[index, index]), 0.0)
    tau = float(measure.domain.noise_sd[index])
    return float(np.sqrt(var + tau * tau))


def _factor(measure: GaussianMeasure) -> np.ndarray | None:
    """Symmetric factor L with L L^T ~= cov, or None for a degenerate
    measure (draws then return the mean exactly).

    Tries Cholesky with an escalating diagonal jitter from 1e-12 to
    1e-6 times trace/N, then falls back to an eigenvalue factorization
    with negative round-off clipped to zero.
    """
    if measure.is_degenerate():
        return None
    cov = measure.cov
    n = measure.size
    base = max(float(np.trace(cov)) / n, 0.0)
    if base > 0:
        for exponent in range(-12, -5):
            jitter = base * 10.0**exponent
            try:
                return np.linalg.cholesky(cov + jitter * np.eye(n))
            except np.linalg.LinAlgError:
                continue
    w, V = np.linalg.eigh(cov)
    if w.min() < -_DIAG_CLAMP_RTOL * max(float(w.max()), base, 1e-300):
        raise NumericalError("covariance factorization failed: matrix not PSD")
    return V * np.sqrt(np.clip(w, 0.0, None))


def sample_path(measure: GaussianMeasure, seed: int) -> np.ndarray:
    """One draw from the measure; deterministic given the seed."""
    return sample_paths(measure, 1, seed)[:, 0]


def sample_paths(measure: GaussianMeasure, n_paths: int, seed: int) -> np.ndarray:
    """(N, n_paths) array of independent draws; deterministic given the seed."""
    if n_paths < 1:
        raise ParameterError("n_paths must be >= 1")
    L = _factor(measure)
    if L is None:
        return np.repeat(measure.mean[:, None], n_paths, axis=1)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((measure.size, n_paths))
    return measure.mean[:, None] + L @ z


def simulate_observation(
    truth: np.ndarray, domain: Domain, index: int, seed: int
) -> Observation:
    """Noisy evaluation of a fixed truth vector at a grid index."""
    truth = np.asarray(truth, dtype=float)
    if not 0 <= index < domain.size:
        raise ParameterError("index out of range")
    rng = np.random.default_rng(seed)
    value = float(truth[index] + domain.noise_sd[index] * rng.standard_normal())
    return Observation(index=index, value=value)
