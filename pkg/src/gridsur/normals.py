"""Scalar and vectorized Gaussian probability kernels.

Everything downstream (uncertainty functionals, lookahead criteria)
reduces to a handful of univariate and bivariate normal quantities:
tail probabilities with a degenerate-variance convention, the expected
positive part of a Gaussian, upper-orthant probabilities of a correlated
pair, covariances of threshold indicators, and Gauss-Hermite rules for
expectations over a standard normal.

All functions accept floats or numpy arrays (broadcast) and are pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import ParameterError

_SQRT_2PI = np.sqrt(2.0 * np.pi)

# Tolerance for treating a correlation derived from a noisy 2x2 covariance
# block as admissible: |rho| may exceed 1 by at most this before the input
# is rejected as non-PSD.
_RHO_PSD_TOL = 1e-9


def std_normal_pdf(t):
    """Density of the standard normal distribution."""
    t = np.asarray(t, dtype=float)
    with np.errstate(over="ignore"):
        return np.exp(-0.5 * t * t) / _SQRT_2PI


def std_normal_cdf(t):
    """Distribution function of the standard normal, accurate to ~1e-16."""
    return ndtr(np.asarray(t, dtype=float))


def excursion_prob(mean, sd, threshold):
    """P(X >= threshold) for X ~ N(mean, sd^2), with sd >= 0.

    A degenerate marginal (sd = 0) yields a deterministic indicator:
    probability 1 when mean >= threshold, else 0.  The boundary
    mean = threshold, sd = 0 maps to 1.
    """
    mean = np.asarray(mean, dtype=float)
    sd = np.asarray(sd, dtype=float)
    if np.any(sd < 0):
        raise ParameterError("sd must be nonnegative")
    safe = np.where(sd > 0, sd, 1.0)
    with np.errstate(over="ignore"):
        p = ndtr((mean - threshold) / safe)
    p = np.where(sd > 0, p, (mean >= threshold).astype(float))
    return p if p.ndim else float(p)


def expected_positive_part(a, b):
    """E[max(Z, 0)] for Z ~ N(a, b), with variance b >= 0.

    Closed form a*Phi(a/sqrt(b)) + sqrt(b)*phi(a/sqrt(b)) for b > 0,
    and max(a, 0) for b = 0.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(b < 0):
        raise ParameterError("variance must be nonnegative")
    s = np.sqrt(b)
    safe = np.where(s > 0, s, 1.0)
    t = a / safe
    val = np.where(s > 0, a * ndtr(t) + s * std_normal_pdf(t), np.maximum(a, 0.0))
    return val if val.ndim else float(val)


def _orthant_limit_rho(h, k, rho_sign):
    """Orthant probability at the comonotone limits rho = +/-1."""
    h = np.asarray(h, dtype=float)
    k = np.asarray(k, dtype=float)
    upper = ndtr(-np.maximum(h, k))          # rho = +1: P(Z >= max(h, k))
    anti = np.maximum(0.0, 1.0 - ndtr(h) - ndtr(k))  # rho = -1: P(h <= Z <= -k)
    return np.where(rho_sign > 0, upper, anti)


def _gl_panels(n_panels: int, n_nodes: int):
    """Gauss-Legendre nodes/weights on [0, 1] split into panels that
    shrink geometrically toward 1 (where the integrand steepens as the
    correlation approaches +/-1)."""
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    edges = 1.0 - 0.5 ** np.arange(n_panels + 1)
    edges[-1] = 1.0
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


# Fractional panel layouts, precomputed once; finer layouts resolve the
# boundary layer of the integrand as |rho| approaches 1 (the finest is
# adequate up to 1 - 1e-15).  Tier thresholds on |rho| select a layout.
_PANEL_TIERS = (
    (0.9, _gl_panels(4, 12)),
    (1.0 - 1e-8, _gl_panels(14, 12)),
    (1.0, _gl_panels(28, 12)),
)


def bvn_orthant(h, k, rho):
    """P(Z1 >= h, Z2 >= k) for standard bivariate normal with correlation rho.

    Computed as the independent-case product plus the integral of the
    bivariate density over the correlation parameter, transformed by
    r = sin(theta) so the integrand is smooth up to |rho| = 1:

        P = cdf(-h) cdf(-k)
            + (1/2pi) int_0^asin(rho) exp(-(h^2 - 2hk sin t + k^2)
                                           / (2 cos^2 t)) dt

    Absolute accuracy is ~1e-13 over the full correlation range; the
    limits rho = +/-1 are handled in closed form.
    """
    h = np.asarray(h, dtype=float)
    k = np.asarray(k, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if np.any(np.abs(rho) > 1.0 + _RHO_PSD_TOL):
        raise ParameterError("correlation must lie in [-1, 1]")
    rho = np.clip(rho, -1.0, 1.0)

    h, k, rho = np.broadcast_arrays(h, k, rho)
    scalar = h.ndim == 0
    h = np.atleast_1d(h).astype(float)
    k = np.atleast_1d(k).astype(float)
    rho = np.atleast_1d(rho).astype(float)

    out = ndtr(-h) * ndtr(-k)

    at_limit = np.abs(rho) >= 1.0
    if np.any(at_limit):
        out[at_limit] = _orthant_limit_rho(
            h[at_limit], k[at_limit], np.sign(rho[at_limit])
        )

    abs_rho = np.abs(rho)
    lower = 0.0
    for upper, (frac, fw) in _PANEL_TIERS:
        tier = ~at_limit & (abs_rho > lower) & (abs_rho <= upper)
        if np.any(tier):
            hi, ki, ri = h[tier], k[tier], rho[tier]
            theta_max = np.arcsin(ri)
            theta = theta_max[:, None] * frac[None, :]
            sin_t = np.sin(theta)
            cos2_t = np.cos(theta) ** 2
            expo = -(hi[:, None] ** 2 - 2.0 * hi[:, None] * ki[:, None] * sin_t
                     + ki[:, None] ** 2) / (2.0 * cos2_t)
            out[tier] += (np.exp(expo) @ fw) * theta_max / (2.0 * np.pi)
        lower = upper

    out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if scalar else out


def indicator_cov(m1, m2, s1, s2, c12, threshold):
    """Covariance of the threshold indicators of a bivariate normal pair.

    Returns P(X1 >= T, X2 >= T) - P(X1 >= T) P(X2 >= T) for
    (X1, X2) ~ N((m1, m2), [[s1^2, c12], [c12, s2^2]]).

    A degenerate marginal (s = 0) makes its indicator constant, so the
    covariance is 0 regardless of the other arguments.  For two
    nondegenerate marginals the implied correlation must lie in [-1, 1]
    up to round-off, otherwise the block is rejected as non-PSD.
    """
    m1 = np.asarray(m1, dtype=float)
    m2 = np.asarray(m2, dtype=float)
    s1 = np.asarray(s1, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    c12 = np.asarray(c12, dtype=float)
    if np.any(s1 < 0) or np.any(s2 < 0):
        raise ParameterError("marginal sd must be nonnegative")

    m1, m2, s1, s2, c12 = np.broadcast_arrays(m1, m2, s1, s2, c12)
    scalar = m1.ndim == 0
    m1, m2, s1, s2, c12 = (np.atleast_1d(a).astype(float)
                           for a in (m1, m2, s1, s2, c12))

    both = (s1 > 0) & (s2 > 0)
    out = np.zeros(m1.shape)
    if np.any(both):
        ss1, ss2 = s1[both], s2[both]
        rho = c12[both] / (ss1 * ss2)
        if np.any(np.abs(rho) > 1.0 + _RHO_PSD_TOL):
            raise ParameterError("2x2 covariance block is not PSD")
        rho = np.clip(rho, -1.0, 1.0)
        T = np.asarray(threshold, dtype=float)
        hh = (T - m1[both]) / ss1
        kk = (T - m2[both]) / ss2
        joint = bvn_orthant(hh, kk, rho)
        p1 = ndtr(-hh)
        p2 = ndtr(-kk)
        out[both] = joint - p1 * p2
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights for E[f(V)], V ~ N(0, 1).

    Weights are positive and sum to one; nodes are strictly increasing.
    The standard-normal second moment is reproduced to 1e-10 for rules
    with at least two nodes (a single node cannot integrate v^2).
    """

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 1 or weights.shape != nodes.shape or nodes.size < 1:
            raise ParameterError("nodes and weights must be equal-length 1-d arrays")
        if np.any(np.diff(nodes) <= 0):
            raise ParameterError("nodes must be strictly increasing")
        if np.any(weights <= 0):
            raise ParameterError("weights must be positive")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ParameterError("weights must sum to one")
        if nodes.size >= 2 and abs(weights @ nodes**2 - 1.0) > 1e-10:
            raise ParameterError("rule fails the standard-normal moment check")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self) -> int:
        return self.nodes.size


def gauss_hermite_rule(n_nodes: int) -> QuadratureRule:
    """Gauss-Hermite rule rescaled to the standard normal weight.

    Exact for polynomials of degree <= 2*n_nodes - 1 under N(0, 1).
    """
    if not 1 <= n_nodes <= 101:
        raise ParameterError("n_nodes must be in [1, 101]")
    x, w = np.polynomial.hermite.hermgauss(n_nodes)
    nodes = np.sqrt(2.0) * x
    weights = w / w.sum()
    return QuadratureRule(nodes=nodes, weights=weights)
