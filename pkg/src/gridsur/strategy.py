"""Sequential design loop and empirical diagnostics.

`run_sur` draws a truth path from the prior, places a deterministic
initial design, and then repeatedly selects the candidate whose
one-step-lookahead criterion is (within epsilon_n of) the minimum,
observes the truth there, and conditions the measure.  The returned
`RunTrace` records, per step, the residual uncertainty, the criterion
minimum and its value at the selected point, the tolerance epsilon_n,
the expected gain, and per-functional consistency metrics; it also
keeps the full sequence of posterior measures so the decrease of
conditional variances and the stabilization of means can be audited.

The diagnostics at the bottom turn the convergence guarantees into
measurable quantities: excursion-probability and plug-in
classification errors, the excursion-volume estimation gap, the
optimality gap at the posterior-mean maximizer, and the gap between
the best resolved value and the global maximum of the truth.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .criteria import evaluate_candidates
from .errors import ParameterError
from .functionals import FunctionalSpec, evaluate, zero_variance_set
from .grid import (
    Domain,
    GaussianMeasure,
    KernelSpec,
    build_prior,
    condition,
    sample_path,
    simulate_observation,
)
from .normals import QuadratureRule, excursion_prob, gauss_hermite_rule

# Slack added to the quasi-SUR inequality when auditing a trace.
QUASI_SUR_SLACK = 1e-9

# Permitted increase of a conditional variance between steps.
VARIANCE_MONOTONE_TOL = 1e-10


@dataclass(frozen=True)
class EpsilonSchedule:
    """Tolerance sequence for quasi-SUR selection.

    ``constant`` is allowed only with value 0 (exact selection), since
    the tolerances must vanish; ``inverse_n`` gives value/n at step n
    (1-based).
    """

    kind: str = "constant"
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "inverse_n"):
            raise ParameterError("epsilon kind must be 'constant' or 'inverse_n'")
        if self.value < 0:
            raise ParameterError("epsilon value must be nonnegative")
        if self.kind == "constant" and self.value != 0.0:
            raise ParameterError(
                "a constant epsilon schedule must be 0 (tolerances must vanish)"
            )

    def at(self, step: int) -> float:
        """Tolerance at 1-based step number."""
        if self.kind == "constant":
            return self.value
        return self.value / step


@dataclass(frozen=True)
class StrategyConfig:
    """Parameters of one sequential-design run."""

    spec: FunctionalSpec
    n_steps: int
    n_init: int = 3
    epsilon: EpsilonSchedule = field(default_factory=EpsilonSchedule)
    seed: int = 0
    candidates: Sequence[int] | str = "all"
    selection: str = "argmin"
    quadrature_nodes: int = 25

    def __post_init__(self):
        if self.n_steps < 0:
            raise ParameterError("n_steps must be nonnegative")
        if self.n_init < 0:
            raise ParameterError("n_init must be nonnegative")
        if self.seed < 0:
            raise ParameterError("seed must be nonnegative")
        if self.selection not in ("argmin", "second_in_band"):
            raise ParameterError("selection must be 'argmin' or 'second_in_band'")
        if isinstance(self.candidates, str) and self.candidates != "all":
            raise ParameterError("candidates must be 'all' or a list of indices")
        if self.spec.kind == "ei" and self.n_init < 1:
            raise ParameterError("ei requires n_init >= 1 (a current best must exist)")


@dataclass(frozen=True)
class StepRecord:
    """One row of a run trace.

    Selection fields are None on the final record, which only reports
    the terminal uncertainty and metrics.
    """

    step: int
    h: float
    h_stderr: float
    h_raw: float
    metrics: dict[str, float]
    selected_index: int | None = None
    observed_value: float | None = None
    j_min: float | None = None
    j_selected: float | None = None
    epsilon: float | None = None
    gain: float | None = None


@dataclass(frozen=True)
class RunTrace:
    """Complete record of one sequential-design run."""

    config: StrategyConfig
    truth: np.ndarray
    init_indices: np.ndarray
    init_values: np.ndarray
    records: list[StepRecord]
    measures: list[GaussianMeasure]
    metric_names: tuple[str, ...]

    def h_series(self) -> np.ndarray:
        return np.array([r.h for r in self.records])

    def quasi_sur_violation(self) -> float:
        """Largest violation of J(selected) <= min J + epsilon over the
        trace (negative when every row satisfies the inequality)."""
        worst = -np.inf
        for r in self.records:
            if r.selected_index is None:
                continue
            worst = max(worst, r.j_selected - r.j_min - r.epsilon)
        return float(worst)

    def quasi_sur_ok(self) -> bool:
        """Every row satisfies the selection inequality within slack."""
        return self.quasi_sur_violation() <= QUASI_SUR_SLACK


METRIC_NAMES = {
    "ibv": ("l2_prob", "l2_plugin"),
    "vev": ("volume_gap",),
    "kg": ("opt_gap",),
    "ei": ("gap_truth", "gap_best_mean"),
}


def ibv_consistency(
    truth: np.ndarray, measure: GaussianMeasure, domain: Domain, threshold: float
) -> tuple[float, float]:
    """Weighted squared errors of the excursion probability and of the
    plug-in classifier against the true excursion indicator."""
    truth = np.asarray(truth, dtype=float)
    ind = (truth >= threshold).astype(float)
    p = excursion_prob(measure.mean, measure.sd(), threshold)
    l2_prob = float(domain.weights @ (ind - p) ** 2)
    l2_plugin = float(domain.weights @ (ind - (p >= 0.5).astype(float)) ** 2)
    return l2_prob, l2_plugin


def vev_consistency(
    truth: np.ndarray, measure: GaussianMeasure, domain: Domain, threshold: float
) -> float:
    """Absolute gap between the expected and the true excursion volume."""
    truth = np.asarray(truth, dtype=float)
    p = excursion_prob(measure.mean, measure.sd(), threshold)
    est = float(domain.weights @ p)
    actual = float(domain.weights @ (truth >= threshold))
    return abs(est - actual)


def kg_consistency(truth: np.ndarray, measure: GaussianMeasure) -> float:
    """Optimality gap of the truth at the posterior-mean maximizer
    (ties resolved to the lowest index)."""
    truth = np.asarray(truth, dtype=float)
    best = int(np.argmax(measure.mean))
    return float(truth.max() - truth[best])


def ei_consistency(
    truth: np.ndarray, measure: GaussianMeasure, zero_sd_tol: float = 1e-9
) -> tuple[float, float]:
    """Gaps (max truth - best resolved value, max posterior mean - best
    resolved value); both vanish as the design resolves the maximum."""
    truth = np.asarray(truth, dtype=float)
    known = zero_variance_set(measure, zero_sd_tol)
    if not np.any(known):
        raise ParameterError("no resolved points: best value undefined")
    best_known = float(measure.mean[known].max())
    return float(truth.max() - best_known), float(measure.mean.max() - best_known)


def _metrics(
    spec: FunctionalSpec, truth: np.ndarray, measure: GaussianMeasure, domain: Domain
) -> dict[str, float]:
    if spec.kind == "ibv":
        a, b = ibv_consistency(truth, measure, domain, spec.threshold)
        return {"l2_prob": a, "l2_plugin": b}
    if spec.kind == "vev":
        return {"volume_gap": vev_consistency(truth, measure, domain, spec.threshold)}
    if spec.kind == "kg":
        return {"opt_gap": kg_consistency(truth, measure)}
    a, b = ei_consistency(truth, measure, spec.zero_sd_tol)
    return {"gap_truth": a, "gap_best_mean": b}


def initial_design(n_points: int, grid_size: int) -> np.ndarray:
    """Deterministic strided initial design: n_points indices spread
    evenly over the grid (unique, sorted)."""
    if n_points == 0:
        return np.array([], dtype=int)
    n_points = min(n_points, grid_size)
    return np.unique(np.round(np.linspace(0, grid_size - 1, n_points)).astype(int))


def _select(
    j_values: np.ndarray, candidates: Sequence[int], epsilon: float, selection: str
) -> int:
    """Position (into candidates) of the point to sample next.

    ``argmin`` takes the exact minimizer (lowest grid index on ties).
    ``second_in_band`` takes the second-smallest criterion value if it
    lies within epsilon of the minimum -- a deliberately non-optimal
    but admissible quasi-SUR choice -- and the minimizer otherwise.
    """
    order = np.lexsort((candidates, j_values))
    best = int(order[0])
    if selection == "second_in_band" and len(order) > 1:
        second = int(order[1])
        if j_values[second] <= j_values[best] + epsilon:
            return second
    return best


def run_sur(
    domain: Domain,
    kernel: KernelSpec,
    config: StrategyConfig,
    prior: GaussianMeasure | None = None,
) -> RunTrace:
    """Execute one sequential-design run against a simulated truth.

    The truth is a prior sample path (well-specified model); the run is
    fully reproducible from `config.seed`.  `prior` overrides the
    zero-mean prior built from the kernel, which allows degenerate
    priors that the kernel validation would reject.
    """
    spec = config.spec
    if spec.kind == "ei" and not domain.noiseless():
        raise ParameterError("ei requires a noiseless domain")

    root = np.random.SeedSequence(config.seed)
    truth_seed, h_seed, crit_seed, obs_root = root.spawn(4)
    truth_seed = int(truth_seed.generate_state(1)[0])
    h_seed = int(h_seed.generate_state(1)[0])
    crit_seed = int(crit_seed.generate_state(1)[0])

    if prior is None:
        prior = build_prior(domain, 0.0, kernel)
    truth = sample_path(prior, truth_seed)

    if isinstance(config.candidates, str):
        candidates = list(range(domain.size))
    else:
        candidates = [int(c) for c in config.candidates]
        if not candidates or min(candidates) < 0 or max(candidates) >= domain.size:
            raise ParameterError("candidate indices out of range")

    rule = gauss_hermite_rule(config.quadrature_nodes)
    obs_seeds = [int(s.generate_state(1)[0]) for s in obs_root.spawn(config.n_init + config.n_steps)]

    init_idx = initial_design(config.n_init, domain.size)
    init_obs = [
        simulate_observation(truth, domain, int(ix), obs_seeds[k])
        for k, ix in enumerate(init_idx)
    ]
    measure = condition(prior, init_obs)

    measures = [measure]
    records: list[StepRecord] = []
    for t in range(config.n_steps):
        h = evaluate(spec, measure, domain, h_seed)
        metrics = _metrics(spec, truth, measure, domain)
        step_seed = int(np.random.SeedSequence([crit_seed, t]).generate_state(1)[0])
        values = evaluate_candidates(
            measure, domain, spec, candidates, rule, seed=step_seed, h=h
        )
        j = np.array([v.residual for v in values])
        eps = config.epsilon.at(t + 1)
        pos = _select(j, candidates, eps, config.selection)
        chosen = candidates[pos]
        obs = simulate_observation(truth, domain, chosen, obs_seeds[config.n_init + t])
        records.append(
            StepRecord(
                step=t,
                h=h.value,
                h_stderr=h.stderr,
                h_raw=h.raw,
                metrics=metrics,
                selected_index=chosen,
                observed_value=obs.value,
                j_min=float(j.min()),
                j_selected=float(j[pos]),
                epsilon=eps,
                gain=values[pos].gain,
            )
        )
        measure = condition(measure, [obs])
        measures.append(measure)

    h = evaluate(spec, measure, domain, h_seed)
    records.append(
        StepRecord(
            step=config.n_steps,
            h=h.value,
            h_stderr=h.stderr,
            h_raw=h.raw,
            metrics=_metrics(spec, truth, measure, domain),
        )
    )
    return RunTrace(
        config=config,
        truth=truth,
        init_indices=init_idx,
        init_values=np.array([o.value for o in init_obs]),
        records=records,
        measures=measures,
        metric_names=METRIC_NAMES[spec.kind],
    )


@dataclass(frozen=True)
class SupermartingaleReport:
    """Per-candidate expected gains with the pass verdict
    gain >= -(tol + 3 * stderr) for every candidate."""

    candidates: list[int]
    gains: np.ndarray
    stderrs: np.ndarray
    tol: float
    passed: bool
    worst_margin: float


def check_supermartingale(
    measure: GaussianMeasure,
    domain: Domain,
    spec: FunctionalSpec,
    candidates: Sequence[int],
    rule: QuadratureRule,
    seed: int = 0,
    tol: float = 1e-6,
    method: str = "fast",
    corrupt: bool = False,
) -> SupermartingaleReport:
    """Verify the one-step inequality J_x <= H at every candidate.

    The default method evaluates each kind by its primary route, whose
    gains are deterministic (quadrature for the excursion functionals,
    exact closed forms for kg/ei); ``method="quadrature"`` forces the
    generic node-sum, whose Monte Carlo noise for kg/ei makes a
    per-candidate 3-sigma bound fail by multiplicity on large sweeps.
    `corrupt=True` negates the gains (a deliberately broken functional)
    so the checker itself can be shown to fail when it should.
    """
    values = evaluate_candidates(
        measure, domain, spec, list(candidates), rule, seed=seed, method=method
    )
    gains = np.array([v.gain for v in values])
    if corrupt:
        gains = -gains
    stderrs = np.array([v.stderr for v in values])
    margins = gains + tol + 3.0 * stderrs
    return SupermartingaleReport(
        candidates=list(candidates),
        gains=gains,
        stderrs=stderrs,
        tol=tol,
        passed=bool(np.all(margins >= 0.0)),
        worst_margin=float(margins.min()),
    )


@dataclass(frozen=True)
class ConvergenceReport:
    """Stepwise stability of a sequence of posteriors: sup-norm mean and
    covariance increments, and violations of the monotone decrease of
    pointwise variances beyond the documented tolerance."""

    mean_increments: np.ndarray
    cov_increments: np.ndarray
    variance_violations: int
    max_variance_increase: float
    passed: bool


def convergence_report(measures: Sequence[GaussianMeasure]) -> ConvergenceReport:
    if len(measures) < 2:
        raise ParameterError("need at least two measures")
    mean_inc = []
    cov_inc = []
    violations = 0
    worst = -np.inf
    for a, b in zip(measures[:-1], measures[1:]):
        mean_inc.append(float(np.max(np.abs(b.mean - a.mean))))
        cov_inc.append(float(np.max(np.abs(b.cov - a.cov))))
        rise = np.diagonal(b.cov) - np.diagonal(a.cov)
        worst = max(worst, float(rise.max()))
        violations += int(np.count_nonzero(rise > VARIANCE_MONOTONE_TOL))
    return ConvergenceReport(
        mean_increments=np.array(mean_inc),
        cov_increments=np.array(cov_inc),
        variance_violations=violations,
        max_variance_increase=worst,
        passed=violations == 0,
    )
