"""Sequential design on finite grids by stepwise uncertainty reduction.

Gaussian process posteriors on a fixed grid, four residual-uncertainty
functionals (integrated Bernoulli variance, excursion-volume variance,
knowledge gradient, expected improvement), one-step-lookahead criteria
with quadrature and closed-form evaluations, quasi-SUR selection loops,
and diagnostics that audit the decrease of uncertainty empirically.
"""

from .criteria import (
    CriterionValue,
    ei_closed,
    evaluate_candidates,
    j_quadrature,
    kg_exact,
    lookahead_measure,
    max_expected_gain,
    vev_criterion_total_variance,
)
from .errors import (
    ConfigError,
    GridSurError,
    NumericalError,
    ParameterError,
    StateError,
)
from .functionals import (
    FunctionalSpec,
    FunctionalValue,
    eval_ei,
    eval_ibv,
    eval_kg,
    eval_vev,
    evaluate,
    zero_variance_set,
)
from .grid import (
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
from .normals import (
    QuadratureRule,
    bvn_orthant,
    excursion_prob,
    expected_positive_part,
    gauss_hermite_rule,
    indicator_cov,
    std_normal_cdf,
    std_normal_pdf,
)
from .strategy import (
    ConvergenceReport,
    EpsilonSchedule,
    RunTrace,
    StepRecord,
    StrategyConfig,
    SupermartingaleReport,
    check_supermartingale,
    convergence_report,
    ei_consistency,
    ibv_consistency,
    initial_design,
    kg_consistency,
    run_sur,
    vev_consistency,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ConvergenceReport",
    "CriterionValue",
    "Domain",
    "EpsilonSchedule",
    "FunctionalSpec",
    "FunctionalValue",
    "GaussianMeasure",
    "GridSurError",
    "KernelSpec",
    "NumericalError",
    "Observation",
    "ParameterError",
    "QuadratureRule",
    "RunTrace",
    "StateError",
    "StepRecord",
    "StrategyConfig",
    "SupermartingaleReport",
    "bvn_orthant",
    "build_prior",
    "check_supermartingale",
    "condition",
    "convergence_report",
    "ei_closed",
    "ei_consistency",
    "eval_ei",
    "eval_ibv",
    "eval_kg",
    "eval_vev",
    "evaluate",
    "evaluate_candidates",
    "excursion_prob",
    "expected_positive_part",
    "gauss_hermite_rule",
    "ibv_consistency",
    "indicator_cov",
    "initial_design",
    "j_quadrature",
    "kg_consistency",
    "kg_exact",
    "lookahead_measure",
    "max_expected_gain",
    "predictive_sd",
    "regular_grid",
    "run_sur",
    "sample_path",
    "sample_paths",
    "simulate_observation",
    "std_normal_cdf",
    "std_normal_pdf",
    "vev_consistency",
    "vev_criterion_total_variance",
    "zero_variance_set",
]
