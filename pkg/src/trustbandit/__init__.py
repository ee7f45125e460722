"""Certified policy improvement for data-starved offline bandits.

Given one or a few reward samples per arm, the trust-region method searches
a weighted ellipsoid around the logging distribution, penalizes each radius
by a Monte Carlo estimate of the localized noise supremum, and returns a
stochastic policy together with a high-probability lower bound on its value.
"""

from .core import (
    ArmDataset,
    ArmStats,
    ImprovementVector,
    StochasticPolicy,
    compute_stats,
    policy_value_empirical,
    reference_policy,
)
from .solver import (
    SolveResult,
    SolverError,
    TrustRegionSpec,
    batch_sup_objectives,
    max_radius,
    solve_radius_profile,
    solve_trust_region,
)
from .complexity import (
    ComplexityTable,
    analytic_g_bound,
    compute_d_bound,
    compute_m0,
    estimate_g,
    min_m_for_quantile,
    sample_noise,
)
from .trust import (
    RadiusGrid,
    TrustOutcome,
    build_grid,
    ceil_eps,
    certified_lower_bound,
    critical_radius,
    hoeffding_width,
    run_trust,
)
from .baselines import (
    PolicyReport,
    run_behavior,
    run_combined,
    run_greedy,
    run_lcb,
    trust_report,
)
from .simulate import (
    DEFAULT_SEEDS,
    INSTANCE_TAGS,
    ExperimentSummary,
    MethodSummary,
    StrongSignalResult,
    SweepRow,
    SyntheticInstance,
    gen_data_starved,
    gen_linear_means,
    gen_strong_signal,
    generate,
    run_experiment,
    strong_signal_check,
    sweep_radius,
    true_value,
)
from .io import (
    RunConfig,
    emit_report,
    load_dataset,
    load_trajectory_returns,
)
from .estimators import (
    BehaviorClonePolicy,
    CombinedPolicy,
    GreedyPolicy,
    LCBPolicy,
    TrustRegionPolicy,
)

__version__ = "0.1.0"

__all__ = [
    "ArmDataset",
    "ArmStats",
    "BehaviorClonePolicy",
    "CombinedPolicy",
    "ComplexityTable",
    "DEFAULT_SEEDS",
    "ExperimentSummary",
    "GreedyPolicy",
    "INSTANCE_TAGS",
    "ImprovementVector",
    "LCBPolicy",
    "MethodSummary",
    "PolicyReport",
    "RadiusGrid",
    "RunConfig",
    "SolveResult",
    "SolverError",
    "StochasticPolicy",
    "StrongSignalResult",
    "SweepRow",
    "SyntheticInstance",
    "TrustOutcome",
    "TrustRegionPolicy",
    "TrustRegionSpec",
    "analytic_g_bound",
    "batch_sup_objectives",
    "build_grid",
    "ceil_eps",
    "certified_lower_bound",
    "compute_d_bound",
    "compute_m0",
    "compute_stats",
    "critical_radius",
    "emit_report",
    "estimate_g",
    "gen_data_starved",
    "gen_linear_means",
    "gen_strong_signal",
    "generate",
    "hoeffding_width",
    "load_dataset",
    "load_trajectory_returns",
    "max_radius",
    "min_m_for_quantile",
    "policy_value_empirical",
    "reference_policy",
    "run_behavior",
    "run_combined",
    "run_experiment",
    "run_greedy",
    "run_lcb",
    "run_trust",
    "sample_noise",
    "solve_radius_profile",
    "solve_trust_region",
    "strong_signal_check",
    "sweep_radius",
    "true_value",
    "trust_report",
]
