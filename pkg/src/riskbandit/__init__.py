"""Distribution-oblivious, risk-aware best-arm identification.

Truncation-based mean and CVaR estimators for heavy-tailed losses, the
closed-form concentration and error bounds that go with them, the generalized
successive rejects family of fixed-budget algorithms, and a seeded
Monte-Carlo harness for error-probability curves.
"""

from riskbandit.distributions import (
    Constant,
    Exponential,
    Gaussian,
    Pareto,
    Seed,
    Uniform,
    analytic_cvar,
    analytic_mean,
    analytic_var,
    moment_bound,
    parse_distribution,
    sample,
)
from riskbandit.risk import (
    InsufficientSamples,
    RiskObjective,
    TruncationSchedule,
    empirical_cvar,
    empirical_var,
    objective_estimate,
    truncate_clamp,
    truncated_cvar,
    truncated_mean,
)
from riskbandit.bandit import (
    BanditInstance,
    PhaseSchedule,
    RunTrace,
    log_bar,
    run_gsr,
    sr_schedule,
    true_best_arm,
    ue_schedule,
)
from riskbandit.experiments import (
    AlgorithmConfig,
    ErrorPoint,
    ExperimentSpec,
    estimate_error_probability,
    preset_fig1,
    preset_fig3,
    sweep,
)

__version__ = "0.1.0"
