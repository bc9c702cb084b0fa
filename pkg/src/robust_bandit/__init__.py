"""Robust contextual bandit arm selection under imperfect context.

The agent sees a corrupted context before choosing an arm and defends by
optimizing over a norm ball around it: either maximizing the worst-case
reward UCB or minimizing the worst-case UCB degradation.  The package
bundles the kernel ridge estimator, the robust selection policies and their
known-function oracles, an edge-datacenter selection environment, and the
experiment and verification harness.
"""

from .edge_env import (DEFAULT_ARMS, DatacenterArm, EdgeEnvironment, EnvConfig,
                       RoundOutcome, latency, true_reward)
from .estimator import (ExplorationSchedule, KernelRidgeEstimator,
                        NumericalConsistencyError, exploration_coefficient)
from .experiment import (CSV_HEADER, BoundCurves, DefenseConfig, EstimatorConfig,
                         RoundRecord, RunSummary, bound_curves, records_to_csv,
                         reference_slack, replicate, run_episode, summarize,
                         verify_concentration, verify_width_sum, write_csv)
from .kernels import (ContextArmEncoder, ContextArmVector, KernelSpec,
                      cross_vector, eval_kernel, gram_matrix)
from .policies import (OracleValues, PolicyDecision, evaluate_oracles,
                       maxmin_reward_oracle, minmax_regret_oracle, mr_bar_oracle,
                       oracle_optimal_arm, select_maxmin_ucb, select_minwd,
                       select_simple_ucb, ucb_degradation, ucb_optimal_arm,
                       worst_case_regret_of_arm)
from .region import ContextGrid, DefenseRegion, contains, enumerate_grid

__version__ = "0.1.0"

__all__ = [
    "BoundCurves", "CSV_HEADER", "ContextArmEncoder", "ContextArmVector",
    "ContextGrid", "DEFAULT_ARMS", "DatacenterArm", "DefenseConfig",
    "DefenseRegion", "EdgeEnvironment", "EnvConfig", "EstimatorConfig",
    "ExplorationSchedule", "KernelRidgeEstimator", "KernelSpec",
    "NumericalConsistencyError", "OracleValues", "PolicyDecision",
    "RoundOutcome", "RoundRecord", "RunSummary", "bound_curves", "contains",
    "cross_vector", "enumerate_grid", "eval_kernel", "evaluate_oracles",
    "exploration_coefficient", "gram_matrix", "latency", "maxmin_reward_oracle",
    "minmax_regret_oracle", "mr_bar_oracle", "oracle_optimal_arm",
    "records_to_csv", "reference_slack", "replicate", "run_episode",
    "select_maxmin_ucb", "select_minwd", "select_simple_ucb", "summarize",
    "true_reward", "ucb_degradation", "ucb_optimal_arm", "verify_concentration",
    "verify_width_sum", "worst_case_regret_of_arm", "write_csv",
]
