"""Arm selection strategies and known-reward-function oracles.

Learning policies see only the estimator, the exploration schedule, the
defense-region grid and the arm set; they never touch the true context or
the true reward function.  Three are provided:

* ``simple_ucb``   pick the arm with the largest UCB at the presented
                   context, ignoring context error.
* ``maxmin_ucb``   pick the arm whose smallest UCB over the region grid is
                   largest (robust in reward).
* ``minwd``        per grid point, measure each arm's UCB shortfall against
                   the best arm at that point; pick the arm whose worst
                   shortfall over the grid is smallest (robust in regret).

The oracle helpers at the bottom answer the same min/max questions for a
known reward function.  They feed metrics and reference values only and are
never consulted by the policies above.

All ties break toward the lowest arm index, then the lexicographically
first grid point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .estimator import ExplorationSchedule, KernelRidgeEstimator
from .kernels import ContextArmEncoder
from .region import ContextGrid

# Reward functions are vectorized per arm: f(contexts (m, c), arm) -> (m,).
RewardFn = Callable[[np.ndarray, int], np.ndarray]

SIMPLE_UCB = "simple_ucb"
MAXMIN_UCB = "maxmin_ucb"
MINWD = "minwd"
POLICY_NAMES = (SIMPLE_UCB, MAXMIN_UCB, MINWD)


@dataclass(frozen=True)
class PolicyDecision:
    """Selected arm plus the grid context witnessing the inner optimum."""

    arm: int
    witness_context: np.ndarray
    objective_value: float


@dataclass(frozen=True)
class OracleValues:
    """Robust optima for a known reward function on one region grid.

    ``mf`` is the best achievable worst-case reward, attained by
    ``maxmin_arm`` at ``maxmin_context``.  ``mr`` is the smallest achievable
    worst-case regret, attained by ``minmax_arm`` at ``minmax_context``.
    ``mr_bar`` is the gap between the best oracle reward anywhere on the
    grid and ``mf``; it bounds a different quantity than ``mr`` and is not
    comparable to it in general.
    """

    maxmin_arm: int
    maxmin_context: np.ndarray
    mf: float
    minmax_arm: int
    minmax_context: np.ndarray
    mr: float
    mr_bar: float


# -- UCB-side selection ------------------------------------------------------


def _ucb_row(estimator: KernelRidgeEstimator, schedule: ExplorationSchedule,
             context: np.ndarray, arms: Sequence[int], encoder: ContextArmEncoder) -> np.ndarray:
    z = encoder.encode_stack(np.atleast_1d(np.asarray(context, dtype=float))[None, :], arms)
    means, widths = estimator.query_batch(z)
    h = estimator.exploration_coefficient(schedule)
    return means + h * widths


def ucb_grid_table(estimator: KernelRidgeEstimator, schedule: ExplorationSchedule,
                   grid: ContextGrid, arms: Sequence[int], encoder: ContextArmEncoder) -> np.ndarray:
    """UCB values over grid x arms, shape (len(grid), len(arms))."""
    z = encoder.encode_stack(grid.points, arms)
    means, widths = estimator.query_batch(z)
    h = estimator.exploration_coefficient(schedule)
    return (means + h * widths).reshape(len(grid), len(arms))


def ucb_optimal_arm(estimator: KernelRidgeEstimator, schedule: ExplorationSchedule,
                    context: np.ndarray, arms: Sequence[int], encoder: ContextArmEncoder) -> int:
    """Arm with the largest UCB at the given context."""
    if len(arms) == 0:
        raise ValueError("arm set must be non-empty")
    return int(np.argmax(_ucb_row(estimator, schedule, context, arms, encoder)))


def ucb_degradation(estimator: KernelRidgeEstimator, schedule: ExplorationSchedule,
                    context: np.ndarray, arm: int, arms: Sequence[int],
                    encoder: ContextArmEncoder) -> float:
    """UCB shortfall of ``arm`` against the best arm at this context; >= 0."""
    row = _ucb_row(estimator, schedule, context, arms, encoder)
    return float(row.max() - row[list(arms).index(arm)])


def select_simple_ucb(estimator: KernelRidgeEstimator, schedule: ExplorationSchedule,
                      x_hat: np.ndarray, arms: Sequence[int],
                      encoder: ContextArmEncoder) -> PolicyDecision:
    """Trust the presented context and take its UCB-optimal arm."""
    if len(arms) == 0:
        raise ValueError("arm set must be non-empty")
    row = _ucb_row(estimator, schedule, x_hat, arms, encoder)
    best = int(np.argmax(row))
    return PolicyDecision(arm=arms[best],
                          witness_context=np.atleast_1d(np.asarray(x_hat, dtype=float)),
                          objective_value=float(row[best]))


def select_maxmin_ucb(estimator: KernelRidgeEstimator, schedule: ExplorationSchedule,
                      grid: ContextGrid, arms: Sequence[int],
                      encoder: ContextArmEncoder) -> PolicyDecision:
    """Maximize over arms the minimum UCB over the region grid."""
    if len(grid) == 0:
        raise ValueError("region grid must be non-empty")
    table = ucb_grid_table(estimator, schedule, grid, arms, encoder)
    per_arm_min = table.min(axis=0)
    best = int(np.argmax(per_arm_min))
    witness = int(np.argmin(table[:, best]))
    return PolicyDecision(arm=arms[best], witness_context=grid.points[witness],
                          objective_value=float(per_arm_min[best]))


def select_minwd(estimator: KernelRidgeEstimator, schedule: ExplorationSchedule,
                 grid: ContextGrid, arms: Sequence[int],
                 encoder: ContextArmEncoder) -> PolicyDecision:
    """Minimize over arms the worst UCB degradation over the region grid.

    One UCB table of len(grid) x len(arms) entries feeds both the per-point
    best arms and the degradations; this is the dominant per-round cost.
    """
    if len(grid) == 0:
        raise ValueError("region grid must be non-empty")
    table = ucb_grid_table(estimator, schedule, grid, arms, encoder)
    degradation = table.max(axis=1, keepdims=True) - table
    worst = degradation.max(axis=0)
    best = int(np.argmin(worst))
    witness = int(np.argmax(degradation[:, best]))
    return PolicyDecision(arm=arms[best], witness_context=grid.points[witness],
                          objective_value=float(worst[best]))


# -- known-function oracles ---------------------------------------------------


def reward_table(f: RewardFn, grid: ContextGrid, arms: Sequence[int]) -> np.ndarray:
    """True rewards over grid x arms, shape (len(grid), len(arms))."""
    return np.stack([np.asarray(f(grid.points, a), dtype=float) for a in arms], axis=1)


def oracle_optimal_arm(f: RewardFn, x: np.ndarray, arms: Sequence[int]) -> int:
    """Arm maximizing the true reward at context ``x``; ties to lowest index."""
    pt = np.atleast_1d(np.asarray(x, dtype=float))[None, :]
    values = np.array([float(f(pt, a)[0]) for a in arms])
    return int(np.argmax(values))


def maxmin_reward_oracle(f: RewardFn, grid: ContextGrid,
                         arms: Sequence[int]) -> tuple[int, np.ndarray, float]:
    """Arm maximizing the worst-case reward over the grid, its worst-case
    context, and the attained worst-case reward."""
    table = reward_table(f, grid, arms)
    per_arm_min = table.min(axis=0)
    best = int(np.argmax(per_arm_min))
    witness = int(np.argmin(table[:, best]))
    return arms[best], grid.points[witness], float(per_arm_min[best])


def _regret_table(table: np.ndarray) -> np.ndarray:
    return table.max(axis=1, keepdims=True) - table


def minmax_regret_oracle(f: RewardFn, grid: ContextGrid,
                         arms: Sequence[int]) -> tuple[int, np.ndarray, float]:
    """Arm minimizing the worst-case regret over the grid, its worst-case
    context, and the attained (nonnegative) worst-case regret."""
    regret = _regret_table(reward_table(f, grid, arms))
    per_arm_worst = regret.max(axis=0)
    best = int(np.argmin(per_arm_worst))
    witness = int(np.argmax(regret[:, best]))
    return arms[best], grid.points[witness], float(per_arm_worst[best])


def worst_case_regret_of_arm(f: RewardFn, grid: ContextGrid,
                             arms: Sequence[int], arm: int) -> float:
    """Largest regret of ``arm`` against the per-point oracle arm on the grid."""
    regret = _regret_table(reward_table(f, grid, arms))
    return float(regret[:, list(arms).index(arm)].max())


def mr_bar_oracle(f: RewardFn, grid: ContextGrid, arms: Sequence[int], mf: float) -> float:
    """Best oracle reward anywhere on the grid minus the max-min reward."""
    table = reward_table(f, grid, arms)
    return float(table.max(axis=1).max() - mf)


def oracles_from_table(table: np.ndarray, points: np.ndarray,
                       arms: Sequence[int]) -> OracleValues:
    """All robust optima from an already-evaluated reward table."""
    per_arm_min = table.min(axis=0)
    a_bar = int(np.argmax(per_arm_min))
    mf = float(per_arm_min[a_bar])
    x_bar = points[int(np.argmin(table[:, a_bar]))]
    regret = _regret_table(table)
    per_arm_worst = regret.max(axis=0)
    a_tilde = int(np.argmin(per_arm_worst))
    mr = float(per_arm_worst[a_tilde])
    x_tilde = points[int(np.argmax(regret[:, a_tilde]))]
    mr_bar = float(table.max(axis=1).max() - mf)
    return OracleValues(maxmin_arm=arms[a_bar], maxmin_context=x_bar, mf=mf,
                        minmax_arm=arms[a_tilde], minmax_context=x_tilde, mr=mr,
                        mr_bar=mr_bar)


def evaluate_oracles(f: RewardFn, grid: ContextGrid, arms: Sequence[int]) -> OracleValues:
    """All robust optima from a single reward-table evaluation."""
    return oracles_from_table(reward_table(f, grid, arms), grid.points, arms)
