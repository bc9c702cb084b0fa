"""Self-verification suite behind the ``check`` subcommand.

Each check re-derives an expected answer through an independent route
(dense solves, exhaustive tables, definitional identities) and compares it
against the production path.  Checks are deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .config import RunConfig
from .edge_env import EnvConfig
from .estimator import ExplorationSchedule, KernelRidgeEstimator
from .experiment import (ORACLE_MAXMIN, ORACLE_MINMAX, DefenseConfig,
                         EstimatorConfig, run_episode, verify_concentration,
                         verify_width_sum)
from .kernels import ContextArmEncoder, KernelSpec, kernel_matrix
from .policies import (select_maxmin_ucb, select_minwd, select_simple_ucb,
                       ucb_grid_table)
from .region import DefenseRegion, enumerate_grid


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _random_estimator(rng, kernel, lam, n_obs, encoder) -> KernelRidgeEstimator:
    est = KernelRidgeEstimator(kernel, lam, dim=encoder.dim)
    for _ in range(n_obs):
        ctx = rng.uniform(0, 1, size=1)
        arm = int(rng.integers(0, encoder.n_arms))
        est.observe(encoder.encode(ctx, arm), float(rng.normal()))
    return est


def check_estimator_matches_dense(n_instances: int = 60, max_history: int = 30,
                                  seed: int = 0, rtol: float = 1e-8) -> CheckResult:
    """Incremental means/widths against from-scratch dense linear solves."""
    rng = np.random.default_rng(seed)
    kernel = KernelSpec()
    encoder = ContextArmEncoder(np.array([0.0]), np.array([1.0]), n_arms=4)
    worst = 0.0
    for _ in range(n_instances):
        lam = float(rng.uniform(0.05, 2.0))
        n = int(rng.integers(1, max_history + 1))
        est = _random_estimator(rng, kernel, lam, n, encoder)
        query = encoder.encode(rng.uniform(0, 1, size=1), int(rng.integers(0, 4)))
        pts = est.history_points
        a_mat = kernel_matrix(kernel, pts, pts) + lam * np.eye(n)
        kq = kernel_matrix(kernel, pts, query.combined[None, :])[:, 0]
        mean_dense = float(kq @ np.linalg.solve(a_mat, est.rewards))
        s2_dense = (1.0 - float(kq @ np.linalg.solve(a_mat, kq))) / lam
        width_dense = math.sqrt(max(s2_dense, 0.0))
        scale_m = max(abs(mean_dense), 1e-12)
        scale_w = max(width_dense, 1e-12)
        worst = max(worst,
                    abs(est.predict_mean(query) - mean_dense) / scale_m,
                    abs(est.confidence_width(query) - width_dense) / scale_w)
    return CheckResult("estimator matches dense solve", worst <= rtol,
                       f"max relative error {worst:.3e} over {n_instances} instances")


def check_width_sum_bound(seed: int = 0) -> CheckResult:
    """Realized width-sum inequality at lam=1 (asserted) and lam=0.1 (reported)."""
    defense = DefenseConfig()
    env = EnvConfig(seed=seed, horizon=200)
    strict = run_episode(env, "maxmin_ucb",
                         EstimatorConfig(lam=1.0), defense)
    strict_res = verify_width_sum(strict)
    loose = run_episode(env, "maxmin_ucb",
                        EstimatorConfig(lam=0.1), defense)
    loose_res = verify_width_sum(loose)
    detail = (f"lam=1: {strict_res.width_sum:.4f} <= {strict_res.gain_bound:.4f}; "
              f"lam=0.1 (informational): {loose_res.width_sum:.4f} vs "
              f"{loose_res.gain_bound:.4f} ({'holds' if loose_res.passed else 'violated'})")
    return CheckResult("width-sum bound at lam=1", strict_res.passed, detail)


def check_concentration(seed: int = 0) -> CheckResult:
    res = verify_concentration(confidence_delta=0.1, horizon=500, seed=seed)
    target = 0.9
    return CheckResult("concentration coverage", res.coverage >= target,
                       f"coverage {res.coverage:.4f} over {res.n_checked} checks "
                       f"(target >= {target})")


def check_zero_radius_collapse(n_instances: int = 50, seed: int = 0) -> CheckResult:
    """All three policies agree when the defense radius is zero."""
    rng = np.random.default_rng(seed)
    kernel = KernelSpec()
    encoder = ContextArmEncoder(np.array([0.0]), np.array([1.0]), n_arms=4)
    arms = (0, 1, 2, 3)
    schedule = ExplorationSchedule()
    lo, hi = np.array([0.0]), np.array([1.0])
    mismatches = 0
    for _ in range(n_instances):
        est = _random_estimator(rng, kernel, 0.1, int(rng.integers(0, 12)), encoder)
        x_hat = rng.uniform(0, 1, size=1)
        region = DefenseRegion(center=x_hat, radius=0.0, domain_lo=lo, domain_hi=hi)
        grid = enumerate_grid(region, 41)
        a1 = select_simple_ucb(est, schedule, x_hat, arms, encoder).arm
        a2 = select_maxmin_ucb(est, schedule, grid, arms, encoder).arm
        a3 = select_minwd(est, schedule, grid, arms, encoder).arm
        mismatches += int(not (a1 == a2 == a3))
    return CheckResult("zero-radius policy collapse", mismatches == 0,
                       f"{mismatches} mismatches over {n_instances} instances")


def check_policy_dominance(n_instances: int = 30, seed: int = 0) -> CheckResult:
    """Argmax/argmin optimality of the two robust selections, re-checked
    against exhaustive evaluation of the same UCB table."""
    rng = np.random.default_rng(seed)
    kernel = KernelSpec()
    encoder = ContextArmEncoder(np.array([0.0]), np.array([1.0]), n_arms=3)
    arms = (0, 1, 2)
    schedule = ExplorationSchedule()
    lo, hi = np.array([0.0]), np.array([1.0])
    failures = 0
    for _ in range(n_instances):
        est = _random_estimator(rng, kernel, 0.1, int(rng.integers(1, 15)), encoder)
        region = DefenseRegion(center=rng.uniform(0, 1, size=1), radius=0.1,
                               domain_lo=lo, domain_hi=hi)
        grid = enumerate_grid(region, 11)
        table = ucb_grid_table(est, schedule, grid, arms, encoder)
        mm = select_maxmin_ucb(est, schedule, grid, arms, encoder)
        if not all(mm.objective_value >= table[:, j].min() - 1e-12 for j in range(3)):
            failures += 1
        wd = select_minwd(est, schedule, grid, arms, encoder)
        degr = table.max(axis=1, keepdims=True) - table
        if not all(wd.objective_value <= degr[:, j].max() + 1e-12 for j in range(3)):
            failures += 1
    return CheckResult("robust-selection dominance", failures == 0,
                       f"{failures} violations over {n_instances} instances")


def check_oracle_play_identities(seed: int = 0, horizon: int = 100,
                                 tol: float = 1e-9) -> CheckResult:
    """Replaying the oracle arms reproduces the definitional regret values."""
    env = EnvConfig(seed=seed, horizon=horizon)
    maxmin = run_episode(env, ORACLE_MAXMIN)
    robust_total = maxmin[-1].robust_cum
    minmax = run_episode(env, ORACLE_MINMAX)
    worst_total = minmax[-1].worst_cum
    mr_total = sum(r.mr for r in minmax)
    ok = abs(robust_total) <= tol and abs(worst_total - mr_total) <= tol
    return CheckResult("oracle-play identities", ok,
                       f"robust residual {robust_total:.2e}, "
                       f"worst-case residual {abs(worst_total - mr_total):.2e}")


def run_all(config: RunConfig) -> list[CheckResult]:
    seed = config.env.seed
    return [
        check_estimator_matches_dense(seed=seed),
        check_width_sum_bound(seed=seed),
        check_concentration(seed=seed),
        check_zero_radius_collapse(seed=seed),
        check_policy_dominance(seed=seed),
        check_oracle_play_identities(seed=seed),
    ]
