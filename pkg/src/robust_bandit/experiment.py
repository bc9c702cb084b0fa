"""Round loop, regret accounting, replication and verification.

Each round proceeds: receive the corrupted context, build the defense
region around it, let the policy pick an arm from UCBs alone, then complete
the environment step and score the choice against the known reward
function.  Three regret objectives are tracked per round:

* true regret        r(x_t, a_t) at the revealed context,
* robust regret      worst-case reward of the max-min oracle arm minus the
                     worst-case reward of the played arm (a pseudo regret:
                     the two rewards are taken at different contexts),
* worst-case regret  largest regret of the played arm over the region.

The known reward function is used only on the metrics side; the estimator
and policies never see it.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .edge_env import EdgeEnvironment, EnvConfig, true_reward
from .estimator import ExplorationSchedule, KernelRidgeEstimator
from .kernels import KernelSpec
from .policies import (MAXMIN_UCB, MINWD, POLICY_NAMES, SIMPLE_UCB,
                       PolicyDecision, oracles_from_table, select_maxmin_ucb,
                       select_minwd, select_simple_ucb)
from .region import DefenseRegion, enumerate_grid

# debug policies that replay the known-function oracles; useful for
# validating the metric identities, never for benchmarking
ORACLE_MAXMIN = "oracle_maxmin"
ORACLE_MINMAX = "oracle_minmax"
RUNNER_POLICIES = POLICY_NAMES + (ORACLE_MAXMIN, ORACLE_MINMAX)

CSV_HEADER = ("t,seed,policy,x_hat,x_true,arm,reward,r_inst,R_cum,robust_inst,"
              "robust_cum,worst_inst,worst_cum,MF,MR,MR_bar,s_t,gamma_t")


@dataclass(frozen=True)
class EstimatorConfig:
    kernel: KernelSpec = KernelSpec()
    lam: float = 0.1
    schedule: ExplorationSchedule = ExplorationSchedule()

    def __post_init__(self) -> None:
        if self.lam <= 0:
            raise ValueError(f"lam must be positive, got {self.lam}")


@dataclass(frozen=True)
class DefenseConfig:
    delta: float = 2.0
    norm: str = "l2"
    grid_points: int = 41

    def __post_init__(self) -> None:
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")
        if self.grid_points < 1 or self.grid_points % 2 == 0:
            raise ValueError(f"grid_points must be a positive odd integer, got {self.grid_points}")


@dataclass(frozen=True)
class RoundRecord:
    t: int
    seed: int
    policy: str
    x_hat: float
    x_true: float
    arm: int
    reward: float
    r_inst: float
    r_cum: float
    robust_inst: float
    robust_cum: float
    worst_inst: float
    worst_cum: float
    mf: float
    mr: float
    mr_bar: float
    s_t: float
    gamma_t: float


@dataclass
class RunSummary:
    """Cross-seed aggregate of one policy's runs (paired context streams)."""

    policy: str
    seeds: list[int]
    horizon: int
    true_mean: np.ndarray
    true_std: np.ndarray
    robust_mean: np.ndarray
    robust_std: np.ndarray
    worst_mean: np.ndarray
    worst_std: np.ndarray
    reward_gap_first: float   # mean of (mf - noiseless reward), first quarter
    reward_gap_last: float    # same, last quarter
    regret_gap_first: float   # mean of (worst_inst - mr), first quarter
    regret_gap_last: float
    width_sum_checks: list["WidthSumCheck"]

    @property
    def reward_gap_ratio(self) -> float:
        return self.reward_gap_last / self.reward_gap_first

    @property
    def regret_gap_ratio(self) -> float:
        return self.regret_gap_last / self.regret_gap_first


def run_episode(env_config: EnvConfig, policy: str,
                estimator_config: EstimatorConfig = EstimatorConfig(),
                defense_config: DefenseConfig = DefenseConfig(),
                seed: int | None = None) -> list[RoundRecord]:
    """Run one full episode and return per-round records.

    ``seed`` overrides ``env_config.seed`` when given, which is how a
    replication sweep reuses a single config.
    """
    if policy not in RUNNER_POLICIES:
        raise ValueError(f"unknown policy {policy!r}; expected one of {RUNNER_POLICIES}")
    cfg = replace(env_config, seed=seed) if seed is not None else env_config
    env = EdgeEnvironment(cfg)
    encoder = env.encoder()
    estimator = KernelRidgeEstimator(estimator_config.kernel, estimator_config.lam,
                                     dim=encoder.dim, capacity=min(cfg.horizon + 1, 4096))
    schedule = estimator_config.schedule
    arms = tuple(range(cfg.n_arms))
    lo = np.array([cfg.context_lo])
    hi = np.array([cfg.context_hi])

    records: list[RoundRecord] = []
    r_cum = robust_cum = worst_cum = 0.0
    try:
        for t in range(1, cfg.horizon + 1):
            x_hat = env.begin_round()
            region = DefenseRegion(center=x_hat, radius=defense_config.delta,
                                   norm=defense_config.norm, domain_lo=lo, domain_hi=hi)
            grid = enumerate_grid(region, defense_config.grid_points)

            table = np.stack([env.reward_fn(grid.points, a) for a in arms], axis=1)
            oracle = oracles_from_table(table, grid.points, arms)

            decision = _select(policy, estimator, schedule, x_hat, grid, arms, encoder, oracle)
            outcome = env.finish_round(decision.arm)
            x_true = outcome.x_true

            rewards_here = np.array([float(env.reward_fn(x_true[None, :], a)[0]) for a in arms])
            r_inst = float(rewards_here.max() - rewards_here[decision.arm])
            robust_inst = oracle.mf - float(table[:, decision.arm].min())
            regret_col = table.max(axis=1) - table[:, decision.arm]
            worst_inst = float(regret_col.max())

            point = encoder.encode(x_true, decision.arm)
            s_t = estimator.confidence_width(point)
            estimator.observe(point, outcome.reward)
            gamma_t = estimator.information_gain()

            r_cum += r_inst
            robust_cum += robust_inst
            worst_cum += worst_inst
            records.append(RoundRecord(
                t=t, seed=cfg.seed, policy=policy,
                x_hat=float(x_hat[0]), x_true=float(x_true[0]), arm=decision.arm,
                reward=outcome.reward, r_inst=r_inst, r_cum=r_cum,
                robust_inst=robust_inst, robust_cum=robust_cum,
                worst_inst=worst_inst, worst_cum=worst_cum,
                mf=oracle.mf, mr=oracle.mr, mr_bar=oracle.mr_bar,
                s_t=s_t, gamma_t=gamma_t))
    except Exception as exc:
        raise RuntimeError(f"episode failed at round {len(records) + 1} "
                           f"(policy={policy}, seed={cfg.seed})") from exc
    return records


def _select(policy, estimator, schedule, x_hat, grid, arms, encoder, oracle) -> PolicyDecision:
    if policy == SIMPLE_UCB:
        return select_simple_ucb(estimator, schedule, x_hat, arms, encoder)
    if policy == MAXMIN_UCB:
        return select_maxmin_ucb(estimator, schedule, grid, arms, encoder)
    if policy == MINWD:
        return select_minwd(estimator, schedule, grid, arms, encoder)
    if policy == ORACLE_MAXMIN:
        return PolicyDecision(arm=oracle.maxmin_arm, witness_context=oracle.maxmin_context,
                              objective_value=oracle.mf)
    return PolicyDecision(arm=oracle.minmax_arm, witness_context=oracle.minmax_context,
                          objective_value=oracle.mr)


# -- replication ---------------------------------------------------------------


def _episode_task(args):
    env_config, policy, estimator_config, defense_config, seed = args
    return run_episode(env_config, policy, estimator_config, defense_config, seed=seed)


def replicate(env_config: EnvConfig, policies: Sequence[str],
              estimator_config: EstimatorConfig = EstimatorConfig(),
              defense_config: DefenseConfig = DefenseConfig(),
              n_seeds: int = 1, jobs: int = 1) -> dict[str, list[list[RoundRecord]]]:
    """Run every policy for seeds seed0 .. seed0+n-1 with shared streams.

    All policies see identical context and noise sequences per seed, so
    cross-policy differences are paired.  Returns records per policy, seed
    order preserved.
    """
    if n_seeds < 1:
        raise ValueError("n_seeds must be at least 1")
    seeds = [env_config.seed + i for i in range(n_seeds)]
    tasks = [(env_config, policy, estimator_config, defense_config, seed)
             for policy in policies for seed in seeds]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_episode_task, tasks))
    else:
        results = [_episode_task(t) for t in tasks]
    out: dict[str, list[list[RoundRecord]]] = {}
    i = 0
    for policy in policies:
        out[policy] = [results[i + j] for j in range(len(seeds))]
        i += len(seeds)
    return out


def summarize(env_config: EnvConfig, policy: str,
              runs: list[list[RoundRecord]]) -> RunSummary:
    """Aggregate one policy's per-seed runs into mean/std curves and the
    first-vs-last-quarter gap means used by the vanishing-gap checks."""
    horizon = len(runs[0])
    seeds = [run[0].seed for run in runs]
    true_c = np.array([[rec.r_cum for rec in run] for run in runs])
    robust_c = np.array([[rec.robust_cum for rec in run] for run in runs])
    worst_c = np.array([[rec.worst_cum for rec in run] for run in runs])
    ddof = 1 if len(runs) > 1 else 0

    q = max(horizon // 4, 1)
    reward_gaps = np.array([[rec.mf - true_reward(env_config, rec.arm, rec.x_true)
                             for rec in run] for run in runs])
    regret_gaps = np.array([[rec.worst_inst - rec.mr for rec in run] for run in runs])

    return RunSummary(
        policy=policy, seeds=seeds, horizon=horizon,
        true_mean=true_c.mean(axis=0), true_std=true_c.std(axis=0, ddof=ddof),
        robust_mean=robust_c.mean(axis=0), robust_std=robust_c.std(axis=0, ddof=ddof),
        worst_mean=worst_c.mean(axis=0), worst_std=worst_c.std(axis=0, ddof=ddof),
        reward_gap_first=float(reward_gaps[:, :q].mean()),
        reward_gap_last=float(reward_gaps[:, horizon - q:].mean()),
        regret_gap_first=float(regret_gaps[:, :q].mean()),
        regret_gap_last=float(regret_gaps[:, horizon - q:].mean()),
        width_sum_checks=[verify_width_sum(run) for run in runs])


# -- reference curves ------------------------------------------------------------


@dataclass(frozen=True)
class BoundCurves:
    """Advisory reference curves; plotted, never asserted."""

    t: np.ndarray
    cum_mf: np.ndarray
    cum_mr: np.ndarray
    cum_mr_bar: np.ndarray
    slack: np.ndarray


def reference_slack(t: int, h: float, d_bar: float, lam: float) -> float:
    """Deviation envelope 2*h*sqrt(2*t*d_bar*log(1 + t/(d_bar*lam)))."""
    if t <= 0:
        return 0.0
    return 2.0 * h * math.sqrt(2.0 * t * d_bar * math.log1p(t / (d_bar * lam)))


def bound_curves(records: Sequence[RoundRecord], schedule: ExplorationSchedule,
                 lam: float) -> BoundCurves:
    """Per-round cumulative oracle optima plus the realized deviation
    envelope 2*h_t*sqrt(2*t*gamma_t), using the run's own information gain
    in place of an a-priori rank bound."""
    t = np.array([rec.t for rec in records])
    gains = np.array([rec.gamma_t for rec in records])
    h = np.array([schedule.coefficient(g, lam) for g in gains])
    slack = 2.0 * h * np.sqrt(2.0 * t * gains)
    return BoundCurves(
        t=t,
        cum_mf=np.cumsum([rec.mf for rec in records]),
        cum_mr=np.cumsum([rec.mr for rec in records]),
        cum_mr_bar=np.cumsum([rec.mr_bar for rec in records]),
        slack=slack)


# -- verification -----------------------------------------------------------------


@dataclass(frozen=True)
class WidthSumCheck:
    """Both sides of sum_t s_t^2 <= 2 * gamma_T over one realized run."""

    width_sum: float
    gain_bound: float
    passed: bool


def verify_width_sum(records: Sequence[RoundRecord], slack: float = 1e-6) -> WidthSumCheck:
    """Check that realized squared widths never outrun twice the final
    information gain.  Holds when lam >= 1; at smaller lam the result is
    informational only (the first round alone can break it)."""
    if len(records) == 0:
        return WidthSumCheck(width_sum=0.0, gain_bound=0.0, passed=True)
    lhs = float(sum(rec.s_t**2 for rec in records))
    rhs = 2.0 * records[-1].gamma_t
    return WidthSumCheck(width_sum=lhs, gain_bound=rhs, passed=lhs <= rhs + slack)


@dataclass(frozen=True)
class CoverageResult:
    coverage: float
    n_checked: int
    n_violations: int


def verify_concentration(kernel: KernelSpec = KernelSpec(), lam: float = 0.1,
                         reward_bound: float = 1.0, noise_scale: float = 0.05,
                         confidence_delta: float = 0.1, horizon: int = 500,
                         n_probes: int = 50, n_arms: int = 3, n_centers: int = 12,
                         seed: int = 0, width_scale: float = 1.0) -> CoverageResult:
    """Empirical coverage of |mean - truth| <= h_t * width on a synthetic run.

    The target function is a finite kernel expansion scaled to norm exactly
    ``reward_bound``, observed under gaussian noise of scale ``noise_scale``,
    and estimated under the theoretical exploration schedule.  A fixed probe
    set is scored before every observation.  ``width_scale`` shrinks the
    allowed band for sensitivity checks.
    """
    from .kernels import ContextArmEncoder, kernel_matrix

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    encoder = ContextArmEncoder(context_lo=np.array([0.0]), context_hi=np.array([1.0]),
                                n_arms=n_arms)

    def joined(contexts: np.ndarray, arms: np.ndarray) -> np.ndarray:
        coords = [encoder.arm_coordinate(int(a)) for a in arms]
        return np.column_stack([contexts, coords])

    centers = joined(rng.uniform(0, 1, size=n_centers),
                     rng.integers(0, n_arms, size=n_centers))
    weights = rng.standard_normal(n_centers)
    gram = kernel_matrix(kernel, centers, centers)
    norm = math.sqrt(float(weights @ gram @ weights))
    weights *= reward_bound / norm

    def f_of(z: np.ndarray) -> np.ndarray:
        return kernel_matrix(kernel, z, centers) @ weights

    probes = joined(rng.uniform(0, 1, size=n_probes),
                    rng.integers(0, n_arms, size=n_probes))
    probe_truth = f_of(probes)

    schedule = ExplorationSchedule(mode="theoretical", reward_bound=reward_bound,
                                   noise_scale=noise_scale, confidence_delta=confidence_delta)
    estimator = KernelRidgeEstimator(kernel, lam, dim=encoder.dim,
                                     capacity=horizon + 1)
    violations = 0
    checked = 0
    arm_list = tuple(range(n_arms))
    for _ in range(horizon):
        h = estimator.exploration_coefficient(schedule)
        means, widths = estimator.query_batch(probes)
        violations += int(np.sum(np.abs(means - probe_truth) >
                                 width_scale * h * widths + 1e-12))
        checked += n_probes

        x = rng.uniform(0, 1)
        row = encoder.encode_stack(np.array([[x]]), arm_list)
        row_means, row_widths = estimator.query_batch(row)
        arm = int(np.argmax(row_means + h * row_widths))
        point = encoder.encode(np.array([x]), arm)
        y = float(f_of(point.combined[None, :])[0]) + noise_scale * rng.standard_normal()
        estimator.observe(point, y)
    return CoverageResult(coverage=1.0 - violations / checked,
                          n_checked=checked, n_violations=violations)


# -- CSV ---------------------------------------------------------------------------


def _fmt(v: float) -> str:
    return f"{v:.9g}"


def records_to_csv(runs: Iterable[Sequence[RoundRecord]]) -> str:
    """Serialize runs into the canonical CSV layout (9 significant digits)."""
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for run in runs:
        for r in run:
            buf.write(",".join((
                str(r.t), str(r.seed), r.policy, _fmt(r.x_hat), _fmt(r.x_true),
                str(r.arm), _fmt(r.reward), _fmt(r.r_inst), _fmt(r.r_cum),
                _fmt(r.robust_inst), _fmt(r.robust_cum), _fmt(r.worst_inst),
                _fmt(r.worst_cum), _fmt(r.mf), _fmt(r.mr), _fmt(r.mr_bar),
                _fmt(r.s_t), _fmt(r.gamma_t))) + "\n")
    return buf.getvalue()


def write_csv(path, runs: Iterable[Sequence[RoundRecord]]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(records_to_csv(runs))
