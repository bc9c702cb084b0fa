"""Edge-datacenter selection environment.

Each arm is a datacenter with service rate ``mu`` and per-unit
communication delay ``p``.  Routing a workload of rate x to datacenter a
costs

    latency(x, a) = x / (mu_a - x) + p_a * x

(an M/M/1 queueing delay plus a linear transfer delay).  The reward is the
negated latency by default; a reciprocal transform is available but changes
which arm is robust-optimal, so it is opt-in.

Per round the environment draws a true workload uniformly from the context
domain, presents a corrupted copy sampled uniformly from the radius-delta
ball around it (clipped to the domain), and returns a noisy reward for the
committed arm.  The agent must fetch the corrupted context through
:meth:`EdgeEnvironment.begin_round` before committing an arm with
:meth:`EdgeEnvironment.finish_round`.

Context draws and reward noise come from two independent streams derived
from the run seed, so the context sequence is identical across policies
under the same seed (paired comparisons).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .kernels import ContextArmEncoder

NEGATE = "negate"
RECIPROCAL = "reciprocal"
REWARD_TRANSFORMS = (NEGATE, RECIPROCAL)


@dataclass(frozen=True)
class DatacenterArm:
    """Service rate and per-unit communication delay of one datacenter."""

    mu: float
    p: float

    def __post_init__(self) -> None:
        if self.mu <= 0 or self.p <= 0:
            raise ValueError(f"mu and p must be positive, got mu={self.mu}, p={self.p}")


DEFAULT_ARMS: tuple[DatacenterArm, ...] = (
    DatacenterArm(mu=35.0, p=0.040),
    DatacenterArm(mu=38.0, p=0.050),
    DatacenterArm(mu=45.0, p=0.074),
    DatacenterArm(mu=51.0, p=0.088),
)


@dataclass(frozen=True)
class EnvConfig:
    arms: tuple[DatacenterArm, ...] = DEFAULT_ARMS
    context_lo: float = 10.0
    context_hi: float = 30.0
    delta: float = 2.0
    noise_sigma: float = 0.05
    seed: int = 0
    horizon: int = 2000
    reward_transform: str = NEGATE

    def __post_init__(self) -> None:
        if not self.context_lo < self.context_hi:
            raise ValueError("context_lo must be below context_hi")
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.reward_transform not in REWARD_TRANSFORMS:
            raise ValueError(f"unknown reward transform {self.reward_transform!r}")
        if len(self.arms) == 0:
            raise ValueError("need at least one arm")
        for i, arm in enumerate(self.arms):
            # keep the queueing term finite and positive on the whole domain
            if arm.mu <= self.context_hi:
                raise ValueError(
                    f"arm {i} has mu={arm.mu} <= context_hi={self.context_hi}; "
                    "the queue would saturate inside the context domain")

    @property
    def n_arms(self) -> int:
        return len(self.arms)


@dataclass(frozen=True)
class RoundOutcome:
    x_true: np.ndarray
    x_hat: np.ndarray
    arm: int
    reward: float
    noiseless_reward: float


def latency(arm: DatacenterArm, x):
    """Total latency of routing workload rate ``x`` to ``arm``.

    Accepts a scalar or an array; requires 0 <= x < arm.mu.
    """
    xs = np.asarray(x, dtype=float)
    if np.any(xs < 0) or np.any(xs >= arm.mu):
        raise ValueError(f"workload must satisfy 0 <= x < mu={arm.mu}")
    out = xs / (arm.mu - xs) + arm.p * xs
    return float(out) if out.ndim == 0 else out


def true_reward(config: EnvConfig, arm_index: int, x):
    """Reward of playing ``arm_index`` at workload ``x`` (scalar or array)."""
    cost = latency(config.arms[arm_index], x)
    if config.reward_transform == RECIPROCAL:
        return 1.0 / cost
    return -cost


@dataclass
class EdgeEnvironment:
    """Stateful per-run environment instance; rounds are strictly sequential."""

    config: EnvConfig
    _ctx_rng: np.random.Generator = field(init=False, repr=False)
    _noise_rng: np.random.Generator = field(init=False, repr=False)
    _pending: tuple[float, float] | None = field(init=False, default=None, repr=False)

    def __post_init__(self) -> None:
        ctx_ss, noise_ss = np.random.SeedSequence(self.config.seed).spawn(2)
        self._ctx_rng = np.random.default_rng(ctx_ss)
        self._noise_rng = np.random.default_rng(noise_ss)

    def encoder(self) -> ContextArmEncoder:
        return ContextArmEncoder(context_lo=np.array([self.config.context_lo]),
                                 context_hi=np.array([self.config.context_hi]),
                                 n_arms=self.config.n_arms)

    def reward_fn(self, contexts: np.ndarray, arm: int) -> np.ndarray:
        """Vectorized true reward over (m, 1) context rows for one arm."""
        xs = np.atleast_2d(np.asarray(contexts, dtype=float))[:, 0]
        return np.asarray(true_reward(self.config, arm, xs))

    def begin_round(self) -> np.ndarray:
        """Draw the round's true context and return the corrupted copy.

        Must be followed by exactly one :meth:`finish_round`.
        """
        if self._pending is not None:
            raise RuntimeError("begin_round called twice without finish_round")
        cfg = self.config
        x_true = self._ctx_rng.uniform(cfg.context_lo, cfg.context_hi)
        raw = self._ctx_rng.uniform(x_true - cfg.delta, x_true + cfg.delta)
        x_hat = float(np.clip(raw, cfg.context_lo, cfg.context_hi))
        self._pending = (x_true, x_hat)
        return np.array([x_hat])

    def finish_round(self, arm: int) -> RoundOutcome:
        """Commit the arm, draw the noisy reward, and reveal the true context."""
        if self._pending is None:
            raise RuntimeError("finish_round called before begin_round")
        x_true, x_hat = self._pending
        self._pending = None
        cfg = self.config
        if not 0 <= arm < cfg.n_arms:
            raise ValueError(f"arm {arm} out of range [0, {cfg.n_arms})")
        noiseless = float(true_reward(cfg, arm, x_true))
        noise = cfg.noise_sigma * self._noise_rng.standard_normal()
        return RoundOutcome(x_true=np.array([x_true]), x_hat=np.array([x_hat]),
                            arm=arm, reward=noiseless + noise,
                            noiseless_reward=noiseless)

    def step(self, arm: int) -> RoundOutcome:
        """One-shot round for callers that pick the arm without the context."""
        self.begin_round()
        return self.finish_round(arm)
