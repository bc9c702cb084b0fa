"""Run configuration: INI file with flat sections, strictly validated.

Unknown sections or keys are rejected (typos in sweep configs should fail
loudly, not silently fall back to defaults).  Error messages carry the line
number of the offending entry where it can be located.

Precedence is CLI flag > config file > built-in default; the environment
variable ROBUST_BANDIT_SEED overrides the seed from the file.
"""

from __future__ import annotations

import configparser
import os
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from .edge_env import REWARD_TRANSFORMS, DatacenterArm, EnvConfig
from .estimator import ExplorationSchedule
from .experiment import RUNNER_POLICIES, DefenseConfig, EstimatorConfig
from .kernels import KERNEL_FAMILIES, KernelSpec
from .region import NORMS

SEED_ENV_VAR = "ROBUST_BANDIT_SEED"

_SCHEMA = {
    "run": ("policies", "n_seeds", "output", "oracle_grid_points", "jobs"),
    "env": ("arms", "context_lo", "context_hi", "delta", "noise_sigma", "seed",
            "horizon", "reward_transform"),
    "kernel": ("family", "lengthscale"),
    "estimator": ("lambda", "exploration.mode", "exploration.h_fixed",
                  "exploration.B", "exploration.b", "exploration.delta"),
    "defense": ("delta", "norm", "grid_points"),
}


class ConfigError(Exception):
    """Invalid or unparseable run configuration."""


@dataclass(frozen=True)
class RunConfig:
    env: EnvConfig = EnvConfig(seed=42)
    estimator: EstimatorConfig = EstimatorConfig()
    defense: DefenseConfig = DefenseConfig()
    policies: tuple[str, ...] = ("simple_ucb", "maxmin_ucb", "minwd")
    n_seeds: int = 10
    output: Path = field(default_factory=lambda: Path("results"))
    oracle_grid_points: int = 401
    jobs: int = 1

    def __post_init__(self) -> None:
        for p in self.policies:
            if p not in RUNNER_POLICIES:
                raise ConfigError(f"unknown policy {p!r}; expected one of {RUNNER_POLICIES}")
        if self.n_seeds < 1:
            raise ConfigError("n_seeds must be at least 1")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")
        if self.oracle_grid_points < 1 or self.oracle_grid_points % 2 == 0:
            raise ConfigError("oracle_grid_points must be a positive odd integer")


def _line_of(text: str, key: str) -> int | None:
    pattern = re.compile(rf"^\s*{re.escape(key)}\s*[=:]", re.IGNORECASE)
    for i, line in enumerate(text.splitlines(), start=1):
        if pattern.match(line):
            return i
    return None


def _fail(text: str, key: str, message: str) -> None:
    line = _line_of(text, key)
    anchor = f"line {line}: " if line is not None else ""
    raise ConfigError(f"{anchor}{message}")


def _parse_arms(raw: str, text: str) -> tuple[DatacenterArm, ...]:
    arms = []
    for chunk in raw.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(":")
        if len(parts) != 2:
            _fail(text, "arms", f"arm entry {chunk!r} must look like mu:p")
        try:
            arms.append(DatacenterArm(mu=float(parts[0]), p=float(parts[1])))
        except ValueError as exc:
            _fail(text, "arms", f"bad arm entry {chunk!r}: {exc}")
    if not arms:
        _fail(text, "arms", "arms list is empty")
    return tuple(arms)


def _get(parser, section, key, text, convert, default):
    if not parser.has_option(section, key):
        return default
    raw = parser.get(section, key)
    try:
        return convert(raw)
    except (ValueError, TypeError) as exc:
        _fail(text, key, f"[{section}] {key}: {exc}")


def _choice(options):
    def convert(raw: str) -> str:
        value = raw.strip()
        if value not in options:
            raise ValueError(f"{value!r} not in {options}")
        return value
    return convert


def load_config(path: str | Path | None = None) -> RunConfig:
    """Load an INI run config; with no path, return built-in defaults
    (the seed environment variable still applies)."""
    defaults = RunConfig()
    if path is None:
        return _apply_seed_env(defaults)
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text()
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc

    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]; expected one of {sorted(_SCHEMA)}")
        for key in parser.options(section):
            if key not in (k.lower() for k in _SCHEMA[section]):
                _fail(text, key, f"unknown key {key!r} in section [{section}]")

    d = defaults
    try:
        env = EnvConfig(
            arms=_get(parser, "env", "arms", text,
                      lambda raw: _parse_arms(raw, text), d.env.arms),
            context_lo=_get(parser, "env", "context_lo", text, float, d.env.context_lo),
            context_hi=_get(parser, "env", "context_hi", text, float, d.env.context_hi),
            delta=_get(parser, "env", "delta", text, float, d.env.delta),
            noise_sigma=_get(parser, "env", "noise_sigma", text, float, d.env.noise_sigma),
            seed=_get(parser, "env", "seed", text, int, d.env.seed),
            horizon=_get(parser, "env", "horizon", text, int, d.env.horizon),
            reward_transform=_get(parser, "env", "reward_transform", text,
                                  _choice(REWARD_TRANSFORMS), d.env.reward_transform))
        kernel = KernelSpec(
            family=_get(parser, "kernel", "family", text, _choice(KERNEL_FAMILIES),
                        d.estimator.kernel.family),
            lengthscale=_get(parser, "kernel", "lengthscale", text, float,
                             d.estimator.kernel.lengthscale))
        schedule = ExplorationSchedule(
            mode=_get(parser, "estimator", "exploration.mode", text,
                      _choice(("fixed", "theoretical")), d.estimator.schedule.mode),
            h_fixed=_get(parser, "estimator", "exploration.h_fixed", text, float,
                         d.estimator.schedule.h_fixed),
            reward_bound=_get(parser, "estimator", "exploration.B", text, float,
                              d.estimator.schedule.reward_bound),
            noise_scale=_get(parser, "estimator", "exploration.b", text, float,
                             d.estimator.schedule.noise_scale),
            confidence_delta=_get(parser, "estimator", "exploration.delta", text, float,
                                  d.estimator.schedule.confidence_delta))
        estimator = EstimatorConfig(
            kernel=kernel,
            lam=_get(parser, "estimator", "lambda", text, float, d.estimator.lam),
            schedule=schedule)
        defense = DefenseConfig(
            delta=_get(parser, "defense", "delta", text, float, d.defense.delta),
            norm=_get(parser, "defense", "norm", text, _choice(NORMS), d.defense.norm),
            grid_points=_get(parser, "defense", "grid_points", text, int,
                             d.defense.grid_points))
        config = RunConfig(
            env=env, estimator=estimator, defense=defense,
            policies=_get(parser, "run", "policies", text,
                          lambda raw: tuple(p.strip() for p in raw.split(",") if p.strip()),
                          d.policies),
            n_seeds=_get(parser, "run", "n_seeds", text, int, d.n_seeds),
            output=_get(parser, "run", "output", text, Path, d.output),
            oracle_grid_points=_get(parser, "run", "oracle_grid_points", text, int,
                                    d.oracle_grid_points),
            jobs=_get(parser, "run", "jobs", text, int, d.jobs))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return _apply_seed_env(config)


def _apply_seed_env(config: RunConfig) -> RunConfig:
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None:
        return config
    try:
        seed = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}") from exc
    return replace(config, env=replace(config.env, seed=seed))
