import os
import subprocess
import sys
from pathlib import Path

import pytest

from robust_bandit.cli import main
from robust_bandit.config import SEED_ENV_VAR, ConfigError, load_config
from robust_bandit.experiment import CSV_HEADER

GOOD_CONFIG = """
[run]
policies = simple_ucb, minwd
n_seeds = 2
oracle_grid_points = 401

[env]
arms = 35:0.04, 38:0.05, 45:0.074, 51:0.088
context_lo = 10
context_hi = 30
delta = 2
noise_sigma = 0.05
seed = 7
horizon = 12

[kernel]
family = gaussian
lengthscale = 0.1

[estimator]
lambda = 0.1
exploration.mode = fixed
exploration.h_fixed = 0.04

[defense]
delta = 2
norm = l2
grid_points = 21
"""


@pytest.fixture
def good_config(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(GOOD_CONFIG)
    return path


def test_defaults_without_file():
    cfg = load_config(None)
    assert cfg.policies == ("simple_ucb", "maxmin_ucb", "minwd")
    assert cfg.env.horizon == 2000
    assert cfg.n_seeds == 10
    assert cfg.estimator.lam == 0.1
    assert cfg.estimator.kernel.lengthscale == 0.1
    assert cfg.defense.grid_points == 41
    assert cfg.oracle_grid_points == 401


def test_file_values_override_defaults(good_config):
    cfg = load_config(good_config)
    assert cfg.env.seed == 7
    assert cfg.env.horizon == 12
    assert cfg.policies == ("simple_ucb", "minwd")
    assert cfg.defense.grid_points == 21


def test_unknown_key_rejected_with_line_anchor(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[env]\nhorizon = 10\nhorizn = 20\n")
    with pytest.raises(ConfigError) as err:
        load_config(path)
    assert "line 3" in str(err.value)
    assert "horizn" in str(err.value)


def test_unknown_section_rejected(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[enviroment]\nhorizon = 10\n")
    with pytest.raises(ConfigError):
        load_config(path)


def test_zero_lambda_rejected(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[estimator]\nlambda = 0\n")
    with pytest.raises(ConfigError):
        load_config(path)


def test_even_grid_rejected(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[defense]\ngrid_points = 40\n")
    with pytest.raises(ConfigError):
        load_config(path)


def test_bad_arm_entry_rejected(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[env]\narms = 35:0.04, 38\n")
    with pytest.raises(ConfigError) as err:
        load_config(path)
    assert "mu:p" in str(err.value)


def test_seed_env_var_overrides_file(good_config, monkeypatch):
    monkeypatch.setenv(SEED_ENV_VAR, "99")
    assert load_config(good_config).env.seed == 99
    monkeypatch.setenv(SEED_ENV_VAR, "not-a-seed")
    with pytest.raises(ConfigError):
        load_config(good_config)


def test_missing_config_file_is_usage_error(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.ini")]) == 2


# -- CLI ----------------------------------------------------------------------


def run_cli(args):
    return main(args)


def test_run_smoke_writes_expected_rows(tmp_path):
    out = tmp_path / "out"
    code = run_cli(["run", "--policy", "simple_ucb", "--horizon", "10",
                    "--seeds", "1", "--output", str(out)])
    assert code == 0
    target = out / "simple_ucb.csv"
    lines = target.read_text().strip().split("\n")
    assert lines[0] == CSV_HEADER
    assert len(lines) == 11


def test_flag_overrides_file(good_config, tmp_path):
    out = tmp_path / "out"
    code = run_cli(["run", "--config", str(good_config), "--policy", "simple_ucb",
                    "--horizon", "4", "--seeds", "1", "--output", str(out)])
    assert code == 0
    lines = (out / "simple_ucb.csv").read_text().strip().split("\n")
    assert len(lines) == 5  # flag horizon beats the file's 12


def test_rerun_is_byte_identical(good_config, tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        assert run_cli(["run", "--config", str(good_config), "--policy", "minwd",
                        "--horizon", "8", "--seeds", "2", "--output", str(out)]) == 0
    assert (out1 / "minwd.csv").read_bytes() == (out2 / "minwd.csv").read_bytes()


def test_combined_flag_writes_single_file(tmp_path):
    out = tmp_path / "out"
    code = run_cli(["run", "--policy", "simple_ucb", "--policy", "minwd",
                    "--horizon", "3", "--seeds", "1", "--output", str(out),
                    "--combined"])
    assert code == 0
    lines = (out / "runs.csv").read_text().strip().split("\n")
    assert len(lines) == 7


def test_run_rejects_even_grid_points(tmp_path):
    code = run_cli(["run", "--policy", "simple_ucb", "--horizon", "3",
                    "--seeds", "1", "--grid-points", "10",
                    "--output", str(tmp_path / "o")])
    assert code != 0


def test_plot_writes_three_images(tmp_path):
    out = tmp_path / "out"
    run_cli(["run", "--policy", "simple_ucb", "--policy", "minwd", "--horizon", "6",
             "--seeds", "2", "--output", str(out)])
    code = run_cli(["plot", str(out / "simple_ucb.csv"), str(out / "minwd.csv"),
                    "--output", str(tmp_path / "plots")])
    assert code == 0
    for name in ("robust_regret.png", "worst_case_regret.png", "true_regret.png"):
        assert (tmp_path / "plots" / name).is_file()


def test_plot_rejects_empty_csv(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text(CSV_HEADER + "\n")
    assert run_cli(["plot", str(empty), "--output", str(tmp_path)]) == 2
    headerless = tmp_path / "headerless.csv"
    headerless.write_text("")
    assert run_cli(["plot", str(headerless), "--output", str(tmp_path)]) == 2


def test_console_entry_point_exists():
    proc = subprocess.run([sys.executable, "-m", "robust_bandit.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "run" in proc.stdout and "check" in proc.stdout and "plot" in proc.stdout


def test_check_subcommand_passes_on_defaults(capsys):
    code = run_cli(["check"])
    out = capsys.readouterr().out
    assert code == 0
    assert "all" in out and "passed" in out
    assert out.count("PASS") >= 6


def test_check_rejects_invalid_config(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[estimator]\nlambda = 0\n")
    assert run_cli(["check", "--config", str(bad)]) == 2
