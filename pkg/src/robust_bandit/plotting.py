"""Static regret plots from run CSVs: one image per regret objective,
one line per policy, mean across seeds with a +/-1 std band."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .experiment import CSV_HEADER

_PANELS = (
    ("robust_cum", "Cumulative robust regret", "robust_regret.png"),
    ("worst_cum", "Cumulative worst-case regret", "worst_case_regret.png"),
    ("r_cum", "Cumulative true regret", "true_regret.png"),
)


class SchemaError(Exception):
    """CSV input does not conform to the run-record layout."""


def read_run_csv(path: str | Path) -> list[dict]:
    """Rows of one run CSV as dicts; header and body are both validated."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: file is empty") from None
        if header != CSV_HEADER.split(","):
            raise SchemaError(f"{path}: header does not match the run-record schema")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise SchemaError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            rows.append({
                "t": int(row[0]), "seed": int(row[1]), "policy": row[2],
                "r_cum": float(row[8]), "robust_cum": float(row[10]),
                "worst_cum": float(row[12]),
            })
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def _curves(rows: Sequence[dict], field: str) -> dict[str, tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Per policy: (t, mean, std) of the requested cumulative column."""
    by_policy_seed: dict[tuple[str, int], list[tuple[int, float]]] = {}
    for row in rows:
        by_policy_seed.setdefault((row["policy"], row["seed"]), []).append((row["t"], row[field]))
    by_policy: dict[str, list[np.ndarray]] = {}
    for (policy, _), pairs in sorted(by_policy_seed.items()):
        pairs.sort()
        by_policy.setdefault(policy, []).append(np.array([v for _, v in pairs]))
    out = {}
    for policy, series in by_policy.items():
        horizon = min(len(s) for s in series)
        stack = np.stack([s[:horizon] for s in series])
        out[policy] = (np.arange(1, horizon + 1), stack.mean(axis=0),
                       stack.std(axis=0, ddof=1 if len(series) > 1 else 0))
    return out


def plot_regret_curves(csv_paths: Iterable[str | Path], output_dir: str | Path) -> list[Path]:
    """Render the three regret panels; returns the written image paths."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows: list[dict] = []
    for path in csv_paths:
        rows.extend(read_run_csv(path))
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for field, title, filename in _PANELS:
        fig, ax = plt.subplots(figsize=(5.0, 3.6))
        for policy, (t, mean, std) in sorted(_curves(rows, field).items()):
            (line,) = ax.plot(t, mean, label=policy)
            if np.any(std > 0):
                ax.fill_between(t, mean - std, mean + std,
                                color=line.get_color(), alpha=0.2, linewidth=0)
        ax.set_xlabel("round")
        ax.set_ylabel(title)
        ax.legend()
        fig.tight_layout()
        target = output_dir / filename
        fig.savefig(target, dpi=150)
        plt.close(fig)
        written.append(target)
    return written
