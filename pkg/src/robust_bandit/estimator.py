"""Online kernel ridge regression with confidence widths.

Given observations (z_1, y_1), ..., (z_n, y_n), the estimator maintains the
Cholesky factor of A = K + lam*I and answers, for any query z:

    mean(z)   = k(z)^T A^{-1} y
    width(z)  = sqrt( (k(z, z) - k(z)^T A^{-1} k(z)) / lam )
    gain      = log det(I + K / lam)
    ucb(z)    = mean(z) + h * width(z)

where k(z) is the cross-kernel vector against the history and h is the
exploration coefficient produced by an :class:`ExplorationSchedule`.

The factor is extended by one row per observation (O(n^2)) so a full run
never refactorizes from scratch.  Queries are O(n^2) each; the batched path
:meth:`KernelRidgeEstimator.query_batch` amortizes that over many queries
with a single triangular solve, which is what keeps long horizons tractable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .kernels import ContextArmVector, KernelSpec, kernel_diag, kernel_matrix

# Squared widths are nonnegative in exact arithmetic; tiny negatives are
# floating-point noise and are clamped, anything below this is a bug.
WIDTH_CLAMP = -1e-10

FIXED = "fixed"
THEORETICAL = "theoretical"


class NumericalConsistencyError(RuntimeError):
    """Internal linear-algebra state violated a mathematical invariant."""


@dataclass(frozen=True)
class ExplorationSchedule:
    """Produces the exploration coefficient h_t.

    ``fixed`` mode returns ``h_fixed`` at every round.  ``theoretical`` mode
    returns ``sqrt(lam) * reward_bound + noise_scale * sqrt(gain - 2*ln(delta))``,
    which is nondecreasing in t because the information gain is.
    """

    mode: str = FIXED
    h_fixed: float = 0.04
    reward_bound: float = 1.0
    noise_scale: float = 0.0
    confidence_delta: float = 0.1

    def __post_init__(self) -> None:
        if self.mode not in (FIXED, THEORETICAL):
            raise ValueError(f"unknown exploration mode {self.mode!r}")
        if self.mode == FIXED and self.h_fixed < 0:
            raise ValueError("h_fixed must be nonnegative")

    def coefficient(self, gain: float, lam: float) -> float:
        if self.mode == FIXED:
            return self.h_fixed
        if not 0.0 < self.confidence_delta < 1.0:
            raise ValueError("confidence_delta must lie in (0, 1) for the theoretical schedule")
        if self.reward_bound <= 0 or self.noise_scale < 0:
            raise ValueError("theoretical schedule needs reward_bound > 0 and noise_scale >= 0")
        return math.sqrt(lam) * self.reward_bound + self.noise_scale * math.sqrt(
            gain - 2.0 * math.log(self.confidence_delta))


class KernelRidgeEstimator:
    """Kernel ridge regression over joined context-arm vectors.

    Mutated only by :meth:`observe`; all query methods are read-only and may
    run concurrently between observations.
    """

    def __init__(self, kernel: KernelSpec, lam: float, dim: int, capacity: int = 128):
        if lam <= 0:
            raise ValueError(f"regularizer lam must be positive, got {lam}")
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.kernel = kernel
        self.lam = float(lam)
        self.dim = int(dim)
        self._n = 0
        self._pts = np.empty((max(capacity, 1), dim))
        self._y = np.empty(max(capacity, 1))
        # exact-size Fortran-ordered lower factor of (K + lam*I)
        self._chol = np.empty((0, 0), order="F")
        self._alpha = np.empty(0)          # A^{-1} y
        self._log_diag_sum = 0.0           # sum of log(diag(chol))

    # -- state ------------------------------------------------------------

    @property
    def n_observations(self) -> int:
        return self._n

    @property
    def round(self) -> int:
        """1-based round index; the history always holds round - 1 points."""
        return self._n + 1

    @property
    def history_points(self) -> np.ndarray:
        return self._pts[: self._n]

    @property
    def rewards(self) -> np.ndarray:
        return self._y[: self._n]

    @property
    def factor(self) -> np.ndarray:
        """Lower-triangular factor L with L @ L.T = K + lam*I."""
        return self._chol

    # -- updates ----------------------------------------------------------

    def _grow(self) -> None:
        cap = self._pts.shape[0]
        if self._n < cap:
            return
        new_cap = cap * 2
        pts = np.empty((new_cap, self.dim))
        pts[:cap] = self._pts
        self._pts = pts
        y = np.empty(new_cap)
        y[:cap] = self._y
        self._y = y

    def observe(self, point: ContextArmVector, reward: float) -> None:
        """Append one (point, reward) pair and extend the factor by one row."""
        z = np.asarray(point.combined, dtype=float)
        if z.shape != (self.dim,):
            raise ValueError(f"point dimension {z.shape} does not match estimator dim {self.dim}")
        n = self._n
        self._grow()
        kzz = float(kernel_diag(self.kernel, z[None, :])[0])
        if n == 0:
            w = np.empty(0)
        else:
            k_new = kernel_matrix(self.kernel, self._pts[:n], z[None, :])[:, 0]
            w = solve_triangular(self._chol, k_new, lower=True, check_finite=False)
        pivot_sq = kzz + self.lam - float(w @ w)
        if pivot_sq <= 0:
            raise NumericalConsistencyError(
                f"non-positive Cholesky pivot {pivot_sq} at n={n + 1}")
        pivot = math.sqrt(pivot_sq)
        chol = np.zeros((n + 1, n + 1), order="F")
        chol[:n, :n] = self._chol
        chol[n, :n] = w
        chol[n, n] = pivot
        self._chol = chol
        self._log_diag_sum += math.log(pivot)
        self._pts[n] = z
        self._y[n] = reward
        self._n = n + 1
        v = solve_triangular(self._chol, self._y[: self._n], lower=True, check_finite=False)
        self._alpha = solve_triangular(self._chol, v, lower=True, trans="T", check_finite=False)

    # -- queries ----------------------------------------------------------

    def query_batch(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Means and confidence widths for every row of ``z`` (m, dim)."""
        z = np.atleast_2d(np.asarray(z, dtype=float))
        if z.shape[1] != self.dim:
            raise ValueError(f"query dimension {z.shape[1]} does not match estimator dim {self.dim}")
        kd = kernel_diag(self.kernel, z)
        n = self._n
        if n == 0:
            return np.zeros(z.shape[0]), np.sqrt(kd / self.lam)
        kq = np.asfortranarray(kernel_matrix(self.kernel, self._pts[:n], z))
        means = kq.T @ self._alpha
        w = solve_triangular(self._chol, kq, lower=True, check_finite=False)
        s2 = (kd - np.einsum("ij,ij->j", w, w)) / self.lam
        worst = float(s2.min())
        if worst < WIDTH_CLAMP:
            raise NumericalConsistencyError(
                f"squared confidence width {worst} below clamp threshold {WIDTH_CLAMP}")
        return means, np.sqrt(np.clip(s2, 0.0, None))

    def predict_mean(self, query: ContextArmVector) -> float:
        """Regression mean at the query; 0 with an empty history."""
        means, _ = self.query_batch(query.combined[None, :])
        return float(means[0])

    def confidence_width(self, query: ContextArmVector) -> float:
        """Nonnegative uncertainty width at the query."""
        _, widths = self.query_batch(query.combined[None, :])
        return float(widths[0])

    def information_gain(self) -> float:
        """log det(I + K/lam) over the current history; 0 when empty."""
        return 2.0 * self._log_diag_sum - self._n * math.log(self.lam)

    def ucb(self, schedule: ExplorationSchedule, query: ContextArmVector) -> float:
        return self.predict_mean(query) + self.exploration_coefficient(schedule) * self.confidence_width(query)

    def exploration_coefficient(self, schedule: ExplorationSchedule) -> float:
        return schedule.coefficient(self.information_gain(), self.lam)


def exploration_coefficient(schedule: ExplorationSchedule, estimator: KernelRidgeEstimator) -> float:
    """Exploration coefficient h_t for the estimator's current round."""
    return estimator.exploration_coefficient(schedule)
