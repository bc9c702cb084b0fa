"""Kernels over joined context-arm vectors.

A (context, arm) pair is presented to the regression machinery as a single
point ``z = [x, c_a]`` where ``x`` is the normalized context and ``c_a`` a
normalized arm coordinate.  Everything downstream (Gram matrices, cross
vectors, confidence widths) works on these joined vectors.

Two families are supported:

* ``gaussian``: ``k(z, z') = exp(-||z - z'||^2 / (2 * lengthscale^2))``,
  unit diagonal, values in (0, 1].
* ``linear``:   ``k(z, z') = <z, z'>``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

GAUSSIAN = "gaussian"
LINEAR = "linear"
KERNEL_FAMILIES = (GAUSSIAN, LINEAR)


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus hyperparameters.

    ``lengthscale`` only applies to the gaussian family and must be positive.
    """

    family: str = GAUSSIAN
    lengthscale: float = 0.1

    def __post_init__(self) -> None:
        if self.family not in KERNEL_FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}; expected one of {KERNEL_FAMILIES}")
        if self.family == GAUSSIAN and not self.lengthscale > 0:
            raise ValueError(f"gaussian lengthscale must be > 0, got {self.lengthscale}")


@dataclass(frozen=True)
class ContextArmVector:
    """A context joined with one arm's encoding.

    ``combined`` is the flat vector actually fed to kernels; its dimension is
    fixed for the lifetime of a run (context dims + 1 arm coordinate).
    """

    context: np.ndarray
    arm_index: int
    combined: np.ndarray

    @property
    def dim(self) -> int:
        return self.combined.shape[0]


@dataclass(frozen=True)
class ContextArmEncoder:
    """Maps raw contexts into [0, 1] per component and appends an ordinal
    arm coordinate ``arm_index / (n_arms - 1)``.

    Normalization keeps distances commensurate with the kernel lengthscale
    regardless of the raw context units.
    """

    context_lo: np.ndarray
    context_hi: np.ndarray
    n_arms: int

    def __post_init__(self) -> None:
        lo = np.atleast_1d(np.asarray(self.context_lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.context_hi, dtype=float))
        if lo.shape != hi.shape:
            raise ValueError("context_lo and context_hi must have the same shape")
        if np.any(hi <= lo):
            raise ValueError("context_hi must exceed context_lo componentwise")
        if self.n_arms < 1:
            raise ValueError("need at least one arm")
        object.__setattr__(self, "context_lo", lo)
        object.__setattr__(self, "context_hi", hi)

    @property
    def dim(self) -> int:
        return self.context_lo.shape[0] + 1

    def arm_coordinate(self, arm_index: int) -> float:
        if self.n_arms == 1:
            return 0.0
        return arm_index / (self.n_arms - 1)

    def normalize(self, context: np.ndarray) -> np.ndarray:
        x = np.atleast_1d(np.asarray(context, dtype=float))
        return (x - self.context_lo) / (self.context_hi - self.context_lo)

    def encode(self, context: np.ndarray, arm_index: int) -> ContextArmVector:
        u = self.normalize(context)
        combined = np.append(u, self.arm_coordinate(arm_index))
        return ContextArmVector(context=np.atleast_1d(np.asarray(context, dtype=float)),
                                arm_index=arm_index, combined=combined)

    def encode_stack(self, contexts: np.ndarray, arms: Sequence[int]) -> np.ndarray:
        """Encode every (context, arm) combination into one (m * n_arms, d)
        array, context-major: row ``g * len(arms) + j`` is (contexts[g], arms[j]).
        """
        pts = np.atleast_2d(np.asarray(contexts, dtype=float))
        u = (pts - self.context_lo) / (self.context_hi - self.context_lo)
        m, c = u.shape
        a = len(arms)
        out = np.empty((m * a, c + 1))
        out[:, :c] = np.repeat(u, a, axis=0)
        coords = np.array([self.arm_coordinate(j) for j in arms])
        out[:, c] = np.tile(coords, m)
        return out


def _check_dims(z1: ContextArmVector, z2: ContextArmVector) -> None:
    if z1.dim != z2.dim:
        raise ValueError(f"dimension mismatch: {z1.dim} vs {z2.dim}")


def kernel_matrix(spec: KernelSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise kernel values between the rows of ``a`` (n, d) and ``b`` (m, d)."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    if spec.family == LINEAR:
        return a @ b.T
    sq = (np.einsum("ij,ij->i", a, a)[:, None]
          + np.einsum("ij,ij->i", b, b)[None, :]
          - 2.0 * (a @ b.T))
    np.clip(sq, 0.0, None, out=sq)
    return np.exp(-sq / (2.0 * spec.lengthscale**2))


def kernel_diag(spec: KernelSpec, z: np.ndarray) -> np.ndarray:
    """k(z_i, z_i) for each row of ``z``; ones for the gaussian family."""
    z = np.atleast_2d(np.asarray(z, dtype=float))
    if spec.family == LINEAR:
        return np.einsum("ij,ij->i", z, z)
    return np.ones(z.shape[0])


def eval_kernel(spec: KernelSpec, z1: ContextArmVector, z2: ContextArmVector) -> float:
    """Kernel value between two joined points; symmetric in its arguments."""
    _check_dims(z1, z2)
    if spec.family == LINEAR:
        return float(np.dot(z1.combined, z2.combined))
    diff = z1.combined - z2.combined
    return float(np.exp(-np.dot(diff, diff) / (2.0 * spec.lengthscale**2)))


def gram_matrix(spec: KernelSpec, points: Sequence[ContextArmVector]) -> np.ndarray:
    """Symmetric Gram matrix of a point set; 0x0 for an empty sequence."""
    n = len(points)
    if n == 0:
        return np.empty((0, 0))
    z = np.stack([p.combined for p in points])
    k = kernel_matrix(spec, z, z)
    # dgemm output is not guaranteed bitwise symmetric
    return 0.5 * (k + k.T)


def cross_vector(spec: KernelSpec, query: ContextArmVector, points: Sequence[ContextArmVector]) -> np.ndarray:
    """Vector of kernel values between ``query`` and each history point."""
    if len(points) == 0:
        return np.empty(0)
    z = np.stack([p.combined for p in points])
    if z.shape[1] != query.dim:
        raise ValueError(f"dimension mismatch: {z.shape[1]} vs {query.dim}")
    return kernel_matrix(spec, query.combined[None, :], z)[0]
