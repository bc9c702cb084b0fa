"""Defense region around a presented context, and its evaluation grid.

The region is the norm ball of radius ``radius`` around a (possibly
corrupted) context, intersected with the context domain.  Inner min/max
problems over the region are solved by exhaustive search on a finite grid;
grids are deterministic and lexicographically sorted so downstream
tie-breaking is reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

L2 = "l2"
LINF = "linf"
NORMS = (L2, LINF)

# slack for boundary membership under floating point
_EDGE_TOL = 1e-12


@dataclass(frozen=True)
class DefenseRegion:
    """Norm ball of admissible true contexts around a presented context.

    The center is clamped into the domain box at construction; contexts
    outside the domain are not physically meaningful.
    """

    center: np.ndarray
    radius: float
    norm: str = L2
    domain_lo: np.ndarray = None
    domain_hi: np.ndarray = None

    def __post_init__(self) -> None:
        if self.radius < 0:
            raise ValueError(f"radius must be nonnegative, got {self.radius}")
        if self.norm not in NORMS:
            raise ValueError(f"unknown norm {self.norm!r}; expected one of {NORMS}")
        center = np.atleast_1d(np.asarray(self.center, dtype=float))
        lo = np.atleast_1d(np.asarray(self.domain_lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.domain_hi, dtype=float))
        if not (center.shape == lo.shape == hi.shape):
            raise ValueError("center and domain bounds must share one shape")
        if np.any(hi < lo):
            raise ValueError("domain_hi must be >= domain_lo componentwise")
        object.__setattr__(self, "center", np.clip(center, lo, hi))
        object.__setattr__(self, "domain_lo", lo)
        object.__setattr__(self, "domain_hi", hi)

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def _distance(self, x: np.ndarray) -> np.ndarray:
        d = np.abs(x - self.center)
        if self.norm == LINF:
            return d.max(axis=-1)
        return np.sqrt((d * d).sum(axis=-1))

    def contains(self, x: np.ndarray) -> bool:
        """True iff ``x`` lies in the ball and inside the domain box."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != self.center.shape:
            raise ValueError(f"dimension mismatch: {x.shape} vs {self.center.shape}")
        if np.any(x < self.domain_lo - _EDGE_TOL) or np.any(x > self.domain_hi + _EDGE_TOL):
            return False
        return bool(self._distance(x) <= self.radius + _EDGE_TOL)


@dataclass(frozen=True)
class ContextGrid:
    """Finite, sorted, deduplicated set of contexts inside a region."""

    points: np.ndarray  # (m, dim), lexicographically sorted rows
    resolution: int

    def __len__(self) -> int:
        return self.points.shape[0]


def enumerate_grid(region: DefenseRegion, resolution: int) -> ContextGrid:
    """Uniform grid over the region, clipped to the domain and deduplicated.

    ``resolution`` counts points per axis and must be odd so the center is a
    grid node.  Radius zero yields exactly the center.
    """
    if resolution < 1 or resolution % 2 == 0:
        raise ValueError(f"resolution must be a positive odd integer, got {resolution}")
    c, r = region.center, region.radius
    axes = []
    for i in range(region.dim):
        if resolution == 1:
            axes.append(np.array([c[i]]))
        else:
            axis = np.linspace(c[i] - r, c[i] + r, resolution)
            axis[(resolution - 1) // 2] = c[i]  # guard against linspace rounding
            axes.append(axis)
    if region.dim == 1:
        pts = axes[0][:, None]
    else:
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        keep = region._distance(pts) <= r + _EDGE_TOL
        pts = pts[keep]
    pts = np.clip(pts, region.domain_lo, region.domain_hi)
    pts = np.unique(pts, axis=0)  # sorts rows lexicographically
    return ContextGrid(points=pts, resolution=resolution)


def contains(region: DefenseRegion, x: np.ndarray) -> bool:
    return region.contains(x)
