"""Uniform 1D/2D lattices shared by every field type.

Nodes are x_j = lo + j*h with h = (hi - lo)/n and the right endpoint
excluded, which is the natural lattice for FFT-based propagation.  With
this convention a plain node sum times the cell volume equals the
trapezoid rule for periodic fields and for fields that vanish at the
boundary, so `integrate` is used as "the" quadrature everywhere.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PERIODIC = "periodic"
ABSORBING = "absorbing"


@dataclass(frozen=True)
class Grid:
    """Uniform lattice: per-axis extent [lo, hi), node count, boundary tag."""

    extents: tuple  # ((lo, hi), ...) one pair per axis
    shape: tuple    # (n,) or (nx, ny)
    boundary: str = PERIODIC
    absorb_width: float = 0.0  # mask ramp width, only used when absorbing

    def __post_init__(self):
        if len(self.extents) != len(self.shape):
            raise ValueError("extents and shape must have the same length")
        if self.dims not in (1, 2):
            raise ValueError("only 1D and 2D grids are supported")
        for (lo, hi), n in zip(self.extents, self.shape):
            if not hi > lo:
                raise ValueError(f"extent [{lo}, {hi}] is empty")
            if n < 8:
                raise ValueError("need at least 8 nodes per axis")
        if self.boundary not in (PERIODIC, ABSORBING):
            raise ValueError(f"unknown boundary '{self.boundary}'")
        if self.boundary == ABSORBING:
            shortest = min(hi - lo for lo, hi in self.extents)
            if not 0 < self.absorb_width < shortest / 4:
                raise ValueError("absorbing mask width must be in (0, extent/4)")

    @property
    def dims(self) -> int:
        return len(self.shape)

    @property
    def spacing(self) -> tuple:
        return tuple((hi - lo) / n for (lo, hi), n in zip(self.extents, self.shape))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axis(self, i: int) -> np.ndarray:
        (lo, hi), n = self.extents[i], self.shape[i]
        return lo + (hi - lo) / n * np.arange(n)

    def axes(self) -> tuple:
        return tuple(self.axis(i) for i in range(self.dims))

    def meshgrid(self) -> tuple:
        return tuple(np.meshgrid(*self.axes(), indexing="ij"))

    def wavenumbers(self) -> tuple:
        """FFT angular wavenumbers per axis, matching the node layout."""
        return tuple(
            2.0 * np.pi * np.fft.fftfreq(n, d=h)
            for n, h in zip(self.shape, self.spacing)
        )

    def integrate(self, values: np.ndarray) -> float:
        return float(np.sum(values) * self.cell_volume)

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Boolean mask of points strictly inside the lattice hull."""
        pts = np.atleast_2d(points)
        ok = np.ones(pts.shape[0], dtype=bool)
        for i, (lo, hi) in enumerate(self.extents):
            h = self.spacing[i]
            ok &= (pts[:, i] >= lo) & (pts[:, i] <= hi - h)
        return ok

    def same_lattice(self, other: "Grid") -> bool:
        return self.extents == other.extents and self.shape == other.shape


def absorbing_mask(grid: Grid) -> np.ndarray:
    """cos^2 amplitude ramp over `absorb_width` at every edge (1 in the interior)."""
    masks = []
    for i in range(grid.dims):
        lo, hi = grid.extents[i]
        x = grid.axis(i)
        w = grid.absorb_width
        m = np.ones_like(x)
        left = x < lo + w
        right = x > hi - w
        m[left] = np.cos(0.5 * np.pi * (lo + w - x[left]) / w) ** 2
        m[right] = np.cos(0.5 * np.pi * (x[right] - (hi - w)) / w) ** 2
        masks.append(m)
    if grid.dims == 1:
        return masks[0]
    return masks[0][:, None] * masks[1][None, :]


def gradient(values: np.ndarray, grid: Grid) -> list:
    """Central differences per axis, one-sided at the boundary nodes."""
    return [np.gradient(values, grid.spacing[i], axis=i, edge_order=1)
            for i in range(grid.dims)]
