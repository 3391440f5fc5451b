"""Potential specifications: free, linear (constant force), harmonic, tabulated.

Sign convention for the linear case follows V(x) = -K.x, so K is the
constant force pulling the particle toward +x.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid

FREE = "free"
LINEAR = "linear"
HARMONIC = "harmonic"
TABULATED = "tabulated"

# integer codes shared with the compiled kernels
KIND_CODE = {FREE: 0, LINEAR: 1, HARMONIC: 2, TABULATED: 3}


@dataclass(frozen=True)
class Potential:
    kind: str
    mass: float
    force: tuple = (0.0,)   # K, per axis (linear only)
    omega: float = 0.0      # angular frequency (harmonic only)
    grid: Grid = None       # tabulated only
    table: np.ndarray = None

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError("mass must be positive")
        if self.kind == HARMONIC and self.omega <= 0:
            raise ValueError("harmonic potential needs omega > 0")
        if self.kind == TABULATED:
            if self.grid is None or self.table is None:
                raise ValueError("tabulated potential needs a grid and a table")
            if tuple(self.table.shape) != tuple(self.grid.shape):
                raise ValueError("table must cover the whole grid")
        if self.kind not in KIND_CODE:
            raise ValueError(f"unknown potential kind '{self.kind}'")

    @staticmethod
    def free(mass: float) -> "Potential":
        return Potential(FREE, mass)

    @staticmethod
    def linear(mass: float, force) -> "Potential":
        k = tuple(np.atleast_1d(np.asarray(force, dtype=float)))
        return Potential(LINEAR, mass, force=k)

    @staticmethod
    def harmonic(mass: float, omega: float) -> "Potential":
        return Potential(HARMONIC, mass, omega=omega)

    @staticmethod
    def tabulated(mass: float, grid: Grid, table: np.ndarray) -> "Potential":
        return Potential(TABULATED, mass, grid=grid,
                         table=np.asarray(table, dtype=float))

    def energy(self, x: np.ndarray) -> np.ndarray:
        """V evaluated at points of shape (..., dims) or scalars in 1D."""
        x = np.asarray(x, dtype=float)
        if self.kind == FREE:
            return np.zeros(x.shape[:-1] if x.ndim > 1 else x.shape)
        if self.kind == LINEAR:
            k = np.asarray(self.force)
            if x.ndim > 1 or (x.ndim == 1 and len(k) > 1 and x.shape[-1] == len(k)):
                return -(x @ k)
            return -k[0] * x
        if self.kind == HARMONIC:
            if x.ndim > 1:
                r2 = np.sum(x * x, axis=-1)
            else:
                r2 = x * x
            return 0.5 * self.mass * self.omega ** 2 * r2
        # tabulated: nearest-node lookup is enough for validation work;
        # dynamics interpolates through energy_on_grid instead
        raise NotImplementedError("tabulated potentials are evaluated on their grid")

    def energy_on_grid(self, grid: Grid) -> np.ndarray:
        """V sampled on every node of `grid`."""
        if self.kind == TABULATED:
            if not self.grid.same_lattice(grid):
                raise ValueError("tabulated potential lives on a different grid")
            return self.table
        mesh = grid.meshgrid()
        if grid.dims == 1:
            pts = mesh[0]
        else:
            pts = np.stack(mesh, axis=-1)
        if self.kind == FREE:
            return np.zeros(grid.shape)
        if self.kind == LINEAR:
            k = np.asarray(self.force)
            if grid.dims == 1:
                return -k[0] * pts
            return -np.tensordot(pts, k, axes=([-1], [0]))
        r2 = pts ** 2 if grid.dims == 1 else np.sum(pts ** 2, axis=-1)
        return 0.5 * self.mass * self.omega ** 2 * r2
