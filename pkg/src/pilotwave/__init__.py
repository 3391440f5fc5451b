"""pilotwave: classical min-plus actions, Schrodinger fields, Bohmian
trajectories, spin measurement and the hbar -> 0 limit on one lattice."""

__version__ = "0.1.0"

from ._kernels import active_backend  # noqa: F401
