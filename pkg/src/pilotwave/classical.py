"""Min-plus algebra and classical Hamilton-Jacobi machinery.

The action field S(x,t) obeys the least-action evolution
S(x,t) = min_x0 [ S0(x0) + S_two_point(x,t;x0) ], which is linear in the
(min,+) semiring.  delta_min (0 at one node, +inf elsewhere) is the
sifting element: feeding it through the evolution returns the two-point
action itself.  Densities of statistically prepared ensembles ride along
the characteristics of grad(S)/m.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .errors import (AllInfinite, CausticWarning, DegenerateTime, FocalPoint,
                     GridMismatch, Unsupported)
from .grid import Grid, gradient
from .potentials import FREE, HARMONIC, KIND_CODE, LINEAR, TABULATED, Potential

_FOCAL_TOL = 1e-12


@dataclass(frozen=True)
class LinearTag:
    """Marks an action field of the exact form const + m*v0.x."""
    v0: tuple
    const: float


@dataclass
class ActionField:
    grid: Grid
    values: np.ndarray  # float64, +inf allowed
    time: float = 0.0
    linear_tag: LinearTag = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if tuple(self.values.shape) != tuple(self.grid.shape):
            raise ValueError("values do not match the grid shape")
        if not np.any(np.isfinite(self.values)):
            raise AllInfinite("action field has no finite values")


@dataclass
class DensityField:
    grid: Grid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if np.any(self.values < 0):
            raise ValueError("density must be nonnegative")

    def mass(self) -> float:
        return self.grid.integrate(self.values)


@dataclass
class ClassicalEnsembleState:
    rho: DensityField
    action: ActionField
    potential: Potential

    def __post_init__(self):
        if not self.rho.grid.same_lattice(self.action.grid):
            raise GridMismatch("density and action live on different grids")
        if self.rho.time != self.action.time:
            raise ValueError("density and action are at different times")


# ---------------------------------------------------------------------------
# two-point (Euler-Lagrange) actions
# ---------------------------------------------------------------------------

def euler_lagrange_action(potential: Potential, x, t: float, x0) -> float:
    """Minimal action between (x0, 0) and (x, t) for the analytic potentials.

    Evaluates the same expressions as the Hopf-Lax scan kernels so the
    elementary-solution identity holds bitwise on grid nodes.
    """
    if t <= 0:
        raise DegenerateTime(f"two-point action needs t > 0, got {t}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    m = potential.mass
    if potential.kind == TABULATED:
        raise Unsupported(
            "no closed-form two-point action for tabulated potentials; "
            "use hopf_lax_field with a delta_min initial action")
    if potential.kind == HARMONIC:
        w = potential.omega
        if w * t >= np.pi * (1.0 - _FOCAL_TOL) or abs(np.sin(w * t)) < _FOCAL_TOL:
            raise FocalPoint(
                f"omega*t = {w * t:.6g} reaches a focal point; no branch chosen")
    kind = KIND_CODE[potential.kind]
    omega = potential.omega
    if x.size == 1:
        k1 = potential.force[0] if potential.kind == LINEAR else 0.0
        return float(_kernels._el_pair_1d(float(x[0]), float(x0[0]), float(t),
                                          m, kind, float(k1), omega))
    kx, ky = (potential.force if potential.kind == LINEAR else (0.0, 0.0))
    return float(_kernels._el_pair_2d(float(x[0]), float(x[1]),
                                      float(x0[0]), float(x0[1]), float(t),
                                      m, kind, float(kx), float(ky), omega))


def delta_min(grid: Grid, x0) -> ActionField:
    """Min-plus Dirac: 0 at the node nearest x0, +inf elsewhere."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    values = np.full(grid.shape, np.inf)
    idx = tuple(
        int(np.argmin(np.abs(grid.axis(i) - x0[i]))) for i in range(grid.dims))
    values[idx] = 0.0
    return ActionField(grid, values, time=0.0)


def linear_action(grid: Grid, mass: float, v0, const: float = 0.0,
                  time: float = 0.0) -> ActionField:
    """S = const + m*v0.x sampled on the grid, tagged for closed-form evolution."""
    v0 = tuple(np.atleast_1d(np.asarray(v0, dtype=float)))
    mesh = grid.meshgrid()
    values = const + mass * sum(v * mesh[i] for i, v in enumerate(v0))
    return ActionField(grid, values, time=time, linear_tag=LinearTag(v0, const))


def hamilton_jacobi_linear(x, t: float, mass: float, v0, force,
                           const0: float = 0.0):
    """Closed-form action for S0 = m v0.x in the constant-force potential."""
    x = np.asarray(x, dtype=float)
    v0 = np.atleast_1d(np.asarray(v0, dtype=float))
    k = np.atleast_1d(np.asarray(force, dtype=float))
    if x.ndim and x.shape[-1:] == v0.shape and v0.size > 1:
        dot_vx = x @ v0
        dot_kx = x @ k
    else:
        dot_vx = v0[0] * x
        dot_kx = k[0] * x
    return (const0 + mass * dot_vx - 0.5 * mass * np.sum(v0 ** 2) * t
            + dot_kx * t - 0.5 * np.sum(k * v0) * t ** 2
            - np.sum(k * k) * t ** 3 / (6.0 * mass))


# ---------------------------------------------------------------------------
# Hopf-Lax / min-plus evolution
# ---------------------------------------------------------------------------

def hopf_lax_field(s0: ActionField, potential: Potential, t: float,
                   method: str = "auto", march_steps: int = None,
                   refine: bool = False) -> ActionField:
    """Evolve an action field by the least-action principle.

    method:
      "auto"       closed form when s0 is linear-tagged and the potential is
                   free/linear, otherwise the exhaustive grid scan
      "exhaustive" O(N^2) scan over grid nodes (the oracle path)
      "monotone"   two-pointer scan, valid for finite convex s0 with the
                   free/linear kernel

    refine=True continues the discrete argmin with a parabolic fit (1D,
    finite s0 only), removing the node-offset sawtooth; use it when the
    output feeds derivative-based residual checks.
    """
    if t < 0:
        raise DegenerateTime(f"hopf_lax_field needs t >= 0, got {t}")
    if not np.any(np.isfinite(s0.values)):
        raise AllInfinite("initial action is +inf everywhere")
    if t == 0:
        return replace(s0, values=s0.values.copy())
    grid = s0.grid
    m = potential.mass

    if method == "auto" and s0.linear_tag is not None \
            and potential.kind in (FREE, LINEAR):
        v0 = np.asarray(s0.linear_tag.v0)
        k = np.asarray(potential.force if potential.kind == LINEAR
                       else np.zeros_like(v0))
        if len(k) != len(v0):
            raise GridMismatch("force and velocity dimensions differ")
        new_v0 = tuple(v0 + k * t / m)
        new_const = float(s0.linear_tag.const
                          - 0.5 * m * np.sum(v0 ** 2) * t
                          - 0.5 * np.sum(k * v0) * t ** 2
                          - np.sum(k * k) * t ** 3 / (6.0 * m))
        return linear_action(grid, m, new_v0, const=new_const,
                             time=s0.time + t)

    if potential.kind == TABULATED:
        if grid.dims != 1:
            raise Unsupported("tabulated Hopf-Lax marching is 1D only")
        steps = march_steps if march_steps else max(8, int(np.ceil(t / 0.025)))
        v = potential.energy_on_grid(grid)
        out = _kernels.hopf_lax_march_1d(s0.values, grid.axis(0), v, m,
                                         float(t), steps)
        return ActionField(grid, out, time=s0.time + t)

    if potential.kind == HARMONIC and potential.omega * t >= np.pi * (1 - _FOCAL_TOL):
        raise FocalPoint("harmonic evolution beyond the first focal time")

    kind = KIND_CODE[potential.kind]
    omega = potential.omega
    if grid.dims == 1:
        k1 = potential.force[0] if potential.kind == LINEAR else 0.0
        if method == "monotone":
            if np.any(np.isinf(s0.values)):
                raise Unsupported("monotone scan needs a finite initial action")
            out = _kernels.monotone_hopf_lax_1d(s0.values, grid.axis(0),
                                                float(t), m, kind, k1, omega)
        elif refine:
            if np.any(np.isinf(s0.values)):
                raise Unsupported("parabolic refinement needs a finite initial action")
            out = _kernels.hopf_lax_1d_refine(s0.values, grid.axis(0), float(t),
                                              m, kind, k1, omega)
        else:
            out = _kernels.hopf_lax_1d(s0.values, grid.axis(0), float(t), m,
                                       kind, k1, omega)
        return ActionField(grid, out, time=s0.time + t)

    kx, ky = (potential.force if potential.kind == LINEAR else (0.0, 0.0))
    mx, my = grid.meshgrid()
    flat = _kernels.hopf_lax_2d(s0.values.ravel(), mx.ravel(), my.ravel(),
                                float(t), m, kind, float(kx), float(ky), omega)
    return ActionField(grid, flat.reshape(grid.shape), time=s0.time + t)


def minplus_inner(f: ActionField, g: ActionField) -> float:
    """(f, g) = inf over nodes of f(x) + g(x); +inf when nothing is finite."""
    if not f.grid.same_lattice(g.grid):
        raise GridMismatch("min-plus inner product needs a shared grid")
    both = np.isfinite(f.values) & np.isfinite(g.values)
    if not np.any(both):
        return np.inf
    return float(np.min(f.values[both] + g.values[both]))


def velocity_field(s: ActionField, mass: float):
    """grad(S)/m by central differences; nodes touching +inf are masked.

    Returns (vel, valid) with vel of shape grid.shape + (dims,).
    """
    finite = np.isfinite(s.values)
    work = np.where(finite, s.values, np.nan)
    grads = gradient(work, s.grid)
    vel = np.stack(grads, axis=-1) / mass
    valid = finite & np.all(np.isfinite(vel), axis=-1)
    vel = np.where(valid[..., None], vel, 0.0)
    return vel, valid


# ---------------------------------------------------------------------------
# statistical transport
# ---------------------------------------------------------------------------

def gaussian_density(grid: Grid, sigma0: float, center, time: float = 0.0) -> DensityField:
    center = np.atleast_1d(np.asarray(center, dtype=float))
    mesh = grid.meshgrid()
    r2 = sum((mesh[i] - center[i]) ** 2 for i in range(grid.dims))
    values = (2.0 * np.pi * sigma0 ** 2) ** (-grid.dims / 2.0) \
        * np.exp(-r2 / (2.0 * sigma0 ** 2))
    return DensityField(grid, values, time=time)


def _source_points(rho: DensityField, refine: int):
    """Supersampled source positions and CIC-ready masses (1D/2D)."""
    grid = rho.grid
    if grid.dims == 1:
        (lo, hi) = grid.extents[0]
        n_f = grid.shape[0] * refine
        h_f = (hi - lo) / n_f
        x_f = lo + h_f * (np.arange(n_f) + 0.5)
        rho_f = np.interp(x_f, grid.axis(0), rho.values)
        return x_f[:, None], rho_f * h_f
    (lox, hix), (loy, hiy) = grid.extents
    nx_f, ny_f = grid.shape[0] * refine, grid.shape[1] * refine
    hx_f, hy_f = (hix - lox) / nx_f, (hiy - loy) / ny_f
    x_f = lox + hx_f * (np.arange(nx_f) + 0.5)
    y_f = loy + hy_f * (np.arange(ny_f) + 0.5)
    from scipy.interpolate import RegularGridInterpolator

    interp = RegularGridInterpolator(grid.axes(), rho.values,
                                     bounds_error=False, fill_value=0.0)
    mx, my = np.meshgrid(x_f, y_f, indexing="ij")
    pts = np.stack([mx.ravel(), my.ravel()], axis=-1)
    w = interp(pts) * hx_f * hy_f
    keep = w > 0
    return pts[keep], w[keep]


def _interp_velocity(vel, valid, grid: Grid, pts):
    from scipy.interpolate import RegularGridInterpolator

    out = np.zeros((pts.shape[0], grid.dims))
    for d in range(grid.dims):
        comp = np.where(valid, vel[..., d], 0.0)
        interp = RegularGridInterpolator(grid.axes(), comp,
                                         bounds_error=False, fill_value=0.0)
        out[:, d] = interp(pts)
    return out


def classical_transport(state: ClassicalEnsembleState, t: float,
                        steps: int = 1, refine: int = 4) -> ClassicalEnsembleState:
    """Advance (rho, S): S by least-action evolution, rho by pushing grid
    samples along the characteristics and re-binning with linear deposition."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if t == 0:
        return ClassicalEnsembleState(
            replace(state.rho, values=state.rho.values.copy()),
            replace(state.action, values=state.action.values.copy()),
            state.potential)
    pot = state.potential
    grid = state.rho.grid
    m = pot.mass

    new_action = hopf_lax_field(state.action, pot, t)

    pts, w = _source_points(state.rho, refine)
    if state.action.linear_tag is not None:
        v = np.broadcast_to(np.asarray(state.action.linear_tag.v0),
                            pts.shape).copy()
    else:
        vel, valid = velocity_field(state.action, m)
        v = _interp_velocity(vel, valid, grid, pts)

    if pot.kind in (FREE, LINEAR):
        k = np.asarray(pot.force if pot.kind == LINEAR else [0.0] * grid.dims)
        end = pts + v * t + k * t ** 2 / (2.0 * m)
    elif pot.kind == HARMONIC:
        wt = pot.omega * t
        end = pts * np.cos(wt) + (v / pot.omega) * np.sin(wt)
    elif pot.kind == TABULATED:
        if grid.dims != 1:
            raise Unsupported("tabulated transport is 1D only")
        end = _leapfrog_tabulated(pts, v, pot, grid, t, steps)
        order = np.argsort(pts[:, 0])
        if np.any(np.diff(end[order, 0]) < 0):
            warnings.warn("characteristics crossed (caustic); density is a "
                          "superposed push-forward", CausticWarning)
    else:  # pragma: no cover
        raise Unsupported(pot.kind)

    if grid.dims == 1:
        (lo, hi), n = grid.extents[0], grid.shape[0]
        h = grid.spacing[0]
        deposited = _kernels.deposit_cic_1d(np.ascontiguousarray(end[:, 0]),
                                            w, lo, h, n)
        rho_new = deposited / h
    else:
        (lox, _), (loy, _) = grid.extents
        hx, hy = grid.spacing
        deposited = _kernels.deposit_cic_2d(np.ascontiguousarray(end), w,
                                            lox, hx, grid.shape[0],
                                            loy, hy, grid.shape[1])
        rho_new = deposited / (hx * hy)

    new_rho = DensityField(grid, rho_new, time=state.rho.time + t)
    return ClassicalEnsembleState(new_rho, new_action, pot)


def _leapfrog_tabulated(pts, v, pot: Potential, grid: Grid, t: float,
                        steps: int):
    x_axis = grid.axis(0)
    v_grid = pot.energy_on_grid(grid)
    force = -np.gradient(v_grid, grid.spacing[0])
    dt = t / steps
    x = pts[:, 0].copy()
    vv = v[:, 0].copy()

    def acc(xq):
        return np.interp(xq, x_axis, force) / pot.mass

    a = acc(x)
    for _ in range(steps):
        vv_half = vv + 0.5 * dt * a
        x = x + dt * vv_half
        a = acc(x)
        vv = vv_half + 0.5 * dt * a
    return x[:, None]
