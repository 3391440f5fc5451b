"""Two-component Pauli spinor propagation and the Stern-Gerlach pipeline.

The magnet stage applies opposite potentials -/+ mu*B'*z to the +/- spin
components (z-linear field, sigma_z coupling only), so the components
pick up opposite momentum kicks and separate; free flight then turns the
momentum split into a position split.  Guidance uses the total spinor
current, which reduces to the scalar law when one component vanishes.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .errors import PacketClipped, UnresolvedSpots, VelocityUndefined
from .grid import Grid
from .pilot import (Ensemble, equivariance_check, integrate_trajectories,
                    sample_bundle_positions, sample_initial_positions)
from .wavefields import (ComplexField, GaussianPacketSpec, NODE_FLOOR_RATIO,
                         init_packet, spectral_gradient)


@dataclass
class SpinorField:
    """Pauli spinor on a 2D (beam x, transverse z) lattice."""
    grid: Grid
    plus: np.ndarray
    minus: np.ndarray
    time: float
    hbar: float
    mass: float

    def __post_init__(self):
        self.plus = np.asarray(self.plus, dtype=complex)
        self.minus = np.asarray(self.minus, dtype=complex)
        if self.grid.dims != 2:
            raise ValueError("spinor fields live on 2D (x, z) grids")

    def density(self) -> np.ndarray:
        return np.abs(self.plus) ** 2 + np.abs(self.minus) ** 2

    def norm(self) -> float:
        return float(np.sqrt(self.grid.integrate(self.density())))

    def normalized(self) -> "SpinorField":
        n = self.norm()
        return replace(self, plus=self.plus / n, minus=self.minus / n)

    def component_weights(self):
        wp = self.grid.integrate(np.abs(self.plus) ** 2)
        wm = self.grid.integrate(np.abs(self.minus) ** 2)
        return wp, wm

    def currents(self):
        """Per-component currents j+/- (hbar/m Im psi* grad psi) and densities."""
        out = {}
        for name, comp in (("plus", self.plus), ("minus", self.minus)):
            rho = np.abs(comp) ** 2
            grads = spectral_gradient(comp, self.grid)
            j = np.stack([(self.hbar / self.mass)
                          * np.imag(np.conj(comp) * grads[d])
                          for d in range(2)], axis=-1)
            out[name] = (rho, j)
        return out

    def current_velocity(self):
        """Total-current guidance velocity and total density."""
        cur = self.currents()
        rho = cur["plus"][0] + cur["minus"][0]
        j = cur["plus"][1] + cur["minus"][1]
        floor = NODE_FLOOR_RATIO * rho.max()
        safe = np.where(rho > floor, rho, 1.0)
        vel = np.where((rho > floor)[..., None], j / safe[..., None], 0.0)
        return vel, rho


@dataclass(frozen=True)
class SpinOrientation:
    theta: float  # in [0, pi]
    phi: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= np.pi:
            raise ValueError("theta out of [0, pi]")


@dataclass(frozen=True)
class MagnetConfig:
    """Stern-Gerlach device in dimensionless desk units.

    field_gradient*moment sets the force on the spin components; the
    magnet is crossed at transit_speed over `length` and the atoms then
    fly freely for flight_time before the screen.  bias_field adds the
    constant-field precession phase (off by default).
    """
    field_gradient: float = 5.0
    moment: float = 1.0
    length: float = 5.0
    transit_speed: float = 5.0
    flight_time: float = 2.0
    bias_field: float = 0.0

    def __post_init__(self):
        if self.length <= 0 or self.transit_speed <= 0 or self.flight_time < 0:
            raise ValueError("magnet lengths and times must be positive")

    @property
    def transit_time(self) -> float:
        return self.length / self.transit_speed

    def kick_velocity(self, mass: float) -> float:
        """Transverse speed gained by each component in the magnet."""
        return self.moment * self.field_gradient * self.transit_time / mass

    def analytic_separation(self, mass: float) -> float:
        """Impulse-kinematics distance between the component centers at
        the screen: 2 (mu B'/m) dt (dt/2 + t_flight)."""
        a = self.moment * self.field_gradient / mass
        dt = self.transit_time
        return 2.0 * a * dt * (0.5 * dt + self.flight_time)


@dataclass(frozen=True)
class SternGerlachNumerics:
    """Lattice and stepping for the device solve."""
    grid_x: tuple = (-8.0, 28.0)
    grid_z: tuple = (-28.0, 28.0)
    nx: int = 160
    nz: int = 512
    dt: float = 2.5e-3
    traj_stride: int = 10     # PDE steps per trajectory step
    check_stride: int = 400   # PDE steps per stored snapshot
    sigma0: float = 1.0

    def grid(self) -> Grid:
        return Grid((self.grid_x, self.grid_z), (self.nx, self.nz))


def init_spinor(theta0: float, phi0: float, sigma0: float, grid: Grid,
                hbar: float, mass: float, center=(0.0, 0.0),
                velocity=(0.0, 0.0)) -> SpinorField:
    """Gaussian envelope times the (cos(t/2) e^{i phi/2}, sin(t/2) e^{-i phi/2})
    spinor, normalized on the grid."""
    envelope = init_packet(GaussianPacketSpec(sigma0, center, velocity),
                           grid, hbar, mass)
    up = np.cos(theta0 / 2.0) * np.exp(0.5j * phi0)
    dn = np.sin(theta0 / 2.0) * np.exp(-0.5j * phi0)
    return SpinorField(grid, up * envelope.psi, dn * envelope.psi,
                       time=0.0, hbar=hbar, mass=mass)


INSIDE_MAGNET = "inside_magnet"
FREE_FLIGHT = "free_flight"


def iterate_pauli(field: SpinorField, magnet: MagnetConfig, stage: str,
                  dt: float, steps: int):
    """Strang-split Pauli evolution; yields the field after every step.

    inside_magnet applies V(+/-) = -/+ mu (B0 + B' z); free_flight is pure
    kinetic evolution.  Components never mix: the coupling is sigma_z.
    """
    if stage not in (INSIDE_MAGNET, FREE_FLIGHT):
        raise ValueError(f"unknown stage '{stage}'")
    grid = field.grid
    ks = grid.wavenumbers()
    k2 = ks[0][:, None] ** 2 + ks[1][None, :] ** 2
    kin = np.exp(-0.5j * field.hbar * k2 * dt / field.mass)
    if stage == INSIDE_MAGNET:
        z = grid.axis(1)[None, :]
        b = magnet.bias_field + magnet.field_gradient * z
        v_plus = -magnet.moment * b
        half_p = np.exp(-0.5j * v_plus * dt / field.hbar)
        half_m = np.exp(+0.5j * v_plus * dt / field.hbar)
    else:
        half_p = half_m = 1.0
    plus, minus = field.plus, field.minus
    for s in range(1, steps + 1):
        plus = half_p * np.fft.ifftn(kin * np.fft.fftn(half_p * plus))
        minus = half_m * np.fft.ifftn(kin * np.fft.fftn(half_m * minus))
        yield SpinorField(grid, plus, minus, field.time + s * dt,
                          field.hbar, field.mass)


def pauli_propagate(field: SpinorField, magnet: MagnetConfig, stage: str,
                    dt: float, steps: int) -> SpinorField:
    if steps == 0:
        return replace(field, plus=field.plus.copy(), minus=field.minus.copy())
    out = field
    for out in iterate_pauli(field, magnet, stage, dt, steps):
        pass
    return out


def spin_orientation(field: SpinorField, x) -> SpinOrientation:
    """Local spin direction at a point: theta = 2 atan2(|psi-|, |psi+|),
    phi from the relative component phase."""
    pt = np.asarray(x, dtype=float)
    (lox, _), (loz, _) = field.grid.extents
    hx, hz = field.grid.spacing
    ux, uz = (pt[0] - lox) / hx, (pt[1] - loz) / hz
    ix, iz = int(np.floor(ux)), int(np.floor(uz))
    nx, nz = field.grid.shape
    if not (0 <= ix < nx - 1 and 0 <= iz < nz - 1):
        raise VelocityUndefined("position outside the lattice")
    fx, fz = ux - ix, uz - iz

    def interp(a):
        return (a[ix, iz] * (1 - fx) * (1 - fz) + a[ix + 1, iz] * fx * (1 - fz)
                + a[ix, iz + 1] * (1 - fx) * fz + a[ix + 1, iz + 1] * fx * fz)

    p = interp(field.plus)
    m = interp(field.minus)
    rho = abs(p) ** 2 + abs(m) ** 2
    if rho < NODE_FLOOR_RATIO * field.density().max():
        raise VelocityUndefined("local spinor density below the node floor")
    theta = 2.0 * np.arctan2(abs(m), abs(p))
    phi = float(np.angle(p * np.conj(m))) if (abs(p) > 0 and abs(m) > 0) else 0.0
    return SpinOrientation(float(theta), phi)


def orientation_angle_field(field: SpinorField) -> np.ndarray:
    """theta = 2 atan2(|psi-|, |psi+|) on every node."""
    return 2.0 * np.arctan2(np.abs(field.minus), np.abs(field.plus))


def orientation_at(field: SpinorField, pts: np.ndarray) -> np.ndarray:
    """Vectorized theta at points (n, 2); nan outside the lattice."""
    pts = np.atleast_2d(pts)
    (lox, _), (loz, _) = field.grid.extents
    hx, hz = field.grid.spacing
    nx, nz = field.grid.shape
    ux = (pts[:, 0] - lox) / hx
    uz = (pts[:, 1] - loz) / hz
    ix = np.floor(ux).astype(int)
    iz = np.floor(uz).astype(int)
    ok = (ix >= 0) & (ix < nx - 1) & (iz >= 0) & (iz < nz - 1)
    ixs = np.clip(ix, 0, nx - 2)
    izs = np.clip(iz, 0, nz - 2)
    fx = ux - ixs
    fz = uz - izs

    def interp(a):
        return (a[ixs, izs] * (1 - fx) * (1 - fz)
                + a[ixs + 1, izs] * fx * (1 - fz)
                + a[ixs, izs + 1] * (1 - fx) * fz
                + a[ixs + 1, izs + 1] * fx * fz)

    theta = 2.0 * np.arctan2(np.abs(interp(field.minus)),
                             np.abs(interp(field.plus)))
    return np.where(ok, theta, np.nan)


@dataclass
class SternGerlachResult:
    theta0: float
    phi0: float
    magnet: MagnetConfig
    numerics: SternGerlachNumerics
    impacts: np.ndarray          # final z per atom
    signs: np.ndarray            # +1 / -1 classification
    fraction_plus: float
    ensemble: Ensemble
    bundle: Ensemble
    snapshots: list              # strided SpinorField history
    equivariance: list
    separation: float            # measured center distance at the screen
    spot_sigma: float            # max component width at the screen
    psi0: SpinorField = None
    orientation_times: np.ndarray = None   # dense lattice for theta samples
    orientation_z: np.ndarray = None       # (n_bundle, T) z along bundle paths
    orientation_theta: np.ndarray = None   # (n_bundle, T) theta along paths


def _component_moments(field: SpinorField):
    z = field.grid.axis(1)
    out = []
    for comp in (field.plus, field.minus):
        rho = (np.abs(comp) ** 2).sum(axis=0)
        total = rho.sum()
        if total <= 0:
            out.append((np.nan, np.nan, 0.0))
            continue
        mean = np.sum(z * rho) / total
        sig = np.sqrt(np.sum((z - mean) ** 2 * rho) / total)
        out.append((mean, sig, total))
    return out


def stern_gerlach_run(theta0: float, phi0: float, magnet: MagnetConfig,
                      n_atoms: int, seed: int,
                      numerics: SternGerlachNumerics = None,
                      hbar: float = 1.0, mass: float = 1.0,
                      n_bundle: int = 10) -> SternGerlachResult:
    """init -> magnet -> free flight -> impact classification by sign(z)."""
    num = numerics or SternGerlachNumerics()
    grid = num.grid()
    psi0 = init_spinor(theta0, phi0, num.sigma0, grid, hbar, mass,
                       center=(0.0, 0.0),
                       velocity=(magnet.transit_speed, 0.0))

    envelope = ComplexField(grid, np.sqrt(psi0.density()).astype(complex),
                            0.0, hbar, mass)
    x_eq = sample_initial_positions(envelope, n_atoms, seed)
    x_bundle = sample_bundle_positions(envelope, n_bundle, seed + 1,
                                       min_separation=2.2 * max(grid.spacing))
    x_all = np.vstack([x_eq, x_bundle])

    steps_m = int(round(magnet.transit_time / num.dt))
    steps_f = int(round(magnet.flight_time / num.dt))
    history = _device_stages(psi0, magnet, num.dt, steps_m, steps_f)

    snapshots = [psi0]

    def strided(it):
        for i, f in enumerate(it, start=1):
            if i % num.check_stride == 0:
                snapshots.append(f)
            if i % num.traj_stride == 0:
                yield f

    orient_t, orient_z, orient_theta = [], [], []

    def record_orientation(field, pos, flags):
        orient_t.append(field.time)
        orient_z.append(pos[n_atoms:, 1].copy())
        orient_theta.append(orientation_at(field, pos[n_atoms:]))

    ens_all = integrate_trajectories(
        x_all, itertools.chain([psi0], strided(history)),
        dt=num.dt * num.traj_stride,
        store_stride=num.check_stride // num.traj_stride, seed=seed,
        observer=record_orientation)

    ensemble = Ensemble(ens_all.times, ens_all.positions[:n_atoms],
                        ens_all.flags[:n_atoms], seed=seed)
    bundle = Ensemble(ens_all.times, ens_all.positions[n_atoms:],
                      ens_all.flags[n_atoms:], seed=seed + 1)

    final = snapshots[-1]
    (mean_p, sig_p, wp), (mean_m, sig_m, wm) = _component_moments(final)
    if wp > 1e-12 and wm > 1e-12:
        separation = abs(mean_p - mean_m)
        spot_sigma = max(sig_p, sig_m)
        if separation < 4.0 * spot_sigma:
            raise UnresolvedSpots(
                f"spots {separation:.3f} apart but sigma {spot_sigma:.3f}; "
                "need separation > 4 sigma to classify")
    else:
        separation = abs(magnet.analytic_separation(mass))
        spot_sigma = max(sig_p if wp > 1e-12 else 0.0,
                         sig_m if wm > 1e-12 else 0.0)

    live = ensemble.flags == _kernels.FLAG_ACTIVE
    impacts = ensemble.positions[:, -1, 1]
    signs = np.where(impacts > 0, 1, -1)
    fraction_plus = float(np.mean(signs[live] > 0))

    if n_atoms >= 2500:
        bins = (6, 12)
    elif n_atoms >= 800:
        bins = (4, 8)
    else:
        bins = (3, 5)
    checks = [equivariance_check(ensemble.positions[live, k, :], snap,
                                 bins=bins)
              for k, snap in enumerate(snapshots)]
    return SternGerlachResult(theta0, phi0, magnet, num, impacts, signs,
                              fraction_plus, ensemble, bundle, snapshots,
                              checks, separation, spot_sigma, psi0=psi0,
                              orientation_times=np.asarray(orient_t),
                              orientation_z=np.stack(orient_z, axis=1),
                              orientation_theta=np.stack(orient_theta, axis=1))


def _device_stages(psi0: SpinorField, magnet: MagnetConfig, dt: float,
                   steps_m: int, steps_f: int):
    """Lazy magnet stage followed by free flight, continuous in time."""
    last = psi0
    for f in iterate_pauli(psi0, magnet, INSIDE_MAGNET, dt, steps_m):
        last = f
        yield f
    for f in iterate_pauli(last, magnet, FREE_FLIGHT, dt, steps_f):
        yield f


def unit_component_device(magnet: MagnetConfig, numerics: SternGerlachNumerics,
                          hbar: float = 1.0, mass: float = 1.0):
    """Device solution with both spin components at unit weight.

    Any initial orientation's evolution is this pair of component fields
    scaled by the (conserved) weights cos^2(t0/2), sin^2(t0/2), because the
    sigma_z coupling never mixes components.  Returns (psi0, history
    generator) with the history yielded every traj_stride PDE steps.
    """
    grid = numerics.grid()
    envelope = init_packet(GaussianPacketSpec(numerics.sigma0, (0.0, 0.0),
                                              (magnet.transit_speed, 0.0)),
                           grid, hbar, mass)
    psi0 = SpinorField(grid, envelope.psi.copy(), envelope.psi.copy(),
                       0.0, hbar, mass)
    steps_m = int(round(magnet.transit_time / numerics.dt))
    steps_f = int(round(magnet.flight_time / numerics.dt))

    def strided():
        for i, f in enumerate(_device_stages(psi0, magnet, numerics.dt,
                                             steps_m, steps_f), start=1):
            if i % numerics.traj_stride == 0:
                yield f

    return psi0, strided()


def integrate_weighted_trajectories(x0: np.ndarray, wplus: np.ndarray,
                                    field_history, dt: float,
                                    floor_ratio: float = NODE_FLOOR_RATIO):
    """Lockstep guidance of particles with per-particle component weights.

    v_i = (w_i j+ + (1-w_i) j-) / (w_i rho+ + (1-w_i) rho-), through a
    history of unit-weight component fields.  Returns (positions, flags).
    """
    it = iter(field_history)
    first = next(it)
    grid = first.grid
    pos = np.ascontiguousarray(np.atleast_2d(np.asarray(x0, dtype=float)))
    w = np.ascontiguousarray(np.asarray(wplus, dtype=float))
    flags = np.zeros(pos.shape[0], dtype=np.int64)
    (lox, _), (loz, _) = grid.extents
    hx, hz = grid.spacing
    nx, nz = grid.shape

    def layers(f):
        cur = f.currents()
        rp, jp = cur["plus"]
        rm, jm = cur["minus"]
        return (rp, rm, np.ascontiguousarray(jp[..., 0]),
                np.ascontiguousarray(jm[..., 0]),
                np.ascontiguousarray(jp[..., 1]),
                np.ascontiguousarray(jm[..., 1]))

    la = layers(first)
    for snap in it:
        lb = layers(snap)
        mid = tuple(0.5 * (a + b) for a, b in zip(la, lb))
        floor = floor_ratio * max((la[0] + la[1]).max(), (lb[0] + lb[1]).max())
        pos, flags = _kernels.rk4_weighted_2d(
            pos, flags, w,
            la[2], mid[2], lb[2], la[3], mid[3], lb[3],
            la[4], mid[4], lb[4], la[5], mid[5], lb[5],
            la[0], mid[0], lb[0], la[1], mid[1], lb[1],
            lox, hx, nx, loz, hz, nz, dt, floor)
        la = lb
    return pos, flags
