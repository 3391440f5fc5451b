"""de Broglie-Bohm guidance: sampling, trajectory integration, equivariance.

Initial positions are drawn from |Psi0|^2 (quantum equilibrium); the
guidance velocity is the probability current over the density, evaluated
from stored or lazily generated field snapshots; integration is fixed-step
RK4 with linear interpolation of the velocity field in time and (bi)linear
interpolation in space.  Trajectories that leave the lattice or reach a
density below the node floor are terminated and flagged, never silently
continued.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2 as _chi2

from . import _kernels
from .errors import TooFewSamples
from .grid import Grid
from .potentials import Potential
from .wavefields import (ComplexField, GaussianPacketSpec, NODE_FLOOR_RATIO,
                         init_packet, iterate_split_step)

FLAG_ACTIVE = _kernels.FLAG_ACTIVE
FLAG_EXITED = _kernels.FLAG_EXITED
FLAG_UNDEFINED = _kernels.FLAG_UNDEFINED


@dataclass
class Trajectory:
    times: np.ndarray
    positions: np.ndarray  # (T, dims)
    seed_index: int
    flag: int = FLAG_ACTIVE


@dataclass
class Ensemble:
    times: np.ndarray        # stored time lattice (T,)
    positions: np.ndarray    # (n, T, dims)
    flags: np.ndarray        # (n,) final status per trajectory
    seed: int = 0
    sampling: str = "born"   # law used for the initial draw
    impacts: np.ndarray = None  # screen-plane crossings, when requested

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    def trajectory(self, i: int) -> Trajectory:
        return Trajectory(self.times, self.positions[i], i, int(self.flags[i]))


# ---------------------------------------------------------------------------
# quantum-equilibrium sampling
# ---------------------------------------------------------------------------

def _edge_cdf(mass_1d, lo, h):
    """Piecewise-linear CDF of the node-centered cell-constant density.

    Cell j spans [x_j - h/2, x_j + h/2), so the discrete law carries no
    O(h) centroid bias relative to the continuum density.
    """
    n = len(mass_1d)
    edges = lo + h * (np.arange(n + 1) - 0.5)
    cdf = np.concatenate([[0.0], np.cumsum(mass_1d)])
    cdf /= cdf[-1]
    return edges, cdf


def _density_cdf_1d(field, axis=0):
    rho = field.density()
    if field.grid.dims == 2:
        rho = rho.sum(axis=1 - axis) * field.grid.spacing[1 - axis]
    mass = rho * field.grid.spacing[axis]
    lo = field.grid.extents[axis][0]
    return _edge_cdf(mass, lo, field.grid.spacing[axis])


def sample_initial_positions(psi0, n: int, seed: int) -> np.ndarray:
    """n i.i.d. draws from |Psi0|^2; inverse-CDF in 1D, rejection in 2D.

    The sampled law is the node-value density held constant on each grid
    cell, the same discrete law the equivariance binning integrates.
    Deterministic for a fixed seed.  Returns shape (n, dims).
    """
    if n < 1:
        raise ValueError("need n >= 1")
    rng = np.random.default_rng(seed)
    grid = psi0.grid
    if grid.dims == 1:
        edges, cdf = _density_cdf_1d(psi0)
        u = rng.random(n)
        return np.interp(u, cdf, edges)[:, None]
    rho = psi0.density()
    rho_max = rho.max()
    (lox, hix), (loy, hiy) = grid.extents
    hx, hy = grid.spacing
    out = np.empty((n, 2))
    got = 0
    while got < n:
        batch = max(4 * (n - got), 1024)
        cand = np.column_stack([rng.uniform(lox - hx / 2, hix - hx / 2, batch),
                                rng.uniform(loy - hy / 2, hiy - hy / 2, batch)])
        u = rng.random(batch)
        ix = np.clip(np.round((cand[:, 0] - lox) / hx).astype(int),
                     0, grid.shape[0] - 1)
        iy = np.clip(np.round((cand[:, 1] - loy) / hy).astype(int),
                     0, grid.shape[1] - 1)
        acc = cand[u * rho_max < rho[ix, iy]]
        take = min(len(acc), n - got)
        out[got:got + take] = acc[:take]
        got += take
    return out


def sample_quantile_positions(psi0, n: int, axis: int = 0) -> np.ndarray:
    """Positions at the (i+1/2)/n quantiles of the 1D marginal density.

    hbar-free whenever rho0 is, which makes trajectories comparable across
    a Planck-constant sweep.  Off-axis coordinates sit at the density peak.
    """
    grid = psi0.grid
    q = (np.arange(n) + 0.5) / n
    edges, cdf = _density_cdf_1d(psi0, axis=axis)
    vals = np.interp(q, cdf, edges)
    if grid.dims == 1:
        return vals[:, None]
    rho = psi0.density()
    other = grid.axis(1 - axis)[int(np.argmax(rho.sum(axis=axis)))]
    out = np.empty((n, 2))
    out[:, axis] = vals
    out[:, 1 - axis] = other
    return out


def sample_bundle_stratified(psi0, n: int, y_levels: int = 8) -> np.ndarray:
    """Deterministic quantile-grid bundle for displayed trajectories.

    Rows sit at quantiles of the transverse marginal, columns at
    quantiles of the longitudinal marginal.  The transverse dynamics of a
    product field is independent of the longitudinal coordinate, so row
    ordering is preserved for all time and the sparse row spacing
    survives fringe channeling; column gaps ride the (expanding)
    longitudinal flow.  Together these keep equal-time pairwise
    separations above the lattice cell for the whole run.
    """
    grid = psi0.grid
    if grid.dims != 2:
        raise ValueError("stratified bundles need a 2D field")
    edges_y, cdf_y = _density_cdf_1d(psi0, axis=1)
    qy = (np.arange(y_levels) + 0.5) / y_levels
    ys = np.interp(qy, cdf_y, edges_y)
    x_levels = int(np.ceil(n / y_levels))
    edges_x, cdf_x = _density_cdf_1d(psi0, axis=0)
    qx = (np.arange(x_levels) + 0.5) / x_levels
    xs = np.interp(qx, cdf_x, edges_x)
    pts = [(x, y) for y in ys for x in xs]
    return np.asarray(pts[:n])


def sample_bundle_positions(psi0, n: int, seed: int,
                            min_separation: float = None) -> np.ndarray:
    """Quantum-equilibrium draws thinned to a minimum pairwise separation.

    Used for displayed trajectory bundles, where overlapping starts are
    useless and the non-crossing check needs resolvable spacing.
    """
    grid = psi0.grid
    if min_separation is None:
        min_separation = 1.6 * max(grid.spacing)
    rng_seed = seed
    accepted = np.empty((0, grid.dims))
    attempts = 0
    while len(accepted) < n:
        attempts += 1
        if attempts > 200:
            raise RuntimeError("bundle sampling failed; lower min_separation")
        cand = sample_initial_positions(psi0, 4 * n, rng_seed)
        rng_seed += 1
        for c in cand:
            if len(accepted) >= n:
                break
            if len(accepted) == 0 or np.min(
                    np.linalg.norm(accepted - c, axis=1)) >= min_separation:
                accepted = np.vstack([accepted, c])
    return accepted


# ---------------------------------------------------------------------------
# trajectory integration
# ---------------------------------------------------------------------------

def integrate_trajectories(x0: np.ndarray, field_history, dt: float = None,
                           store_stride: int = 1, seed: int = 0,
                           screen_plane=None, substeps: int = 1,
                           observer=None,
                           floor_ratio: float = NODE_FLOOR_RATIO) -> Ensemble:
    """RK4 guidance through a sequence of field snapshots.

    field_history yields snapshots spaced dt apart (the first defines the
    start time); it may be a list or a lazy generator, so histories never
    need to fit in memory.  Velocities between snapshots are linear in
    time.  substeps > 1 subdivides each snapshot interval, which resolves
    stiff velocity features (slit edges) without extra field solves.
    screen_plane=(axis, value) records the first crossing of that plane
    per trajectory (interpolated), returned in Ensemble.impacts.
    observer(field, positions, flags), when given, runs after every step
    (and once on the initial state) for on-the-fly measurements.
    """
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    it = iter(field_history)
    first = next(it)
    grid = first.grid
    dims = grid.dims
    if x0.shape[1] != dims:
        raise ValueError("initial positions do not match the field dimension")
    n = x0.shape[0]
    pos = x0.copy()
    flags = np.zeros(n, dtype=np.int64)
    stored = [pos.copy()]
    times = [first.time]
    impacts = np.full(n, np.nan) if screen_plane is not None else None
    crossed = np.zeros(n, dtype=bool) if screen_plane is not None else None

    vel_a, rho_a = first.current_velocity()
    t_prev = first.time
    step = 0
    if observer is not None:
        observer(first, pos, flags)
    for snap in it:
        step += 1
        if dt is None:
            dt = snap.time - t_prev
        vel_b, rho_b = snap.current_velocity()
        floor = floor_ratio * max(rho_a.max(), rho_b.max())
        prev_pos = pos.copy() if screen_plane is not None else None
        dt_sub = dt / substeps
        for s in range(substeps):
            ta = s / substeps
            tb = (s + 1) / substeps
            tm = 0.5 * (ta + tb)
            v0 = vel_a + ta * (vel_b - vel_a)
            vm = vel_a + tm * (vel_b - vel_a)
            v1 = vel_a + tb * (vel_b - vel_a)
            r0 = rho_a + ta * (rho_b - rho_a)
            rm = rho_a + tm * (rho_b - rho_a)
            r1 = rho_a + tb * (rho_b - rho_a)
            if dims == 1:
                (lo, _), nn = grid.extents[0], grid.shape[0]
                p = np.ascontiguousarray(pos[:, 0])
                p, flags = _kernels.rk4_scalar_1d(
                    p, flags, v0[:, 0], vm[:, 0], v1[:, 0],
                    r0, rm, r1, lo, grid.spacing[0], nn, dt_sub, floor)
                pos = p[:, None]
            else:
                (lox, _), (loy, _) = grid.extents
                pos, flags = _kernels.rk4_scalar_2d(
                    pos, flags,
                    np.ascontiguousarray(v0[..., 0]), np.ascontiguousarray(vm[..., 0]),
                    np.ascontiguousarray(v1[..., 0]), np.ascontiguousarray(v0[..., 1]),
                    np.ascontiguousarray(vm[..., 1]), np.ascontiguousarray(v1[..., 1]),
                    r0, rm, r1,
                    lox, grid.spacing[0], grid.shape[0],
                    loy, grid.spacing[1], grid.shape[1], dt_sub, floor)
        if screen_plane is not None:
            axis, value = screen_plane
            live = flags == FLAG_ACTIVE
            hit = live & ~crossed & (prev_pos[:, axis] <= value) \
                & (pos[:, axis] > value)
            if np.any(hit):
                frac = (value - prev_pos[hit, axis]) \
                    / (pos[hit, axis] - prev_pos[hit, axis])
                other = 1 - axis if dims == 2 else 0
                y_at = prev_pos[hit, other] \
                    + frac * (pos[hit, other] - prev_pos[hit, other])
                impacts[hit] = y_at
                crossed[hit] = True
        if observer is not None:
            observer(snap, pos, flags)
        if step % store_stride == 0:
            stored.append(pos.copy())
            times.append(snap.time)
        vel_a, rho_a = vel_b, rho_b
        t_prev = snap.time
    if (step % store_stride) != 0:
        stored.append(pos.copy())
        times.append(t_prev)
    ens = Ensemble(np.asarray(times), np.stack(stored, axis=1),
                   flags.astype(np.int8), seed=seed)
    ens.impacts = impacts
    return ens


def min_pairwise_separation(ensemble: Ensemble) -> float:
    """Minimum over stored times of the minimum pairwise distance."""
    best = np.inf
    for k in range(ensemble.positions.shape[1]):
        pts = ensemble.positions[:, k, :]
        diff = pts[:, None, :] - pts[None, :, :]
        d = np.sqrt(np.sum(diff ** 2, axis=-1))
        d[np.diag_indices_from(d)] = np.inf
        best = min(best, float(d.min()))
    return best


# ---------------------------------------------------------------------------
# equivariance statistics
# ---------------------------------------------------------------------------

@dataclass
class EquivarianceResult:
    chi2: float
    dof: int
    threshold: float
    passed: bool
    n_bins: int
    pooled: int = 0


def _snapped_quantile_edges(mass_1d, lo, h, bins):
    """Quantile edges of the cell-constant marginal, snapped to cell edges.

    Snapping keeps bin boundaries aligned with the sampled law so expected
    masses are exact cumulative sums, not approximations.
    """
    edges, cdf = _edge_cdf(mass_1d, lo, h)
    q = np.linspace(0.0, 1.0, bins + 1)
    raw = np.interp(q, cdf, edges)
    snapped = lo + h * (np.round((raw - lo) / h + 0.5) - 0.5)
    snapped[0], snapped[-1] = edges[0], edges[-1]
    return np.unique(snapped)


def equivariance_check(positions: np.ndarray, field, bins=None,
                       significance: float = 0.01) -> EquivarianceResult:
    """Chi-squared test of sampled positions against |Psi(.,t)|^2.

    Bin edges sit at quantiles of the field's marginal densities, so
    expected counts are balanced; cells with expected count < 5 are pooled
    into one catch-all cell.  TooFewSamples is raised when more than 10%
    of cells start below an expected count of 5.
    """
    grid = field.grid
    rho = field.density()
    pts = np.atleast_2d(np.asarray(positions, dtype=float))
    n = pts.shape[0]
    if grid.dims == 1:
        bins = bins or 40
        h = grid.spacing[0]
        lo = grid.extents[0][0]
        mass = rho * h
        edges = _snapped_quantile_edges(mass, lo, h, bins)
        full_edges, cdf = _edge_cdf(mass, lo, h)
        expected = np.diff(np.interp(edges, full_edges, cdf)) * n
        observed = np.histogram(pts[:, 0], bins=edges)[0].astype(float)
    else:
        bins = bins or (10, 10)
        bx, by = bins
        (lox, _), (loy, _) = grid.extents
        hx, hy = grid.spacing
        mass = rho * grid.cell_volume
        ex = _snapped_quantile_edges(mass.sum(axis=1), lox, hx, bx)
        ey = _snapped_quantile_edges(mass.sum(axis=0), loy, hy, by)
        # nodes are the centers of the sampled cells and land strictly
        # inside the snapped bins, so expected masses are exact
        mx, my = grid.meshgrid()
        expected = np.histogram2d(mx.ravel(), my.ravel(), bins=(ex, ey),
                                  weights=mass.ravel())[0].ravel()
        expected = expected / expected.sum() * n
        observed = np.histogram2d(pts[:, 0], pts[:, 1],
                                  bins=(ex, ey))[0].ravel().astype(float)
    low = expected < 5.0
    if low.mean() > 0.10:
        raise TooFewSamples(
            f"{low.sum()} of {low.size} bins expect fewer than 5 samples")
    pooled = 0
    if low.any():
        pooled = int(low.sum())
        observed = np.concatenate([observed[~low], [observed[low].sum()]])
        expected = np.concatenate([expected[~low], [expected[low].sum()]])
    stat = float(np.sum((observed - expected) ** 2 / expected))
    dof = len(expected) - 1
    threshold = float(_chi2.ppf(1.0 - significance, dof))
    return EquivarianceResult(stat, dof, threshold, stat < threshold,
                              len(expected), pooled)


# ---------------------------------------------------------------------------
# the double-slit (Jonsson layout) experiment
# ---------------------------------------------------------------------------

@dataclass
class JonssonConfig:
    """Two-slit geometry and run parameters (dimensionless units).

    Defaults reproduce the qualitative near/far interference layout:
    no resolved fringes just past the slits, clean fringes at the screen.
    They are desk-scale values, not measured constants.
    """
    slit_separation: float = 4.0
    slit_width: float = 0.8
    sigma0: float = 1.5
    speed: float = 8.0
    screen_distance: float = 40.0
    hbar: float = 1.0
    mass: float = 1.0
    grid_x: tuple = (-10.0, 66.0)
    grid_y: tuple = (-60.0, 60.0)
    nx: int = 768
    ny: int = 1280
    dt: float = 0.015
    extra_time: float = 0.2   # fraction of flight time past the screen
    n_samples: int = 10000
    n_bundle: int = 100
    seed: int = 20260810
    snapshot_stride: int = 50
    edge_width: float = 0.55  # aperture edge ramp (collimator softness)
    absorb_width: float = 7.0
    near_fraction: float = 0.04  # near-zone snapshot time / flight time

    @property
    def wavelength(self) -> float:
        return 2.0 * np.pi * self.hbar / (self.mass * self.speed)

    @property
    def fringe_spacing(self) -> float:
        return self.wavelength * self.screen_distance / self.slit_separation

    @property
    def steps(self) -> int:
        total = (1.0 + self.extra_time) * self.screen_distance / self.speed
        return int(np.ceil(total / self.dt / self.snapshot_stride)) \
            * self.snapshot_stride


@dataclass
class JonssonResult:
    config: JonssonConfig
    psi0: ComplexField
    snapshots: list
    ensemble: Ensemble
    bundle: Ensemble
    impacts: np.ndarray
    equivariance: list
    measured_fringe_spacing: float
    near_field: ComplexField = None  # pre-overlap zone, fringes unresolved


def slit_mask(config: JonssonConfig, y: np.ndarray) -> np.ndarray:
    """Two-slit aperture with half-cosine edge ramps of width edge_width.

    The ramp band-limits the transmitted state so the lattice resolves
    every velocity feature the slits create; the fringe scale is far
    coarser than the ramp, so the interference physics is unchanged.
    """
    w = config.edge_width

    def ramp(dist):
        # 1 inside, 0 outside, cos^2 over [-w, 0] measured from the edge
        out = np.clip(dist / w + 1.0, 0.0, 1.0)
        return np.sin(0.5 * np.pi * out) ** 2

    half = 0.5 * config.slit_separation
    a = 0.5 * config.slit_width
    upper = ramp(a - np.abs(y - half))
    lower = ramp(a - np.abs(y + half))
    return np.maximum(upper, lower)


def jonsson_initial_field(config: JonssonConfig) -> ComplexField:
    grid = Grid((config.grid_x, config.grid_y), (config.nx, config.ny),
                boundary="absorbing", absorb_width=config.absorb_width)
    spec = GaussianPacketSpec(config.sigma0, center=(0.0, 0.0),
                              velocity=(config.speed, 0.0))
    packet = init_packet(spec, grid, config.hbar, config.mass)
    mask = slit_mask(config, grid.axis(1))
    psi = packet.psi * mask[None, :]
    return ComplexField(grid, psi, 0.0, config.hbar, config.mass).normalized()


def fringe_peaks(field: ComplexField, window: float) -> np.ndarray:
    """Positions of interference maxima of the transverse marginal."""
    from scipy.signal import find_peaks

    rho = field.density().sum(axis=0)
    y = field.grid.axis(1)
    sel = np.abs(y) <= window
    ys, rs = y[sel], rho[sel]
    idx, _ = find_peaks(rs, height=0.15 * rs.max(), prominence=0.08 * rs.max())
    peaks = []
    for i in idx:
        if 0 < i < len(rs) - 1:
            denom = rs[i - 1] - 2 * rs[i] + rs[i + 1]
            off = 0.5 * (rs[i - 1] - rs[i + 1]) / denom if denom != 0 else 0.0
            peaks.append(ys[i] + off * (ys[1] - ys[0]))
    return np.asarray(peaks)


def measured_peak_spacing(field: ComplexField, window: float) -> float:
    """Mean spacing of adjacent fringe maxima (nan when fewer than 3)."""
    peaks = fringe_peaks(field, window)
    if len(peaks) < 3:
        return np.nan
    return float(np.mean(np.diff(peaks)))


def jonsson_experiment(config: JonssonConfig = None) -> JonssonResult:
    """Full two-slit run: masked packet, free flight, bundle + ensemble."""
    config = config or JonssonConfig()
    psi0 = jonsson_initial_field(config)
    free = Potential.free(config.mass)

    x_eq = sample_initial_positions(psi0, config.n_samples, config.seed)
    x_bundle = sample_bundle_stratified(psi0, config.n_bundle)
    x_all = np.vstack([x_eq, x_bundle])

    snapshots = [psi0]
    near = []
    near_step = max(1, round(config.near_fraction
                             * config.screen_distance / config.speed
                             / config.dt))

    def recording(history):
        for i, f in enumerate(history, start=1):
            if i == near_step:
                near.append(f)
            if i % config.snapshot_stride == 0:
                snapshots.append(f)
            yield f

    history = iterate_split_step(psi0, free, config.dt, config.steps)
    ens_all = integrate_trajectories(
        x_all, itertools.chain([psi0], recording(history)), dt=config.dt,
        store_stride=config.snapshot_stride, seed=config.seed,
        screen_plane=(0, config.screen_distance))

    n = config.n_samples
    ensemble = Ensemble(ens_all.times, ens_all.positions[:n],
                        ens_all.flags[:n], seed=config.seed)
    ensemble.impacts = ens_all.impacts[:n]
    bundle = Ensemble(ens_all.times, ens_all.positions[n:],
                      ens_all.flags[n:], seed=config.seed + 1)
    bundle.impacts = ens_all.impacts[n:]

    checks = []
    for k, snap in enumerate(snapshots):
        live = ensemble.flags == FLAG_ACTIVE
        checks.append(equivariance_check(ensemble.positions[live, k, :],
                                         snap, bins=(8, 12)))
    t_screen = config.screen_distance / config.speed
    at_screen = min(range(len(snapshots)),
                    key=lambda k: abs(snapshots[k].time - t_screen))
    # the fringe comb stretches linearly in time, so compare against the
    # prediction at the snapshot's own time, not the nominal screen time
    t_snap = snapshots[at_screen].time
    spacing = measured_peak_spacing(snapshots[at_screen],
                                    window=2.6 * config.fringe_spacing
                                    * t_snap / t_screen)
    spacing = spacing * t_screen / t_snap if np.isfinite(spacing) else spacing
    return JonssonResult(config, psi0, snapshots, ensemble, bundle,
                         ensemble.impacts, checks, spacing,
                         near_field=near[0] if near else None)


def central_fringe_visibility(field: ComplexField, window: float) -> float:
    """Density at the symmetry axis over the local max: ~0 before the slit
    wavelets overlap, ~1 once the central bright fringe exists."""
    rho = field.density().sum(axis=0)
    y = field.grid.axis(1)
    sel = np.abs(y) <= window
    j0 = int(np.argmin(np.abs(y)))
    return float(rho[j0] / rho[sel].max())
