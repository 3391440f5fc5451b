"""EPR-B: singlet pairs with spatial extension, sequential spin measurement.

The two-body solve reduces to two single-particle spinors in physical
space: each pair carries a hidden orientation (theta, phi) for particle A
(B starts exactly opposite), A's device straightens A's spin along its
axis with the outcome decided by A's position in the wave packet, and B's
conditional spinor enters its own device at angle delta or pi - delta to
the rotated axis depending on A's outcome.  The statistics reproduce
E(delta) = -cos(delta) and the CHSH violation without measurement
postulates.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import EmptyRecords
from .pilot import sample_initial_positions
from .spin import (MagnetConfig, SternGerlachNumerics,
                   integrate_weighted_trajectories, unit_component_device)
from .wavefields import ComplexField


@dataclass(frozen=True)
class SingletSpec:
    """Pair-source and analyzer geometry: A measures along Oz, B along the
    axis rotated by delta about the separation axis Oy."""
    sigma0: float = 1.0
    delta: float = 0.0
    magnet: MagnetConfig = MagnetConfig()
    numerics: SternGerlachNumerics = SternGerlachNumerics()
    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if self.sigma0 <= 0:
            raise ValueError("sigma0 must be positive")


@dataclass
class PairState:
    theta_a: float
    phi_a: float
    theta_b: float
    phi_b: float
    entangled: bool = True
    outcome_a: int = 0
    b_axis_angle: float = None  # B spinor angle w.r.t. its analyzer axis

    @staticmethod
    def from_hidden(theta_a: float, phi_a: float) -> "PairState":
        return PairState(theta_a, phi_a,
                         np.pi - theta_a, phi_a - np.pi)


@dataclass(frozen=True)
class MeasurementRecord:
    pair_id: int
    delta: float
    theta_hidden: float
    phi_hidden: float
    outcome_a: int
    outcome_b: int


def spinor_components(theta: float, phi: float):
    return (np.cos(theta / 2.0) * np.exp(0.5j * phi),
            np.sin(theta / 2.0) * np.exp(-0.5j * phi))


def uniform_sphere_orientations(n: int, rng) -> tuple:
    """Rotation-invariant hidden orientations, one per pair."""
    theta = np.arccos(rng.uniform(-1.0, 1.0, n))
    phi = rng.uniform(0.0, 2.0 * np.pi, n)
    return theta, phi


# ---------------------------------------------------------------------------
# singlet construction and antisymmetry
# ---------------------------------------------------------------------------

def build_singlet(spec: SingletSpec, seed: int = 0) -> PairState:
    """One pair with a fresh hidden orientation (uniform on the sphere)."""
    rng = np.random.default_rng(seed)
    theta, phi = uniform_sphere_orientations(1, rng)
    return PairState.from_hidden(float(theta[0]), float(phi[0]))


def spatial_envelope(spec: SingletSpec, r: np.ndarray) -> np.ndarray:
    """f(r) = (2 pi s0^2)^(-1/2) exp(-(x^2+z^2)/4 s0^2)."""
    r = np.atleast_2d(r)
    return ((2.0 * np.pi * spec.sigma0 ** 2) ** -0.5
            * np.exp(-np.sum(r ** 2, axis=-1) / (4.0 * spec.sigma0 ** 2)))


def two_body_amplitude(pair: PairState, spec: SingletSpec, r_a, r_b,
                       s_a: int, s_b: int) -> complex:
    """Antisymmetrized product of the two single-particle spinors.

    s_a, s_b are +1/-1 spin labels along Oz.  Exchanging (r_a, s_a) with
    (r_b, s_b) flips the sign by construction.
    """
    chi_a = spinor_components(pair.theta_a, pair.phi_a)
    chi_b = spinor_components(pair.theta_b, pair.phi_b)
    idx = {1: 0, -1: 1}
    f = spatial_envelope
    direct = (f(spec, np.asarray(r_a)) * f(spec, np.asarray(r_b))
              * chi_a[idx[s_a]] * chi_b[idx[s_b]])
    exchanged = (f(spec, np.asarray(r_b)) * f(spec, np.asarray(r_a))
                 * chi_a[idx[s_b]] * chi_b[idx[s_a]])
    return complex((direct - exchanged)[0])


def singlet_reference(spec: SingletSpec, r_a, r_b, s_a: int, s_b: int) -> complex:
    """f(rA) f(rB) (|+-> - |-+>)/sqrt(2) evaluated at one spin pair."""
    f = spatial_envelope
    spin = {(1, -1): 1.0 / np.sqrt(2.0), (-1, 1): -1.0 / np.sqrt(2.0)}.get(
        (s_a, s_b), 0.0)
    return complex(f(spec, np.asarray(r_a))[0] * f(spec, np.asarray(r_b))[0]
                   * spin)


# ---------------------------------------------------------------------------
# device outcomes (shared unit-weight component fields)
# ---------------------------------------------------------------------------

def device_outcomes(positions: np.ndarray, weights_plus: np.ndarray,
                    spec: SingletSpec):
    """Run one Stern-Gerlach device for a batch of particles in lockstep.

    positions are initial (x, z) draws from the envelope; weights_plus is
    the per-particle plus-component weight cos^2(theta/2) along the
    device axis.  Returns (signs, flags)."""
    psi0, history = unit_component_device(spec.magnet, spec.numerics,
                                          spec.hbar, spec.mass)
    import itertools

    dt_traj = spec.numerics.dt * spec.numerics.traj_stride
    pos, flags = integrate_weighted_trajectories(
        positions, weights_plus, itertools.chain([psi0], history), dt_traj)
    return np.where(pos[:, 1] > 0, 1, -1), flags


def _device_envelope(spec: SingletSpec) -> ComplexField:
    grid = spec.numerics.grid()
    psi0, _ = unit_component_device(spec.magnet, spec.numerics,
                                    spec.hbar, spec.mass)
    return ComplexField(grid, psi0.plus, 0.0, spec.hbar, spec.mass)


def measure_A(pair: PairState, spec: SingletSpec, seed: int):
    """A's device along Oz; outcome from the impact sign; B's conditional
    orientation snaps opposite to A's measured direction."""
    if not pair.entangled:
        raise ValueError("pair is no longer entangled")
    env = _device_envelope(spec)
    x0 = sample_initial_positions(env, 1, seed)
    w = np.array([np.cos(pair.theta_a / 2.0) ** 2])
    signs, _ = device_outcomes(x0, w, spec)
    outcome = int(signs[0])
    b_angle = np.pi - spec.delta if outcome == 1 else spec.delta
    updated = replace(pair, entangled=False, outcome_a=outcome,
                      b_axis_angle=float(b_angle),
                      theta_b=np.pi if outcome == 1 else 0.0,
                      phi_b=0.0)
    return outcome, updated


def measure_B(pair: PairState, spec: SingletSpec, seed: int) -> int:
    """B's device along Oz' (rotated by delta); pair must be measured by A."""
    if pair.b_axis_angle is None:
        raise ValueError("measure_A must run first")
    env = _device_envelope(spec)
    x0 = sample_initial_positions(env, 1, seed)
    w = np.array([np.cos(pair.b_axis_angle / 2.0) ** 2])
    signs, _ = device_outcomes(x0, w, spec)
    return int(signs[0])


# ---------------------------------------------------------------------------
# batch runs and statistics
# ---------------------------------------------------------------------------

@dataclass
class EPRBRecords:
    delta: np.ndarray
    theta_hidden: np.ndarray
    phi_hidden: np.ndarray
    outcome_a: np.ndarray
    outcome_b: np.ndarray
    flags_a: np.ndarray
    flags_b: np.ndarray
    order: str = "AB"

    def __len__(self):
        return len(self.delta)

    def rows(self):
        for k in range(len(self.delta)):
            yield MeasurementRecord(k, float(self.delta[k]),
                                    float(self.theta_hidden[k]),
                                    float(self.phi_hidden[k]),
                                    int(self.outcome_a[k]),
                                    int(self.outcome_b[k]))


def _axis_angle_to_rotated(theta, phi, delta):
    """Angle between the (theta, phi) direction and Oz rotated by delta
    about Oy: cos(theta') = cos d cos t + sin d sin t cos phi."""
    c = (np.cos(delta) * np.cos(theta)
         + np.sin(delta) * np.sin(theta) * np.cos(phi))
    return np.arccos(np.clip(c, -1.0, 1.0))


def run_eprb(spec: SingletSpec, deltas, n_pairs_per_delta: int, seed: int,
             order: str = "AB") -> EPRBRecords:
    """Measure n pairs at each analyzer offset in `deltas`.

    Both devices share one pair of unit-weight component solutions, so the
    cost is two field solves plus the lockstep trajectories.  order="BA"
    measures B first; the statistics are order-independent.
    """
    deltas = np.atleast_1d(np.asarray(deltas, dtype=float))
    n = n_pairs_per_delta * len(deltas)
    delta_per_pair = np.repeat(deltas, n_pairs_per_delta)
    rng = np.random.default_rng(seed)
    theta, phi = uniform_sphere_orientations(n, rng)

    env = _device_envelope(spec)
    pos_first = sample_initial_positions(env, n, seed + 1)
    pos_second = sample_initial_positions(env, n, seed + 2)

    if order == "AB":
        w_first = np.cos(theta / 2.0) ** 2
        first_signs, flags_first = device_outcomes(pos_first, w_first, spec)
        # B's spin ends opposite to A's measured direction; relative to
        # Oz' that is delta when A was down and pi - delta when A was up
        angle_b = np.where(first_signs == 1, np.pi - delta_per_pair,
                           delta_per_pair)
        w_second = np.cos(angle_b / 2.0) ** 2
        second_signs, flags_second = device_outcomes(pos_second, w_second, spec)
        return EPRBRecords(delta_per_pair, theta, phi,
                           first_signs, second_signs,
                           flags_first, flags_second, order=order)
    if order == "BA":
        theta_b = np.pi - theta
        phi_b = phi - np.pi
        theta_b_prime = _axis_angle_to_rotated(theta_b, phi_b, delta_per_pair)
        w_first = np.cos(theta_b_prime / 2.0) ** 2
        first_signs, flags_first = device_outcomes(pos_first, w_first, spec)
        angle_a = np.where(first_signs == 1, np.pi - delta_per_pair,
                           delta_per_pair)
        w_second = np.cos(angle_a / 2.0) ** 2
        second_signs, flags_second = device_outcomes(pos_second, w_second, spec)
        return EPRBRecords(delta_per_pair, theta, phi,
                           second_signs, first_signs,
                           flags_second, flags_first, order=order)
    raise ValueError("order must be 'AB' or 'BA'")


def correlation(records: EPRBRecords, delta: float = None) -> float:
    """E = mean(outcome_A * outcome_B), optionally restricted to one delta."""
    if len(records) == 0:
        raise EmptyRecords("no measurement records")
    sel = np.ones(len(records), dtype=bool)
    if delta is not None:
        sel = np.isclose(records.delta, delta)
        if not sel.any():
            raise EmptyRecords(f"no records at delta={delta}")
    return float(np.mean(records.outcome_a[sel] * records.outcome_b[sel]))


def correlation_stderr(records: EPRBRecords, delta: float = None) -> float:
    e = correlation(records, delta)
    sel = np.ones(len(records), dtype=bool) if delta is None \
        else np.isclose(records.delta, delta)
    n = int(sel.sum())
    return float(np.sqrt(max(1.0 - e * e, 1e-12) / n))


def chsh(e_ab: float, e_abp: float, e_apb: float, e_apbp: float) -> float:
    """S = |E(a,b) - E(a,b') + E(a',b) + E(a',b')|."""
    return abs(e_ab - e_abp + e_apb + e_apbp)


def run_chsh(spec: SingletSpec, n_pairs: int, seed: int,
             angles=(0.0, np.pi / 2, np.pi / 4, 3 * np.pi / 4)):
    """CHSH at analyzer angles (a, a', b, b'); returns (S, per-setting E)."""
    a, ap, b, bp = angles
    settings = {"ab": b - a, "abp": bp - a, "apb": b - ap, "apbp": bp - ap}
    records = run_eprb(spec, list(settings.values()), n_pairs, seed)
    es = {k: correlation(records, d) for k, d in settings.items()}
    ses = {k: correlation_stderr(records, d) for k, d in settings.items()}
    s = chsh(es["ab"], es["abp"], es["apb"], es["apbp"])
    s_err = float(np.sqrt(sum(v ** 2 for v in ses.values())))
    return s, s_err, es, records


def b_density_during_a(spec: SingletSpec, theta_b: float, phi_b: float,
                       duration: float, steps: int = 200):
    """L1 distance between B's reduced density during A's measurement and
    the unentangled single-particle propagation.

    During A's measurement B is in free flight, so its spinor components
    evolve under the free propagator; the weighted component densities are
    compared against an unentangled packet propagated the same way.  The
    two legs are separate solves; they coincide because the A-device
    coupling never enters B's reduced dynamics in this construction.
    """
    from .potentials import Potential
    from .wavefields import GaussianPacketSpec, init_packet, split_step_propagate

    grid = spec.numerics.grid()
    envelope = init_packet(GaussianPacketSpec(spec.numerics.sigma0, (0.0, 0.0),
                                              (spec.magnet.transit_speed, 0.0)),
                           grid, spec.hbar, spec.mass)
    dt = duration / steps
    free = Potential.free(spec.mass)
    up, dn = spinor_components(theta_b, phi_b)
    plus0 = replace(envelope, psi=up * envelope.psi)
    minus0 = replace(envelope, psi=dn * envelope.psi)
    plus_t = split_step_propagate(plus0, free, dt, steps)
    minus_t = split_step_propagate(minus0, free, dt, steps)
    rho_conditional = plus_t.density() + minus_t.density()
    rho_unentangled = split_step_propagate(envelope, free, dt, steps).density()
    return float(grid.integrate(np.abs(rho_conditional - rho_unentangled)))