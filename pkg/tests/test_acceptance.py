"""Acceptance suite: one test per shipped criterion, at the stated
tolerance, with an explicit PASS/FAIL line per criterion.

Heavy experiments (double slit, Stern-Gerlach, EPR-B) run once as
module-scoped fixtures at their full acceptance sizes (n = 10^4).
"""
import json
import time

import numpy as np
import pytest

from pilotwave.grid import Grid
from pilotwave.potentials import Potential


def report(name, ok, detail=""):
    print(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, f"{name}: {detail}"


# ---------------------------------------------------------------------------
# shared heavy runs
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def jonsson_full():
    from pilotwave.pilot import JonssonConfig, jonsson_experiment

    return jonsson_experiment(JonssonConfig())  # shipped defaults, n=10^4


@pytest.fixture(scope="module")
def sg_full():
    from pilotwave.spin import MagnetConfig, stern_gerlach_run

    return stern_gerlach_run(np.pi / 3, 0.0, MagnetConfig(),
                             n_atoms=10_000, seed=77)


@pytest.fixture(scope="module")
def eprb_full():
    from pilotwave.eprb import SingletSpec, run_eprb
    from pilotwave.spin import SternGerlachNumerics

    spec = SingletSpec(numerics=SternGerlachNumerics(nx=128, nz=384))
    deltas = [k * np.pi / 8 for k in range(9)] + [-np.pi / 4]
    return spec, run_eprb(spec, deltas, n_pairs_per_delta=10_000, seed=91)


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------

def test_closed_form_quantum_oracle():
    """Split-step vs the printed Gaussian/linear closed forms, 10^3 steps."""
    from pilotwave.wavefields import (GaussianPacketSpec,
                                      analytic_gaussian_linear, init_packet,
                                      madelung_decompose,
                                      split_step_propagate)

    t0 = time.time()
    hbar, mass, k = 1.0, 1.0, 0.5
    spec = GaussianPacketSpec(1.0, (0.0,), (1.0,))
    grid = Grid(((-8.0, 12.0),), (2048,))
    psi0 = init_packet(spec, grid, hbar, mass)
    out = split_step_propagate(psi0, Potential.linear(mass, k), 0.002, 1000)
    x = grid.axis(0)
    rho_exact, s_exact = analytic_gaussian_linear(spec, k, hbar, mass, x,
                                                  out.time)
    pair = madelung_decompose(out)
    rho_err = np.max(np.abs(pair.rho.values - rho_exact)) / rho_exact.max()
    high = rho_exact > 1e-3 * rho_exact.max()
    diff = pair.action.values[high] - s_exact[high]
    gauge = 2 * np.pi * hbar * np.round(np.median(diff) / (2 * np.pi * hbar))
    s_err = np.max(np.abs(diff - gauge))
    s_scale = np.max(np.abs(s_exact[high]))
    runtime = time.time() - t0
    ok = rho_err < 1e-4 and s_err < 1e-4 * s_scale and runtime < 10.0
    report("closed-form-quantum-oracle", ok,
           f"(rho {rho_err:.2e} < 1e-4, S {s_err / s_scale:.2e} < 1e-4, "
           f"{runtime:.1f}s < 10s)")


def test_hopf_lax_oracle():
    from pilotwave.classical import (delta_min, euler_lagrange_action,
                                     hamilton_jacobi_linear, hopf_lax_field,
                                     linear_action)

    mass, v0, k, t = 1.0, 1.0, 0.5, 1.5
    pot = Potential.linear(mass, k)
    grid = Grid(((-10.0, 10.0),), (1001,))
    x = grid.axis(0)
    exact = hamilton_jacobi_linear(x, t, mass, v0, k)
    closed = hopf_lax_field(linear_action(grid, mass, v0), pot, t,
                            method="auto").values
    closed_err = np.max(np.abs(closed - exact))

    # exhaustive path: second order in grid spacing on the trust region
    errs = []
    for n in (501, 1001, 2001):
        g = Grid(((-10.0, 10.0),), (n,))
        xs = g.axis(0)
        shift = v0 * t + k * t ** 2 / (2 * mass)
        evolved = hopf_lax_field(linear_action(g, mass, v0), pot, t,
                                 method="exhaustive").values
        ref = hamilton_jacobi_linear(xs, t, mass, v0, k)
        inner = (xs - shift >= xs[0]) & (xs - shift <= xs[-1])
        errs.append(np.max(np.abs(evolved - ref)[inner]))
    second_order = errs[2] < errs[0] / 8.0 and errs[1] < errs[0] / 2.0

    # elementary solution: exact on nodes
    g = Grid(((-6.0, 6.0),), (600,))
    s0 = delta_min(g, 0.0)
    node = g.axis(0)[np.isfinite(s0.values)][0]
    evolved = hopf_lax_field(s0, pot, 0.8, method="exhaustive").values
    expected = np.array([euler_lagrange_action(pot, xi, 0.8, node)
                         for xi in g.axis(0)])
    elementary_exact = np.array_equal(evolved, expected)

    ok = closed_err < 1e-10 and second_order and elementary_exact
    report("hopf-lax-oracle", ok,
           f"(closed {closed_err:.1e} < 1e-10, refinement "
           f"{errs[0]:.1e}->{errs[2]:.1e}, elementary exact: "
           f"{elementary_exact})")


def test_classical_transport():
    from pilotwave.classical import (ClassicalEnsembleState, classical_transport,
                                     gaussian_density, linear_action)

    mass, v0, k, sig, t = 1.0, 1.0, 0.5, 1.0, 2.0
    grid = Grid(((-12.0, 18.0),), (1500,))
    state = ClassicalEnsembleState(gaussian_density(grid, sig, 0.0),
                                   linear_action(grid, mass, v0),
                                   Potential.linear(mass, k))
    out = classical_transport(state, t)
    x = grid.axis(0)
    w = out.rho.values / out.rho.values.sum()
    mean = np.sum(x * w)
    width = np.sqrt(np.sum((x - mean) ** 2 * w))
    center_exp = v0 * t + k * t ** 2 / (2 * mass)
    c_err = abs(mean - center_exp) / abs(center_exp)
    w_err = abs(width - sig) / sig
    ok = c_err < 1e-3 and w_err < 1e-3
    report("classical-transport", ok,
           f"(center rel err {c_err:.2e}, width rel err {w_err:.2e} < 1e-3)")


def test_equivariance_gaussian_linear():
    import itertools

    from pilotwave.pilot import (equivariance_check, integrate_trajectories,
                                 sample_initial_positions)
    from pilotwave.wavefields import (GaussianPacketSpec, init_packet,
                                      iterate_split_step)

    grid = Grid(((-8.0, 12.0),), (2048,))
    psi0 = init_packet(GaussianPacketSpec(1.0, (0.0,), (1.0,)), grid, 1.0, 1.0)
    pot = Potential.linear(1.0, 0.5)
    pts = sample_initial_positions(psi0, 10_000, seed=7)
    snapshots = [psi0]

    def rec(it):
        for i, f in enumerate(it, start=1):
            if i % 250 == 0:
                snapshots.append(f)
            yield f

    ens = integrate_trajectories(
        pts, itertools.chain([psi0], rec(iterate_split_step(psi0, pot,
                                                            0.002, 1000))),
        dt=0.002, store_stride=250)
    live = ens.flags == 0
    results = [equivariance_check(ens.positions[live, k, :], snap, bins=40)
               for k, snap in enumerate(snapshots)]
    ok = all(r.passed for r in results)
    worst = max(r.chi2 / r.threshold for r in results)
    report("equivariance-gaussian-linear", ok,
           f"({len(results)} snapshots, worst chi2/threshold {worst:.2f})")


def test_equivariance_jonsson(jonsson_full):
    results = jonsson_full.equivariance
    ok = all(r.passed for r in results)
    worst = max(r.chi2 / r.threshold for r in results)
    report("equivariance-jonsson", ok,
           f"({len(results)} snapshots, n=10^4, worst chi2/threshold "
           f"{worst:.2f})")


def test_equivariance_stern_gerlach(sg_full):
    results = sg_full.equivariance
    ok = all(r.passed for r in results)
    worst = max(r.chi2 / r.threshold for r in results)
    report("equivariance-stern-gerlach", ok,
           f"({len(results)} snapshots, n=10^4, worst chi2/threshold "
           f"{worst:.2f})")


def test_semiclassical_convergence_orders():
    from pilotwave.semiclassical import (DOUBLE_SLIT, GAUSSIAN_LINEAR,
                                         SweepSpec, fit_order, run_sweep)

    ds = run_sweep(SweepSpec(experiment=DOUBLE_SLIT,
                             hbar_divisors=(10.0, 100.0, 1000.0, 10000.0)))
    med = ds.series("median_traj_dev")
    monotone = bool(np.all(np.diff(med) < 0))

    gl = run_sweep(SweepSpec(experiment=GAUSSIAN_LINEAR,
                             hbar_divisors=(10.0, 100.0, 1000.0, 10000.0)))
    gauge_order = fit_order(gl.hbars(), gl.series("gauge_offset_abs"))
    width_order = fit_order(gl.hbars(), gl.series("width_error"))
    gauge_ok = 1.0 / 1.25 <= gauge_order <= 1.25
    width_ok = 2.0 / 1.25 <= width_order <= 2.0 * 1.25
    ok = monotone and gauge_ok and width_ok
    report("semiclassical-convergence", ok,
           f"(double-slit medians {np.array2string(med, precision=4)} "
           f"monotone: {monotone}; gauge order {gauge_order:.3f} ~ 1, "
           f"width order {width_order:.3f} ~ 2)")


def test_stern_gerlach_statistics(sg_full):
    p = np.cos(np.pi / 6) ** 2
    live = sg_full.ensemble.flags == 0
    n = int(live.sum())
    sigma = np.sqrt(p * (1 - p) / n)
    born_ok = abs(sg_full.fraction_plus - p) < 3 * sigma

    z0 = sg_full.ensemble.positions[live, 0, 1]
    sign = sg_full.signs[live]
    order = np.argsort(z0)
    flips = int(np.sum(np.diff(sign[order]) != 0))
    monotone_ok = flips == 1

    resolved_ok = sg_full.separation > 4 * sg_full.spot_sigma
    ok = born_ok and monotone_ok and resolved_ok
    report("stern-gerlach-statistics", ok,
           f"(fraction {sg_full.fraction_plus:.4f} vs 0.75 +- {3 * sigma:.4f}, "
           f"sign flips {flips}, separation {sg_full.separation:.1f} > "
           f"4 sigma = {4 * sg_full.spot_sigma:.1f})")


def test_eprb_statistics(eprb_full):
    from pilotwave.eprb import (b_density_during_a, chsh, correlation,
                                correlation_stderr)

    spec, records = eprb_full
    n = 10_000
    deltas = [k * np.pi / 8 for k in range(9)]
    e_ok = True
    for d in deltas:
        e = correlation(records, d)
        if abs(e - (-np.cos(d))) >= 3.0 / np.sqrt(n):
            e_ok = False
    exact_anticorrelation = correlation(records, 0.0) == -1.0

    es = [correlation(records, d) for d in
          (np.pi / 4, 3 * np.pi / 4, -np.pi / 4, np.pi / 4)]
    ses = [correlation_stderr(records, d) for d in
           (np.pi / 4, 3 * np.pi / 4, -np.pi / 4, np.pi / 4)]
    s = chsh(*es)
    s_err = float(np.sqrt(sum(x ** 2 for x in ses)))
    chsh_ok = s > 2.0 and abs(s - 2 * np.sqrt(2)) < 3 * s_err

    b_dist = b_density_during_a(spec, theta_b=0.9, phi_b=0.3,
                                duration=spec.magnet.transit_time, steps=100)
    b_ok = b_dist < 1e-12
    ok = e_ok and exact_anticorrelation and chsh_ok and b_ok
    report("eprb", ok,
           f"(E(delta) within 3/sqrt(n) at 9 angles: {e_ok}, E(0) = "
           f"{correlation(records, 0.0)}, CHSH {s:.3f} vs 2.828 +- "
           f"{3 * s_err:.3f}, B-density L1 {b_dist:.1e})")


def test_coherent_state_theorem():
    import itertools

    from pilotwave.pilot import integrate_trajectories
    from pilotwave.wavefields import (classical_orbit, coherent_state,
                                      fit_gaussian_width, iterate_split_step,
                                      packet_center)

    hbar, mass, omega = 0.5, 1.0, 1.0
    x0, v0 = (1.5,), (0.0,)
    grid = Grid(((-8.0, 8.0),), (1024,))
    psi0 = coherent_state(omega, x0, v0, hbar, mass, 0.0, grid)
    pot = Potential.harmonic(mass, omega)
    dt = 0.001
    steps = int(round(4 * np.pi / dt))  # two classical periods
    stride = steps // 100
    sig = np.sqrt(hbar / (2 * mass * omega))
    offsets = np.array([-1.0, 0.5, 1.0]) * sig
    snapshots = [psi0]

    def rec(it):
        for i, f in enumerate(it, start=1):
            if i % stride == 0:
                snapshots.append(f)
            yield f

    ens = integrate_trajectories(
        (x0[0] + offsets)[:, None],
        itertools.chain([psi0], rec(iterate_split_step(psi0, pot, dt, steps))),
        dt=dt, store_stride=stride)

    width_dev = max(abs(fit_gaussian_width(s) - sig) / sig for s in snapshots)
    orbit_radius = abs(x0[0])
    center_dev = max(abs(packet_center(s)[0]
                         - classical_orbit(omega, x0, v0, s.time)[0][0])
                     for s in snapshots) / orbit_radius
    xi_t = np.array([classical_orbit(omega, x0, v0, t)[0][0]
                     for t in ens.times])
    rigid_dev = max(np.max(np.abs(ens.positions[i, :, 0] - (xi_t + off)))
                    for i, off in enumerate(offsets)) / orbit_radius
    ok = width_dev < 1e-4 and center_dev < 1e-4 and rigid_dev < 1e-4
    report("coherent-state", ok,
           f"(width rel dev {width_dev:.2e} < 1e-4, center/radius "
           f"{center_dev:.2e} < 1e-4, rigidity/radius {rigid_dev:.2e})")


def test_non_crossing(jonsson_full):
    from pilotwave.pilot import min_pairwise_separation

    sep = min_pairwise_separation(jonsson_full.bundle)
    cell = max(jonsson_full.psi0.grid.spacing)
    ok = sep > cell
    report("non-crossing", ok,
           f"(min pairwise separation {sep:.3f} > grid cell {cell:.3f}, "
           f"100-trajectory bundle)")


def test_determinism_byte_identical(tmp_path):
    import yaml

    from pilotwave.cli import main

    cfg = {
        "experiment": "gaussian-linear", "seed": 5,
        "initial": {"sigma0": 1.0, "center": 0.0, "velocity": 1.0},
        "potential": {"force": 0.5},
        "grid": {"lo": -8.0, "hi": 12.0, "n": 1024},
        "integrator": {"dt": 0.005, "steps": 200, "snapshot_stride": 100},
        "sampling": {"n": 2000},
    }
    p = tmp_path / "det.yaml"
    with open(p, "w") as f:
        yaml.safe_dump(cfg, f)
    assert main(["run", str(p), "--out", str(tmp_path / "a"),
                 "--threads", "1"]) == 0
    assert main(["run", str(p), "--out", str(tmp_path / "b"),
                 "--threads", "4"]) == 0

    def hashes(root):
        with open(tmp_path / root / "gaussian-linear"
                  / "run_manifest.json") as f:
            return json.load(f)["files"]

    ha, hb = hashes("a"), hashes("b")
    ok = ha == hb
    report("determinism", ok,
           f"({len(ha)} artifacts byte-identical across runs and "
           f"thread counts: {ok})")