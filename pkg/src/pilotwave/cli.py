"""pilotwave command line: run | validate | list.

Configs are YAML with one experiment per file; physics parameters live
only in the config (flags select paths, output directory, verbosity and
thread count).  Artifacts are written to a temp area and promoted on
success; the manifest (config hash, version, wall time, checksums) is
written last, so a missing manifest marks an invalid run.  Exit codes:
0 ok, 2 config error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import difflib
import hashlib
import os
import shutil
import sys
import time
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigInvalid, PilotwaveError
from .grid import Grid
from .io import (save_field, write_csv, write_density_matrix, write_json,
                 write_manifest)
from .potentials import Potential

EXPERIMENTS = ["hopf-lax", "gaussian-linear", "jonsson", "stern-gerlach",
               "eprb", "coherent", "sweep"]

ENV_OUTPUT_ROOT = "PILOTWAVE_OUT"


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------

def _require(cfg: dict, key: str, kind, positive=False, block=""):
    name = f"{block}.{key}" if block else key
    if key not in cfg:
        raise ConfigInvalid(name, "missing")
    val = cfg[key]
    if kind is float and isinstance(val, int):
        val = float(val)
    if not isinstance(val, kind):
        raise ConfigInvalid(name, f"expected {kind.__name__}")
    if positive and not val > 0:
        raise ConfigInvalid(name, "must be positive")
    return val


def _optional(cfg: dict, key: str, default, positive=False, block=""):
    if key not in cfg:
        return default
    return _require(cfg, key, type(default), positive=positive, block=block)


def _block(cfg: dict, name: str, required=True) -> dict:
    if name not in cfg:
        if required:
            raise ConfigInvalid(name, "missing block")
        return {}
    if not isinstance(cfg[name], dict):
        raise ConfigInvalid(name, "must be a mapping")
    return cfg[name]


def load_config(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigInvalid(str(path), "not a readable file")
    with open(path, "r", encoding="utf-8") as f:
        try:
            cfg = yaml.safe_load(f)
        except yaml.YAMLError as exc:
            raise ConfigInvalid(str(path), f"YAML parse error: {exc}")
    if not isinstance(cfg, dict):
        raise ConfigInvalid(str(path), "config must be a mapping")
    return cfg


def validate_config(cfg: dict) -> list:
    """Schema plus physics sanity checks; returns warning strings."""
    name = _require(cfg, "experiment", str)
    if name not in EXPERIMENTS:
        hint = difflib.get_close_matches(name, EXPERIMENTS, n=1)
        extra = f"; did you mean '{hint[0]}'" if hint else ""
        raise ConfigInvalid("experiment", f"unknown '{name}'{extra}")
    warnings = []
    hbar = _optional(cfg, "hbar", 1.0, positive=True)
    mass = _optional(cfg, "mass", 1.0, positive=True)
    _optional(cfg, "seed", 0)

    if name == "hopf-lax":
        g = _block(cfg, "grid")
        _require(g, "lo", float, block="grid")
        _require(g, "hi", float, block="grid")
        _require(g, "n", int, positive=True, block="grid")
        pot = _block(cfg, "potential")
        kind = _require(pot, "kind", str, block="potential")
        if kind not in ("free", "linear", "harmonic"):
            raise ConfigInvalid("potential.kind", f"unsupported '{kind}'")
        init = _block(cfg, "initial")
        ikind = _require(init, "kind", str, block="initial")
        if ikind not in ("linear", "delta", "quadratic"):
            raise ConfigInvalid("initial.kind", f"unsupported '{ikind}'")
        _require(cfg, "time", float, positive=True)
    elif name == "gaussian-linear":
        init = _block(cfg, "initial")
        _require(init, "sigma0", float, positive=True, block="initial")
        pot = _block(cfg, "potential")
        _require(pot, "force", float, block="potential")
        integ = _block(cfg, "integrator")
        _require(integ, "dt", float, positive=True, block="integrator")
        _require(integ, "steps", int, positive=True, block="integrator")
        samp = _block(cfg, "sampling")
        _require(samp, "n", int, positive=True, block="sampling")
        v0 = float(_optional(init, "velocity", 1.0, block="initial"))
        g = _block(cfg, "grid")
        h = (_require(g, "hi", float, block="grid")
             - _require(g, "lo", float, block="grid")) \
            / _require(g, "n", int, positive=True, block="grid")
        lam = 2 * np.pi * hbar / (mass * max(abs(v0), 1e-12))
        if lam < 4 * h:
            warnings.append(
                f"de Broglie wavelength {lam:.3g} under 4 grid cells "
                f"({4 * h:.3g}); expect aliasing")
    elif name == "jonsson":
        slits = _block(cfg, "slits")
        _require(slits, "separation", float, positive=True, block="slits")
        _require(slits, "width", float, positive=True, block="slits")
        init = _block(cfg, "initial")
        _require(init, "sigma0", float, positive=True, block="initial")
        _require(init, "speed", float, positive=True, block="initial")
        _require(cfg, "screen_distance", float, positive=True)
        samp = _block(cfg, "sampling")
        _require(samp, "n", int, positive=True, block="sampling")
    elif name == "stern-gerlach":
        mag = _block(cfg, "magnet")
        for key in ("field_gradient", "moment", "length", "transit_speed"):
            _require(mag, key, float, positive=True, block="magnet")
        _require(mag, "flight_time", float, block="magnet")
        init = _block(cfg, "initial")
        _require(init, "theta0", float, block="initial")
        samp = _block(cfg, "sampling")
        _require(samp, "n", int, positive=True, block="sampling")
    elif name == "eprb":
        _block(cfg, "magnet", required=False)
        pairs = _block(cfg, "pairs")
        _require(pairs, "n_per_delta", int, positive=True, block="pairs")
        deltas = _require(pairs, "deltas", list, block="pairs")
        if not deltas:
            raise ConfigInvalid("pairs.deltas", "needs at least one angle")
    elif name == "coherent":
        osc = _block(cfg, "oscillator")
        _require(osc, "omega", float, positive=True, block="oscillator")
        _require(cfg, "periods", float, positive=True)
    elif name == "sweep":
        sw = _block(cfg, "sweep")
        fam = _require(sw, "family", str, block="sweep")
        if fam not in ("gaussian_linear", "double_slit", "coherent_oscillator"):
            raise ConfigInvalid("sweep.family", f"unsupported '{fam}'")
        divisors = _require(sw, "divisors", list, block="sweep")
        if sorted(divisors) != list(divisors):
            raise ConfigInvalid("sweep.divisors", "must be ascending")
        init = _block(cfg, "initial", required=False)
        for key in init:
            if "hbar" in key:
                raise ConfigInvalid(
                    f"initial.{key}",
                    "initial data must not reference hbar (statistical "
                    "preparation is hbar-free)")
    return warnings


# ---------------------------------------------------------------------------
# experiment runners (each returns the list of files it wrote)
# ---------------------------------------------------------------------------

def _run_hopf_lax(cfg, out: Path):
    from .classical import (ActionField, delta_min, hamilton_jacobi_linear,
                            hopf_lax_field, linear_action, velocity_field)

    g = cfg["grid"]
    grid = Grid(((float(g["lo"]), float(g["hi"])),), (int(g["n"]),))
    mass = float(cfg.get("mass", 1.0))
    pot_cfg = cfg["potential"]
    kind = pot_cfg["kind"]
    if kind == "free":
        pot = Potential.free(mass)
    elif kind == "linear":
        pot = Potential.linear(mass, float(pot_cfg.get("force", 0.0)))
    else:
        pot = Potential.harmonic(mass, float(pot_cfg["omega"]))
    init = cfg["initial"]
    t = float(cfg["time"])
    x = grid.axis(0)
    reference = np.full(grid.shape, np.nan)
    trust = np.ones(grid.shape, dtype=bool)
    closed = np.full(grid.shape, np.nan)
    if init["kind"] == "linear":
        v0 = float(init.get("v0", 1.0))
        s0 = linear_action(grid, mass, v0)
        if kind in ("free", "linear"):
            k = pot.force[0] if kind == "linear" else 0.0
            reference = hamilton_jacobi_linear(x, t, mass, v0, k)
            closed = hopf_lax_field(s0, pot, t, method="auto").values
            # nodes whose continuum argmin x - v0 t - K t^2/2m leaves the
            # lattice see boundary-limited minima; exclude them
            shift = v0 * t + k * t ** 2 / (2 * mass)
            trust = (x - shift >= x[0]) & (x - shift <= x[-1])
    elif init["kind"] == "delta":
        s0 = delta_min(grid, float(init.get("x0", 0.0)))
        from .classical import euler_lagrange_action
        node = x[np.isfinite(s0.values)][0]
        reference = np.array([euler_lagrange_action(pot, xi, t, node)
                              for xi in x])
    else:
        a = float(init.get("curvature", 1.0))
        s0 = ActionField(grid, a * x ** 2)
    evolved = hopf_lax_field(s0, pot, t, method="exhaustive")
    vel, valid = velocity_field(evolved, mass)
    files = []
    files.append(write_csv(out / "action_field.csv",
                           ["x", "action", "closed_form", "reference"],
                           zip(x, evolved.values, closed, reference)).name)
    files.append(write_csv(out / "velocity_field.csv",
                           ["x", "v", "valid"],
                           zip(x, vel[:, 0], valid.astype(int))).name)
    have_ref = np.isfinite(reference)
    summary = {"experiment": "hopf-lax", "time": t,
               "grid_spacing": grid.spacing[0]}
    if np.any(have_ref):
        summary["exhaustive_error_interior"] = float(
            np.nanmax(np.abs(evolved.values - reference)[have_ref & trust]))
    if np.any(np.isfinite(closed)):
        summary["closed_form_error"] = float(
            np.nanmax(np.abs(closed - reference)))
    files.append(write_json(out / "summary.json", summary).name)
    return files


def _run_gaussian_linear(cfg, out: Path):
    import itertools

    from .pilot import (equivariance_check, integrate_trajectories,
                        sample_initial_positions)
    from .wavefields import (GaussianPacketSpec, analytic_gaussian_linear,
                             gaussian_linear_field, init_packet,
                             iterate_split_step, madelung_decompose,
                             packet_center)

    hbar = float(cfg.get("hbar", 1.0))
    mass = float(cfg.get("mass", 1.0))
    init = cfg["initial"]
    spec = GaussianPacketSpec(float(init["sigma0"]),
                              (float(init.get("center", 0.0)),),
                              (float(init.get("velocity", 1.0)),))
    k = float(cfg["potential"]["force"])
    g = cfg["grid"]
    grid = Grid(((float(g["lo"]), float(g["hi"])),), (int(g["n"]),))
    integ = cfg["integrator"]
    dt, steps = float(integ["dt"]), int(integ["steps"])
    stride = int(integ.get("snapshot_stride", max(1, steps // 10)))
    samp = cfg["sampling"]
    n, seed = int(samp["n"]), int(cfg.get("seed", 0))

    psi0 = init_packet(spec, grid, hbar, mass)
    pot = Potential.linear(mass, k)
    snapshots = [psi0]

    def recording(it):
        for i, f in enumerate(it, start=1):
            if i % stride == 0:
                snapshots.append(f)
            yield f

    x_eq = sample_initial_positions(psi0, n, seed)
    x_fig = np.array([[spec.center[0] - spec.sigma0],
                      [spec.center[0]],
                      [spec.center[0] + spec.sigma0]])
    ens = integrate_trajectories(
        np.vstack([x_eq, x_fig]),
        itertools.chain([psi0], recording(iterate_split_step(psi0, pot, dt, steps))),
        dt=dt, store_stride=stride, seed=seed)

    final = snapshots[-1]
    t_end = final.time
    x = grid.axis(0)
    rho_exact, s_exact = analytic_gaussian_linear(spec, k, hbar, mass, x, t_end)
    pair = madelung_decompose(final)
    rho_num = pair.rho.values
    high = rho_exact > 1e-3 * rho_exact.max()
    s_num = pair.action.values
    diff = s_num[high] - s_exact[high]
    gauge = 2 * np.pi * hbar * np.round(np.median(diff) / (2 * np.pi * hbar))
    s_err = float(np.max(np.abs(diff - gauge)))
    rho_err = float(np.max(np.abs(rho_num - rho_exact)) / rho_exact.max())

    live = ens.flags == 0
    eq = [equivariance_check(ens.positions[:n][live[:n], kk, :], snap, bins=40)
          for kk, snap in enumerate(snapshots)]

    files = []
    files.append(write_csv(out / "comparison.csv",
                           ["x", "rho_num", "rho_exact", "s_num", "s_exact"],
                           zip(x, rho_num, rho_exact,
                               np.where(np.isfinite(s_num), s_num - gauge,
                                        np.nan), s_exact)).name)
    # velocity quiver samples over (t, x) for figure regeneration
    rows = []
    for kk, snap in enumerate(snapshots):
        vel, rho = snap.current_velocity()
        ctr = packet_center(snap)[0]
        for xi in np.linspace(ctr - 2.5 * spec.sigma0,
                              ctr + 2.5 * spec.sigma0, 9):
            j = int(np.argmin(np.abs(x - xi)))
            rows.append((snap.time, x[j], vel[j, 0]))
    files.append(write_csv(out / "velocity_samples.csv",
                           ["t", "x", "vx"], rows).name)
    fig_rows = []
    for ti, tr in enumerate(range(n, n + 3)):
        for kk in range(ens.positions.shape[1]):
            fig_rows.append((ti, ens.times[kk], ens.positions[tr, kk, 0]))
    files.append(write_csv(out / "trajectories.csv",
                           ["traj_id", "t", "x"], fig_rows).name)
    files.append(write_json(out / "equivariance.json", [
        {"time": float(s.time), "chi2": r.chi2, "dof": r.dof,
         "threshold": r.threshold, "passed": bool(r.passed)}
        for s, r in zip(snapshots, eq)]).name)
    files.append(save_field(out / "field_final.pwf", final).name)
    files.append(write_json(out / "summary.json", {
        "experiment": "gaussian-linear",
        "t_end": t_end,
        "rho_linf_rel": rho_err,
        "action_err_mod_const": s_err,
        "action_err_rel": s_err / float(np.max(np.abs(s_exact))),
        "norm_drift": abs(final.norm() - 1.0),
        "equivariance_all_passed": bool(all(r.passed for r in eq)),
    }).name)
    return files


def _run_jonsson(cfg, out: Path):
    from .pilot import JonssonConfig, jonsson_experiment

    slits = cfg["slits"]
    init = cfg["initial"]
    g = cfg.get("grid", {})
    samp = cfg["sampling"]
    jc = JonssonConfig(
        slit_separation=float(slits["separation"]),
        slit_width=float(slits["width"]),
        edge_width=float(slits.get("edge_width", 0.45)),
        sigma0=float(init["sigma0"]),
        speed=float(init["speed"]),
        screen_distance=float(cfg["screen_distance"]),
        hbar=float(cfg.get("hbar", 1.0)),
        mass=float(cfg.get("mass", 1.0)),
        grid_x=tuple(g.get("x", (-10.0, 66.0))),
        grid_y=tuple(g.get("y", (-60.0, 60.0))),
        nx=int(g.get("nx", 768)),
        ny=int(g.get("ny", 1024)),
        dt=float(cfg.get("integrator", {}).get("dt", 0.015)),
        n_samples=int(samp["n"]),
        n_bundle=int(samp.get("n_bundle", 100)),
        seed=int(cfg.get("seed", 20260810)),
        snapshot_stride=int(cfg.get("integrator", {}).get("snapshot_stride", 50)),
        absorb_width=float(g.get("absorb_width", 7.0)),
    )
    res = jonsson_experiment(jc)
    files = []
    ok = np.isfinite(res.impacts)
    files.append(write_csv(out / "impacts.csv", ["traj_id", "y"],
                           ((i, y) for i, y in enumerate(res.impacts)
                            if np.isfinite(y))).name)
    rows = []
    for i in range(res.bundle.positions.shape[0]):
        for kk in range(res.bundle.positions.shape[1]):
            rows.append((i, res.bundle.times[kk],
                         res.bundle.positions[i, kk, 0],
                         res.bundle.positions[i, kk, 1],
                         int(res.bundle.flags[i])))
    files.append(write_csv(out / "trajectories.csv",
                           ["traj_id", "t", "x", "y", "flag"], rows).name)
    files.append(write_density_matrix(out / "density_near.csv",
                                      res.near_field.density(),
                                      res.near_field.grid,
                                      res.near_field.time).name)
    far = res.snapshots[-1]
    files.append(write_density_matrix(out / "density_far.csv", far.density(),
                                      far.grid, far.time).name)
    files.append(write_json(out / "equivariance.json", [
        {"time": float(s.time), "chi2": r.chi2, "dof": r.dof,
         "threshold": r.threshold, "passed": bool(r.passed)}
        for s, r in zip(res.snapshots, res.equivariance)]).name)
    files.append(write_json(out / "fringes.json", {
        "expected_spacing": res.config.fringe_spacing,
        "measured_spacing": res.measured_fringe_spacing,
        "relative_error": abs(res.measured_fringe_spacing
                              - res.config.fringe_spacing)
        / res.config.fringe_spacing,
    }).name)
    from .pilot import min_pairwise_separation
    files.append(write_json(out / "summary.json", {
        "experiment": "jonsson",
        "n_samples": jc.n_samples,
        "impact_fraction": float(ok.mean()),
        "upper_fraction": float((res.impacts[ok] > 0).mean()),
        "bundle_min_separation": min_pairwise_separation(res.bundle),
        "grid_cell": max(res.psi0.grid.spacing),
        "equivariance_all_passed": bool(all(r.passed
                                            for r in res.equivariance)),
    }).name)
    return files


def _run_stern_gerlach(cfg, out: Path):
    from .spin import MagnetConfig, SternGerlachNumerics, stern_gerlach_run

    mag_cfg = cfg["magnet"]
    magnet = MagnetConfig(
        field_gradient=float(mag_cfg["field_gradient"]),
        moment=float(mag_cfg["moment"]),
        length=float(mag_cfg["length"]),
        transit_speed=float(mag_cfg["transit_speed"]),
        flight_time=float(mag_cfg["flight_time"]),
        bias_field=float(mag_cfg.get("bias_field", 0.0)))
    num_cfg = cfg.get("numerics", {})
    num = SternGerlachNumerics(
        grid_x=tuple(num_cfg.get("grid_x", (-8.0, 28.0))),
        grid_z=tuple(num_cfg.get("grid_z", (-28.0, 28.0))),
        nx=int(num_cfg.get("nx", 160)),
        nz=int(num_cfg.get("nz", 512)),
        dt=float(num_cfg.get("dt", 2.5e-3)),
        sigma0=float(cfg["initial"].get("sigma0", 1.0)))
    res = stern_gerlach_run(
        float(cfg["initial"]["theta0"]),
        float(cfg["initial"].get("phi0", 0.0)),
        magnet, int(cfg["sampling"]["n"]), int(cfg.get("seed", 0)),
        numerics=num, hbar=float(cfg.get("hbar", 1.0)),
        mass=float(cfg.get("mass", 1.0)),
        n_bundle=int(cfg["sampling"].get("n_bundle", 10)))
    files = []
    files.append(write_csv(out / "sg_impacts.csv",
                           ["atom_id", "z_impact", "sign"],
                           ((i, z, s) for i, (z, s)
                            in enumerate(zip(res.impacts, res.signs)))).name)
    rows = []
    nb = res.orientation_z.shape[0]
    for i in range(nb):
        for kk, t in enumerate(res.orientation_times):
            th = res.orientation_theta[i, kk]
            if np.isfinite(th):
                rows.append((i, t, res.orientation_z[i, kk], th))
    files.append(write_csv(out / "sg_orientation.csv",
                           ["traj_id", "t", "z", "theta"], rows).name)
    zdens = np.stack([s.density().sum(axis=0) * s.grid.spacing[0]
                      for s in res.snapshots])
    files.append(write_csv(
        out / "sg_density.csv",
        ["time"] + [f"z{j}" for j in range(zdens.shape[1])],
        ((s.time, *row) for s, row in zip(res.snapshots, zdens))).name)
    files.append(write_json(out / "summary.json", {
        "experiment": "stern-gerlach",
        "theta0": res.theta0,
        "fraction_plus": res.fraction_plus,
        "born_expectation": float(np.cos(res.theta0 / 2.0) ** 2),
        "separation": res.separation,
        "spot_sigma": res.spot_sigma,
        "resolved": bool(res.separation > 4 * res.spot_sigma),
        "equivariance_all_passed": bool(all(r.passed
                                            for r in res.equivariance)),
    }).name)
    return files


def _run_eprb(cfg, out: Path):
    from .eprb import (SingletSpec, chsh, correlation, correlation_stderr,
                       run_eprb)
    from .spin import MagnetConfig, SternGerlachNumerics

    mag_cfg = cfg.get("magnet", {})
    magnet = MagnetConfig(
        field_gradient=float(mag_cfg.get("field_gradient", 5.0)),
        moment=float(mag_cfg.get("moment", 1.0)),
        length=float(mag_cfg.get("length", 5.0)),
        transit_speed=float(mag_cfg.get("transit_speed", 5.0)),
        flight_time=float(mag_cfg.get("flight_time", 2.0)))
    num_cfg = cfg.get("numerics", {})
    num = SternGerlachNumerics(
        nx=int(num_cfg.get("nx", 128)), nz=int(num_cfg.get("nz", 384)),
        dt=float(num_cfg.get("dt", 2.5e-3)))
    pairs = cfg["pairs"]
    deltas = [float(d) for d in pairs["deltas"]]
    n_per = int(pairs["n_per_delta"])
    seed = int(cfg.get("seed", 0))
    spec = SingletSpec(numerics=num, magnet=magnet,
                       hbar=float(cfg.get("hbar", 1.0)),
                       mass=float(cfg.get("mass", 1.0)))

    chsh_cfg = cfg.get("chsh")
    chsh_deltas = []
    if chsh_cfg:
        a, ap = float(chsh_cfg["a"]), float(chsh_cfg["a_prime"])
        b, bp = float(chsh_cfg["b"]), float(chsh_cfg["b_prime"])
        chsh_deltas = [b - a, bp - a, b - ap, bp - ap]
    all_deltas = list(deltas)
    for d in chsh_deltas:
        if not any(np.isclose(d, e) for e in all_deltas):
            all_deltas.append(d)
    records = run_eprb(spec, all_deltas, n_per, seed)

    summary = {"experiment": "eprb", "n_per_delta": n_per, "correlations": []}
    for d in deltas:
        summary["correlations"].append({
            "delta": d, "E": correlation(records, d),
            "stderr": correlation_stderr(records, d),
            "quantum": float(-np.cos(d))})
    if chsh_cfg:
        es = [correlation(records, d) for d in chsh_deltas]
        ses = [correlation_stderr(records, d) for d in chsh_deltas]
        summary["chsh"] = {
            "S": chsh(es[0], es[1], es[2], es[3]),
            "stderr": float(np.sqrt(sum(s ** 2 for s in ses))),
            "settings": dict(zip(("ab", "abp", "apb", "apbp"), es)),
            "quantum_max": float(2 * np.sqrt(2)),
        }
    files = []
    files.append(write_csv(
        out / "records.csv",
        ["pair_id", "delta", "theta_hidden", "phi_hidden",
         "outcome_a", "outcome_b"],
        ((r.pair_id, r.delta, r.theta_hidden, r.phi_hidden,
          r.outcome_a, r.outcome_b) for r in records.rows())).name)
    files.append(write_json(out / "summary.json", summary).name)
    return files


def _run_coherent(cfg, out: Path):
    from .pilot import integrate_trajectories
    from .wavefields import (coherent_state, fit_gaussian_width,
                             iterate_split_step, packet_center)

    osc = cfg["oscillator"]
    omega = float(osc["omega"])
    x0 = (float(osc.get("x0", 1.0)),)
    v0 = (float(osc.get("v0", 0.0)),)
    hbar = float(cfg.get("hbar", 0.5))
    mass = float(cfg.get("mass", 1.0))
    periods = float(cfg["periods"])
    g = cfg.get("grid", {})
    grid = Grid(((float(g.get("lo", -8.0)), float(g.get("hi", 8.0))),),
                (int(g.get("n", 1024)),))
    dt = float(cfg.get("integrator", {}).get("dt", 0.002))
    t_total = periods * 2 * np.pi / omega
    steps = int(np.ceil(t_total / dt))
    stride = max(1, steps // 200)
    steps = (steps // stride) * stride

    psi0 = coherent_state(omega, x0, v0, hbar, mass, 0.0, grid)
    pot = Potential.harmonic(mass, omega)
    sig_expected = np.sqrt(hbar / (2 * mass * omega))
    offsets = np.asarray(cfg.get("trajectory_offsets",
                                 [-1.0, -0.5, 0.5, 1.0])) * sig_expected

    rows = []
    snapshots = [psi0]

    def recording(it):
        for i, f in enumerate(it, start=1):
            if i % stride == 0:
                snapshots.append(f)
            yield f

    import itertools
    ens = integrate_trajectories(
        (x0[0] + offsets)[:, None],
        itertools.chain([psi0],
                        recording(iterate_split_step(psi0, pot, dt, steps))),
        dt=dt, store_stride=stride)

    from .wavefields import classical_orbit
    width_devs, center_devs = [], []
    for snap in snapshots:
        w = fit_gaussian_width(snap)
        c = packet_center(snap)[0]
        xi, _ = classical_orbit(omega, x0, v0, snap.time)
        rows.append((snap.time, w, c, float(xi[0])))
        width_devs.append(abs(w - sig_expected) / sig_expected)
        center_devs.append(abs(c - xi[0]))
    files = [write_csv(out / "metrics.csv",
                       ["t", "width", "center", "xi_classical"], rows).name]
    traj_rows = []
    for i, off in enumerate(offsets):
        for kk in range(ens.positions.shape[1]):
            t = ens.times[kk]
            xi, _ = classical_orbit(omega, x0, v0, t)
            traj_rows.append((i, t, ens.positions[i, kk, 0],
                              float(xi[0]) + off))
    files.append(write_csv(out / "trajectories.csv",
                           ["traj_id", "t", "x", "rigid_reference"],
                           traj_rows).name)
    rigid_dev = float(np.max([np.max(np.abs(
        ens.positions[i, :, 0]
        - (np.array([classical_orbit(omega, x0, v0, t)[0][0]
                     for t in ens.times]) + off)))
        for i, off in enumerate(offsets)]))
    orbit_radius = float(np.sqrt(x0[0] ** 2 + (v0[0] / omega) ** 2))
    files.append(write_json(out / "summary.json", {
        "experiment": "coherent",
        "sigma_expected": float(sig_expected),
        "max_width_rel_dev": float(np.max(width_devs)),
        "max_center_dev": float(np.max(center_devs)),
        "max_center_dev_over_radius": float(np.max(center_devs)) / orbit_radius,
        "max_rigid_dev": rigid_dev,
        "orbit_radius": orbit_radius,
    }).name)
    return files


def _run_sweep(cfg, out: Path):
    from .semiclassical import SweepSpec, fit_order, run_sweep
    from .wavefields import GaussianPacketSpec

    sw = cfg["sweep"]
    init = cfg.get("initial", {})
    kwargs = {
        "experiment": sw["family"],
        "hbar_divisors": tuple(float(d) for d in sw["divisors"]),
        "mass": float(cfg.get("mass", 1.0)),
        "n_traj": int(sw.get("n_traj", 26)),
        "seed": int(cfg.get("seed", 11)),
    }
    if sw["family"] == "gaussian_linear":
        kwargs["packet"] = GaussianPacketSpec(
            float(init.get("sigma0", 1.0)),
            (float(init.get("center", 0.0)),),
            (float(init.get("velocity", 1.0)),))
        kwargs["force"] = float(cfg.get("potential", {}).get("force", 0.5))
    elif sw["family"] == "double_slit":
        for name, key in (("slit_separation", "separation"),
                          ("slit_width", "width"),
                          ("edge_width", "edge_width")):
            if key in cfg.get("slits", {}):
                kwargs[name] = float(cfg["slits"][key])
        if "sigma0" in init:
            kwargs["illumination_sigma"] = float(init["sigma0"])
    else:
        kwargs["omega"] = float(cfg.get("oscillator", {}).get("omega", 1.0))
    spec = SweepSpec(**kwargs)
    report = run_sweep(spec)
    entries = []
    files = []
    for e in report.entries:
        entry = {"divisor": e.divisor, "hbar": e.hbar,
                 "median_traj_dev": e.median_traj_dev}
        for key in ("density_error_l1", "density_error_linf",
                    "action_error_linf", "gauge_offset_abs", "width_error",
                    "iqr"):
            v = getattr(e, key)
            if np.isfinite(v):
                entry[key] = float(v)
        entries.append(entry)
        rows = []
        for i in range(e.quantum_paths.shape[0]):
            for kk, t in enumerate(e.times):
                rows.append((i, t, e.quantum_paths[i, kk],
                             e.classical_paths[i, kk]))
        name = f"sweep_traj_div{int(e.divisor)}.csv"
        files.append(write_csv(out / name,
                               ["traj_id", "t", "quantum", "classical"],
                               rows).name)
    summary = {"experiment": "sweep", "family": spec.experiment,
               "entries": entries}
    if spec.experiment == "gaussian_linear":
        summary["gauge_order"] = fit_order(report.hbars(),
                                           report.series("gauge_offset_abs"))
        summary["width_order"] = fit_order(report.hbars(),
                                           report.series("width_error"))
    med = report.series("median_traj_dev")
    summary["median_dev_monotone"] = bool(np.all(np.diff(med) < 0))
    files.append(write_json(out / "report.json", summary).name)
    return files


RUNNERS = {
    "hopf-lax": (_run_hopf_lax, "grid, potential, initial, time"),
    "gaussian-linear": (_run_gaussian_linear,
                        "grid, potential, initial, integrator, sampling"),
    "jonsson": (_run_jonsson, "slits, initial, screen_distance, sampling"),
    "stern-gerlach": (_run_stern_gerlach, "magnet, initial, sampling"),
    "eprb": (_run_eprb, "magnet, pairs [, chsh]"),
    "coherent": (_run_coherent, "oscillator, periods"),
    "sweep": (_run_sweep, "sweep [, initial, slits, oscillator]"),
}


# ---------------------------------------------------------------------------
# command implementations
# ---------------------------------------------------------------------------

def default_config_path(name: str) -> Path:
    return Path(__file__).parent / "configs" / f"{name}.yaml"


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
        warnings = validate_config(cfg)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    name = cfg["experiment"]
    out_root = Path(args.out or cfg.get("output")
                    or os.environ.get(ENV_OUTPUT_ROOT) or "pilotwave-out")
    out_dir = out_root / name
    tmp_dir = out_root / f".{name}.partial"
    if tmp_dir.exists():
        shutil.rmtree(tmp_dir)
    tmp_dir.mkdir(parents=True)
    config_hash = hashlib.sha256(Path(args.config).read_bytes()).hexdigest()
    runner = RUNNERS[name][0]
    t0 = time.time()
    try:
        files = runner(cfg, tmp_dir)
    except PilotwaveError as exc:
        shutil.rmtree(tmp_dir, ignore_errors=True)
        print(f"experiment failed: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001 - report, clean, nonzero exit
        shutil.rmtree(tmp_dir, ignore_errors=True)
        print(f"experiment failed: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return 3
    wall = time.time() - t0
    out_dir.mkdir(parents=True, exist_ok=True)
    stale_manifest = out_dir / "run_manifest.json"
    if stale_manifest.exists():
        stale_manifest.unlink()
    for f in files:
        os.replace(tmp_dir / f, out_dir / f)
    shutil.rmtree(tmp_dir, ignore_errors=True)
    write_manifest(out_dir, config_hash, wall, files)
    print(f"{name}: {len(files)} artifacts in {out_dir}")
    return 0


def cmd_validate(args) -> int:
    try:
        cfg = load_config(args.config)
        warnings = validate_config(cfg)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    for w in warnings:
        print(f"warning: {w}")
    print("ok")
    return 0


def cmd_list(_args) -> int:
    print(f"{'experiment':<16} {'required blocks':<44} default config")
    for name in EXPERIMENTS:
        cfg = default_config_path(name)
        mark = cfg.name if cfg.is_file() else "-"
        print(f"{name:<16} {RUNNERS[name][1]:<44} {mark}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="pilotwave",
        description="min-plus actions, wave fields, trajectories, spin")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run one experiment from a config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="output root directory")
    p_run.add_argument("--threads", type=int, default=None,
                       help="worker threads (never changes results)")
    p_run.set_defaults(func=cmd_run)
    p_val = sub.add_parser("validate", help="check a config without compute")
    p_val.add_argument("config")
    p_val.set_defaults(func=cmd_validate)
    p_list = sub.add_parser("list", help="list experiments and defaults")
    p_list.set_defaults(func=cmd_list)
    args = parser.parse_args(argv)
    if getattr(args, "threads", None):
        os.environ["NUMBA_NUM_THREADS"] = str(args.threads)
    try:
        return args.func(args)
    except PilotwaveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
