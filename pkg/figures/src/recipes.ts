/**
 * Figure recipes: each names its required artifact files and renders one
 * raster from them. Rendering never recomputes physics; inputs are
 * read-only and missing files raise MissingArtifact.
 */
import { DensityMatrix, groupBy, readCsv, readDensityMatrix, readJson,
         requirePath } from "./artifacts.js";
import { drawAxes, makeViewport, polyline, toPx, toPy,
         Viewport } from "./plot.js";
import { BLACK, BLUE, GREEN, GREY, heatColor, Raster, RED,
         WHITE } from "./raster.js";

export interface Recipe {
  id: string;
  description: string;
  required: string[];
  render(dir: string, options?: RecipeOptions): Raster;
}

export interface RecipeOptions {
  arrowStride?: number; // decimation for orientation arrows
}

function heatPanel(r: Raster, v: Viewport, m: DensityMatrix): void {
  let max = 0;
  for (const row of m.values) for (const val of row) max = Math.max(max, val);
  const cols = Math.round(v.px1 - v.px0);
  const rows = Math.round(v.py1 - v.py0);
  for (let px = 0; px <= cols; px++) {
    const ix = Math.min(m.nx - 1,
                        Math.floor(((px + 0.5) / (cols + 1)) * m.nx));
    for (let py = 0; py <= rows; py++) {
      const iy = Math.min(m.ny - 1,
                          Math.floor((1 - (py + 0.5) / (rows + 1)) * m.ny));
      const val = m.values[ix][iy] / max;
      r.set(v.px0 + px, v.py0 + py, heatColor(Math.pow(val, 0.5)));
    }
  }
}

const fig1: Recipe = {
  id: "fig1",
  description: "velocity field arrows and piloted trajectories (x over t)",
  required: ["velocity_samples.csv", "trajectories.csv"],
  render(dir) {
    const r = new Raster(640, 420);
    const vel = readCsv(dir, "velocity_samples.csv");
    const traj = readCsv(dir, "trajectories.csv");
    const ts = vel.column("t");
    const xs = vel.column("x");
    const vxs = vel.column("vx");
    const allT = ts.concat(traj.column("t"));
    const allX = xs.concat(traj.column("x"));
    const v = makeViewport(60, 20, 610, 370,
                           Math.min(...allT), Math.max(...allT),
                           Math.min(...allX) - 0.5, Math.max(...allX) + 0.5);
    const dtArrow = (v.x1 - v.x0) / 22;
    for (let i = 0; i < ts.length; i++) {
      r.arrow(toPx(v, ts[i]), toPy(v, xs[i]),
              toPx(v, ts[i] + dtArrow), toPy(v, xs[i] + vxs[i] * dtArrow),
              BLUE, 3);
    }
    for (const [, rows] of groupBy(traj, "traj_id")) {
      polyline(r, v, rows.map((q) => q[1]), rows.map((q) => q[2]), BLACK, 2);
    }
    drawAxes(r, v, "T", "X");
    return r;
  },
};

const fig2: Recipe = {
  id: "fig2",
  description: "two-slit probability density, near zone and far zone",
  required: ["density_near.csv", "density_far.csv"],
  render(dir) {
    const near = readDensityMatrix(dir, "density_near.csv");
    const far = readDensityMatrix(dir, "density_far.csv");
    const r = new Raster(840, 440);
    const vNear = makeViewport(55, 35, 405, 400, near.xlo, near.xhi,
                               near.ylo, near.yhi);
    const vFar = makeViewport(470, 35, 820, 400, far.xlo, far.xhi,
                              far.ylo, far.yhi);
    heatPanel(r, vNear, near);
    heatPanel(r, vFar, far);
    drawAxes(r, vNear, "X", "Y");
    drawAxes(r, vFar, "X", "Y");
    r.text(150, 8, `NEAR T=${near.time.toFixed(2)}`, BLACK);
    r.text(580, 8, `FAR T=${far.time.toFixed(2)}`, BLACK);
    return r;
  },
};

const fig3: Recipe = {
  id: "fig3",
  description: "trajectory bundle through the double slits",
  required: ["trajectories.csv"],
  render(dir) {
    const traj = readCsv(dir, "trajectories.csv");
    const r = new Raster(760, 460);
    const xs = traj.column("x");
    const ys = traj.column("y");
    const v = makeViewport(60, 20, 730, 410,
                           Math.min(...xs), Math.max(...xs),
                           Math.min(...ys) - 1, Math.max(...ys) + 1);
    for (const [, rows] of groupBy(traj, "traj_id")) {
      const upper = rows[0][3] > 0;
      polyline(r, v, rows.map((q) => q[2]), rows.map((q) => q[3]),
               upper ? BLUE : RED, 1);
    }
    drawAxes(r, v, "X", "Y");
    return r;
  },
};

const fig4: Recipe = {
  id: "fig4",
  description: "quantum-to-classical trajectory convergence panels",
  required: ["report.json"],
  render(dir) {
    const report = readJson<{ entries: { divisor: number }[] }>(dir,
                                                                "report.json");
    const divisors = report.entries.map((e) => e.divisor);
    const names = divisors.map((d) => `sweep_traj_div${Math.round(d)}.csv`);
    for (const n of names) requirePath(dir, n);
    const r = new Raster(760, 760);
    const panels = names.slice(0, 4).map((name, i) => {
      const table = readCsv(dir, name);
      const px0 = 60 + (i % 2) * 360;
      const py0 = 30 + Math.floor(i / 2) * 360;
      return { table, px0, py0, divisor: divisors[i] };
    });
    let yspan = 0;
    for (const p of panels) {
      for (const y of p.table.column("quantum")) {
        yspan = Math.max(yspan, Math.abs(y));
      }
    }
    for (const p of panels) {
      const ts = p.table.column("t");
      const v = makeViewport(p.px0, p.py0, p.px0 + 290, p.py0 + 290,
                             Math.min(...ts), Math.max(...ts),
                             -yspan * 1.05, yspan * 1.05);
      for (const [, rows] of groupBy(p.table, "traj_id")) {
        polyline(r, v, rows.map((q) => q[1]), rows.map((q) => q[3]), GREY, 1);
      }
      for (const [, rows] of groupBy(p.table, "traj_id")) {
        polyline(r, v, rows.map((q) => q[1]), rows.map((q) => q[2]), BLUE, 1);
      }
      drawAxes(r, v, "T", "Y");
      r.text(p.px0 + 90, p.py0 - 12, `HBAR/${Math.round(p.divisor)}`, BLACK);
    }
    return r;
  },
};

const fig6: Recipe = {
  id: "fig6",
  description: "spin-measurement density, trajectories and spin arrows",
  required: ["sg_density.csv", "sg_orientation.csv"],
  render(dir, options) {
    const stride = options?.arrowStride ?? 12;
    const dens = readCsv(dir, "sg_density.csv");
    const orient = readCsv(dir, "sg_orientation.csv");
    const times = dens.column("time");
    const nz = dens.header.length - 1;
    const zs = orient.column("z");
    const zmax = Math.max(...zs.map(Math.abs)) * 1.3;
    const r = new Raster(760, 480);
    const v = makeViewport(60, 20, 730, 430, times[0],
                           times[times.length - 1], -zmax, zmax);
    // density backdrop over (t, z); rows are snapshots in time
    let max = 0;
    for (const row of dens.rows) {
      for (let j = 1; j < row.length; j++) max = Math.max(max, row[j]);
    }
    const zlo = -zmax;
    const zhi = zmax;
    for (let px = Math.round(v.px0); px <= v.px1; px++) {
      const t = v.x0 + ((px - v.px0) / (v.px1 - v.px0)) * (v.x1 - v.x0);
      let k = 0;
      while (k < times.length - 1 && times[k + 1] <= t) k++;
      const row = dens.rows[k];
      for (let py = Math.round(v.py0); py <= v.py1; py++) {
        const z = zhi - ((py - v.py0) / (v.py1 - v.py0)) * (zhi - zlo);
        // density rows cover the full grid range; map z into the row
        const frac = (z + zmax) / (2 * zmax);
        const j = 1 + Math.min(nz - 1, Math.max(0, Math.floor(frac * nz)));
        r.set(px, py, heatColor(Math.pow(row[j] / max, 0.5)));
      }
    }
    const groups = groupBy(orient, "traj_id");
    for (const [, rows] of groups) {
      polyline(r, v, rows.map((q) => q[1]), rows.map((q) => q[2]), WHITE, 1);
    }
    const arrowLenT = (v.x1 - v.x0) / 40;
    const arrowLenZ = (zhi - zlo) / 28;
    for (const [, rows] of groups) {
      for (let i = 0; i < rows.length; i += stride) {
        const [, t, z, theta] = rows[i];
        r.arrow(toPx(v, t), toPy(v, z),
                toPx(v, t + Math.sin(theta) * arrowLenT),
                toPy(v, z + Math.cos(theta) * arrowLenZ), GREEN, 3);
      }
    }
    drawAxes(r, v, "T", "Z");
    return r;
  },
};

interface EprbSummary {
  correlations: { delta: number; E: number; stderr: number;
                  quantum: number }[];
  chsh?: { S: number; stderr: number };
}

const bell: Recipe = {
  id: "bell",
  description: "EPR-B correlation E(delta) against -cos(delta), with CHSH",
  required: ["summary.json"],
  render(dir) {
    const summary = readJson<EprbSummary>(dir, "summary.json");
    const r = new Raster(640, 440);
    const v = makeViewport(60, 25, 610, 390, 0, Math.PI, -1.1, 1.1);
    // quantum reference curve
    const n = 120;
    const xs: number[] = [];
    const ys: number[] = [];
    for (let i = 0; i <= n; i++) {
      const d = (i / n) * Math.PI;
      xs.push(d);
      ys.push(-Math.cos(d));
    }
    polyline(r, v, xs, ys, GREY, 1);
    for (const c of summary.correlations) {
      r.marker(toPx(v, c.delta), toPy(v, c.E), BLUE, 5);
      const se = 3 * c.stderr;
      r.line(toPx(v, c.delta), toPy(v, c.E - se), toPx(v, c.delta),
             toPy(v, c.E + se), BLUE);
    }
    drawAxes(r, v, "DELTA", "E");
    if (summary.chsh) {
      r.text(70, 40, `CHSH S=${summary.chsh.S.toFixed(3)}`, RED);
    }
    return r;
  },
};

export const RECIPES: Record<string, Recipe> = {
  fig1, fig2, fig3, fig4, fig6, bell,
};
