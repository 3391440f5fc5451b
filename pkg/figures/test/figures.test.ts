import { mkdirSync, mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { beforeAll, describe, expect, it } from "vitest";

import { MissingArtifact, readCsv, readDensityMatrix } from "../src/artifacts.js";
import { crc32, encodePng } from "../src/png.js";
import { renderToBuffer } from "../src/index.js";
import { RECIPES } from "../src/recipes.js";
import { Raster, heatColor } from "../src/raster.js";

function writeLines(dir: string, name: string, lines: string[]): void {
  writeFileSync(join(dir, name), lines.join("\n") + "\n");
}

interface Fixtures {
  gaussian: string;
  jonsson: string;
  sweep: string;
  sg: string;
  eprb: string;
}

function makeFixtures(): Fixtures {
  const root = mkdtempSync(join(tmpdir(), "figfix-"));
  const dirs = {
    gaussian: join(root, "gaussian-linear"),
    jonsson: join(root, "jonsson"),
    sweep: join(root, "sweep"),
    sg: join(root, "stern-gerlach"),
    eprb: join(root, "eprb"),
  };
  for (const d of Object.values(dirs)) {
    mkdirSync(d, { recursive: true });
  }
  // gaussian-linear style
  const vel = ["t,x,vx"];
  for (let k = 0; k <= 4; k++) {
    for (let i = 0; i < 7; i++) {
      vel.push(`${k * 0.5},${-2 + i * 0.7 + k},${1 + 0.5 * k * 0.5}`);
    }
  }
  writeLines(dirs.gaussian, "velocity_samples.csv", vel);
  const traj = ["traj_id,t,x"];
  for (let id = 0; id < 3; id++) {
    for (let k = 0; k <= 20; k++) {
      const t = k * 0.1;
      traj.push(`${id},${t},${id - 1 + t + 0.25 * t * t}`);
    }
  }
  writeLines(dirs.gaussian, "trajectories.csv", traj);
  // jonsson bundle (traj_id,t,x,y,flag)
  const bundle = ["traj_id,t,x,y,flag"];
  for (let id = 0; id < 6; id++) {
    const y0 = (id - 2.5) * 0.8;
    for (let k = 0; k <= 20; k++) {
      const t = k * 0.2;
      bundle.push(`${id},${t},${t * 4},${y0 * (1 + 0.5 * t)},0`);
    }
  }
  writeLines(dirs.jonsson, "trajectories.csv", bundle);
  // density matrices (8x6)
  const header = "# nx=8 ny=6 xlo=0 xhi=8 ylo=-3 yhi=3 time=0.5";
  const rows: string[] = [header];
  for (let i = 0; i < 8; i++) {
    const row: number[] = [];
    for (let j = 0; j < 6; j++) {
      row.push(Math.exp(-((i - 4) ** 2 + (j - 2.5) ** 2) / 4));
    }
    rows.push(row.map((x) => x.toPrecision(6)).join(","));
  }
  writeLines(dirs.jonsson, "density_near.csv", rows);
  writeLines(dirs.jonsson, "density_far.csv",
             rows.map((r) => r.replace("time=0.5", "time=5")));
  // sweep report + per-divisor files
  const entries = [10, 100, 1000, 10000].map((d) => ({ divisor: d }));
  writeFileSync(join(dirs.sweep, "report.json"),
                JSON.stringify({ entries }, null, 2));
  for (const d of [10, 100, 1000, 10000]) {
    const lines = ["traj_id,t,quantum,classical"];
    for (let id = 0; id < 5; id++) {
      for (let k = 0; k <= 10; k++) {
        const t = k * 0.3;
        const y0 = -2 + id;
        lines.push(`${id},${t},${y0 + (t * t) / d},${y0}`);
      }
    }
    writeLines(dirs.sweep, `sweep_traj_div${d}.csv`, lines);
  }
  // stern-gerlach density history + orientation samples
  const dens = ["time," + Array.from({ length: 12 },
                                     (_, j) => `z${j}`).join(",")];
  for (let k = 0; k <= 6; k++) {
    const t = k * 0.5;
    const row = [t.toString()];
    for (let j = 0; j < 12; j++) {
      const z = -5.5 + j;
      row.push(Math.exp(-((z - t) ** 2) / 3).toPrecision(5));
    }
    dens.push(row.join(","));
  }
  writeLines(dirs.sg, "sg_density.csv", dens);
  const orient = ["traj_id,t,z,theta"];
  for (let id = 0; id < 4; id++) {
    for (let k = 0; k <= 30; k++) {
      const t = k * 0.1;
      const z = (id - 1.5) * (1 + t);
      orient.push(`${id},${t},${z},${id < 2 ? 0.3 + 0.8 * t : 2.8 - 0.8 * t}`);
    }
  }
  writeLines(dirs.sg, "sg_orientation.csv", orient);
  // eprb summary
  const correlations = Array.from({ length: 9 }, (_, k) => {
    const delta = (k * Math.PI) / 8;
    return { delta, E: -Math.cos(delta) + 0.01, stderr: 0.01,
             quantum: -Math.cos(delta) };
  });
  writeFileSync(join(dirs.eprb, "summary.json"), JSON.stringify(
    { correlations, chsh: { S: 2.82, stderr: 0.02 } }, null, 2));
  return dirs;
}

let fixtures: Fixtures;
const FIG_DIR: Record<string, keyof Fixtures> = {
  fig1: "gaussian",
  fig2: "jonsson",
  fig3: "jonsson",
  fig4: "sweep",
  fig6: "sg",
  bell: "eprb",
};
beforeAll(() => {
  fixtures = makeFixtures();
});

describe("png encoder", () => {
  it("emits a valid signature and chunk layout", () => {
    const r = new Raster(16, 8);
    r.line(0, 0, 15, 7, [255, 0, 0, 255]);
    const buf = encodePng(r.width, r.height, r.data);
    expect([...buf.subarray(0, 8)]).toEqual([137, 80, 78, 71, 13, 10, 26, 10]);
    // IHDR length 13, type IHDR, correct CRC
    expect(buf.readUInt32BE(8)).toBe(13);
    expect(buf.subarray(12, 16).toString("ascii")).toBe("IHDR");
    const crc = crc32(new Uint8Array(buf.subarray(12, 12 + 4 + 13)));
    expect(buf.readUInt32BE(12 + 4 + 13)).toBe(crc >>> 0);
    expect(buf.subarray(buf.length - 8, buf.length - 4).toString("ascii"))
      .toBe("IEND");
  });

  it("is deterministic", () => {
    const r = new Raster(32, 32);
    r.text(2, 2, "ABC 123", [0, 0, 0, 255]);
    const a = encodePng(r.width, r.height, r.data);
    const b = encodePng(r.width, r.height, r.data);
    expect(a.equals(b)).toBe(true);
  });
});

describe("artifact readers", () => {
  it("parses csv columns", () => {
    const t = readCsv(fixtures.gaussian, "trajectories.csv");
    expect(t.header).toEqual(["traj_id", "t", "x"]);
    expect(t.column("t")[0]).toBe(0);
  });

  it("parses density matrices with geometry", () => {
    const m = readDensityMatrix(fixtures.jonsson, "density_near.csv");
    expect(m.nx).toBe(8);
    expect(m.ny).toBe(6);
    expect(m.values.length).toBe(8);
    expect(m.time).toBe(0.5);
  });

  it("raises MissingArtifact naming the file", () => {
    expect(() => readCsv(fixtures.eprb, "nope.csv"))
      .toThrowError(MissingArtifact);
    try {
      readCsv(fixtures.eprb, "nope.csv");
    } catch (err) {
      expect((err as MissingArtifact).file).toBe("nope.csv");
    }
  });
});

describe("recipes", () => {
  it("knows all six figures", () => {
    expect(Object.keys(RECIPES).sort())
      .toEqual(["bell", "fig1", "fig2", "fig3", "fig4", "fig6"]);
  });

  for (const id of ["fig1", "fig2", "fig3", "fig4", "fig6", "bell"]) {
    it(`renders ${id} bit-stably`, () => {
      const a = renderToBuffer(id, fixtures[FIG_DIR[id]]);
      const b = renderToBuffer(id, fixtures[FIG_DIR[id]]);
      expect(a.length).toBeGreaterThan(500);
      expect([...a.subarray(0, 4)]).toEqual([137, 80, 78, 71]);
      expect(a.equals(b)).toBe(true);
    });
  }

  it("fig4 honours the report divisors", () => {
    // dropping one per-divisor file must raise MissingArtifact
    const dir = mkdtempSync(join(tmpdir(), "figmiss-"));
    writeFileSync(join(dir, "report.json"),
                  JSON.stringify({ entries: [{ divisor: 10 }] }));
    expect(() => renderToBuffer("fig4", dir)).toThrowError(MissingArtifact);
  });

  it("unknown figure id is rejected", () => {
    expect(() => renderToBuffer("fig99", fixtures.eprb))
      .toThrowError(/unknown/);
  });
});

describe("heat colormap", () => {
  it("is monotone dark to bright", () => {
    const a = heatColor(0.0);
    const b = heatColor(1.0);
    expect(a[0] + a[1] + a[2]).toBeLessThan(b[0] + b[1] + b[2]);
  });
});
