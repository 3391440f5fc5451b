/**
 * Readers for the pilotwave CLI artifact formats: plain CSV with a header
 * row, density matrices with a `# key=value` geometry line, and JSON
 * summaries. Missing inputs raise MissingArtifact naming the file.
 */
import { existsSync, readFileSync } from "node:fs";
import { join } from "node:path";

export class MissingArtifact extends Error {
  constructor(public readonly file: string) {
    super(`missing artifact: ${file}`);
    this.name = "MissingArtifact";
  }
}

export function requirePath(dir: string, name: string): string {
  const p = join(dir, name);
  if (!existsSync(p)) throw new MissingArtifact(name);
  return p;
}

export interface Table {
  header: string[];
  rows: number[][];
  column(name: string): number[];
}

export function readCsv(dir: string, name: string): Table {
  const text = readFileSync(requirePath(dir, name), "utf-8");
  const lines = text.split("\n").filter((l) => l.length > 0);
  const header = lines[0].split(",");
  const rows = lines.slice(1).map((l) => l.split(",").map(Number));
  return {
    header,
    rows,
    column(colName: string): number[] {
      const idx = header.indexOf(colName);
      if (idx < 0) throw new Error(`column '${colName}' not in ${name}`);
      return rows.map((r) => r[idx]);
    },
  };
}

export interface DensityMatrix {
  nx: number;
  ny: number;
  xlo: number;
  xhi: number;
  ylo: number;
  yhi: number;
  time: number;
  values: number[][]; // [ix][iy]
}

export function readDensityMatrix(dir: string, name: string): DensityMatrix {
  const text = readFileSync(requirePath(dir, name), "utf-8");
  const lines = text.split("\n").filter((l) => l.length > 0);
  const meta: Record<string, number> = {};
  for (const kv of lines[0].replace(/^#\s*/, "").split(/\s+/)) {
    const [k, v] = kv.split("=");
    meta[k] = Number(v);
  }
  const values = lines.slice(1).map((l) => l.split(",").map(Number));
  return {
    nx: meta.nx,
    ny: meta.ny,
    xlo: meta.xlo,
    xhi: meta.xhi,
    ylo: meta.ylo,
    yhi: meta.yhi,
    time: meta.time,
    values,
  };
}

export function readJson<T>(dir: string, name: string): T {
  return JSON.parse(readFileSync(requirePath(dir, name), "utf-8")) as T;
}

/** Group rows of a trajectory table by integer id column. */
export function groupBy(table: Table, idColumn: string): Map<number, number[][]> {
  const idx = table.header.indexOf(idColumn);
  const groups = new Map<number, number[][]>();
  for (const row of table.rows) {
    const id = row[idx];
    if (!groups.has(id)) groups.set(id, []);
    groups.get(id)!.push(row);
  }
  return groups;
}
