/** Axes machinery: data-to-pixel transforms, frames, ticks, labels. */
import { BLACK, Color, Raster } from "./raster.js";

export interface Viewport {
  px0: number;
  py0: number;
  px1: number;
  py1: number;
  x0: number;
  x1: number;
  y0: number;
  y1: number;
}

export function makeViewport(px0: number, py0: number, px1: number,
                             py1: number, x0: number, x1: number,
                             y0: number, y1: number): Viewport {
  return { px0, py0, px1, py1, x0, x1, y0, y1 };
}

export function toPx(v: Viewport, x: number): number {
  return v.px0 + ((x - v.x0) / (v.x1 - v.x0)) * (v.px1 - v.px0);
}

export function toPy(v: Viewport, y: number): number {
  // pixel y grows downward
  return v.py1 - ((y - v.y0) / (v.y1 - v.y0)) * (v.py1 - v.py0);
}

function tickValues(lo: number, hi: number, count: number): number[] {
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const mult = [1, 2, 5, 10].find((m) => span / (step * m) <= count) ?? 10;
  const s = step * mult;
  const first = Math.ceil(lo / s) * s;
  const out: number[] = [];
  for (let v = first; v <= hi + 1e-12 * span; v += s) {
    out.push(Math.abs(v) < 1e-12 * span ? 0 : v);
  }
  return out;
}

function fmtTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 100 || a < 0.01) return v.toExponential(0).replace("e", "E");
  return Number(v.toPrecision(3)).toString();
}

export function drawAxes(r: Raster, v: Viewport, xlabel: string,
                         ylabel: string, color: Color = BLACK): void {
  r.frame(v.px0, v.py0, v.px1, v.py1, color);
  for (const t of tickValues(v.x0, v.x1, 6)) {
    const px = toPx(v, t);
    r.line(px, v.py1, px, v.py1 + 3, color);
    const label = fmtTick(t);
    r.text(px - (label.length * 6) / 2, v.py1 + 6, label, color);
  }
  for (const t of tickValues(v.y0, v.y1, 5)) {
    const py = toPy(v, t);
    r.line(v.px0 - 3, py, v.px0, py, color);
    const label = fmtTick(t);
    r.text(v.px0 - 5 - label.length * 6, py - 3, label, color);
  }
  r.text((v.px0 + v.px1) / 2 - (xlabel.length * 6) / 2, v.py1 + 18,
         xlabel, color);
  r.text(v.px0 + 4, v.py0 + 4, ylabel, color);
}

export function polyline(r: Raster, v: Viewport, xs: number[], ys: number[],
                         color: Color, thickness = 1): void {
  for (let i = 1; i < xs.length; i++) {
    r.line(toPx(v, xs[i - 1]), toPy(v, ys[i - 1]), toPx(v, xs[i]),
           toPy(v, ys[i]), color, thickness);
  }
}
