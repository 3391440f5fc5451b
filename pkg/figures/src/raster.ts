/**
 * Software rasterizer: RGBA pixel buffer with lines, rects, arrows,
 * markers and a 5x7 bitmap font. Everything is integer/deterministic.
 */

export type Color = [number, number, number, number];

export const BLACK: Color = [0, 0, 0, 255];
export const WHITE: Color = [255, 255, 255, 255];
export const GREY: Color = [150, 150, 150, 255];
export const BLUE: Color = [40, 80, 200, 255];
export const RED: Color = [200, 40, 40, 255];
export const GREEN: Color = [20, 140, 60, 255];

// classic 5x7 column font: bit k of a column byte is row k (top = LSB)
const FONT: Record<string, number[]> = {
  " ": [0x00, 0x00, 0x00, 0x00, 0x00],
  "0": [0x3e, 0x51, 0x49, 0x45, 0x3e],
  "1": [0x00, 0x42, 0x7f, 0x40, 0x00],
  "2": [0x42, 0x61, 0x51, 0x49, 0x46],
  "3": [0x21, 0x41, 0x45, 0x4b, 0x31],
  "4": [0x18, 0x14, 0x12, 0x7f, 0x10],
  "5": [0x27, 0x45, 0x45, 0x45, 0x39],
  "6": [0x3c, 0x4a, 0x49, 0x49, 0x30],
  "7": [0x01, 0x71, 0x09, 0x05, 0x03],
  "8": [0x36, 0x49, 0x49, 0x49, 0x36],
  "9": [0x06, 0x49, 0x49, 0x29, 0x1e],
  A: [0x7e, 0x11, 0x11, 0x11, 0x7e],
  B: [0x7f, 0x49, 0x49, 0x49, 0x36],
  C: [0x3e, 0x41, 0x41, 0x41, 0x22],
  D: [0x7f, 0x41, 0x41, 0x22, 0x1c],
  E: [0x7f, 0x49, 0x49, 0x49, 0x41],
  F: [0x7f, 0x09, 0x09, 0x09, 0x01],
  G: [0x3e, 0x41, 0x49, 0x49, 0x7a],
  H: [0x7f, 0x08, 0x08, 0x08, 0x7f],
  I: [0x00, 0x41, 0x7f, 0x41, 0x00],
  J: [0x20, 0x40, 0x41, 0x3f, 0x01],
  K: [0x7f, 0x08, 0x14, 0x22, 0x41],
  L: [0x7f, 0x40, 0x40, 0x40, 0x40],
  M: [0x7f, 0x02, 0x0c, 0x02, 0x7f],
  N: [0x7f, 0x04, 0x08, 0x10, 0x7f],
  O: [0x3e, 0x41, 0x41, 0x41, 0x3e],
  P: [0x7f, 0x09, 0x09, 0x09, 0x06],
  Q: [0x3e, 0x41, 0x51, 0x21, 0x5e],
  R: [0x7f, 0x09, 0x19, 0x29, 0x46],
  S: [0x46, 0x49, 0x49, 0x49, 0x31],
  T: [0x01, 0x01, 0x7f, 0x01, 0x01],
  U: [0x3f, 0x40, 0x40, 0x40, 0x3f],
  V: [0x1f, 0x20, 0x40, 0x20, 0x1f],
  W: [0x3f, 0x40, 0x38, 0x40, 0x3f],
  X: [0x63, 0x14, 0x08, 0x14, 0x63],
  Y: [0x07, 0x08, 0x70, 0x08, 0x07],
  Z: [0x61, 0x51, 0x49, 0x45, 0x43],
  ".": [0x00, 0x60, 0x60, 0x00, 0x00],
  ",": [0x00, 0x50, 0x30, 0x00, 0x00],
  "-": [0x08, 0x08, 0x08, 0x08, 0x08],
  "+": [0x08, 0x08, 0x3e, 0x08, 0x08],
  "=": [0x14, 0x14, 0x14, 0x14, 0x14],
  "(": [0x00, 0x1c, 0x22, 0x41, 0x00],
  ")": [0x00, 0x41, 0x22, 0x1c, 0x00],
  "/": [0x20, 0x10, 0x08, 0x04, 0x02],
  ":": [0x00, 0x36, 0x36, 0x00, 0x00],
};

export class Raster {
  readonly width: number;
  readonly height: number;
  readonly data: Uint8Array;

  constructor(width: number, height: number, background: Color = WHITE) {
    this.width = width;
    this.height = height;
    this.data = new Uint8Array(width * height * 4);
    this.fill(background);
  }

  fill(color: Color): void {
    for (let i = 0; i < this.width * this.height; i++) {
      this.data.set(color, i * 4);
    }
  }

  set(x: number, y: number, color: Color): void {
    const xi = Math.round(x);
    const yi = Math.round(y);
    if (xi < 0 || xi >= this.width || yi < 0 || yi >= this.height) return;
    this.data.set(color, (yi * this.width + xi) * 4);
  }

  rect(x0: number, y0: number, x1: number, y1: number, color: Color): void {
    const [xa, xb] = [Math.max(0, Math.round(Math.min(x0, x1))),
                      Math.min(this.width - 1, Math.round(Math.max(x0, x1)))];
    const [ya, yb] = [Math.max(0, Math.round(Math.min(y0, y1))),
                      Math.min(this.height - 1, Math.round(Math.max(y0, y1)))];
    for (let y = ya; y <= yb; y++) {
      for (let x = xa; x <= xb; x++) {
        this.data.set(color, (y * this.width + x) * 4);
      }
    }
  }

  frame(x0: number, y0: number, x1: number, y1: number, color: Color): void {
    this.rect(x0, y0, x1, y0, color);
    this.rect(x0, y1, x1, y1, color);
    this.rect(x0, y0, x0, y1, color);
    this.rect(x1, y0, x1, y1, color);
  }

  line(x0: number, y0: number, x1: number, y1: number, color: Color,
       thickness = 1): void {
    const steps = Math.max(Math.abs(x1 - x0), Math.abs(y1 - y0), 1) * 2;
    for (let s = 0; s <= steps; s++) {
      const t = s / steps;
      const x = x0 + (x1 - x0) * t;
      const y = y0 + (y1 - y0) * t;
      if (thickness <= 1) {
        this.set(x, y, color);
      } else {
        const r = (thickness - 1) / 2;
        for (let dy = -Math.ceil(r); dy <= Math.ceil(r); dy++) {
          for (let dx = -Math.ceil(r); dx <= Math.ceil(r); dx++) {
            if (dx * dx + dy * dy <= r * r + 0.26) {
              this.set(x + dx, y + dy, color);
            }
          }
        }
      }
    }
  }

  arrow(x0: number, y0: number, x1: number, y1: number, color: Color,
        headSize = 4): void {
    this.line(x0, y0, x1, y1, color);
    const angle = Math.atan2(y1 - y0, x1 - x0);
    for (const side of [-1, 1]) {
      const a = angle + Math.PI + (side * Math.PI) / 7;
      this.line(x1, y1, x1 + headSize * Math.cos(a),
                y1 + headSize * Math.sin(a), color);
    }
  }

  marker(x: number, y: number, color: Color, size = 2): void {
    this.rect(x - size / 2, y - size / 2, x + size / 2, y + size / 2, color);
  }

  text(x: number, y: number, s: string, color: Color, scale = 1): void {
    let cx = Math.round(x);
    for (const raw of s.toUpperCase()) {
      const glyph = FONT[raw] ?? FONT[" "];
      for (let col = 0; col < 5; col++) {
        for (let row = 0; row < 7; row++) {
          if ((glyph[col] >> row) & 1) {
            if (scale === 1) {
              this.set(cx + col, y + row, color);
            } else {
              this.rect(cx + col * scale, y + row * scale,
                        cx + col * scale + scale - 1,
                        y + row * scale + scale - 1, color);
            }
          }
        }
      }
      cx += 6 * scale;
    }
  }
}

/** Piecewise-linear approximation of a perceptual dark-to-bright map. */
export function heatColor(v: number): Color {
  const t = Math.min(1, Math.max(0, v));
  const anchors: [number, Color][] = [
    [0.0, [13, 8, 135, 255]],
    [0.25, [126, 3, 168, 255]],
    [0.5, [204, 71, 120, 255]],
    [0.75, [248, 149, 64, 255]],
    [1.0, [240, 249, 33, 255]],
  ];
  for (let i = 1; i < anchors.length; i++) {
    if (t <= anchors[i][0]) {
      const [t0, c0] = anchors[i - 1];
      const [t1, c1] = anchors[i];
      const f = (t - t0) / (t1 - t0);
      return [
        Math.round(c0[0] + f * (c1[0] - c0[0])),
        Math.round(c0[1] + f * (c1[1] - c0[1])),
        Math.round(c0[2] + f * (c1[2] - c0[2])),
        255,
      ];
    }
  }
  return anchors[anchors.length - 1][1];
}
