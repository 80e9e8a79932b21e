// Pure raster composition: everything returns plain RGBA buffers so the
// same code is testable without a DOM and blittable to a canvas with
// putImageData.

import { CompositeFrame } from "./state.js";

export interface Raster {
  width: number;
  height: number;
  rgba: Uint8ClampedArray; // row-major, 4 bytes per pixel
}

export function blank(width: number, height: number, fill: [number, number, number]): Raster {
  const rgba = new Uint8ClampedArray(width * height * 4);
  for (let i = 0; i < width * height; i++) {
    rgba[4 * i] = fill[0];
    rgba[4 * i + 1] = fill[1];
    rgba[4 * i + 2] = fill[2];
    rgba[4 * i + 3] = 255;
  }
  return { width, height, rgba };
}

function putPixel(r: Raster, x: number, y: number, c: [number, number, number]): void {
  if (x < 0 || y < 0 || x >= r.width || y >= r.height) {
    return;
  }
  const i = 4 * (y * r.width + x);
  r.rgba[i] = c[0];
  r.rgba[i + 1] = c[1];
  r.rgba[i + 2] = c[2];
  r.rgba[i + 3] = 255;
}

// Blue (near) through green to red (far); invalid pixels render as a
// distinct dark checker so sparsity is obvious at a glance.
export function falseColorDepth(
  depthMm: number[],
  width: number,
  height: number,
  nearMm = 200,
  farMm = 800,
): Raster {
  const out = blank(width, height, [16, 16, 20]);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const d = depthMm[y * width + x];
      if (d <= 0) {
        const dark = (x + y) % 2 === 0 ? 26 : 38;
        putPixel(out, x, y, [dark, dark, dark]);
        continue;
      }
      const f = Math.min(1, Math.max(0, (d - nearMm) / (farMm - nearMm)));
      // simple three-stop ramp: blue -> green -> red
      const r = Math.round(f < 0.5 ? 0 : (f - 0.5) * 2 * 255);
      const g = Math.round(f < 0.5 ? f * 2 * 255 : (1 - f) * 2 * 255);
      const b = Math.round(f < 0.5 ? (1 - f * 2) * 255 : 0);
      putPixel(out, x, y, [r, g, b]);
    }
  }
  return out;
}

// 4-connectivity outline, same boundary rule the perception layer uses.
export function overlayMaskOutline(
  raster: Raster,
  mask: number[],
  color: [number, number, number] = [255, 255, 255],
): void {
  const { width, height } = raster;
  const at = (x: number, y: number): number =>
    x < 0 || y < 0 || x >= width || y >= height ? 0 : mask[y * width + x];
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      if (!at(x, y)) {
        continue;
      }
      if (!at(x - 1, y) || !at(x + 1, y) || !at(x, y - 1) || !at(x, y + 1)) {
        putPixel(raster, x, y, color);
      }
    }
  }
}

export function drawCrosshair(
  raster: Raster,
  u: number,
  v: number,
  arm = 5,
  color: [number, number, number] = [255, 240, 60],
): void {
  const cx = Math.round(u);
  const cy = Math.round(v);
  for (let d = -arm; d <= arm; d++) {
    putPixel(raster, cx + d, cy, color);
    putPixel(raster, cx, cy + d, color);
  }
}

export function composeFrame(composite: CompositeFrame): Raster {
  const raster = falseColorDepth(composite.depthMm, composite.width, composite.height);
  overlayMaskOutline(raster, composite.mask);
  if (composite.grasp !== null) {
    drawCrosshair(raster, composite.grasp.u, composite.grasp.v);
  }
  return raster;
}

export const PROGRESS_BG: [number, number, number] = [30, 30, 34];
export const PROGRESS_BORDER: [number, number, number] = [200, 200, 200];
export const PROGRESS_FILL: [number, number, number] = [80, 200, 120];

// The hold-timer bar: a 1-px border with the interior filling left to
// right as the distance condition holds toward the 2 s dispatch.
export function renderProgressBar(fraction: number, width = 120, height = 12): Raster {
  const f = Math.min(1, Math.max(0, fraction));
  const out = blank(width, height, PROGRESS_BG);
  for (let x = 0; x < width; x++) {
    putPixel(out, x, 0, PROGRESS_BORDER);
    putPixel(out, x, height - 1, PROGRESS_BORDER);
  }
  for (let y = 0; y < height; y++) {
    putPixel(out, 0, y, PROGRESS_BORDER);
    putPixel(out, width - 1, y, PROGRESS_BORDER);
  }
  const innerWidth = width - 2;
  const filled = Math.round(innerWidth * f);
  for (let y = 1; y < height - 1; y++) {
    for (let x = 1; x <= filled; x++) {
      putPixel(out, x, y, PROGRESS_FILL);
    }
  }
  return out;
}

// Torque strip chart over the ring buffer window.
export function renderTorqueStrip(
  samples: { t: number; tau: number }[],
  width = 300,
  height = 60,
  tauLimit = 2.35,
): Raster {
  const out = blank(width, height, [20, 20, 24]);
  const mid = Math.floor(height / 2);
  for (let x = 0; x < width; x++) {
    putPixel(out, x, mid, [60, 60, 66]);
  }
  if (samples.length < 2) {
    return out;
  }
  const t0 = samples[0].t;
  const t1 = samples[samples.length - 1].t;
  const span = Math.max(1e-9, t1 - t0);
  for (const s of samples) {
    const x = Math.round(((s.t - t0) / span) * (width - 1));
    const y = Math.round(mid - (s.tau / tauLimit) * (mid - 2));
    putPixel(out, x, y, [240, 120, 90]);
  }
  return out;
}
