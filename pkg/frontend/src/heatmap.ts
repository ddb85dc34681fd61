/** Colorize a belief grid into RGBA pixels: brighter = higher mass.
 *
 * Pure value transform of a service-provided grid; the console never
 * synthesizes or renormalizes belief values itself.
 */

import type { BeliefGrid } from "./api";

/** Per-cell brightness 0..255, scaled so the peak cell is full white.
 * A sqrt tone curve keeps low-mass tails visible. */
export function brightness(grid: BeliefGrid): Uint8ClampedArray {
  const out = new Uint8ClampedArray(grid.cells.length);
  let peak = 0;
  for (const v of grid.cells) if (v > peak) peak = v;
  if (peak <= 0) return out;
  for (let i = 0; i < grid.cells.length; i++) {
    out[i] = Math.round(255 * Math.sqrt(grid.cells[i] / peak));
  }
  return out;
}

/** RGBA buffer for a canvas ImageData, row 0 at the top (max y). The
 * service grid stores row 0 at min y, so rows are flipped here. */
export function colorize(grid: BeliefGrid): Uint8ClampedArray {
  const b = brightness(grid);
  const out = new Uint8ClampedArray(grid.cells.length * 4);
  for (let row = 0; row < grid.height; row++) {
    const src = (grid.height - 1 - row) * grid.width;
    for (let col = 0; col < grid.width; col++) {
      const v = b[src + col];
      const o = (row * grid.width + col) * 4;
      out[o] = v; // warm monochrome: full red,
      out[o + 1] = Math.round(v * 0.75); // softened green,
      out[o + 2] = Math.round(v * 0.3); // little blue
      out[o + 3] = v > 0 ? 200 : 0;
    }
  }
  return out;
}
