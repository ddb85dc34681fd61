import { describe, expect, it } from "vitest";

import { brightness, colorize } from "../src/heatmap";

const grid = (width: number, height: number, cells: number[]) => ({ width, height, cells });

describe("brightness", () => {
  it("maps zero mass to black and the peak cell to 255", () => {
    const b = brightness(grid(2, 2, [0, 0.1, 0.4, 0]));
    expect(b[0]).toBe(0);
    expect(b[3]).toBe(0);
    expect(b[2]).toBe(255);
  });

  it("is monotone: more mass renders brighter", () => {
    const b = brightness(grid(4, 1, [0.05, 0.1, 0.2, 0.4]));
    expect(b[0]).toBeLessThan(b[1]);
    expect(b[1]).toBeLessThan(b[2]);
    expect(b[2]).toBeLessThan(b[3]);
  });

  it("handles an all-zero grid without dividing by zero", () => {
    expect(Array.from(brightness(grid(2, 1, [0, 0])))).toEqual([0, 0]);
  });
});

describe("colorize", () => {
  it("emits one RGBA quad per cell", () => {
    expect(colorize(grid(3, 2, [0, 0.1, 0, 0.2, 0, 0.3]))).toHaveLength(24);
  });

  it("puts the max-y service row at the top of the image", () => {
    // row 0 of the grid is min y; the peak there must land on image row 1
    const px = colorize(grid(2, 2, [1.0, 0, 0, 0]));
    const red = (row: number, col: number) => px[(row * 2 + col) * 4];
    expect(red(1, 0)).toBe(255);
    expect(red(0, 0)).toBe(0);
  });

  it("makes zero cells fully transparent", () => {
    const px = colorize(grid(2, 1, [0, 0.5]));
    expect(px[3]).toBe(0);
    expect(px[7]).toBe(200);
  });
});
