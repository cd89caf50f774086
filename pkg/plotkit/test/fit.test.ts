import { describe, expect, it } from "vitest";

import { eocFit, powerFit } from "../src/fit";

describe("eocFit", () => {
  it("recovers an exact power law", () => {
    const pairs: [number, number][] = [0.2, 0.1, 0.05, 0.025].map((h) => [
      h,
      3.0 * h,
    ]);
    expect(eocFit(pairs)).toBeCloseTo(1.0, 12);
  });

  it("recovers a half-order law", () => {
    const pairs: [number, number][] = [0.2, 0.1, 0.05].map((h) => [
      h,
      Math.sqrt(h),
    ]);
    expect(eocFit(pairs)).toBeCloseTo(0.5, 12);
  });

  it("matches the solver's fit on the reference ladder to 1e-12", () => {
    // frozen against the Python implementation of the same formula
    const pairs: [number, number][] = [
      [0.045, 6.423e-2],
      [0.037, 5.742e-2],
      [0.03, 5.196e-2],
      [0.025, 4.799e-2],
    ];
    expect(eocFit(pairs)).toBeCloseTo(0.49414085405231556, 12);
    expect(eocFit(pairs).toFixed(2)).toBe("0.49");
  });

  it("rejects short or non-positive input", () => {
    expect(() => eocFit([[0.1, 1], [0.05, 0.5]])).toThrow(/at least 3/);
    expect(() =>
      eocFit([[0.1, 1], [0.05, 0.5], [-0.02, 0.2]]),
    ).toThrow(/positive/);
    expect(() =>
      eocFit([[0.1, 1], [0.1, 0.5], [0.1, 0.2]]),
    ).toThrow(/distinct/);
  });

  it("returns an intercept that reproduces the data for an exact law", () => {
    const fit = powerFit([
      [0.2, 2.0 * Math.pow(0.2, 0.7)],
      [0.1, 2.0 * Math.pow(0.1, 0.7)],
      [0.05, 2.0 * Math.pow(0.05, 0.7)],
    ]);
    expect(fit.slope).toBeCloseTo(0.7, 12);
    expect(Math.exp(fit.intercept)).toBeCloseTo(2.0, 12);
  });
});
