/** Least-squares power-law fits on (h, err) ladders. */

export interface PowerFit {
  /** Slope of log(err) against log(h): the observed convergence order. */
  slope: number;
  /** Intercept in natural-log coordinates: err ~ exp(intercept) * h^slope. */
  intercept: number;
}

export function powerFit(pairs: [number, number][]): PowerFit {
  if (pairs.length < 3) {
    throw new Error(`EOC fit needs at least 3 pairs, got ${pairs.length}`);
  }
  if (pairs.some(([h, e]) => !(h > 0) || !(e > 0))) {
    throw new Error("EOC fit needs positive mesh sizes and errors");
  }
  const lx = pairs.map(([h]) => Math.log(h));
  const ly = pairs.map(([, e]) => Math.log(e));
  const mx = lx.reduce((a, b) => a + b, 0) / lx.length;
  const my = ly.reduce((a, b) => a + b, 0) / ly.length;
  let sxx = 0;
  let sxy = 0;
  for (let i = 0; i < lx.length; i++) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx === 0) {
    throw new Error("EOC fit needs at least two distinct mesh sizes");
  }
  const slope = sxy / sxx;
  return { slope, intercept: my - slope * mx };
}

/** Convergence order alone, matching the solver's reported EOC. */
export function eocFit(pairs: [number, number][]): number {
  return powerFit(pairs).slope;
}
