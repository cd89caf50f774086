/** Hand-rolled SVG renderer for log-log convergence figures. */

import { PowerFit } from "./fit";

export interface Series {
  label: string;
  h: number[];
  err: number[];
  fit: PowerFit;
  color: string;
  marker: string;
}

export interface FigureOptions {
  xlabel: string;
  ylabel: string;
  title?: string;
  width?: number;
  height?: number;
}

export const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"];
export const MARKERS = ["circle", "square", "triangle", "diamond"];

const LN10 = Math.LN10;

function fmt(v: number): string {
  return v.toFixed(2);
}

function tickLabel(mantissa: number, exponent: number): string {
  return `${mantissa}e${exponent}`;
}

/** Tick positions (in log10 units) with labels for a log axis over [a, b]. */
export function logTicks(a: number, b: number): { at: number; label: string }[] {
  const ticks: { at: number; label: string }[] = [];
  const kLo = Math.floor(a) - 1;
  const kHi = Math.ceil(b) + 1;
  const decades = Math.floor(b) - Math.ceil(a) + 1;
  const mantissas = decades >= 3 ? [1] : [1, 2, 5];
  for (let k = kLo; k <= kHi; k++) {
    for (const m of mantissas) {
      const at = k + Math.log10(m);
      if (at >= a - 1e-9 && at <= b + 1e-9) {
        ticks.push({ at, label: tickLabel(m, k) });
      }
    }
  }
  return ticks;
}

function markerShape(kind: string, x: number, y: number, color: string): string {
  const r = 4;
  switch (kind) {
    case "square":
      return `<rect x="${fmt(x - r)}" y="${fmt(y - r)}" width="${2 * r}" ` +
        `height="${2 * r}" fill="${color}"/>`;
    case "triangle":
      return `<path d="M${fmt(x)} ${fmt(y - r)} L${fmt(x + r)} ${fmt(y + r)} ` +
        `L${fmt(x - r)} ${fmt(y + r)} Z" fill="${color}"/>`;
    case "diamond":
      return `<path d="M${fmt(x)} ${fmt(y - r)} L${fmt(x + r)} ${fmt(y)} ` +
        `L${fmt(x)} ${fmt(y + r)} L${fmt(x - r)} ${fmt(y)} Z" fill="${color}"/>`;
    default:
      return `<circle cx="${fmt(x)}" cy="${fmt(y)}" r="${r}" fill="${color}"/>`;
  }
}

export function renderFigure(series: Series[], opts: FigureOptions): string {
  if (series.length === 0) throw new Error("no series to draw");
  const width = opts.width ?? 640;
  const height = opts.height ?? 480;
  const ml = 72;
  const mr = 24;
  const mt = opts.title ? 40 : 24;
  const mb = 56;
  const pw = width - ml - mr;
  const ph = height - mt - mb;

  const xs = series.flatMap((s) => s.h.map(Math.log10));
  const ys = series.flatMap((s) => s.err.map(Math.log10));
  const pad = (lo: number, hi: number): [number, number] => {
    const span = hi - lo;
    const eps = span > 1e-12 ? 0.06 * span : 0.5;
    return [lo - eps, hi + eps];
  };
  const [x0, x1] = pad(Math.min(...xs), Math.max(...xs));
  const [y0, y1] = pad(Math.min(...ys), Math.max(...ys));
  const px = (v: number) => ml + ((v - x0) / (x1 - x0)) * pw;
  const py = (v: number) => mt + ((y1 - v) / (y1 - y0)) * ph;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" ` +
      `height="${height}" viewBox="0 0 ${width} ${height}" ` +
      `font-family="sans-serif" font-size="12">`,
    `<rect width="${width}" height="${height}" fill="white"/>`,
  );

  for (const t of logTicks(x0, x1)) {
    const x = px(t.at);
    parts.push(
      `<line x1="${fmt(x)}" y1="${mt}" x2="${fmt(x)}" y2="${mt + ph}" ` +
        `stroke="#dddddd"/>`,
      `<text x="${fmt(x)}" y="${mt + ph + 16}" text-anchor="middle">` +
        `${t.label}</text>`,
    );
  }
  for (const t of logTicks(y0, y1)) {
    const y = py(t.at);
    parts.push(
      `<line x1="${ml}" y1="${fmt(y)}" x2="${ml + pw}" y2="${fmt(y)}" ` +
        `stroke="#dddddd"/>`,
      `<text x="${ml - 6}" y="${fmt(y + 4)}" text-anchor="end">` +
        `${t.label}</text>`,
    );
  }
  parts.push(
    `<rect x="${ml}" y="${mt}" width="${pw}" height="${ph}" fill="none" ` +
      `stroke="#333333"/>`,
    `<text x="${fmt(ml + pw / 2)}" y="${height - 12}" text-anchor="middle">` +
      `${opts.xlabel}</text>`,
    `<text x="16" y="${fmt(mt + ph / 2)}" text-anchor="middle" ` +
      `transform="rotate(-90 16 ${fmt(mt + ph / 2)})">${opts.ylabel}</text>`,
  );
  if (opts.title) {
    parts.push(
      `<text x="${fmt(ml + pw / 2)}" y="24" text-anchor="middle" ` +
        `font-size="15">${opts.title}</text>`,
    );
  }

  for (const s of series) {
    const hMin = Math.min(...s.h);
    const hMax = Math.max(...s.h);
    const lineY = (h: number) =>
      (s.fit.intercept + s.fit.slope * Math.log(h)) / LN10;
    parts.push(
      `<line x1="${fmt(px(Math.log10(hMin)))}" ` +
        `y1="${fmt(py(lineY(hMin)))}" ` +
        `x2="${fmt(px(Math.log10(hMax)))}" ` +
        `y2="${fmt(py(lineY(hMax)))}" ` +
        `stroke="${s.color}" stroke-dasharray="5 3"/>`,
    );
    for (let i = 0; i < s.h.length; i++) {
      parts.push(
        markerShape(s.marker, px(Math.log10(s.h[i])),
                    py(Math.log10(s.err[i])), s.color),
      );
    }
  }

  const entries = series.map((s) => `${s.label}: slope ${s.fit.slope.toFixed(2)}`);
  const legendW = 24 + 7.2 * Math.max(...entries.map((e) => e.length));
  const lx = ml + pw - legendW - 8;
  const ly = mt + 8;
  parts.push(
    `<rect x="${fmt(lx)}" y="${ly}" width="${fmt(legendW)}" ` +
      `height="${series.length * 18 + 8}" fill="white" stroke="#999999"/>`,
  );
  series.forEach((s, i) => {
    const yRow = ly + 13 + 18 * i;
    parts.push(
      markerShape(s.marker, lx + 11, yRow - 4, s.color),
      `<text x="${fmt(lx + 21)}" y="${fmt(yRow)}">${entries[i]}</text>`,
    );
  });

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
