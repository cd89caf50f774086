#!/usr/bin/env node
/**
 * plotkit <config.json>
 *
 * Reads convergence CSV files, fits the observed order of each requested
 * error column, renders a log-log SVG figure, and prints one
 * `series <label> slope <value>` line per series.  When a CSV carries an
 * EOC trailer row for a requested column, the recomputed fit must agree
 * with it to 1e-6; any schema or consistency problem exits nonzero.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { column, eocValue, readTable } from "./csv";
import { eocFit, powerFit } from "./fit";
import { MARKERS, PALETTE, renderFigure, Series } from "./render";

export interface SeriesSpec {
  csv: string;
  column: string;
  label?: string;
  color?: string;
  marker?: string;
}

export interface PlotSpec {
  series: SeriesSpec[];
  out: string;
  xlabel?: string;
  ylabel?: string;
  title?: string;
}

const EOC_AGREEMENT = 1e-6;

function fail(message: string): never {
  throw new Error(message);
}

export function parseSpec(raw: unknown, source: string): PlotSpec {
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    fail(`${source}: config must be a JSON object`);
  }
  const obj = raw as Record<string, unknown>;
  if (!Array.isArray(obj.series) || obj.series.length === 0) {
    fail(`${source}: "series" must be a non-empty array`);
  }
  if (typeof obj.out !== "string" || obj.out === "") {
    fail(`${source}: "out" must name the output SVG file`);
  }
  const series = obj.series.map((entry, i) => {
    if (typeof entry !== "object" || entry === null) {
      fail(`${source}: series[${i}] must be an object`);
    }
    const e = entry as Record<string, unknown>;
    for (const key of ["csv", "column"] as const) {
      if (typeof e[key] !== "string" || e[key] === "") {
        fail(`${source}: series[${i}].${key} must be a non-empty string`);
      }
    }
    for (const key of ["label", "color", "marker"] as const) {
      if (e[key] !== undefined && typeof e[key] !== "string") {
        fail(`${source}: series[${i}].${key} must be a string`);
      }
    }
    return e as unknown as SeriesSpec;
  });
  for (const key of ["xlabel", "ylabel", "title"] as const) {
    if (obj[key] !== undefined && typeof obj[key] !== "string") {
      fail(`${source}: "${key}" must be a string`);
    }
  }
  return {
    series,
    out: obj.out,
    xlabel: obj.xlabel as string | undefined,
    ylabel: obj.ylabel as string | undefined,
    title: obj.title as string | undefined,
  };
}

export function buildSeries(spec: PlotSpec, baseDir: string): Series[] {
  return spec.series.map((entry, i) => {
    const csvPath = path.resolve(baseDir, entry.csv);
    const table = readTable(csvPath);
    const h = column(table, "h");
    const err = column(table, entry.column);
    const pairs = h.map((hv, k) => [hv, err[k]] as [number, number]);
    const fit = powerFit(pairs);
    const declared = eocValue(table, entry.column);
    if (declared !== null && Math.abs(declared - fit.slope) > EOC_AGREEMENT) {
      fail(
        `${csvPath}: EOC row declares ${declared} for column ` +
          `"${entry.column}" but the recomputed fit is ${fit.slope}`,
      );
    }
    return {
      label: entry.label ?? entry.column,
      h,
      err,
      fit,
      color: entry.color ?? PALETTE[i % PALETTE.length],
      marker: entry.marker ?? MARKERS[i % MARKERS.length],
    };
  });
}

export function run(configPath: string, stdout: (line: string) => void): void {
  let raw: unknown;
  try {
    raw = JSON.parse(fs.readFileSync(configPath, "utf8"));
  } catch (err) {
    fail(`cannot read config ${configPath}: ${(err as Error).message}`);
  }
  const spec = parseSpec(raw, configPath);
  const baseDir = path.dirname(path.resolve(configPath));
  const series = buildSeries(spec, baseDir);
  const svg = renderFigure(series, {
    xlabel: spec.xlabel ?? "h",
    ylabel: spec.ylabel ?? "error",
    title: spec.title,
  });
  const outPath = path.resolve(baseDir, spec.out);
  fs.writeFileSync(outPath, svg);
  for (const s of series) {
    stdout(`series ${s.label} slope ${s.fit.slope.toExponential(12)}`);
  }
  stdout(`wrote ${outPath}`);
}

export function main(argv: string[]): number {
  if (argv.length !== 1 || argv[0] === "-h" || argv[0] === "--help") {
    console.error("usage: plotkit <config.json>");
    return argv.length === 1 ? 0 : 1;
  }
  try {
    run(argv[0], (line) => console.log(line));
    return 0;
  } catch (err) {
    console.error(`plotkit: ${(err as Error).message}`);
    return 1;
  }
}

/* istanbul ignore next */
if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}

export { eocFit };
