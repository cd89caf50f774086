export { column, eocValue, parseTable, readTable, SchemaError } from "./csv";
export type { ConvergenceTable } from "./csv";
export { eocFit, powerFit } from "./fit";
export type { PowerFit } from "./fit";
export { logTicks, MARKERS, PALETTE, renderFigure } from "./render";
export type { FigureOptions, Series } from "./render";
export { buildSeries, main, parseSpec, run } from "./cli";
export type { PlotSpec, SeriesSpec } from "./cli";
