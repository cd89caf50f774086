/**
 * Reader for the solver's convergence CSV files.
 *
 * The layout is: a leading `# key=value ...` comment, a header row that
 * always includes an `h` column, numeric data rows (coarse to fine), optional
 * `# failed h=...` comments for cells that did not produce a row, and an
 * optional trailing `EOC` row whose cells align with the header columns
 * (blank where a slope makes no sense, e.g. under `h` itself).
 */

import * as fs from "node:fs";

export class SchemaError extends Error {}

export interface ConvergenceTable {
  meta: Record<string, string>;
  columns: string[];
  rows: number[][];
  eoc: (number | null)[] | null;
  failures: string[];
  source: string;
}

function parseMeta(comment: string, meta: Record<string, string>): void {
  for (const token of comment.split(/\s+/)) {
    const eq = token.indexOf("=");
    if (eq > 0) meta[token.slice(0, eq)] = token.slice(eq + 1);
  }
}

function parseCell(cell: string, line: number, source: string): number {
  const value = Number(cell);
  if (cell.trim() === "" || !Number.isFinite(value)) {
    throw new SchemaError(
      `${source}:${line}: expected a number, got ${JSON.stringify(cell)}`,
    );
  }
  return value;
}

export function parseTable(text: string, source = "<csv>"): ConvergenceTable {
  const meta: Record<string, string> = {};
  const failures: string[] = [];
  let columns: string[] | null = null;
  const rows: number[][] = [];
  let eoc: (number | null)[] | null = null;

  const lines = text.split("\n");
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].replace(/\r$/, "");
    if (line.trim() === "") continue;
    if (line.startsWith("#")) {
      const body = line.replace(/^#\s*/, "");
      if (body.startsWith("failed")) failures.push(body);
      else parseMeta(body, meta);
      continue;
    }
    const cells = line.split(",");
    if (columns === null) {
      columns = cells.map((c) => c.trim());
      if (!columns.includes("h")) {
        throw new SchemaError(
          `${source}: header has no "h" column (got: ${columns.join(", ")})`,
        );
      }
      continue;
    }
    if (cells.length !== columns.length) {
      throw new SchemaError(
        `${source}:${i + 1}: row has ${cells.length} cells, header has ` +
          `${columns.length}`,
      );
    }
    if (cells[0] === "EOC") {
      eoc = cells.map((c, k) =>
        k === 0 || c.trim() === "" ? null : parseCell(c, i + 1, source),
      );
      continue;
    }
    rows.push(cells.map((c) => parseCell(c, i + 1, source)));
  }
  if (columns === null) {
    throw new SchemaError(`${source}: no header row found`);
  }
  return { meta, columns, rows, eoc, failures, source };
}

export function readTable(path: string): ConvergenceTable {
  return parseTable(fs.readFileSync(path, "utf8"), path);
}

/** Values of a named column across the data rows; throws naming the column. */
export function column(table: ConvergenceTable, name: string): number[] {
  const k = table.columns.indexOf(name);
  if (k < 0) {
    throw new SchemaError(
      `column "${name}" not found in ${table.source}; header has: ` +
        table.columns.join(", "),
    );
  }
  return table.rows.map((row) => row[k]);
}

/** The EOC-trailer value for a named column, if the table carries one. */
export function eocValue(table: ConvergenceTable, name: string): number | null {
  if (table.eoc === null) return null;
  const k = table.columns.indexOf(name);
  return k < 0 ? null : table.eoc[k];
}
