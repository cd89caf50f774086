import * as path from "node:path";

import { describe, expect, it } from "vitest";

import { column, eocValue, parseTable, readTable, SchemaError } from "../src/csv";

const DATA = path.join(__dirname, "..", "testdata");

describe("parseTable", () => {
  it("reads a solver-produced file end to end", () => {
    const t = readTable(path.join(DATA, "bounded_support_s05.csv"));
    expect(t.meta).toEqual({ experiment: "bounded-support", n: "2", s: "0.5" });
    expect(t.columns).toEqual([
      "h", "H", "Ndof", "u1_hs_bound", "u2_energy_hs", "combined_hs",
    ]);
    expect(t.rows).toHaveLength(4);
    expect(t.rows[0][0]).toBeCloseTo(0.1732050807569, 12);
    expect(t.eoc).not.toBeNull();
    expect(t.eoc![0]).toBeNull();
    expect(t.eoc![4]).toBeCloseTo(0.5408585100434, 12);
  });

  it("collects failed-cell comments without treating them as rows", () => {
    const t = parseTable(
      "# experiment=getoor-1d n=1 s=0.5\n" +
        "h,H,Ndof,energy_hs\n" +
        "0.25,1.0,17,0.11\n" +
        "# failed h=0.125: SolverError: synthetic\n" +
        "0.0625,1.3,65,0.08\n",
    );
    expect(t.rows).toHaveLength(2);
    expect(t.failures).toEqual(["failed h=0.125: SolverError: synthetic"]);
    expect(t.eoc).toBeNull();
  });

  it("rejects a header without h", () => {
    expect(() => parseTable("a,b\n1,2\n", "x.csv")).toThrow(SchemaError);
    expect(() => parseTable("a,b\n1,2\n", "x.csv")).toThrow(/no "h" column/);
  });

  it("rejects ragged and non-numeric rows with the line number", () => {
    expect(() => parseTable("h,e\n1,2,3\n", "x.csv")).toThrow(/x.csv:2/);
    expect(() => parseTable("h,e\n1,abc\n", "x.csv")).toThrow(/"abc"/);
  });

  it("rejects an empty file", () => {
    expect(() => parseTable("", "x.csv")).toThrow(/no header/);
  });
});

describe("column selection", () => {
  const t = parseTable("h,e\n0.5,1.0\n0.25,0.5\n");

  it("extracts by name", () => {
    expect(column(t, "e")).toEqual([1.0, 0.5]);
  });

  it("names the missing column", () => {
    expect(() => column(t, "bogus")).toThrow(/column "bogus" not found/);
    expect(() => column(t, "bogus")).toThrow(/header has: h, e/);
  });

  it("eocValue is null without a trailer", () => {
    expect(eocValue(t, "e")).toBeNull();
  });
});
