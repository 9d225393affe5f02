import { readFileSync } from "fs";
import { join } from "path";

import { describe, expect, it } from "vitest";

import {
  EmptyCsvError,
  PlotError,
  SchemaMismatchError,
  column,
  metaNumber,
  parseReport,
  parseSnapshot,
  requireColumns,
} from "../src/csv";

const FIXTURES = join(__dirname, "fixtures");

function fixture(name: string): string {
  return readFileSync(join(FIXTURES, name), "utf8");
}

describe("report parsing", () => {
  it("reads meta, columns and numeric rows from a real stability report", () => {
    const t = parseReport(fixture("stability.csv"), "stability.csv");
    expect(t.meta["command"]).toBe("stability");
    expect(t.meta["q"]).toBe("2.0");
    expect(t.columns).toContain("dist_w1q_closed");
    expect(t.rows).toHaveLength(4);
    const gaps = column(t, "gap");
    expect(gaps[0]).toBeCloseTo(0.4, 12);
    for (const row of t.rows) {
      for (const cell of row) expect(typeof cell).toBe("number");
    }
  });

  it("keeps nan and inf cells as their IEEE values", () => {
    const t = parseReport("# command=x\na,b\nnan,inf\n1.5,-inf\n", "inline");
    expect(Number.isNaN(t.rows[0][0])).toBe(true);
    expect(t.rows[0][1]).toBe(Infinity);
    expect(t.rows[1][1]).toBe(-Infinity);
  });

  it("rejects a header-only report", () => {
    expect(() => parseReport("# command=x\nt,sup,ratio\n", "empty.csv")).toThrow(
      EmptyCsvError
    );
  });

  it("rejects a fully empty file", () => {
    expect(() => parseReport("", "empty.csv")).toThrow(PlotError);
  });

  it("rejects non-numeric cells", () => {
    expect(() => parseReport("# command=x\na\nbogus\n", "bad.csv")).toThrow(
      /not a number/
    );
  });

  it("rejects ragged rows", () => {
    expect(() => parseReport("# command=x\na,b\n1.0\n", "ragged.csv")).toThrow(
      /cells/
    );
  });

  it("reads meta numbers with a clear error when absent", () => {
    const t = parseReport(fixture("propagation.csv"), "propagation.csv");
    expect(metaNumber(t, "gamma")).toBeCloseTo(0.25, 12);
    expect(() => metaNumber(t, "no_such_key")).toThrow(/meta key/);
  });
});

describe("snapshot parsing", () => {
  it("reads the one-line header and coordinate rows", () => {
    const t = parseSnapshot(fixture("solve_0008.csv"), "solve_0008.csv");
    expect(t.meta["n"]).toBe("1");
    expect(Number(t.meta["t"])).toBeGreaterThan(0);
    expect(t.columns).toEqual(["x", "u"]);
    expect(t.rows.length).toBeGreaterThan(100);
  });

  it("rejects a report passed as a snapshot", () => {
    expect(() => parseSnapshot(fixture("decay.csv"), "decay.csv")).toThrow(
      /snapshot header/
    );
  });
});

describe("schema checks", () => {
  it("passes on the exact column set regardless of order", () => {
    const t = parseReport("# command=x\nb,a\n1.0,2.0\n", "inline");
    expect(() => requireColumns(t, ["a", "b"])).not.toThrow();
  });

  it("reports missing and unexpected columns by name", () => {
    const t = parseReport(
      "# command=decay\nj,measure,sup_term,grad_term,ratio_renamed,excluded\n" +
        "0.3,1.0,0.1,0.1,1.0,0\n",
      "renamed.csv"
    );
    try {
      requireColumns(t, [
        "j",
        "measure",
        "sup_term",
        "grad_term",
        "energy_ratio",
        "excluded",
      ]);
      expect.unreachable("schema mismatch not raised");
    } catch (err) {
      expect(err).toBeInstanceOf(SchemaMismatchError);
      const e = err as SchemaMismatchError;
      expect(e.missing).toEqual(["energy_ratio"]);
      expect(e.unexpected).toEqual(["ratio_renamed"]);
      expect(e.message).toContain("energy_ratio");
      expect(e.message).toContain("ratio_renamed");
    }
  });
});
