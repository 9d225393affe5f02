/**
 * Readers for the two CSV shapes the harness writes.
 *
 * Reports: `# key=value` meta lines, then a header row and repr-exact float
 * rows. Snapshots: a single `# t=<t> h=<h> n=<n>` line, then x[,y],u rows.
 * Parsing never recomputes anything; cells are taken at face value.
 */

import Papa from "papaparse";

export class PlotError extends Error {}

export class EmptyCsvError extends PlotError {
  constructor(path: string) {
    super(`${path}: no data rows`);
  }
}

export class SchemaMismatchError extends PlotError {
  readonly missing: string[];
  readonly unexpected: string[];

  constructor(path: string, missing: string[], unexpected: string[]) {
    super(
      `${path}: column mismatch` +
        (missing.length ? `; missing: ${missing.join(", ")}` : "") +
        (unexpected.length ? `; unexpected: ${unexpected.join(", ")}` : "")
    );
    this.missing = missing;
    this.unexpected = unexpected;
  }
}

export interface HarnessTable {
  path: string;
  meta: Record<string, string>;
  columns: string[];
  rows: number[][];
}

function toNumber(cell: string, path: string): number {
  const s = cell.trim();
  if (s === "nan") return NaN;
  if (s === "inf") return Infinity;
  if (s === "-inf") return -Infinity;
  const v = Number(s);
  if (s === "" || Number.isNaN(v)) {
    throw new PlotError(`${path}: cell ${JSON.stringify(cell)} is not a number`);
  }
  return v;
}

function parseBody(body: string, path: string): { columns: string[]; rows: number[][] } {
  const parsed = Papa.parse<string[]>(body.trim(), {
    delimiter: ",",
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    throw new PlotError(`${path}: ${parsed.errors[0].message}`);
  }
  const lines = parsed.data;
  if (lines.length === 0) {
    throw new EmptyCsvError(path);
  }
  const columns = lines[0].map((c) => c.trim());
  const rows = lines.slice(1).map((cells) => {
    if (cells.length !== columns.length) {
      throw new PlotError(
        `${path}: row has ${cells.length} cells, header has ${columns.length}`
      );
    }
    return cells.map((c) => toNumber(c, path));
  });
  if (rows.length === 0) {
    throw new EmptyCsvError(path);
  }
  return { columns, rows };
}

/** Report CSV: `# key=value` preamble then header + numeric rows. */
export function parseReport(text: string, path: string): HarnessTable {
  const meta: Record<string, string> = {};
  const lines = text.split(/\r?\n/);
  let i = 0;
  for (; i < lines.length; i++) {
    const line = lines[i];
    if (!line.startsWith("#")) break;
    const stripped = line.replace(/^#\s*/, "");
    const eq = stripped.indexOf("=");
    if (eq > 0) {
      meta[stripped.slice(0, eq)] = stripped.slice(eq + 1);
    }
  }
  const { columns, rows } = parseBody(lines.slice(i).join("\n"), path);
  return { path, meta, columns, rows };
}

/** Snapshot CSV: one `# t=<t> h=<h> n=<n>` line then coordinate rows. */
export function parseSnapshot(text: string, path: string): HarnessTable {
  const lines = text.split(/\r?\n/);
  if (lines.length === 0 || !lines[0].startsWith("# t=")) {
    throw new PlotError(`${path}: missing snapshot header line`);
  }
  const meta: Record<string, string> = {};
  for (const tok of lines[0].slice(2).split(/\s+/)) {
    const eq = tok.indexOf("=");
    if (eq > 0) meta[tok.slice(0, eq)] = tok.slice(eq + 1);
  }
  const { columns, rows } = parseBody(lines.slice(1).join("\n"), path);
  return { path, meta, columns, rows };
}

/** Exact column-set check; order does not matter, any diff is fatal. */
export function requireColumns(table: HarnessTable, required: readonly string[]): void {
  const have = new Set(table.columns);
  const want = new Set(required);
  const missing = required.filter((c) => !have.has(c));
  const unexpected = table.columns.filter((c) => !want.has(c));
  if (missing.length > 0 || unexpected.length > 0) {
    throw new SchemaMismatchError(table.path, missing, unexpected);
  }
}

export function column(table: HarnessTable, name: string): number[] {
  const idx = table.columns.indexOf(name);
  if (idx < 0) {
    throw new SchemaMismatchError(table.path, [name], []);
  }
  return table.rows.map((r) => r[idx]);
}

export function metaNumber(table: HarnessTable, key: string): number {
  const raw = table.meta[key];
  if (raw === undefined) {
    throw new PlotError(`${table.path}: meta key ${key} missing`);
  }
  const v = Number(raw);
  if (Number.isNaN(v) && raw.trim() !== "nan") {
    throw new PlotError(`${table.path}: meta ${key}=${raw} is not a number`);
  }
  return v;
}
