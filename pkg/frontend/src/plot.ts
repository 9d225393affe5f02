/**
 * render(): read input CSVs, build the requested figure, write the SVG.
 *
 * Rendering is read-only on the inputs and atomic on the output: the file
 * is only written after the whole figure built, so a schema error or empty
 * CSV never leaves a partial image behind. Re-running overwrites in place.
 */

import { readFileSync, writeFileSync } from "fs";

import { HarnessTable, PlotError, parseReport, parseSnapshot } from "./csv";
import { FigureData, FigureKind, buildFigure } from "./figures";

export interface FigureSpec {
  kind: FigureKind;
  inputs: string[];
  output: string;
}

function readTable(path: string, kind: FigureKind): HarnessTable {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch (err) {
    throw new PlotError(`${path}: ${(err as Error).message}`);
  }
  return kind === "profiles" ? parseSnapshot(text, path) : parseReport(text, path);
}

export function render(spec: FigureSpec): FigureData {
  if (spec.inputs.length === 0) {
    throw new PlotError("no input CSVs given");
  }
  const tables = spec.inputs.map((p) => readTable(p, spec.kind));
  const fig = buildFigure(spec.kind, tables);
  writeFileSync(spec.output, fig.svg);
  return fig;
}
