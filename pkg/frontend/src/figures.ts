/**
 * Figure builders: one per report kind, plus snapshot profiles.
 *
 * Everything drawn comes straight out of the CSV cells and meta entries;
 * the only arithmetic here is evaluating overlay curves whose constants the
 * harness already fitted and recorded.
 */

import {
  HarnessTable,
  PlotError,
  column,
  metaNumber,
  requireColumns,
} from "./csv";
import { AxesSpec, Series, renderScene } from "./svg";

export type FigureKind = "stability" | "propagation" | "smoothing" | "decay" | "profiles";

export const FIGURE_KINDS: FigureKind[] = [
  "stability",
  "propagation",
  "smoothing",
  "decay",
  "profiles",
];

export const REPORT_SCHEMAS: Record<Exclude<FigureKind, "profiles">, readonly string[]> = {
  stability: [
    "p_i",
    "gap",
    "dist_w1q_closed",
    "dist_values_closed",
    "dist_w1q_solver",
    "dist_values_solver",
  ],
  propagation: ["t", "dead_zone_radius", "recession"],
  smoothing: ["t", "sup", "ratio"],
  decay: ["j", "measure", "sup_term", "grad_term", "energy_ratio", "excluded"],
};

export interface FigureData {
  axes: AxesSpec;
  series: Series[];
  svg: string;
}

function finish(axes: AxesSpec, series: Series[]): FigureData {
  return { axes, series, svg: renderScene(axes, series) };
}

function sortedByX(label: string, x: number[], y: number[], kind: Series["kind"]): Series {
  const order = x.map((_, i) => i).sort((a, b) => x[a] - x[b]);
  return {
    label,
    x: order.map((i) => x[i]),
    y: order.map((i) => y[i]),
    kind,
  };
}

function stabilityFigure(table: HarnessTable): FigureData {
  requireColumns(table, REPORT_SCHEMAS.stability);
  const gap = column(table, "gap");
  const series: Series[] = [];
  for (const [label, col] of [
    ["closed form", "dist_w1q_closed"],
    ["solver", "dist_w1q_solver"],
  ] as const) {
    const vals = column(table, col);
    if (vals.some((v) => Number.isFinite(v))) {
      series.push(sortedByX(label, gap, vals, "both"));
    }
  }
  if (series.length === 0) {
    throw new PlotError(`${table.path}: both distance columns are all nan`);
  }
  return finish(
    {
      title: "Stability under exponent perturbation",
      xLabel: "|p_i - p|",
      yLabel: "space-time Sobolev distance",
      xLog: true,
      yLog: true,
    },
    series
  );
}

function propagationFigure(table: HarnessTable): FigureData {
  requireColumns(table, REPORT_SCHEMAS.propagation);
  const t = column(table, "t");
  const radius = column(table, "dead_zone_radius");
  const R = metaNumber(table, "R");
  const c = metaNumber(table, "envelope_c");
  const gamma = metaNumber(table, "gamma");
  const floor = t.map((ti) => R - c * Math.pow(ti, gamma));
  return finish(
    {
      title: "Dead-zone radius and the recession floor",
      xLabel: "t",
      yLabel: "dead-zone radius",
    },
    [
      sortedByX("measured radius", t, radius, "both"),
      sortedByX(`R - c t^gamma (gamma = ${gamma})`, t, floor, "dashed"),
    ]
  );
}

function smoothingFigure(table: HarnessTable): FigureData {
  requireColumns(table, REPORT_SCHEMAS.smoothing);
  const t = column(table, "t");
  const ratio = column(table, "ratio");
  const mean = ratio.reduce((a, b) => a + b, 0) / ratio.length;
  return finish(
    {
      title: "Scaled sup-norm ratio",
      xLabel: "t",
      yLabel: "sup u(t) * t^alpha / mass^sigma",
      xLog: true,
    },
    [
      sortedByX("measured ratio", t, ratio, "both"),
      { label: "mean", x: [Math.min(...t), Math.max(...t)], y: [mean, mean], kind: "dashed" },
    ]
  );
}

function decayFigure(table: HarnessTable): FigureData {
  requireColumns(table, REPORT_SCHEMAS.decay);
  const j = column(table, "j");
  const measure = column(table, "measure");
  const excluded = column(table, "excluded");
  const slope = metaNumber(table, "expected_slope");
  const jIn: number[] = [];
  const mIn: number[] = [];
  for (let i = 0; i < j.length; i++) {
    if (excluded[i] === 0 && measure[i] > 0) {
      jIn.push(j[i]);
      mIn.push(measure[i]);
    }
  }
  if (jIn.length === 0) {
    throw new PlotError(`${table.path}: every dyadic level is excluded`);
  }
  const ref = jIn.map((ji) => mIn[0] * Math.pow(ji / jIn[0], slope));
  return finish(
    {
      title: "Level-set measure decay",
      xLabel: "level j",
      yLabel: "space-time measure of {j <= u < 2j}",
      xLog: true,
      yLog: true,
    },
    [
      sortedByX("measured", jIn, mIn, "both"),
      sortedByX(`reference slope ${slope}`, jIn, ref, "dashed"),
    ]
  );
}

function profilesFigure(tables: HarnessTable[]): FigureData {
  const series: Series[] = [];
  for (const table of tables) {
    if (table.meta["n"] !== "1") {
      throw new PlotError(
        `${table.path}: profiles need n = 1 snapshots, got n = ${table.meta["n"] ?? "?"}`
      );
    }
    requireColumns(table, ["x", "u"]);
    const t = Number(table.meta["t"]);
    const label = Number.isFinite(t) ? `t = ${parseFloat(t.toPrecision(3))}` : table.path;
    series.push({ label, x: column(table, "x"), y: column(table, "u"), kind: "line" });
  }
  return finish(
    { title: "Solution profiles", xLabel: "x", yLabel: "u(x, t)" },
    series
  );
}

export function buildFigure(kind: FigureKind, tables: HarnessTable[]): FigureData {
  if (kind === "profiles") {
    return profilesFigure(tables);
  }
  if (tables.length !== 1) {
    throw new PlotError(`${kind} takes exactly one input CSV, got ${tables.length}`);
  }
  switch (kind) {
    case "stability":
      return stabilityFigure(tables[0]);
    case "propagation":
      return propagationFigure(tables[0]);
    case "smoothing":
      return smoothingFigure(tables[0]);
    case "decay":
      return decayFigure(tables[0]);
  }
}
