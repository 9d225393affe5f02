/**
 * Self-contained SVG scene renderer: axes, ticks, series, legend.
 *
 * Deliberately tiny; no DOM, no canvas, no plotting dependency. Output is a
 * standalone vector file a journal or a README can embed directly.
 */

import { PlotError } from "./csv";

export type SeriesKind = "line" | "scatter" | "both" | "dashed";

export interface Series {
  label: string;
  x: number[];
  y: number[];
  kind: SeriesKind;
  color?: string;
}

export interface AxesSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  xLog?: boolean;
  yLog?: boolean;
}

const W = 640;
const H = 440;
const MARGIN = { left: 72, right: 24, top: 42, bottom: 52 };
const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#7f7f7f"];

function esc(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

interface Scale {
  (v: number): number;
  ticks: number[];
}

function finite(vals: number[], log: boolean): number[] {
  return vals.filter((v) => Number.isFinite(v) && (!log || v > 0));
}

function linearTicks(lo: number, hi: number): number[] {
  const span = hi - lo;
  const raw = span / 5;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const norm = raw / mag;
  const step = (norm >= 5 ? 5 : norm >= 2 ? 2 : 1) * mag;
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + 1e-12 * span; v += step) {
    ticks.push(Math.abs(v) < 1e-12 * span ? 0 : v);
  }
  return ticks;
}

function logTicks(lo: number, hi: number): number[] {
  const dlo = Math.ceil(Math.log10(lo) - 1e-9);
  const dhi = Math.floor(Math.log10(hi) + 1e-9);
  const stride = dhi - dlo > 8 ? 2 : 1;
  const ticks: number[] = [];
  for (let d = dlo; d <= dhi; d += stride) ticks.push(Math.pow(10, d));
  return ticks;
}

function makeScale(values: number[], log: boolean, outLo: number, outHi: number): Scale {
  const vals = finite(values, log);
  if (vals.length === 0) {
    throw new PlotError(log ? "no positive finite data for a log axis" : "no finite data");
  }
  let lo = Math.min(...vals);
  let hi = Math.max(...vals);
  if (log) {
    const pad = hi / lo > 1 + 1e-12 ? Math.pow(hi / lo, 0.05) : 2;
    lo /= pad;
    hi *= pad;
    const llo = Math.log10(lo);
    const lhi = Math.log10(hi);
    const f = (v: number) => outLo + ((Math.log10(v) - llo) / (lhi - llo)) * (outHi - outLo);
    const scale = f as Scale;
    scale.ticks = logTicks(lo, hi);
    return scale;
  }
  const pad = hi > lo ? 0.05 * (hi - lo) : Math.max(1e-12, Math.abs(hi) * 0.5, 0.5);
  lo -= pad;
  hi += pad;
  const f = (v: number) => outLo + ((v - lo) / (hi - lo)) * (outHi - outLo);
  const scale = f as Scale;
  scale.ticks = linearTicks(lo, hi);
  return scale;
}

function tickText(v: number, log: boolean): string {
  if (v === 0) return "0";
  const d = Math.log10(Math.abs(v));
  if (log || d >= 5 || d < -3) {
    const exp = Math.round(Math.log10(Math.abs(v)));
    if (log && Math.abs(v - Math.pow(10, exp)) < 1e-9 * Math.abs(v)) {
      return `1e${exp}`;
    }
    return v.toExponential(1);
  }
  return parseFloat(v.toPrecision(4)).toString();
}

export function renderScene(axes: AxesSpec, series: Series[]): string {
  if (series.length === 0) {
    throw new PlotError("nothing to draw: no series");
  }
  const xAll = series.flatMap((s) => s.x);
  const yAll = series.flatMap((s) => s.y);
  const sx = makeScale(xAll, !!axes.xLog, MARGIN.left, W - MARGIN.right);
  const sy = makeScale(yAll, !!axes.yLog, H - MARGIN.bottom, MARGIN.top);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" ` +
      `viewBox="0 0 ${W} ${H}" font-family="Helvetica, Arial, sans-serif">`
  );
  parts.push(`<rect width="${W}" height="${H}" fill="white"/>`);
  parts.push(
    `<text x="${W / 2}" y="24" text-anchor="middle" font-size="15">${esc(axes.title)}</text>`
  );

  // frame and grid
  const x0 = MARGIN.left;
  const x1 = W - MARGIN.right;
  const y0 = H - MARGIN.bottom;
  const y1 = MARGIN.top;
  for (const t of sx.ticks) {
    const px = sx(t);
    parts.push(
      `<line x1="${px.toFixed(2)}" y1="${y0}" x2="${px.toFixed(2)}" y2="${y1}" ` +
        `stroke="#e0e0e0" stroke-width="1"/>`
    );
    parts.push(
      `<text x="${px.toFixed(2)}" y="${y0 + 18}" text-anchor="middle" font-size="11">` +
        `${esc(tickText(t, !!axes.xLog))}</text>`
    );
  }
  for (const t of sy.ticks) {
    const py = sy(t);
    parts.push(
      `<line x1="${x0}" y1="${py.toFixed(2)}" x2="${x1}" y2="${py.toFixed(2)}" ` +
        `stroke="#e0e0e0" stroke-width="1"/>`
    );
    parts.push(
      `<text x="${x0 - 6}" y="${(py + 4).toFixed(2)}" text-anchor="end" font-size="11">` +
        `${esc(tickText(t, !!axes.yLog))}</text>`
    );
  }
  parts.push(
    `<rect x="${x0}" y="${y1}" width="${x1 - x0}" height="${y0 - y1}" ` +
      `fill="none" stroke="#333" stroke-width="1"/>`
  );
  parts.push(
    `<text x="${(x0 + x1) / 2}" y="${H - 14}" text-anchor="middle" font-size="13">` +
      `${esc(axes.xLabel)}</text>`
  );
  parts.push(
    `<text x="20" y="${(y0 + y1) / 2}" text-anchor="middle" font-size="13" ` +
      `transform="rotate(-90 20 ${(y0 + y1) / 2})">${esc(axes.yLabel)}</text>`
  );

  // series
  series.forEach((s, i) => {
    const color = s.color ?? PALETTE[i % PALETTE.length];
    const pts: string[] = [];
    for (let k = 0; k < s.x.length; k++) {
      const vx = s.x[k];
      const vy = s.y[k];
      if (!Number.isFinite(vx) || !Number.isFinite(vy)) continue;
      if (axes.xLog && vx <= 0) continue;
      if (axes.yLog && vy <= 0) continue;
      pts.push(`${sx(vx).toFixed(2)},${sy(vy).toFixed(2)}`);
    }
    if (pts.length === 0) return;
    if (s.kind !== "scatter") {
      const dash = s.kind === "dashed" ? ` stroke-dasharray="6 4"` : "";
      parts.push(
        `<polyline points="${pts.join(" ")}" fill="none" stroke="${color}" ` +
          `stroke-width="1.6"${dash}/>`
      );
    }
    if (s.kind === "scatter" || s.kind === "both") {
      for (const p of pts) {
        const [px, py] = p.split(",");
        parts.push(`<circle cx="${px}" cy="${py}" r="3" fill="${color}"/>`);
      }
    }
  });

  // legend
  const lx = x1 - 190;
  let ly = y1 + 14;
  for (let i = 0; i < series.length; i++) {
    const s = series[i];
    const color = s.color ?? PALETTE[i % PALETTE.length];
    const dash = s.kind === "dashed" ? ` stroke-dasharray="6 4"` : "";
    parts.push(
      `<line x1="${lx}" y1="${ly - 4}" x2="${lx + 26}" y2="${ly - 4}" ` +
        `stroke="${color}" stroke-width="2"${dash}/>`
    );
    parts.push(`<text x="${lx + 32}" y="${ly}" font-size="12">${esc(s.label)}</text>`);
    ly += 17;
  }

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
