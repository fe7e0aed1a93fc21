/**
 * Figure builders over sweep CSVs: per-method mean curve with a +-1 std band
 * across seeds, one method per legend entry.
 */

import { readFileSync, writeFileSync, mkdirSync } from "node:fs";
import path from "node:path";

import { parseBenchCsv, type BenchRow } from "./csv.js";
import {
  aggregate,
  groupByMethod,
  type XAxis,
  type YColumn,
} from "./aggregate.js";
import { renderChart, PALETTE, type BandSeries } from "./svg.js";

export interface FigureSpec {
  /** one or more sweep CSVs, concatenated */
  csvPaths: string[];
  geometry: string;
  xAxis: XAxis;
  yAxis: YColumn;
  logX?: boolean;
  logY?: boolean;
  /** +-1 std band over seeds (default true) */
  band?: boolean;
  outPath: string;
  title?: string;
}

const Y_LABEL: Record<YColumn, string> = {
  f_value: "objective f(x_k)",
  kkt: "KKT residual",
  feasibility: "feasibility defect",
};

const X_LABEL: Record<XAxis, string> = {
  iterations: "outer iteration",
  seconds: "wall time (s)",
};

export function loadRows(csvPaths: string[]): BenchRow[] {
  return csvPaths.flatMap((p) => parseBenchCsv(readFileSync(p, "utf-8")));
}

export function buildSeries(
  rows: BenchRow[],
  geometry: string,
  xAxis: XAxis,
  yAxis: YColumn,
): BandSeries[] {
  const filtered = rows.filter((r) => r.geometry === geometry);
  if (filtered.length === 0) {
    const present = [...new Set(rows.map((r) => r.geometry))].sort();
    throw new Error(
      `no rows for geometry ${geometry}; present: ${present.join(", ")}`,
    );
  }
  const series: BandSeries[] = [];
  let ci = 0;
  for (const [label, rs] of groupByMethod(filtered)) {
    const band = aggregate(rs, xAxis, yAxis);
    series.push({
      label,
      color: PALETTE[ci++ % PALETTE.length],
      x: band.x,
      mean: band.mean,
      std: band.std,
    });
  }
  return series;
}

/** Render one figure to spec.outPath; returns the SVG text. */
export function render(spec: FigureSpec): string {
  const rows = loadRows(spec.csvPaths);
  const series = buildSeries(rows, spec.geometry, spec.xAxis, spec.yAxis);
  // residual-style columns decay over decades; objectives stay O(1)
  const logY = spec.logY ?? spec.yAxis !== "f_value";
  const svg = renderChart(series, {
    title: spec.title ?? `${spec.geometry}: ${Y_LABEL[spec.yAxis]} vs ${X_LABEL[spec.xAxis]}`,
    xLabel: X_LABEL[spec.xAxis],
    yLabel: Y_LABEL[spec.yAxis],
    logX: spec.logX ?? false,
    logY,
    band: spec.band ?? true,
  });
  mkdirSync(path.dirname(spec.outPath), { recursive: true });
  writeFileSync(spec.outPath, svg);
  return svg;
}

/** The four standard panels rendered for one geometry. */
export const STANDARD_PANELS: { xAxis: XAxis; yAxis: YColumn }[] = [
  { xAxis: "iterations", yAxis: "f_value" },
  { xAxis: "seconds", yAxis: "f_value" },
  { xAxis: "seconds", yAxis: "kkt" },
  { xAxis: "seconds", yAxis: "feasibility" },
];

/**
 * Render the standard panel set for every geometry present in the sweeps.
 * Files are named {geometry}_{yaxis}_{xaxis}.svg; returns the paths written.
 */
export function standardFigures(csvPaths: string[], outDir: string): string[] {
  const rows = loadRows(csvPaths);
  const geometries = [...new Set(rows.map((r) => r.geometry))].sort();
  const written: string[] = [];
  for (const geometry of geometries) {
    for (const { xAxis, yAxis } of STANDARD_PANELS) {
      const outPath = path.join(outDir, `${geometry}_${yAxis}_${xAxis}.svg`);
      const series = buildSeries(rows, geometry, xAxis, yAxis);
      const svg = renderChart(series, {
        title: `${geometry}: ${Y_LABEL[yAxis]} vs ${X_LABEL[xAxis]}`,
        xLabel: X_LABEL[xAxis],
        yLabel: Y_LABEL[yAxis],
        logY: yAxis !== "f_value",
      });
      mkdirSync(outDir, { recursive: true });
      writeFileSync(outPath, svg);
      written.push(outPath);
    }
  }
  return written;
}

/**
 * Step-size robustness figure: median final KKT residual per method against
 * a numeric label (the step size), one CSV per labelled sweep.
 */
export function renderEtaSweep(
  entries: { label: number; csvPath: string }[],
  geometry: string,
  outPath: string,
): string {
  const perMethod = new Map<string, { eta: number; kkt: number }[]>();
  for (const { label, csvPath } of [...entries].sort((a, b) => a.label - b.label)) {
    const rows = parseBenchCsv(readFileSync(csvPath, "utf-8")).filter(
      (r) => r.geometry === geometry,
    );
    for (const [method, rs] of groupByMethod(rows)) {
      const finals: number[] = [];
      for (const seed of new Set(rs.map((r) => r.seed))) {
        const trace = rs
          .filter((r) => r.seed === seed)
          .sort((a, b) => a.outer_iter - b.outer_iter);
        finals.push(trace[trace.length - 1].kkt);
      }
      finals.sort((a, b) => a - b);
      const mid = finals.length >> 1;
      const med =
        finals.length % 2 ? finals[mid] : (finals[mid - 1] + finals[mid]) / 2;
      if (!perMethod.has(method)) perMethod.set(method, []);
      perMethod.get(method)!.push({ eta: label, kkt: med });
    }
  }
  const series: BandSeries[] = [...perMethod.keys()].sort().map((label, i) => {
    const pts = perMethod.get(label)!;
    return {
      label,
      color: PALETTE[i % PALETTE.length],
      x: pts.map((p) => p.eta),
      mean: pts.map((p) => p.kkt),
      std: pts.map(() => 0),
    };
  });
  const svg = renderChart(series, {
    title: `${geometry}: final KKT residual vs step size`,
    xLabel: "step size",
    yLabel: "median final KKT residual",
    logX: true,
    logY: true,
    band: false,
  });
  mkdirSync(path.dirname(outPath), { recursive: true });
  writeFileSync(outPath, svg);
  return svg;
}
