/**
 * Seed aggregation for benchmark traces.
 *
 * Iteration plots align seeds on the outer iteration index; a seed that
 * stopped early (or recorded a thinned trace) simply drops out of the mean at
 * the indices it did not record.  Time plots step-interpolate every seed onto
 * the union of all recorded times, so each seed contributes to every sample:
 * a solver sits at its last iterate until the next one lands, which is
 * exactly what a step function encodes.
 */

import type { BenchRow } from "./csv.js";

export type YColumn = "f_value" | "kkt" | "feasibility";
export type XAxis = "iterations" | "seconds";

export interface SeriesBand {
  /** x samples, ascending (iteration index or seconds) */
  x: number[];
  mean: number[];
  /** population standard deviation across seeds at each sample */
  std: number[];
  /** number of seeds contributing at each sample */
  nSeeds: number[];
}

export function mean(vals: number[]): number {
  let s = 0;
  for (const v of vals) s += v;
  return s / vals.length;
}

export function popStd(vals: number[]): number {
  const m = mean(vals);
  let s = 0;
  for (const v of vals) s += (v - m) * (v - m);
  return Math.sqrt(s / vals.length);
}

/** Band edges mean +- 1 std, computed pointwise. */
export function bandEndpoints(band: SeriesBand): { upper: number[]; lower: number[] } {
  return {
    upper: band.mean.map((m, i) => m + band.std[i]),
    lower: band.mean.map((m, i) => m - band.std[i]),
  };
}

/** Group rows by method label, methods sorted for a stable legend order. */
export function groupByMethod(rows: BenchRow[]): Map<string, BenchRow[]> {
  const out = new Map<string, BenchRow[]>();
  for (const label of [...new Set(rows.map((r) => r.method))].sort()) {
    out.set(label, []);
  }
  for (const r of rows) out.get(r.method)!.push(r);
  return out;
}

function bySeed(rows: BenchRow[]): Map<number, BenchRow[]> {
  const out = new Map<number, BenchRow[]>();
  for (const seed of [...new Set(rows.map((r) => r.seed))].sort((a, b) => a - b)) {
    out.set(seed, []);
  }
  for (const r of rows) out.get(r.seed)!.push(r);
  return out;
}

/** Mean/std of column y across seeds at each recorded outer iteration. */
export function aggregateByIteration(rows: BenchRow[], y: YColumn): SeriesBand {
  const seeds = bySeed(rows);
  const perSeed = new Map<number, Map<number, number>>();
  for (const [seed, rs] of seeds) {
    perSeed.set(seed, new Map(rs.map((r) => [r.outer_iter, r[y]])));
  }
  const iters = [...new Set(rows.map((r) => r.outer_iter))].sort((a, b) => a - b);
  const band: SeriesBand = { x: [], mean: [], std: [], nSeeds: [] };
  for (const it of iters) {
    const vals: number[] = [];
    for (const m of perSeed.values()) {
      const v = m.get(it);
      if (v !== undefined) vals.push(v);
    }
    band.x.push(it);
    band.mean.push(mean(vals));
    band.std.push(popStd(vals));
    band.nSeeds.push(vals.length);
  }
  return band;
}

/**
 * Value of the step function through (times, vals) at time t: the value at
 * the last sample time <= t, or the first value for t before the trace.
 */
export function stepInterp(times: number[], vals: number[], t: number): number {
  let v = vals[0];
  for (let i = 0; i < times.length; i++) {
    if (times[i] <= t) v = vals[i];
    else break;
  }
  return v;
}

/** Mean/std of column y across seeds on the union grid of recorded times. */
export function aggregateByTime(rows: BenchRow[], y: YColumn): SeriesBand {
  const seeds = bySeed(rows);
  const traces: { times: number[]; vals: number[] }[] = [];
  for (const rs of seeds.values()) {
    const sorted = [...rs].sort((a, b) => a.cum_seconds - b.cum_seconds);
    traces.push({
      times: sorted.map((r) => r.cum_seconds),
      vals: sorted.map((r) => r[y]),
    });
  }
  const grid = [...new Set(rows.map((r) => r.cum_seconds))].sort((a, b) => a - b);
  const band: SeriesBand = { x: [], mean: [], std: [], nSeeds: [] };
  for (const t of grid) {
    const vals = traces.map((tr) => stepInterp(tr.times, tr.vals, t));
    band.x.push(t);
    band.mean.push(mean(vals));
    band.std.push(popStd(vals));
    band.nSeeds.push(vals.length);
  }
  return band;
}

export function aggregate(rows: BenchRow[], xAxis: XAxis, y: YColumn): SeriesBand {
  return xAxis === "iterations"
    ? aggregateByIteration(rows, y)
    : aggregateByTime(rows, y);
}
