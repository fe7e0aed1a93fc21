export { BENCH_COLUMNS, MissingColumnsError, parseBenchCsv, readSweeps } from "./csv.js";
export type { BenchRow } from "./csv.js";
export {
  aggregate,
  aggregateByIteration,
  aggregateByTime,
  bandEndpoints,
  groupByMethod,
  mean,
  popStd,
  stepInterp,
} from "./aggregate.js";
export type { SeriesBand, XAxis, YColumn } from "./aggregate.js";
export { PALETTE, decadeTicks, niceTicks, renderChart } from "./svg.js";
export type { BandSeries, ChartOptions } from "./svg.js";
export {
  STANDARD_PANELS,
  buildSeries,
  loadRows,
  render,
  renderEtaSweep,
  standardFigures,
} from "./figures.js";
export type { FigureSpec } from "./figures.js";
