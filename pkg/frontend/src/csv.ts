/**
 * Reader for the benchmark sweep CSV.
 *
 * Schema (one row per recorded outer iterate):
 *   geometry,method,seed,outer_iter,f_value,kkt,feasibility,cum_seconds,inner_iters
 * Floats are written with 17 significant digits, so Number() round-trips them
 * bit-exactly.
 */

export const BENCH_COLUMNS = [
  "geometry",
  "method",
  "seed",
  "outer_iter",
  "f_value",
  "kkt",
  "feasibility",
  "cum_seconds",
  "inner_iters",
] as const;

export interface BenchRow {
  geometry: string;
  method: string;
  seed: number;
  outer_iter: number;
  f_value: number;
  kkt: number;
  feasibility: number;
  cum_seconds: number;
  inner_iters: number;
}

export class MissingColumnsError extends Error {
  readonly missing: string[];
  readonly available: string[];

  constructor(missing: string[], available: string[]) {
    super(
      `missing column(s) ${missing.join(", ")}; ` +
        `available columns: ${available.join(", ")}`,
    );
    this.name = "MissingColumnsError";
    this.missing = missing;
    this.available = available;
  }
}

const NUMERIC = [
  "seed",
  "outer_iter",
  "f_value",
  "kkt",
  "feasibility",
  "cum_seconds",
  "inner_iters",
] as const;

// the writer prints non-finite floats as inf/-inf/nan
function toNumber(raw: string): number {
  if (raw === "inf") return Infinity;
  if (raw === "-inf") return -Infinity;
  if (raw === "nan") return NaN;
  return Number(raw);
}

export function parseBenchCsv(text: string): BenchRow[] {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new Error("empty CSV");
  }
  const header = lines[0].split(",");
  const idx = new Map<string, number>();
  header.forEach((name, i) => idx.set(name.trim(), i));
  const missing = BENCH_COLUMNS.filter((c) => !idx.has(c));
  if (missing.length > 0) {
    throw new MissingColumnsError(missing, header.map((h) => h.trim()));
  }

  const rows: BenchRow[] = [];
  for (let ln = 1; ln < lines.length; ln++) {
    const parts = lines[ln].split(",");
    if (parts.length < header.length) {
      throw new Error(
        `line ${ln + 1}: expected ${header.length} fields, got ${parts.length}`,
      );
    }
    const row: Record<string, string | number> = {
      geometry: parts[idx.get("geometry")!],
      method: parts[idx.get("method")!],
    };
    for (const col of NUMERIC) {
      const raw = parts[idx.get(col)!].trim();
      const v = toNumber(raw);
      if (Number.isNaN(v) && raw !== "nan") {
        throw new Error(`line ${ln + 1}: bad numeric value ${raw} in ${col}`);
      }
      row[col] = v;
    }
    rows.push(row as unknown as BenchRow);
  }
  return rows;
}

/** Parse and concatenate several sweep files (same schema). */
export function readSweeps(texts: string[]): BenchRow[] {
  return texts.flatMap(parseBenchCsv);
}
