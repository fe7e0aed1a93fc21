/**
 * Dependency-free SVG line charts with mean curves and +-1 std bands.
 *
 * Output is deterministic: same series in, same bytes out.  Coordinates are
 * rounded to 0.01 px, colors are assigned by caller-supplied order.
 */

export interface BandSeries {
  label: string;
  color: string;
  x: number[];
  mean: number[];
  std: number[];
}

export interface ChartOptions {
  title: string;
  xLabel: string;
  yLabel: string;
  logX?: boolean;
  logY?: boolean;
  /** draw the +-1 std band polygons (default true) */
  band?: boolean;
  width?: number;
  height?: number;
}

export const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
  "#17becf",
  "#7f7f7f",
];

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(0).replace("e+", "e");
  return Number(v.toPrecision(4)).toString();
}

export function niceTicks(min: number, max: number, count: number): number[] {
  const range = max - min || Math.abs(max) || 1;
  const rough = range / count;
  const mag = Math.pow(10, Math.floor(Math.log10(rough)));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => s >= rough) ?? rough;
  const ticks: number[] = [];
  for (let v = Math.ceil(min / step) * step; v <= max + step * 1e-9; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

export function decadeTicks(logMin: number, logMax: number): number[] {
  const lo = Math.ceil(logMin);
  const hi = Math.floor(logMax);
  const span = hi - lo;
  const step = span > 16 ? 4 : span > 8 ? 2 : 1;
  const ticks: number[] = [];
  for (let e = lo; e <= hi; e += step) ticks.push(e);
  return ticks;
}

interface Scale {
  toPx: (v: number) => number;
  ticks: { px: number; label: string }[];
  /** data-space floor values are clamped to under a log scale */
  floor: number;
  log: boolean;
}

function makeScale(
  values: number[],
  wantLog: boolean,
  pxLo: number,
  pxHi: number,
): Scale {
  const finite = values.filter((v) => Number.isFinite(v));
  const positive = finite.filter((v) => v > 0);
  // a log axis needs positive data; otherwise fall back to linear
  const log = wantLog && positive.length > 0;
  if (log) {
    const hi = Math.max(...positive);
    let lo = Math.min(...positive);
    if (lo === hi) lo = hi / 10;
    // nonpositive samples (a solver hitting an exact face) sit on the floor
    const floor = lo;
    const lmin = Math.log10(lo);
    const lmax = Math.log10(hi);
    const span = lmax - lmin || 1;
    const toPx = (v: number) => {
      const c = Math.log10(Math.max(v, floor));
      return pxLo + ((c - lmin) / span) * (pxHi - pxLo);
    };
    const ticks = decadeTicks(lmin, lmax).map((e) => ({
      px: toPx(Math.pow(10, e)),
      label: `1e${e}`,
    }));
    return { toPx, ticks, floor, log };
  }
  let lo = finite.length ? Math.min(...finite) : 0;
  let hi = finite.length ? Math.max(...finite) : 1;
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const toPx = (v: number) =>
    pxLo + ((Math.min(Math.max(v, lo), hi) - lo) / (hi - lo)) * (pxHi - pxLo);
  const ticks = niceTicks(lo, hi, 5).map((v) => ({ px: toPx(v), label: fmt(v) }));
  return { toPx, ticks, floor: lo, log };
}

const r2 = (v: number) => v.toFixed(2);

export function renderChart(series: BandSeries[], opts: ChartOptions): string {
  const W = opts.width ?? 720;
  const H = opts.height ?? 300;
  const ml = 64;
  const mr = 16;
  const mt = 30;
  const mb = 44;
  const band = opts.band ?? true;

  const xs = series.flatMap((s) => s.x);
  const ys = series.flatMap((s) =>
    band ? s.mean.flatMap((m, i) => [m - s.std[i], m, m + s.std[i]]) : s.mean,
  );
  const sx = makeScale(xs, opts.logX ?? false, ml, W - mr);
  const sy = makeScale(ys, opts.logY ?? false, H - mb, mt);

  let out = `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${W} ${H}" font-family="Helvetica, Arial, sans-serif">\n`;
  out += `<rect width="${W}" height="${H}" fill="#fff"/>\n`;
  out += `<text x="${ml}" y="${mt - 12}" font-size="12" font-weight="600" fill="#222">${esc(opts.title)}</text>\n`;

  // grid + y ticks
  for (const t of sy.ticks) {
    out += `<line x1="${ml}" y1="${r2(t.px)}" x2="${W - mr}" y2="${r2(t.px)}" stroke="#eee" stroke-width="0.6"/>\n`;
    out += `<text x="${ml - 6}" y="${r2(t.px + 3)}" text-anchor="end" font-size="9" fill="#555">${esc(t.label)}</text>\n`;
  }
  // x ticks
  for (const t of sx.ticks) {
    out += `<line x1="${r2(t.px)}" y1="${H - mb}" x2="${r2(t.px)}" y2="${H - mb + 4}" stroke="#333" stroke-width="0.6"/>\n`;
    out += `<text x="${r2(t.px)}" y="${H - mb + 15}" text-anchor="middle" font-size="9" fill="#555">${esc(t.label)}</text>\n`;
  }

  // band polygons under the curves
  if (band) {
    for (const s of series) {
      if (s.x.length === 0) continue;
      const upper = s.x.map((x, i) => `${r2(sx.toPx(x))},${r2(sy.toPx(s.mean[i] + s.std[i]))}`);
      const lower = s.x.map((x, i) => `${r2(sx.toPx(x))},${r2(sy.toPx(s.mean[i] - s.std[i]))}`);
      out += `<polygon fill="${s.color}" opacity="0.15" points="${upper.join(" ")} ${lower.reverse().join(" ")}"/>\n`;
    }
  }
  // mean curves
  for (const s of series) {
    if (s.x.length === 0) continue;
    const pts = s.x.map((x, i) => `${r2(sx.toPx(x))},${r2(sy.toPx(s.mean[i]))}`).join(" ");
    if (s.x.length === 1) {
      out += `<circle cx="${r2(sx.toPx(s.x[0]))}" cy="${r2(sy.toPx(s.mean[0]))}" r="2.5" fill="${s.color}"/>\n`;
    } else {
      out += `<polyline fill="none" stroke="${s.color}" stroke-width="1.4" points="${pts}"/>\n`;
    }
  }

  // axes
  out += `<line x1="${ml}" y1="${mt}" x2="${ml}" y2="${H - mb}" stroke="#333" stroke-width="0.8"/>\n`;
  out += `<line x1="${ml}" y1="${H - mb}" x2="${W - mr}" y2="${H - mb}" stroke="#333" stroke-width="0.8"/>\n`;
  out += `<text x="${ml + (W - ml - mr) / 2}" y="${H - 8}" text-anchor="middle" font-size="10" fill="#333">${esc(opts.xLabel)}</text>\n`;
  out += `<text x="14" y="${mt + (H - mt - mb) / 2}" text-anchor="middle" font-size="10" fill="#333" transform="rotate(-90,14,${mt + (H - mt - mb) / 2})">${esc(opts.yLabel)}</text>\n`;

  // legend, one entry per method
  const lx = ml + 10;
  let ly = mt + 8;
  const lw = Math.max(0, ...series.map((s) => s.label.length)) * 5.6 + 26;
  out += `<rect x="${lx - 4}" y="${ly - 8}" width="${r2(lw)}" height="${series.length * 13 + 4}" rx="2" fill="#fff" fill-opacity="0.85" stroke="#ddd" stroke-width="0.5"/>\n`;
  for (const s of series) {
    out += `<line x1="${lx}" y1="${ly}" x2="${lx + 14}" y2="${ly}" stroke="${s.color}" stroke-width="1.6"/>\n`;
    out += `<text x="${lx + 18}" y="${ly + 3}" font-size="9" fill="#333">${esc(s.label)}</text>\n`;
    ly += 13;
  }

  out += `</svg>\n`;
  return out;
}
