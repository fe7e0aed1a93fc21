#!/usr/bin/env node
/**
 * gravidy-plots: render benchmark sweep CSVs to SVG figures.
 *
 * Standard panel set (every geometry found in the sweeps):
 *   gravidy-plots --csv sweep.csv [--csv more.csv] --out-dir figures/
 *
 * One figure:
 *   gravidy-plots --csv sweep.csv --geometry pos --x seconds --y kkt \
 *       --out pos_kkt.svg [--log-x] [--no-band]
 *
 * Step-size robustness (one labelled CSV per step size):
 *   gravidy-plots --eta 1=sweep_eta1.csv --eta 100=sweep_eta100.csv \
 *       --geometry pos --out pos_eta.svg
 */

import { realpathSync } from "node:fs";
import { parseArgs } from "node:util";
import { fileURLToPath } from "node:url";

import { render, standardFigures, renderEtaSweep } from "./figures.js";
import type { XAxis, YColumn } from "./aggregate.js";

class CliError extends Error {}

function fail(msg: string): never {
  throw new CliError(msg);
}

export function main(argv: string[]): number {
  try {
    const { values } = parseArgs({
      args: argv,
      options: {
        csv: { type: "string", multiple: true },
        eta: { type: "string", multiple: true },
        geometry: { type: "string" },
        x: { type: "string" },
        y: { type: "string" },
        out: { type: "string" },
        "out-dir": { type: "string" },
        "log-x": { type: "boolean", default: false },
        "log-y": { type: "boolean" },
        "no-band": { type: "boolean", default: false },
      },
    });
    if (values.eta && values.eta.length > 0) {
      if (!values.geometry || !values.out) {
        fail("--eta mode needs --geometry and --out");
      }
      const entries = values.eta.map((spec) => {
        const i = spec.indexOf("=");
        if (i <= 0) fail(`bad --eta entry ${spec}, expected LABEL=PATH`);
        const label = Number(spec.slice(0, i));
        if (!Number.isFinite(label)) fail(`bad --eta label in ${spec}`);
        return { label, csvPath: spec.slice(i + 1) };
      });
      renderEtaSweep(entries, values.geometry, values.out);
      console.log(values.out);
      return 0;
    }

    if (!values.csv || values.csv.length === 0) {
      fail("at least one --csv is required");
    }

    if (values.geometry || values.x || values.y || values.out) {
      if (!values.geometry || !values.out) {
        fail("single-figure mode needs --geometry and --out");
      }
      const xAxis = (values.x ?? "iterations") as XAxis;
      const yAxis = (values.y ?? "f_value") as YColumn;
      if (xAxis !== "iterations" && xAxis !== "seconds") {
        fail(`--x must be iterations or seconds, got ${xAxis}`);
      }
      if (yAxis !== "f_value" && yAxis !== "kkt" && yAxis !== "feasibility") {
        fail(`--y must be f_value, kkt or feasibility, got ${yAxis}`);
      }
      render({
        csvPaths: values.csv,
        geometry: values.geometry,
        xAxis,
        yAxis,
        logX: values["log-x"],
        logY: values["log-y"],
        band: !values["no-band"],
        outPath: values.out,
      });
      console.log(values.out);
      return 0;
    }

    const outDir = values["out-dir"] ?? "figures";
    const written = standardFigures(values.csv, outDir);
    for (const p of written) console.log(p);
    return 0;
  } catch (e) {
    console.error(`error: ${(e as Error).message}`);
    return 1;
  }
}

const isDirect =
  process.argv[1] !== undefined &&
  realpathSync(process.argv[1]) === fileURLToPath(import.meta.url);
if (isDirect) {
  process.exit(main(process.argv.slice(2)));
}
