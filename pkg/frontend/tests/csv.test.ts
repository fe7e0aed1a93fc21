import { describe, expect, it } from "vitest";

import { MissingColumnsError, parseBenchCsv, readSweeps } from "../src/csv.js";

const HEADER =
  "geometry,method,seed,outer_iter,f_value,kkt,feasibility,cum_seconds,inner_iters";

describe("parseBenchCsv", () => {
  it("reads typed rows from the sweep schema", () => {
    const rows = parseBenchCsv(
      `${HEADER}\npos,gravidy:mgn,3,7,0.5,1e-9,0,0.25,12\n`,
    );
    expect(rows).toHaveLength(1);
    expect(rows[0].geometry).toBe("pos");
    expect(rows[0].method).toBe("gravidy:mgn");
    expect(rows[0].seed).toBe(3);
    expect(rows[0].outer_iter).toBe(7);
    expect(rows[0].f_value).toBe(0.5);
    expect(rows[0].kkt).toBe(1e-9);
    expect(rows[0].inner_iters).toBe(12);
  });

  it("round-trips 17-significant-digit floats bit-exactly", () => {
    // awkward values: 0.1 + 0.2, a denormal-adjacent tiny, pi
    const rows = parseBenchCsv(
      `${HEADER}\n` +
        `pos,mu,0,0,0.30000000000000004,9.9999999999999998e-301,0,3.1415926535897931,1\n`,
    );
    expect(rows[0].f_value).toBe(0.1 + 0.2);
    expect(rows[0].kkt).toBe(1e-300);
    expect(rows[0].cum_seconds).toBe(Math.PI);
  });

  it("maps inf and nan spellings to IEEE values", () => {
    const rows = parseBenchCsv(`${HEADER}\npos,mu,0,0,inf,nan,-inf,0.1,1\n`);
    expect(rows[0].f_value).toBe(Infinity);
    expect(Number.isNaN(rows[0].kkt)).toBe(true);
    expect(rows[0].feasibility).toBe(-Infinity);
  });

  it("names missing columns and lists what is available", () => {
    const bad = "geometry,method,seed,outer_iter,f_value\npos,mu,0,0,1.0\n";
    expect(() => parseBenchCsv(bad)).toThrowError(MissingColumnsError);
    try {
      parseBenchCsv(bad);
    } catch (e) {
      const err = e as MissingColumnsError;
      expect(err.missing).toEqual(["kkt", "feasibility", "cum_seconds", "inner_iters"]);
      expect(err.message).toContain("kkt");
      expect(err.message).toContain("available columns: geometry, method");
    }
  });

  it("rejects short rows with the line number", () => {
    expect(() => parseBenchCsv(`${HEADER}\npos,mu,0,0\n`)).toThrowError(/line 2/);
  });

  it("rejects non-numeric values in numeric columns", () => {
    expect(() =>
      parseBenchCsv(`${HEADER}\npos,mu,0,0,abc,1,0,0.1,1\n`),
    ).toThrowError(/bad numeric value abc/);
  });
});

describe("readSweeps", () => {
  it("concatenates rows from several files", () => {
    const a = `${HEADER}\npos,mu,0,0,1,1,0,0.1,1\n`;
    const b = `${HEADER}\nbox,pgd_nesterov,1,0,2,1,0,0.1,1\n`;
    const rows = readSweeps([a, b]);
    expect(rows.map((r) => r.geometry)).toEqual(["pos", "box"]);
  });
});
