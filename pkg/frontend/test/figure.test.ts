import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { EmptySelection, renderFigure } from "../src/figure.js";
import { parseSweepCsv } from "../src/schema.js";

const FIXTURE = new URL("../testdata/sweep_2x2_n168.csv", import.meta.url);
const rows = parseSweepCsv(readFileSync(FIXTURE, "utf-8"));

const HEADER =
  "n,n_c,l,m_t,m_r,snr_db,epsilon,bound,m_active_opt,rate_npcu,rate_bpcu,mc_std_err,samples,seed,status\n";

function legendLabels(svg: string): string[] {
  return [...svg.matchAll(/class="legend-label">([^<]*)</g)].map((m) => m[1]);
}

describe("renderFigure", () => {
  it("draws one labeled curve per bound in the CSV", () => {
    const svg = renderFigure(rows, { deterministic: true });
    expect(legendLabels(svg)).toEqual(["alamouti_dt", "alamouti_mc", "dt", "mc"]);
    // dt and mc are continuous (1 segment each); the inner-code bounds are
    // skipped at the odd grid points n_c = 21 and 7, splitting each curve
    // into 3 visible segments
    expect((svg.match(/<polyline /g) ?? []).length).toBe(8);
  });

  it("labels both axes", () => {
    const svg = renderFigure(rows, { deterministic: true });
    expect(svg).toContain("coherence interval n_c (channel uses, log scale)");
    expect(svg).toContain("rate (bit / channel use)");
  });

  it("uses a logarithmic x axis", () => {
    const svg = renderFigure(rows, { deterministic: true });
    // equal n_c ratios must land at equal pixel spacing: 4 -> 12 -> 36 is
    // not on the grid, but 4 -> 8 -> 16 isn't either; use 6, 24 vs 42, 168
    const xs = new Map<number, number>();
    for (const nc of [6, 24, 42, 168]) {
      const row = rows.find((r) => r.nC === nc && r.bound === "dt")!;
      const svgOne = renderFigure([row], { deterministic: true });
      const m = svgOne.match(/<circle cx="([0-9.]+)"/);
      xs.set(nc, Number(m![1]));
    }
    const d1 = xs.get(24)! - xs.get(6)!;
    const d2 = xs.get(168)! - xs.get(42)!;
    expect(Math.abs(d1 - d2)).toBeLessThan(0.05);
  });

  it("filters curves with the bounds option", () => {
    const svg = renderFigure(rows, { bounds: ["dt", "mc"], deterministic: true });
    expect(legendLabels(svg)).toEqual(["dt", "mc"]);
    expect((svg.match(/<polyline /g) ?? []).length).toBe(2);
  });

  it("reports an empty selection", () => {
    expect(() => renderFigure(rows, { bounds: ["outage"] })).toThrow(EmptySelection);
    expect(() => renderFigure(rows, { bounds: ["outage"] })).toThrow(/outage/);
  });

  it("never interpolates across non-ok rows", () => {
    const csv =
      HEADER +
      "24,24,1,2,2,6.0,0.01,dt,1,0.5,0.72,0.001,100,0,ok\n" +
      "24,12,2,2,2,6.0,0.01,dt,,,,,100,0,error: InsufficientSamples\n" +
      "24,8,3,2,2,6.0,0.01,dt,1,0.4,0.58,0.001,100,0,ok\n" +
      "24,6,4,2,2,6.0,0.01,dt,1,0.3,0.43,0.001,100,0,ok\n";
    const svg = renderFigure(parseSweepCsv(csv), { deterministic: true });
    // the gap at n_c = 12 splits the curve: one 2-point polyline (6-8) and
    // an isolated point at 24 (no polyline of length 1)
    const polylines = svg.match(/<polyline points="([^"]*)"/g) ?? [];
    expect(polylines.length).toBe(1);
    expect(polylines[0].split(" ").length - 1).toBe(2);
    // 3 data markers plus 1 legend marker
    expect((svg.match(/<circle /g) ?? []).length).toBe(4);
  });

  it("adds error bars only when asked", () => {
    const plain = renderFigure(rows, { deterministic: true });
    const bars = renderFigure(rows, { errorbars: true, deterministic: true });
    expect(bars.length).toBeGreaterThan(plain.length);
    expect((plain.match(/<line /g) ?? []).length).toBeLessThan(
      (bars.match(/<line /g) ?? []).length,
    );
  });

  it("is byte-deterministic under the flag and not otherwise", async () => {
    const a = renderFigure(rows, { errorbars: true, deterministic: true });
    const b = renderFigure(rows, { errorbars: true, deterministic: true });
    expect(a).toBe(b);
    const c = renderFigure(rows, {});
    expect(c).toContain("<!-- generated ");
    expect(a).not.toContain("<!-- generated ");
  });

  it("uses the title option, escaped", () => {
    const svg = renderFigure(rows, { title: "a < b & c", deterministic: true });
    expect(svg).toContain("a &lt; b &amp; c");
  });

  it("pins the y axis with ylim", () => {
    const auto = renderFigure(rows, { deterministic: true });
    const pinned = renderFigure(rows, { ylim: [0, 4], deterministic: true });
    expect(pinned).not.toBe(auto);
    expect(pinned).toContain(">0<");
    expect(pinned).toContain(">4<");
  });
});
