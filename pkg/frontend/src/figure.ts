import { SweepRow } from "./schema.js";

export interface FigureOptions {
  /** Subset of bound kinds to draw, in legend order; undefined = all found. */
  bounds?: string[];
  /** Draw +/- 3 sigma error bars from the Monte Carlo standard error. */
  errorbars?: boolean;
  title?: string;
  /** Pin the y-axis to [min, max] bits/cu instead of auto-scaling. */
  ylim?: [number, number];
  /** Byte-deterministic output: omit the generation-time comment. */
  deterministic?: boolean;
}

export class EmptySelection extends Error {
  constructor(message: string) {
    super(message);
    this.name = "EmptySelection";
  }
}

const WIDTH = 760;
const HEIGHT = 480;
const MARGIN = { top: 48, right: 176, bottom: 56, left: 64 };

const PALETTE: Record<string, string> = {
  dt: "#1f77b4",
  mc: "#d62728",
  mc_full: "#8c2d04",
  alamouti_dt: "#2ca02c",
  alamouti_mc: "#9467bd",
  fstd_dt: "#17becf",
  fstd_mc: "#e377c2",
  outage: "#7f7f7f",
  ergodic: "#bcbd22",
};
const FALLBACK_COLORS = ["#ff7f0e", "#8c564b", "#aec7e8", "#98df8a"];

const fmt = (v: number): string => v.toFixed(2);

function color(bound: string, index: number): string {
  return PALETTE[bound] ?? FALLBACK_COLORS[index % FALLBACK_COLORS.length];
}

interface Segment {
  points: { x: number; y: number; se: number }[];
}

/** Split one bound's rows into polyline segments, breaking the curve at any
 * grid point whose row is not "ok" (never interpolate across them). */
function segments(rows: SweepRow[]): Segment[] {
  const out: Segment[] = [];
  let current: Segment = { points: [] };
  for (const row of [...rows].sort((a, b) => a.nC - b.nC)) {
    if (row.status === "ok" && row.rateBpcu !== null) {
      current.points.push({
        x: row.nC,
        y: row.rateBpcu,
        se: row.stdErrBpcu ?? 0,
      });
    } else if (current.points.length > 0) {
      out.push(current);
      current = { points: [] };
    }
  }
  if (current.points.length > 0) out.push(current);
  return out;
}

function logTicks(values: number[]): number[] {
  return [...new Set(values)].sort((a, b) => a - b);
}

function linearTicks(lo: number, hi: number): number[] {
  const span = hi - lo;
  const rawStep = span / 6;
  const mag = Math.pow(10, Math.floor(Math.log10(rawStep)));
  const step = [1, 2, 2.5, 5, 10].map((m) => m * mag).find((s) => span / s <= 7)!;
  const ticks: number[] = [];
  for (let t = Math.ceil(lo / step) * step; t <= hi + 1e-12; t += step) {
    ticks.push(Number(t.toFixed(10)));
  }
  return ticks;
}

function escapeXml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Render sweep rows as a standalone SVG figure: rate in bits per channel
 * use against the coherence interval on a logarithmic axis, one labeled
 * curve per bound kind. */
export function renderFigure(rows: SweepRow[], options: FigureOptions = {}): string {
  const present = [...new Set(rows.map((r) => r.bound))];
  const wanted = options.bounds ?? present;
  const missing = wanted.filter((b) => !present.includes(b));
  if (missing.length > 0) {
    throw new EmptySelection(
      `bound(s) not present in the CSV: ${missing.join(", ")} (have: ${present.join(", ")})`,
    );
  }
  const byBound = wanted.map((bound) => ({
    bound,
    segs: segments(rows.filter((r) => r.bound === bound)),
  }));
  const okPoints = byBound.flatMap(({ segs }) => segs.flatMap((s) => s.points));
  if (okPoints.length === 0) {
    throw new EmptySelection('no rows with status "ok" in the selection');
  }

  const xs = okPoints.map((p) => p.x);
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const bar = options.errorbars ? 3 : 0;
  let yMin: number;
  let yMax: number;
  if (options.ylim) {
    [yMin, yMax] = options.ylim;
  } else {
    yMin = Math.min(...okPoints.map((p) => p.y - bar * p.se));
    yMax = Math.max(...okPoints.map((p) => p.y + bar * p.se));
    const pad = 0.06 * (yMax - yMin || 1);
    yMin -= pad;
    yMax += pad;
  }

  const plotW = WIDTH - MARGIN.left - MARGIN.right;
  const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const sx = (v: number): number =>
    MARGIN.left + (plotW * (Math.log(v) - Math.log(xMin))) / (Math.log(xMax) - Math.log(xMin) || 1);
  const sy = (v: number): number => MARGIN.top + plotH * (1 - (v - yMin) / (yMax - yMin));

  const first = rows[0];
  const title =
    options.title ??
    `n = ${first.n}, ${first.mT}x${first.mR}, eps = ${first.epsilon}, ` +
      `SNR = ${first.snrDb} dB`;

  const parts: string[] = [];
  parts.push('<?xml version="1.0" encoding="UTF-8"?>');
  if (!options.deterministic) {
    parts.push(`<!-- generated ${new Date().toISOString()} -->`);
  }
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
      `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="Helvetica, Arial, sans-serif">`,
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="#ffffff"/>`);
  parts.push(
    `<text x="${fmt(MARGIN.left + plotW / 2)}" y="26" text-anchor="middle" ` +
      `font-size="15">${escapeXml(title)}</text>`,
  );

  // grid and ticks
  for (const t of logTicks(xs)) {
    const x = fmt(sx(t));
    parts.push(
      `<line x1="${x}" y1="${MARGIN.top}" x2="${x}" y2="${MARGIN.top + plotH}" stroke="#e0e0e0"/>`,
      `<text x="${x}" y="${MARGIN.top + plotH + 18}" text-anchor="middle" font-size="11">${t}</text>`,
    );
  }
  for (const t of linearTicks(yMin, yMax)) {
    const y = fmt(sy(t));
    parts.push(
      `<line x1="${MARGIN.left}" y1="${y}" x2="${MARGIN.left + plotW}" y2="${y}" stroke="#e0e0e0"/>`,
      `<text x="${MARGIN.left - 8}" y="${y}" text-anchor="end" dominant-baseline="middle" ` +
        `font-size="11">${t}</text>`,
    );
  }
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" ` +
      `fill="none" stroke="#000000"/>`,
    `<text x="${fmt(MARGIN.left + plotW / 2)}" y="${HEIGHT - 14}" text-anchor="middle" ` +
      `font-size="13">coherence interval n_c (channel uses, log scale)</text>`,
    `<text x="18" y="${fmt(MARGIN.top + plotH / 2)}" text-anchor="middle" font-size="13" ` +
      `transform="rotate(-90 18 ${fmt(MARGIN.top + plotH / 2)})">rate (bit / channel use)</text>`,
  );

  byBound.forEach(({ bound, segs }, i) => {
    const stroke = color(bound, i);
    for (const seg of segs) {
      if (options.errorbars) {
        for (const p of seg.points) {
          if (p.se <= 0) continue;
          const x = fmt(sx(p.x));
          const yLo = fmt(sy(p.y - 3 * p.se));
          const yHi = fmt(sy(p.y + 3 * p.se));
          parts.push(
            `<line x1="${x}" y1="${yLo}" x2="${x}" y2="${yHi}" stroke="${stroke}"/>`,
            `<line x1="${fmt(sx(p.x) - 3)}" y1="${yLo}" x2="${fmt(sx(p.x) + 3)}" y2="${yLo}" stroke="${stroke}"/>`,
            `<line x1="${fmt(sx(p.x) - 3)}" y1="${yHi}" x2="${fmt(sx(p.x) + 3)}" y2="${yHi}" stroke="${stroke}"/>`,
          );
        }
      }
      const coords = seg.points.map((p) => `${fmt(sx(p.x))},${fmt(sy(p.y))}`);
      if (coords.length > 1) {
        parts.push(
          `<polyline points="${coords.join(" ")}" fill="none" stroke="${stroke}" stroke-width="1.8"/>`,
        );
      }
      for (const p of seg.points) {
        parts.push(
          `<circle cx="${fmt(sx(p.x))}" cy="${fmt(sy(p.y))}" r="2.6" fill="${stroke}"/>`,
        );
      }
    }
    // legend entry
    const ly = MARGIN.top + 10 + 20 * i;
    const lx = MARGIN.left + plotW + 14;
    parts.push(
      `<line x1="${lx}" y1="${ly}" x2="${lx + 24}" y2="${ly}" stroke="${stroke}" stroke-width="1.8"/>`,
      `<circle cx="${lx + 12}" cy="${ly}" r="2.6" fill="${stroke}"/>`,
      `<text x="${lx + 30}" y="${ly}" dominant-baseline="middle" font-size="12" ` +
        `class="legend-label">${escapeXml(bound)}</text>`,
    );
  });

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
