#!/usr/bin/env node
import { readFileSync, writeFileSync } from "node:fs";
import { parseArgs } from "node:util";

import { EmptySelection, FigureOptions, renderFigure } from "./figure.js";
import { SchemaError, parseSweepCsv } from "./schema.js";

const USAGE = `usage: fblmimo-plot <sweep.csv> --out <figure.svg> [options]

Render an fblmimo sweep CSV as a rate-vs-coherence-interval figure.

options:
  --out PATH            output file (required)
  --bounds a,b,c        comma list of bound kinds to draw (default: all in the CSV)
  --errorbars           draw +/- 3 sigma Monte Carlo error bars
  --title TEXT          figure title (default: built from the CSV metadata)
  --ylim LO,HI          pin the y-axis in bits/cu instead of auto-scaling
  --format FMT          output format; only "svg" is supported (default: svg)
  --deterministic       byte-identical output for identical input
  --help                show this message
`;

export function main(argv: string[]): number {
  let args;
  try {
    args = parseArgs({
      args: argv,
      allowPositionals: true,
      options: {
        out: { type: "string" },
        bounds: { type: "string" },
        errorbars: { type: "boolean", default: false },
        title: { type: "string" },
        ylim: { type: "string" },
        format: { type: "string", default: "svg" },
        deterministic: { type: "boolean", default: false },
        help: { type: "boolean", default: false },
      },
    });
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n${USAGE}`);
    return 2;
  }
  if (args.values.help) {
    process.stdout.write(USAGE);
    return 0;
  }
  if (args.positionals.length !== 1 || !args.values.out) {
    process.stderr.write(USAGE);
    return 2;
  }
  if (args.values.format !== "svg") {
    process.stderr.write(
      `error: unsupported --format "${args.values.format}" (only "svg")\n`,
    );
    return 2;
  }
  const options: FigureOptions = {
    errorbars: args.values.errorbars,
    title: args.values.title,
    deterministic: args.values.deterministic,
  };
  if (args.values.bounds) {
    options.bounds = args.values.bounds.split(",").map((s) => s.trim());
  }
  if (args.values.ylim) {
    const parts = args.values.ylim.split(",").map(Number);
    if (parts.length !== 2 || parts.some((v) => !Number.isFinite(v))) {
      process.stderr.write(`error: --ylim expects LO,HI (got "${args.values.ylim}")\n`);
      return 2;
    }
    options.ylim = [parts[0], parts[1]];
  }

  try {
    const rows = parseSweepCsv(readFileSync(args.positionals[0], "utf-8"));
    writeFileSync(args.values.out, renderFigure(rows, options));
  } catch (err) {
    if (err instanceof SchemaError || err instanceof EmptySelection) {
      process.stderr.write(`error: ${err.message}\n`);
      return 1;
    }
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
  process.stdout.write(`wrote ${args.values.out}\n`);
  return 0;
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  new URL(`file://${process.argv[1]}`).pathname === new URL(import.meta.url).pathname;
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
