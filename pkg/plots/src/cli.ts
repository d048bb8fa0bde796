#!/usr/bin/env node
/** plot <kind> <csv...> --out fig.svg
 *
 * kinds: energies | histogram | slice | eoc
 * slice accepts several CSVs (overlay) and --column to pick the variable;
 * eoc accepts --order for the reference slope.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { basename } from "node:path";
import { parseArgs } from "node:util";

import { parseCsv } from "./csv.js";
import { plotEnergies, plotEoc, plotHistogram, plotSlice } from "./figures.js";

export function buildFigure(
  kind: string,
  files: string[],
  opts: { column?: string; order?: number },
): string {
  if (files.length === 0) {
    throw new Error("no input CSV given");
  }
  const tables = files.map((f) => ({
    name: basename(f).replace(/\.csv$/, ""),
    table: parseCsv(readFileSync(f, "utf8")),
  }));
  switch (kind) {
    case "energies":
      return plotEnergies(tables[0].table);
    case "histogram":
      return plotHistogram(tables[0].table);
    case "slice":
      return plotSlice(tables, opts.column);
    case "eoc":
      return plotEoc(tables[0].table, opts.order ?? 4);
    default:
      throw new Error(
        `unknown figure kind '${kind}' (use energies|histogram|slice|eoc)`,
      );
  }
}

export function main(argv: string[]): number {
  const { values, positionals } = parseArgs({
    args: argv,
    allowPositionals: true,
    options: {
      out: { type: "string" },
      column: { type: "string" },
      order: { type: "string" },
    },
  });
  const [kind, ...files] = positionals;
  if (!kind || !values.out) {
    process.stderr.write(
      "usage: plot <energies|histogram|slice|eoc> <csv...> --out fig.svg " +
        "[--column NAME] [--order P]\n",
    );
    return 2;
  }
  try {
    const svg = buildFigure(kind, files, {
      column: values.column,
      order: values.order !== undefined ? Number(values.order) : undefined,
    });
    writeFileSync(values.out, svg);
  } catch (err) {
    process.stderr.write(`plot failed: ${(err as Error).message}\n`);
    return 1;
  }
  return 0;
}

if (process.argv[1] && import.meta.url.endsWith(basename(process.argv[1]))) {
  process.exit(main(process.argv.slice(2)));
}
