#!/usr/bin/env node
// morphoswarm-plots bands --input class_stats.csv --channel M3x --out fig.svg
// morphoswarm-plots filmstrip --out strip.svg snap1.csv snap2.csv ...

import { readFileSync, writeFileSync } from "node:fs";
import { basename } from "node:path";

import { renderBands } from "./bands.js";
import { renderFilmstrip, snapshotFromCsv } from "./filmstrip.js";

function usage(): never {
  console.error(
    [
      "usage:",
      "  morphoswarm-plots bands --input <stats.csv> --channel <M1x..M4y> --out <fig.svg> [--title T]",
      "  morphoswarm-plots filmstrip --out <fig.svg> <snapshot.csv> [...]",
    ].join("\n"),
  );
  process.exit(2);
}

function parseFlags(argv: string[]): { flags: Map<string, string>; rest: string[] } {
  const flags = new Map<string, string>();
  const rest: string[] = [];
  for (let i = 0; i < argv.length; i++) {
    const a = argv[i];
    if (a.startsWith("--")) {
      const v = argv[++i];
      if (v === undefined) usage();
      flags.set(a.slice(2), v);
    } else {
      rest.push(a);
    }
  }
  return { flags, rest };
}

export function main(argv: string[]): number {
  const [mode, ...args] = argv;
  if (mode !== "bands" && mode !== "filmstrip") usage();
  const { flags, rest } = parseFlags(args);
  const out = flags.get("out");
  if (!out) usage();

  let svg: string;
  if (mode === "bands") {
    const input = flags.get("input");
    const channel = flags.get("channel");
    if (!input || !channel) usage();
    svg = renderBands(readFileSync(input, "utf-8"), channel, { title: flags.get("title") });
  } else {
    if (rest.length === 0) usage();
    const snapshots = rest.map((path) =>
      snapshotFromCsv(basename(path).replace(/\.csv$/, ""), readFileSync(path, "utf-8")),
    );
    svg = renderFilmstrip(snapshots);
  }
  writeFileSync(out, svg);
  console.log(`wrote ${out}`);
  return 0;
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url.endsWith(basename(process.argv[1]));
if (invokedDirectly) {
  try {
    process.exit(main(process.argv.slice(2)));
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    process.exit(1);
  }
}
