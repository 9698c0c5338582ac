#!/usr/bin/env node
import { realpathSync, mkdirSync, writeFileSync } from "node:fs";
import { dirname, resolve } from "node:path";
import { pathToFileURL } from "node:url";
import { parseArgs } from "node:util";
import { Table } from "./csv.js";
import { FIGURES } from "./figures.js";
import { readManifest, loadFile } from "./manifest.js";

const USAGE = "usage: plot <figure-id> --manifest <path> --out <path>";

export function run(argv: string[]): number {
  let positionals: string[];
  let values: { manifest?: string; out?: string };
  try {
    ({ positionals, values } = parseArgs({
      args: argv,
      options: {
        manifest: { type: "string" },
        out: { type: "string" },
      },
      allowPositionals: true,
    }));
  } catch (err) {
    console.error(`plot: ${(err as Error).message}`);
    console.error(USAGE);
    return 1;
  }

  if (positionals.length !== 1) {
    console.error(`plot: expected exactly one figure id, got ${positionals.length}`);
    console.error(USAGE);
    return 1;
  }
  const figure = positionals[0];
  const spec = FIGURES[figure];
  if (spec === undefined) {
    console.error(`plot: unknown figure '${figure}' (known: ${Object.keys(FIGURES).join(", ")})`);
    return 1;
  }
  if (values.manifest === undefined || values.out === undefined) {
    console.error("plot: --manifest and --out are both required");
    console.error(USAGE);
    return 1;
  }

  let manifest;
  try {
    manifest = readManifest(values.manifest);
  } catch (err) {
    console.error(`plot: ${(err as Error).message}`);
    return 1;
  }

  const errors: string[] = [];
  const tables = new Map<string, Table>();
  for (const file of spec.files) {
    const table = loadFile(manifest, file.key, file.columns, errors);
    if (table !== null) tables.set(file.key, table);
  }
  if (errors.length > 0) {
    for (const message of errors) console.error(`plot: ${message}`);
    return 1;
  }

  const svg = spec.render(tables, figure);
  const out = resolve(values.out);
  mkdirSync(dirname(out), { recursive: true });
  writeFileSync(out, svg);
  console.log(`plot: wrote ${values.out}`);
  return 0;
}

const invokedAs = process.argv[1] ? pathToFileURL(realpathSync(process.argv[1])).href : "";
if (import.meta.url === invokedAs) {
  process.exit(run(process.argv.slice(2)));
}
