import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { readTable, Table } from "./csv.js";

export interface Manifest {
  path: string;
  version: string;
  config_hash: string;
  seed: number;
  figure?: string;
  files: Record<string, string>;
}

export function readManifest(path: string): Manifest {
  let doc: unknown;
  try {
    doc = JSON.parse(readFileSync(path, "utf8"));
  } catch (err) {
    throw new Error(`${path}: ${(err as Error).message}`);
  }
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    throw new Error(`${path}: expected a JSON object`);
  }
  const obj = doc as Record<string, unknown>;
  if (typeof obj.config_hash !== "string") {
    throw new Error(`${path}: missing config_hash`);
  }
  const files: Record<string, string> = {};
  if (typeof obj.files === "object" && obj.files !== null) {
    for (const [key, value] of Object.entries(obj.files)) {
      if (typeof value === "string") files[key] = value;
    }
  }
  return {
    path,
    version: typeof obj.version === "string" ? obj.version : "",
    config_hash: obj.config_hash,
    seed: typeof obj.seed === "number" ? obj.seed : 0,
    figure: typeof obj.figure === "string" ? obj.figure : undefined,
    files,
  };
}

/**
 * Load the CSV a manifest points at, collecting contract violations
 * instead of stopping at the first: a file whose embedded config_hash
 * disagrees with the manifest is refused, and required columns that are
 * absent are all named.
 */
export function loadFile(
  manifest: Manifest,
  key: string,
  requiredColumns: string[],
  errors: string[],
): Table | null {
  const name = manifest.files[key];
  if (name === undefined) {
    errors.push(`${manifest.path}: no '${key}' entry under files`);
    return null;
  }
  const path = join(dirname(manifest.path), name);
  let table: Table;
  try {
    table = readTable(path);
  } catch (err) {
    errors.push((err as Error).message);
    return null;
  }
  if (table.meta.config_hash !== manifest.config_hash) {
    errors.push(
      `${name}: config_hash ${table.meta.config_hash ?? "(none)"} does not match` +
        ` manifest ${manifest.config_hash}`,
    );
    return null;
  }
  const missing = requiredColumns.filter((c) => !table.columns.includes(c));
  if (missing.length > 0) {
    errors.push(`${name}: missing columns: ${missing.join(", ")}`);
    return null;
  }
  return table;
}
