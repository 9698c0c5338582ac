import { readFileSync } from "node:fs";
import Papa from "papaparse";

/** A parsed result file: `# key=value` metadata lines, then plain CSV. */
export interface Table {
  path: string;
  meta: Record<string, string>;
  columns: string[];
  rows: Record<string, string>[];
}

export function readTable(path: string): Table {
  const text = readFileSync(path, "utf8");
  const lines = text.split("\n");
  const meta: Record<string, string> = {};
  let body = 0;
  while (body < lines.length && lines[body].startsWith("#")) {
    const line = lines[body].slice(1).trim();
    const eq = line.indexOf("=");
    if (eq > 0) {
      meta[line.slice(0, eq).trim()] = line.slice(eq + 1).trim();
    }
    body += 1;
  }
  const parsed = Papa.parse<Record<string, string>>(lines.slice(body).join("\n"), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    throw new Error(`${path}: malformed CSV: ${first.message}`);
  }
  return {
    path,
    meta,
    columns: parsed.meta.fields ?? [],
    rows: parsed.data,
  };
}

export function num(row: Record<string, string>, column: string): number {
  return Number(row[column]);
}

/** Distinct values of a column in first-seen order. */
export function distinct(rows: Record<string, string>[], column: string): string[] {
  const seen: string[] = [];
  for (const row of rows) {
    if (!seen.includes(row[column])) seen.push(row[column]);
  }
  return seen;
}
