import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";
import { distinct, num, readTable } from "../src/csv.js";

function tmpCsv(text: string): string {
  const dir = mkdtempSync(join(tmpdir(), "plots-csv-"));
  const path = join(dir, "t.csv");
  writeFileSync(path, text);
  return path;
}

describe("readTable", () => {
  it("splits leading comment lines into metadata", () => {
    const t = readTable(
      tmpCsv("# version=0.1.0\n# config_hash=abcd1234abcd1234\n# seed=7\na,b\n1,2\n3,4\n"),
    );
    expect(t.meta).toEqual({ version: "0.1.0", config_hash: "abcd1234abcd1234", seed: "7" });
    expect(t.columns).toEqual(["a", "b"]);
    expect(t.rows).toEqual([
      { a: "1", b: "2" },
      { a: "3", b: "4" },
    ]);
  });

  it("returns an empty row list for a header-only file", () => {
    const t = readTable(tmpCsv("# config_hash=ffff0000ffff0000\nrho,k,metric\n"));
    expect(t.columns).toEqual(["rho", "k", "metric"]);
    expect(t.rows).toEqual([]);
    expect(t.meta.config_hash).toBe("ffff0000ffff0000");
  });

  it("tolerates a file with no metadata block", () => {
    const t = readTable(tmpCsv("x,y\n0,0\n"));
    expect(t.meta).toEqual({});
    expect(t.rows).toHaveLength(1);
  });
});

describe("helpers", () => {
  it("num coerces cells to numbers", () => {
    expect(num({ v: "2.5" }, "v")).toBe(2.5);
    expect(Number.isNaN(num({ v: "2.5" }, "missing"))).toBe(true);
  });

  it("distinct keeps first-seen order", () => {
    const rows = [{ k: "11" }, { k: "6" }, { k: "11" }, { k: "6" }];
    expect(distinct(rows, "k")).toEqual(["11", "6"]);
  });
});
