import { spawnSync } from "node:child_process";
import { cpSync, mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

const ROOT = fileURLToPath(new URL("..", import.meta.url));
const CLI = join(ROOT, "dist", "cli.js");
const FIXTURES = fileURLToPath(new URL("fixtures", import.meta.url));

function plot(...args: string[]) {
  const res = spawnSync(process.execPath, [CLI, ...args], { encoding: "utf8" });
  return { code: res.status, stdout: res.stdout, stderr: res.stderr };
}

function scratch(): string {
  return mkdtempSync(join(tmpdir(), "plots-cli-"));
}

describe("rendering fixtures", () => {
  for (const figure of ["fig2", "fig7", "fig9"]) {
    it(`writes an SVG for ${figure}`, () => {
      const out = join(scratch(), "deep", "nested", `${figure}.svg`);
      const res = plot(figure, "--manifest", join(FIXTURES, figure, "manifest.json"), "--out", out);
      expect(res.stderr).toBe("");
      expect(res.code).toBe(0);
      expect(res.stdout).toContain(`plot: wrote ${out}`);
      const svg = readFileSync(out, "utf8");
      expect(svg.startsWith("<svg")).toBe(true);
      expect(svg).toContain('class="axis-label"');
    });
  }
});

describe("contract violations", () => {
  it("refuses a CSV whose embedded config_hash disagrees with the manifest", () => {
    const dir = scratch();
    cpSync(join(FIXTURES, "fig7"), dir, { recursive: true });
    const csvPath = join(dir, "fig7.csv");
    const csv = readFileSync(csvPath, "utf8");
    writeFileSync(csvPath, csv.replace(/# config_hash=\w+/, "# config_hash=0000000000000000"));
    const res = plot("fig7", "--manifest", join(dir, "manifest.json"), "--out", join(dir, "o.svg"));
    expect(res.code).toBe(1);
    expect(res.stderr).toContain("fig7.csv");
    expect(res.stderr).toContain("0000000000000000");
    expect(res.stderr).toContain("does not match");
  });

  it("names every missing column", () => {
    const dir = scratch();
    cpSync(join(FIXTURES, "fig7"), dir, { recursive: true });
    const csvPath = join(dir, "fig7.csv");
    const csv = readFileSync(csvPath, "utf8");
    writeFileSync(csvPath, csv.replace("sim_q,sim_q_min,sim_q_max,bound_q", "sim_q,lo,hi,bq"));
    const res = plot("fig7", "--manifest", join(dir, "manifest.json"), "--out", join(dir, "o.svg"));
    expect(res.code).toBe(1);
    expect(res.stderr).toContain("missing columns: sim_q_min, sim_q_max, bound_q");
  });

  it("reports a manifest with no entry for a required file", () => {
    const dir = scratch();
    writeFileSync(
      join(dir, "manifest.json"),
      JSON.stringify({ version: "0.1.0", config_hash: "deadbeefdeadbeef", seed: 1, files: {} }),
    );
    const res = plot("fig9", "--manifest", join(dir, "manifest.json"), "--out", join(dir, "o.svg"));
    expect(res.code).toBe(1);
    expect(res.stderr).toContain("no 'samples' entry under files");
    expect(res.stderr).toContain("no 'curve' entry under files");
  });
});

describe("degenerate inputs", () => {
  it("renders labeled empty axes from a header-only CSV with a matching hash", () => {
    const dir = scratch();
    writeFileSync(
      join(dir, "fig7.csv"),
      "# version=0.1.0\n# config_hash=deadbeefdeadbeef\n# seed=1\n" +
        "rho,k,k_over_s,metric,sim_q,sim_q_min,sim_q_max,bound_q\n",
    );
    writeFileSync(
      join(dir, "manifest.json"),
      JSON.stringify({
        version: "0.1.0",
        config_hash: "deadbeefdeadbeef",
        seed: 1,
        figure: "fig7",
        files: { fig7: "fig7.csv" },
      }),
    );
    const out = join(dir, "o.svg");
    const res = plot("fig7", "--manifest", join(dir, "manifest.json"), "--out", out);
    expect(res.stderr).toBe("");
    expect(res.code).toBe(0);
    const svg = readFileSync(out, "utf8");
    expect(svg).toContain('class="axis-label"');
    expect(svg).not.toContain('class="series-dot"');
  });
});

describe("argument errors", () => {
  it("rejects an unknown figure id and lists the known ones", () => {
    const res = plot("fig99", "--manifest", "x.json", "--out", "o.svg");
    expect(res.code).toBe(1);
    expect(res.stderr).toContain("unknown figure 'fig99'");
    for (const id of ["fig2", "fig7", "fig9"]) expect(res.stderr).toContain(id);
  });

  it("requires --manifest and --out", () => {
    const res = plot("fig7");
    expect(res.code).toBe(1);
    expect(res.stderr).toContain("--manifest and --out");
  });

  it("requires a figure id", () => {
    const res = plot("--manifest", "x.json", "--out", "o.svg");
    expect(res.code).toBe(1);
    expect(res.stderr).toContain("usage:");
  });

  it("fails cleanly on a missing manifest file", () => {
    const res = plot("fig7", "--manifest", join(scratch(), "nope.json"), "--out", "o.svg");
    expect(res.code).toBe(1);
    expect(res.stderr).toContain("nope.json");
  });
});
