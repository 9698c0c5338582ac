import { Table, num, distinct } from "../csv.js";
import { Frame, PALETTE, DASHES, extent, legend, svgDocument } from "../svg.js";

const BOX = { x: 64, y: 24, w: 480, h: 340 };
const WIDTH = 700;
const HEIGHT = 420;

/** fig2: analytic capacity lines with simulation markers, per (k, mode). */
export function renderFig2(table: Table): string {
  const rows = table.rows;
  const ks = distinct(rows, "k");
  const modes = distinct(rows, "mode");
  const xs = rows.map((r) => num(r, "s"));
  const ys = rows.flatMap((r) => [num(r, "analytic"), num(r, "sim_min"), num(r, "sim_max")]);
  const frame = new Frame(
    BOX,
    rows.length > 0 ? extent(xs) : [0, 1],
    rows.length > 0 ? [0, extent(ys)[1]] : [0, 1],
    { xLabel: "workers s", yLabel: "max stable utilization" },
  );
  const parts = [frame.axes()];
  const entries = [];
  for (const [mi, mode] of modes.entries()) {
    for (const [ki, k] of ks.entries()) {
      const series = rows
        .filter((r) => r.k === k && r.mode === mode)
        .sort((a, b) => num(a, "s") - num(b, "s"));
      if (series.length === 0) continue;
      const color = PALETTE[ki % PALETTE.length];
      const dash = DASHES[mi % DASHES.length];
      parts.push(
        frame.line(
          series.map((r) => [num(r, "s"), num(r, "analytic")]),
          color,
          dash,
        ),
      );
      for (const r of series) {
        parts.push(frame.whisker(num(r, "s"), num(r, "sim_min"), num(r, "sim_max"), color));
      }
      parts.push(
        frame.dots(
          series.map((r) => [num(r, "s"), num(r, "sim_mean")]),
          color,
        ),
      );
      entries.push({ label: `k=${k} ${mode}`, color, dash });
    }
  }
  parts.push(legend(BOX.x + BOX.w + 16, BOX.y + 10, entries));
  return svgDocument(WIDTH, HEIGHT, parts.join("\n"));
}

/** fig3: capacity and useful capacity against the straggler threshold l. */
export function renderFig3(table: Table): string {
  const rows = table.rows;
  const services = distinct(rows, "service");
  const xs = rows.map((r) => num(r, "l"));
  const ys = rows.flatMap((r) => [num(r, "rho_skl"), num(r, "rho_useful")]);
  const frame = new Frame(
    BOX,
    rows.length > 0 ? extent(xs) : [0, 1],
    rows.length > 0 ? [0, extent(ys)[1]] : [0, 1],
    { xLabel: "completion threshold l", yLabel: "utilization" },
  );
  const parts = [frame.axes()];
  const entries = [];
  const measures: [string, string][] = [
    ["rho_skl", ""],
    ["rho_useful", DASHES[1]],
  ];
  for (const [si, service] of services.entries()) {
    const color = PALETTE[si % PALETTE.length];
    const series = rows
      .filter((r) => r.service === service)
      .sort((a, b) => num(a, "l") - num(b, "l"));
    for (const [measure, dash] of measures) {
      parts.push(
        frame.line(
          series.map((r) => [num(r, "l"), num(r, measure)]),
          color,
          dash,
        ),
      );
      entries.push({ label: `${service} ${measure}`, color, dash });
    }
  }
  parts.push(legend(BOX.x + BOX.w + 16, BOX.y + 10, entries));
  return svgDocument(WIDTH, HEIGHT, parts.join("\n"));
}

/** fig4: total and useful capacity against the worker count, per mode. */
export function renderFig4(table: Table): string {
  const rows = table.rows;
  const modes = distinct(rows, "mode");
  const xs = rows.map((r) => num(r, "s"));
  const ys = rows.flatMap((r) => [num(r, "rho_total"), num(r, "rho_useful")]);
  const frame = new Frame(
    BOX,
    rows.length > 0 ? extent(xs) : [0, 1],
    rows.length > 0 ? [0, extent(ys)[1]] : [0, 1],
    { xLabel: "workers s", yLabel: "utilization" },
  );
  const parts = [frame.axes()];
  const entries = [];
  const measures: [string, string][] = [
    ["rho_total", ""],
    ["rho_useful", DASHES[1]],
  ];
  for (const [mi, mode] of modes.entries()) {
    const color = PALETTE[mi % PALETTE.length];
    const series = rows
      .filter((r) => r.mode === mode)
      .sort((a, b) => num(a, "s") - num(b, "s"));
    for (const [measure, dash] of measures) {
      parts.push(
        frame.line(
          series.map((r) => [num(r, "s"), num(r, measure)]),
          color,
          dash,
        ),
      );
      entries.push({ label: `${mode} ${measure}`, color, dash });
    }
  }
  parts.push(legend(BOX.x + BOX.w + 16, BOX.y + 10, entries));
  return svgDocument(WIDTH, HEIGHT, parts.join("\n"));
}
