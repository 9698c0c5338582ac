import { Table, num, distinct } from "../csv.js";
import { Frame, PALETTE, DASHES, extent, legend, svgDocument } from "../svg.js";

const BOX = { x: 64, y: 24, w: 480, h: 340 };
const WIDTH = 700;
const HEIGHT = 420;

/** fig5: quantile bounds against the barrier-job fraction. */
export function renderFig5(table: Table): string {
  return lineByMetric(table, "p_bem", "barrier-job fraction");
}

/** fig6: quantile bounds against the wide-job fraction of a bimodal mix. */
export function renderFig6(table: Table): string {
  return lineByMetric(table, "frac_wide", "wide-job fraction", "example");
}

function lineByMetric(table: Table, xCol: string, xLabel: string, groupCol?: string): string {
  const rows = table.rows;
  const metrics = distinct(rows, "metric");
  const groups = groupCol === undefined ? [""] : distinct(rows, groupCol);
  const xs = rows.map((r) => num(r, xCol));
  const ys = rows.map((r) => num(r, "tau"));
  const frame = new Frame(
    BOX,
    rows.length > 0 ? extent(xs) : [0, 1],
    rows.length > 0 ? [0, extent(ys)[1]] : [0, 1],
    { xLabel, yLabel: "quantile bound" },
  );
  const parts = [frame.axes()];
  const entries = [];
  for (const [gi, group] of groups.entries()) {
    for (const [mi, metric] of metrics.entries()) {
      const series = rows
        .filter((r) => r.metric === metric && (groupCol === undefined || r[groupCol] === group))
        .sort((a, b) => num(a, xCol) - num(b, xCol));
      if (series.length === 0) continue;
      const color = PALETTE[gi % PALETTE.length];
      const dash = DASHES[mi % DASHES.length];
      parts.push(
        frame.line(
          series.map((r) => [num(r, xCol), num(r, "tau")]),
          color,
          dash,
        ),
      );
      entries.push({ label: group === "" ? metric : `${group} ${metric}`, color, dash });
    }
  }
  parts.push(legend(BOX.x + BOX.w + 16, BOX.y + 10, entries));
  return svgDocument(WIDTH, HEIGHT, parts.join("\n"));
}

const PANEL_W = 330;
const PANEL_H = 330;
const PANEL_GAP = 80;
const PANEL_Y = 36;
const PANEL_X0 = 64;
const WIDE_WIDTH = PANEL_X0 + 2 * PANEL_W + PANEL_GAP + 150;
const WIDE_HEIGHT = 430;

/**
 * fig7 (quantiles) and fig8 (means): one panel per metric, simulated
 * values as dots with replication min/max whiskers, the analytic bound
 * as a line, one color per utilization level.
 */
export function renderFig78(table: Table, figure: string): string {
  const rows = table.rows;
  const metrics = ["waiting", "sojourn"];
  const rhos = distinct(rows, "rho");
  const yLabelBase = figure === "fig8" ? "mean" : "quantile";
  const ys = rows.flatMap((r) => [num(r, "sim_q_min"), num(r, "sim_q_max"), num(r, "bound_q")]);
  const yDomain: [number, number] = rows.length > 0 ? extent(ys) : [0.1, 1];
  const parts: string[] = [];
  metrics.forEach((metric, pi) => {
    const box = { x: PANEL_X0 + pi * (PANEL_W + PANEL_GAP), y: PANEL_Y, w: PANEL_W, h: PANEL_H };
    const frame = new Frame(box, [0, 1], yDomain, {
      yLog: rows.length > 0,
      xLabel: "k / s",
      yLabel: `${metric} time ${yLabelBase}`,
      title: metric,
    });
    parts.push(frame.axes());
    for (const [ri, rho] of rhos.entries()) {
      const color = PALETTE[ri % PALETTE.length];
      const series = rows
        .filter((r) => r.metric === metric && r.rho === rho)
        .sort((a, b) => num(a, "k_over_s") - num(b, "k_over_s"));
      if (series.length === 0) continue;
      parts.push(
        frame.line(
          series.map((r) => [num(r, "k_over_s"), num(r, "bound_q")]),
          color,
        ),
      );
      for (const r of series) {
        parts.push(
          frame.whisker(num(r, "k_over_s"), num(r, "sim_q_min"), num(r, "sim_q_max"), color),
        );
      }
      parts.push(
        frame.dots(
          series.map((r) => [num(r, "k_over_s"), num(r, "sim_q")]),
          color,
        ),
      );
    }
  });
  parts.push(
    legend(
      PANEL_X0 + 2 * PANEL_W + PANEL_GAP + 16,
      PANEL_Y + 10,
      rhos.flatMap((rho, ri) => [
        { label: `rho=${rho} bound`, color: PALETTE[ri % PALETTE.length] },
        { label: `rho=${rho} sim`, color: PALETTE[ri % PALETTE.length], marker: true },
      ]),
    ),
  );
  return svgDocument(WIDE_WIDTH, WIDE_HEIGHT, parts.join("\n"));
}
