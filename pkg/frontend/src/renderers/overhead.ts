import { Table, num, distinct } from "../csv.js";
import { Frame, PALETTE, extent, legend, svgDocument } from "../svg.js";

const PANEL_W = 330;
const PANEL_H = 320;
const PANEL_GAP = 70;
const PANEL_Y = 36;
const PANEL_X0 = 64;
const BINS = 40;

/**
 * fig9: histogram of simulated idle gaps per parallelism level, with the
 * analytic gap density overlaid. The overlay is drawn strictly from the
 * curve CSV's (y, pdf) cells, rescaled from density to expected bin count
 * so it sits on the histogram's axis.
 */
export function renderFig9(samples: Table, curve: Table): string {
  const ks = distinct(samples.rows, "k");
  for (const k of distinct(curve.rows, "k")) {
    if (!ks.includes(k)) ks.push(k);
  }
  const panels = Math.max(ks.length, 1);
  const width = PANEL_X0 + panels * (PANEL_W + PANEL_GAP) + 80;
  const height = 420;
  const curveXs = curve.rows.map((r) => num(r, "y"));
  const xMax = curve.rows.length > 0 ? extent(curveXs)[1] : 1;
  const parts: string[] = [];

  ks.forEach((k, pi) => {
    const gaps = samples.rows.filter((r) => r.k === k).map((r) => num(r, "gap"));
    const binWidth = xMax / BINS;
    const counts = new Array<number>(BINS).fill(0);
    for (const g of gaps) {
      const bin = Math.min(BINS - 1, Math.floor(g / binWidth));
      counts[bin] += 1;
    }
    const overlay = curve.rows
      .filter((r) => r.k === k)
      .map((r): [number, number] => [num(r, "y"), num(r, "pdf") * gaps.length * binWidth]);
    const yTop = Math.max(...counts, ...overlay.map(([, v]) => v), 1);
    const box = { x: PANEL_X0 + pi * (PANEL_W + PANEL_GAP), y: PANEL_Y, w: PANEL_W, h: PANEL_H };
    const frame = new Frame(box, [0, xMax], [0, yTop], {
      xLabel: "idle gap",
      yLabel: "jobs per bin",
      title: `k = ${k}`,
    });
    parts.push(frame.axes());
    counts.forEach((count, i) => {
      if (count > 0) {
        parts.push(frame.bar(i * binWidth, (i + 1) * binWidth, count, PALETTE[0]));
      }
    });
    parts.push(frame.line(overlay, PALETTE[2], "", 2));
  });

  if (ks.length === 0) {
    const box = { x: PANEL_X0, y: PANEL_Y, w: PANEL_W, h: PANEL_H };
    const frame = new Frame(box, [0, 1], [0, 1], {
      xLabel: "idle gap",
      yLabel: "jobs per bin",
    });
    parts.push(frame.axes());
  }

  parts.push(
    legend(PANEL_X0 + panels * (PANEL_W + PANEL_GAP) - 30, PANEL_Y + 10, [
      { label: "simulated gaps", color: PALETTE[0], marker: true },
      { label: "analytic density", color: PALETTE[2] },
    ]),
  );
  return svgDocument(width, height, parts.join("\n"));
}
