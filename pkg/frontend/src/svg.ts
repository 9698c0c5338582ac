import { scaleLinear, scaleLog, type ScaleContinuousNumeric } from "d3-scale";

/** Fixed categorical palette (Observable 10). */
export const PALETTE = [
  "#4269d0",
  "#efb118",
  "#ff725c",
  "#6cc5b0",
  "#3ca951",
  "#ff8ab7",
  "#a463f2",
  "#97bbf5",
  "#9c6b4e",
  "#9498a0",
];

export const DASHES = ["", "6 3", "2 2", "9 3 2 3"];

const FONT = 'font-family="Helvetica, Arial, sans-serif"';

export function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Stable short form for coordinates; avoids float repr noise in the output. */
export function fmt(v: number): string {
  const r = Math.round(v * 100) / 100;
  return Object.is(r, -0) ? "0" : String(r);
}

function tickLabel(v: number): string {
  if (v !== 0 && (Math.abs(v) >= 1e5 || Math.abs(v) < 1e-3)) {
    return v.toExponential(0).replace("+", "");
  }
  return String(Number(v.toPrecision(6)));
}

export interface Box {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface FrameOpts {
  xLog?: boolean;
  yLog?: boolean;
  xLabel: string;
  yLabel: string;
  title?: string;
}

/** One plot panel: scales from data coordinates into a pixel box. */
export class Frame {
  readonly box: Box;
  readonly opts: FrameOpts;
  private readonly xScale: ScaleContinuousNumeric<number, number>;
  private readonly yScale: ScaleContinuousNumeric<number, number>;

  constructor(box: Box, xDomain: [number, number], yDomain: [number, number], opts: FrameOpts) {
    this.box = box;
    this.opts = opts;
    this.xScale = (opts.xLog ? scaleLog() : scaleLinear())
      .domain(pad(xDomain, opts.xLog ?? false))
      .range([box.x, box.x + box.w])
      .nice();
    this.yScale = (opts.yLog ? scaleLog() : scaleLinear())
      .domain(pad(yDomain, opts.yLog ?? false))
      .range([box.y + box.h, box.y])
      .nice();
  }

  sx(v: number): number {
    return this.xScale(v);
  }

  sy(v: number): number {
    return this.yScale(v);
  }

  axes(): string {
    const { x, y, w, h } = this.box;
    const parts: string[] = [];
    parts.push(
      `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}"` +
        ` fill="none" stroke="#444" stroke-width="1"/>`,
    );
    for (const t of this.xScale.ticks(6)) {
      const px = this.sx(t);
      parts.push(
        `<line x1="${fmt(px)}" y1="${fmt(y + h)}" x2="${fmt(px)}" y2="${fmt(y + h + 4)}"` +
          ` stroke="#444" stroke-width="1"/>`,
        `<text x="${fmt(px)}" y="${fmt(y + h + 16)}" ${FONT} font-size="11"` +
          ` text-anchor="middle" fill="#222">${esc(tickLabel(t))}</text>`,
      );
    }
    for (const t of this.yScale.ticks(6)) {
      const py = this.sy(t);
      parts.push(
        `<line x1="${fmt(x - 4)}" y1="${fmt(py)}" x2="${fmt(x)}" y2="${fmt(py)}"` +
          ` stroke="#444" stroke-width="1"/>`,
        `<text x="${fmt(x - 7)}" y="${fmt(py + 3.5)}" ${FONT} font-size="11"` +
          ` text-anchor="end" fill="#222">${esc(tickLabel(t))}</text>`,
      );
    }
    parts.push(
      `<text x="${fmt(x + w / 2)}" y="${fmt(y + h + 34)}" ${FONT} font-size="12"` +
        ` text-anchor="middle" fill="#111" class="axis-label">${esc(this.opts.xLabel)}</text>`,
      `<text x="${fmt(x - 42)}" y="${fmt(y + h / 2)}" ${FONT} font-size="12"` +
        ` text-anchor="middle" fill="#111" class="axis-label"` +
        ` transform="rotate(-90 ${fmt(x - 42)} ${fmt(y + h / 2)})">${esc(this.opts.yLabel)}</text>`,
    );
    if (this.opts.title !== undefined) {
      parts.push(
        `<text x="${fmt(x + w / 2)}" y="${fmt(y - 8)}" ${FONT} font-size="13"` +
          ` text-anchor="middle" fill="#111">${esc(this.opts.title)}</text>`,
      );
    }
    return parts.join("\n");
  }

  line(points: [number, number][], color: string, dash = "", width = 1.5): string {
    if (points.length === 0) return "";
    const d = points
      .map(([vx, vy], i) => `${i === 0 ? "M" : "L"}${fmt(this.sx(vx))},${fmt(this.sy(vy))}`)
      .join("");
    const dashAttr = dash === "" ? "" : ` stroke-dasharray="${dash}"`;
    return (
      `<path d="${d}" fill="none" stroke="${color}" stroke-width="${width}"${dashAttr}` +
      ` class="series-line"/>`
    );
  }

  dots(points: [number, number][], color: string, r = 3): string {
    return points
      .map(
        ([vx, vy]) =>
          `<circle cx="${fmt(this.sx(vx))}" cy="${fmt(this.sy(vy))}" r="${r}"` +
          ` fill="${color}" class="series-dot"/>`,
      )
      .join("\n");
  }

  /** Vertical error bar from lo to hi at x. */
  whisker(x: number, lo: number, hi: number, color: string): string {
    const px = this.sx(x);
    const y1 = this.sy(lo);
    const y2 = this.sy(hi);
    return (
      `<line x1="${fmt(px)}" y1="${fmt(y1)}" x2="${fmt(px)}" y2="${fmt(y2)}"` +
      ` stroke="${color}" stroke-width="1"/>` +
      `<line x1="${fmt(px - 3)}" y1="${fmt(y1)}" x2="${fmt(px + 3)}" y2="${fmt(y1)}"` +
      ` stroke="${color}" stroke-width="1"/>` +
      `<line x1="${fmt(px - 3)}" y1="${fmt(y2)}" x2="${fmt(px + 3)}" y2="${fmt(y2)}"` +
      ` stroke="${color}" stroke-width="1"/>`
    );
  }

  /** Histogram bar spanning [x0, x1) with the given height in data units. */
  bar(x0: number, x1: number, height: number, color: string): string {
    const px0 = this.sx(x0);
    const px1 = this.sx(x1);
    const py = this.sy(height);
    const base = this.sy(0);
    return (
      `<rect x="${fmt(px0)}" y="${fmt(py)}" width="${fmt(Math.max(0, px1 - px0 - 0.5))}"` +
      ` height="${fmt(Math.max(0, base - py))}" fill="${color}" fill-opacity="0.55"` +
      ` class="hist-bar"/>`
    );
  }
}

function pad(domain: [number, number], log: boolean): [number, number] {
  let [lo, hi] = domain;
  if (!Number.isFinite(lo) || !Number.isFinite(hi)) {
    return log ? [1, 10] : [0, 1];
  }
  if (log) {
    if (lo <= 0) lo = Math.min(1e-3, hi > 0 ? hi / 10 : 1e-3);
    if (hi <= lo) hi = lo * 10;
    return [lo, hi];
  }
  if (hi === lo) {
    return lo === 0 ? [0, 1] : [lo - Math.abs(lo) * 0.5, hi + Math.abs(hi) * 0.5];
  }
  return [lo, hi];
}

export interface LegendEntry {
  label: string;
  color: string;
  dash?: string;
  marker?: boolean;
}

export function legend(x: number, y: number, entries: LegendEntry[]): string {
  const parts: string[] = [];
  entries.forEach((e, i) => {
    const py = y + i * 16;
    if (e.marker) {
      parts.push(`<circle cx="${fmt(x + 11)}" cy="${fmt(py)}" r="3" fill="${e.color}"/>`);
    } else {
      const dashAttr = e.dash ? ` stroke-dasharray="${e.dash}"` : "";
      parts.push(
        `<line x1="${fmt(x)}" y1="${fmt(py)}" x2="${fmt(x + 22)}" y2="${fmt(py)}"` +
          ` stroke="${e.color}" stroke-width="2"${dashAttr}/>`,
      );
    }
    parts.push(
      `<text x="${fmt(x + 28)}" y="${fmt(py + 3.5)}" ${FONT} font-size="11"` +
        ` fill="#222">${esc(e.label)}</text>`,
    );
  });
  return parts.join("\n");
}

export function svgDocument(width: number, height: number, body: string): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}"` +
    ` viewBox="0 0 ${width} ${height}">\n` +
    `<rect width="${width}" height="${height}" fill="white"/>\n` +
    body +
    "\n</svg>\n"
  );
}

export function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (!Number.isFinite(v)) continue;
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  return [lo, hi];
}
