import { Table } from "./csv.js";
import { renderFig2, renderFig3, renderFig4 } from "./renderers/utilization.js";
import { renderFig5, renderFig6, renderFig78 } from "./renderers/quantiles.js";
import { renderFig9 } from "./renderers/overhead.js";

export interface FileSpec {
  /** Key under the manifest's `files` mapping. */
  key: string;
  /** Columns the renderer reads; all must be present. */
  columns: string[];
}

export interface FigureSpec {
  files: FileSpec[];
  render(tables: Map<string, Table>, figure: string): string;
}

const QUANTILE_COLS = ["rho", "k", "k_over_s", "metric", "sim_q", "sim_q_min", "sim_q_max", "bound_q"];

export const FIGURES: Record<string, FigureSpec> = {
  fig2: {
    files: [{ key: "fig2", columns: ["s", "k", "mode", "analytic", "sim_mean", "sim_min", "sim_max"] }],
    render: (t) => renderFig2(t.get("fig2")!),
  },
  fig3: {
    files: [{ key: "fig3", columns: ["service", "l", "lam_max", "rho_skl", "rho_useful"] }],
    render: (t) => renderFig3(t.get("fig3")!),
  },
  fig4: {
    files: [{ key: "fig4", columns: ["s", "k", "l", "mode", "rho_total", "rho_useful"] }],
    render: (t) => renderFig4(t.get("fig4")!),
  },
  fig5: {
    files: [{ key: "fig5", columns: ["p_bem", "metric", "tau"] }],
    render: (t) => renderFig5(t.get("fig5")!),
  },
  fig6: {
    files: [{ key: "fig6", columns: ["example", "frac_wide", "metric", "tau"] }],
    render: (t) => renderFig6(t.get("fig6")!),
  },
  fig7: {
    files: [{ key: "fig7", columns: QUANTILE_COLS }],
    render: (t, figure) => renderFig78(t.get("fig7")!, figure),
  },
  fig8: {
    files: [{ key: "fig8", columns: QUANTILE_COLS }],
    render: (t, figure) => renderFig78(t.get("fig8")!, figure),
  },
  fig9: {
    files: [
      { key: "samples", columns: ["k", "gap"] },
      { key: "curve", columns: ["k", "y", "pdf"] },
    ],
    render: (t) => renderFig9(t.get("samples")!, t.get("curve")!),
  },
};
