/**
 * Pure bar-geometry layout: aggregate rows in, drawable rectangles out.
 *
 * Each aggregate row becomes exactly one bar. The bar's nominal height is
 * its mean squared error; the dark segment runs up to MSE - 2*SE (clamped
 * at zero) and the light segment continues to MSE + 2*SE. Bars whose light
 * top exceeds the axis cap are clipped there and annotated with the numeric
 * MSE. No statistics are computed here; everything comes from the CSV.
 */

import { AggregateRow } from "./schema";

export interface FigureSpec {
  /** Panel title and rows per panel, e.g. short runs and long runs. */
  panels: { title: string; rows: AggregateRow[] }[];
  /** Optional y-axis cap; default is the largest light top across panels. */
  cap?: number;
  panelWidth?: number;
  panelHeight?: number;
}

export interface BarGeometry {
  label: string;
  /** Source row, so callers can audit the one-to-one mapping. */
  row: AggregateRow;
  x: number;
  width: number;
  /** Data-space heights. */
  mse: number;
  darkTop: number;
  lightTop: number;
  /** Drawn (possibly clipped) heights in data space. */
  drawnDarkTop: number;
  drawnLightTop: number;
  capped: boolean;
  annotation?: string;
}

export interface PanelGeometry {
  title: string;
  bars: BarGeometry[];
  yMax: number;
  width: number;
  height: number;
}

export interface FigureGeometry {
  panels: PanelGeometry[];
  cap: number;
}

const BAR_SLOT = 46;
const BAR_WIDTH = 32;
const MARGIN_LEFT = 54;

function barLabel(row: AggregateRow): string {
  return row.method;
}

export function layoutFigure(spec: FigureSpec): FigureGeometry {
  const allRows = spec.panels.flatMap((panel) => panel.rows);
  if (allRows.length === 0) {
    throw new Error("nothing to draw: no aggregate rows");
  }
  const tallest = Math.max(...allRows.map((row) => row.mseLog + 2 * row.mseSe));
  const cap = spec.cap !== undefined ? spec.cap : tallest;
  if (!(cap > 0)) {
    throw new Error(`cap must be positive, got ${cap}`);
  }
  const panels = spec.panels.map((panel) => {
    const width = MARGIN_LEFT + BAR_SLOT * panel.rows.length + 16;
    const height = spec.panelHeight ?? 260;
    const bars = panel.rows.map((row, index) => {
      const darkTop = Math.max(0, row.mseLog - 2 * row.mseSe);
      const lightTop = row.mseLog + 2 * row.mseSe;
      const capped = lightTop > cap;
      return {
        label: barLabel(row),
        row,
        x: MARGIN_LEFT + BAR_SLOT * index + (BAR_SLOT - BAR_WIDTH) / 2,
        width: BAR_WIDTH,
        mse: row.mseLog,
        darkTop,
        lightTop,
        drawnDarkTop: Math.min(darkTop, cap),
        drawnLightTop: Math.min(lightTop, cap),
        capped,
        annotation: capped ? row.mseLog.toPrecision(3) : undefined,
      };
    });
    return {
      title: panel.title,
      bars,
      yMax: cap,
      width: spec.panelWidth ?? width,
      height,
    };
  });
  return { panels, cap };
}
