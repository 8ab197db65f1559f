/**
 * Figure rendering for zratio aggregate CSVs.
 *
 * `renderFigure` is the extract-to-data hook: it returns both the SVG text
 * and the geometry it was drawn from, so tests (and downstream tools) can
 * query bar heights instead of comparing pixels. Rendering is a pure
 * function of the CSV contents and the options.
 */

import { readFileSync } from "fs";
import { basename } from "path";
import { FigureGeometry, FigureSpec, layoutFigure } from "./layout";
import { AggregateRow, parseAggregateCsv } from "./schema";
import { renderSvg } from "./svg";

export { AggregateRow, parseAggregateCsv, SchemaError } from "./schema";
export { BarGeometry, FigureGeometry, FigureSpec, PanelGeometry, layoutFigure } from "./layout";
export { renderSvg } from "./svg";

export interface RenderOptions {
  cap?: number;
  titles?: string[];
}

export interface RenderedFigure {
  svg: string;
  geometry: FigureGeometry;
}

export function figureFromRows(
  panels: { title: string; rows: AggregateRow[] }[],
  options: RenderOptions = {},
): RenderedFigure {
  const spec: FigureSpec = { panels, cap: options.cap };
  const geometry = layoutFigure(spec);
  return { svg: renderSvg(geometry), geometry };
}

export function renderFigure(
  csvPaths: string[],
  options: RenderOptions = {},
): RenderedFigure {
  const panels = csvPaths.map((path, index) => ({
    title: options.titles?.[index] ?? basename(path, ".csv"),
    rows: parseAggregateCsv(readFileSync(path, "utf-8")),
  }));
  return figureFromRows(panels, options);
}
