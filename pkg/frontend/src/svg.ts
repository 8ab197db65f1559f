/**
 * SVG writer for the laid-out figure. String building only; the geometry
 * argument is the single source of every coordinate, which is what the
 * tests query instead of comparing pixels.
 */

import { FigureGeometry, PanelGeometry } from "./layout";

const AXIS_BOTTOM = 36; // room for labels under the axis
const TITLE_ROOM = 24;
const DARK = "#3a3a3a";
const LIGHT = "#b9b9b9";

function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function renderPanel(panel: PanelGeometry, offsetX: number): string {
  const plotHeight = panel.height - AXIS_BOTTOM - TITLE_ROOM;
  const scale = plotHeight / panel.yMax;
  const baseline = TITLE_ROOM + plotHeight;
  const parts: string[] = [];
  parts.push(`<g transform="translate(${offsetX},0)">`);
  parts.push(
    `<text x="${panel.width / 2}" y="16" text-anchor="middle" ` +
      `font-size="13">${escapeXml(panel.title)}</text>`,
  );
  parts.push(
    `<line x1="46" y1="${baseline}" x2="${panel.width - 8}" y2="${baseline}" ` +
      `stroke="black" stroke-width="1"/>`,
  );
  parts.push(
    `<line x1="46" y1="${TITLE_ROOM}" x2="46" y2="${baseline}" ` +
      `stroke="black" stroke-width="1"/>`,
  );
  for (const tick of [0, 0.25, 0.5, 0.75, 1.0]) {
    const value = tick * panel.yMax;
    const y = baseline - value * scale;
    parts.push(
      `<line x1="42" y1="${y}" x2="46" y2="${y}" stroke="black"/>` +
        `<text x="38" y="${y + 4}" text-anchor="end" font-size="9">` +
        `${value.toPrecision(2)}</text>`,
    );
  }
  for (const bar of panel.bars) {
    const darkHeight = bar.drawnDarkTop * scale;
    const lightHeight = (bar.drawnLightTop - bar.drawnDarkTop) * scale;
    parts.push(
      `<rect x="${bar.x}" y="${baseline - darkHeight}" width="${bar.width}" ` +
        `height="${darkHeight}" fill="${DARK}"/>`,
    );
    parts.push(
      `<rect x="${bar.x}" y="${baseline - darkHeight - lightHeight}" ` +
        `width="${bar.width}" height="${lightHeight}" fill="${LIGHT}"/>`,
    );
    if (bar.annotation !== undefined) {
      parts.push(
        `<text x="${bar.x + bar.width / 2}" y="${TITLE_ROOM - 6}" ` +
          `text-anchor="middle" font-size="9">${escapeXml(bar.annotation)}</text>`,
      );
    }
    const labelX = bar.x + bar.width / 2;
    parts.push(
      `<text x="${labelX}" y="${baseline + 10}" text-anchor="end" ` +
        `font-size="8" transform="rotate(-35 ${labelX} ${baseline + 10})">` +
        `${escapeXml(bar.label)}</text>`,
    );
  }
  parts.push("</g>");
  return parts.join("\n");
}

export function renderSvg(geometry: FigureGeometry): string {
  const width = geometry.panels.reduce((sum, panel) => sum + panel.width, 0);
  const height = Math.max(...geometry.panels.map((panel) => panel.height));
  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" ` +
      `height="${height}" viewBox="0 0 ${width} ${height}">`,
    `<rect width="${width}" height="${height}" fill="white"/>`,
  ];
  let offset = 0;
  for (const panel of geometry.panels) {
    parts.push(renderPanel(panel, offset));
    offset += panel.width;
  }
  parts.push("</svg>");
  return parts.join("\n");
}
