import { describe, expect, it } from "vitest";

import { layoutFigure } from "../src/layout";
import { AggregateRow } from "../src/schema";

function row(overrides: Partial<AggregateRow> = {}): AggregateRow {
  return {
    method: "lis-forward-geometric",
    direction: "forward",
    bridge: "geometric",
    n: 4,
    K: 50,
    M: 20,
    replications: 40,
    mseLog: 0.5,
    mseSe: 0.1,
    zeroFraction: 0,
    ...overrides,
  };
}

describe("two-tone bar arithmetic", () => {
  it("splits dark and light at MSE -/+ twice the standard error", () => {
    const geometry = layoutFigure({
      panels: [{ title: "short runs", rows: [row()] }],
    });
    const bar = geometry.panels[0].bars[0];
    expect(bar.mse).toBe(0.5);
    expect(bar.darkTop).toBeCloseTo(0.3, 12);
    expect(bar.lightTop).toBeCloseTo(0.7, 12);
    expect(bar.capped).toBe(false);
    expect(bar.annotation).toBeUndefined();
  });

  it("clamps the dark segment at zero for noisy small bars", () => {
    const geometry = layoutFigure({
      panels: [{ title: "p", rows: [row({ mseLog: 0.05, mseSe: 0.2 })] }],
    });
    expect(geometry.panels[0].bars[0].darkTop).toBe(0);
  });

  it("annotates bars clipped by the cap with their numeric value", () => {
    const tall = row({ mseLog: 3.21, mseSe: 0.5, method: "ais-forward-none" });
    const geometry = layoutFigure({
      panels: [{ title: "p", rows: [row(), tall] }],
      cap: 1.0,
    });
    const [short, clipped] = geometry.panels[0].bars;
    expect(short.capped).toBe(false);
    expect(clipped.capped).toBe(true);
    expect(clipped.drawnLightTop).toBe(1.0);
    expect(clipped.annotation).toBe("3.21");
    expect(clipped.lightTop).toBeCloseTo(4.21, 12); // data kept unclipped
  });

  it("maps every aggregate row to exactly one bar, in order", () => {
    const rows = [row(), row({ method: "ais-forward-none" }),
                  row({ method: "lis-reverse-geometric" })];
    const geometry = layoutFigure({ panels: [{ title: "p", rows }] });
    expect(geometry.panels[0].bars.map((b) => b.row)).toEqual(rows);
    const xs = geometry.panels[0].bars.map((b) => b.x);
    expect([...xs].sort((a, b) => a - b)).toEqual(xs);
  });

  it("lays out panels side by side", () => {
    const geometry = layoutFigure({
      panels: [
        { title: "short runs", rows: [row()] },
        { title: "long runs", rows: [row({ mseLog: 0.2 })] },
      ],
    });
    expect(geometry.panels).toHaveLength(2);
    expect(geometry.panels[0].title).toBe("short runs");
    expect(geometry.panels[1].title).toBe("long runs");
    // a shared cap spans both panels
    expect(geometry.cap).toBeCloseTo(0.7, 12);
  });

  it("rejects an empty figure", () => {
    expect(() => layoutFigure({ panels: [{ title: "p", rows: [] }] }))
      .toThrow(/no aggregate rows/);
  });
});
