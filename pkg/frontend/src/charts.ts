/**
 * Pure chart-geometry helpers. Nothing here touches the DOM: functions map
 * API payloads to positioned marks so both the renderer and the tests can
 * consume them. The UI never recomputes statistics — every number plotted
 * comes from the server payloads unchanged.
 */

import { LollipopPoint, MapRecord } from "./types.js";

export const SIGNIFICANT_COLOR = "#2166ac"; // blue: p <= 0.05
export const INSIGNIFICANT_COLOR = "#9a9a9a"; // grey otherwise
export const IN_SEASON_COLOR = "#e6b800"; // yellow: overlaps special season
export const OUT_SEASON_COLOR = "#4a78a8";
export const UNDEFINED_FILL = "url(#hatch)"; // hatched cells

export const SIGNIFICANCE_LEVEL = 0.05;

export function significanceColor(p: number | null, defined = true): string {
  if (!defined || p === null) {
    return UNDEFINED_FILL;
  }
  return p <= SIGNIFICANCE_LEVEL ? SIGNIFICANT_COLOR : INSIGNIFICANT_COLOR;
}

export type Scale = (value: number) => number;

export function linearScale(
  domain: [number, number],
  range: [number, number],
): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0;
  if (span === 0) {
    return () => (r0 + r1) / 2;
  }
  return (value) => r0 + ((value - d0) / span) * (r1 - r0);
}

export function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  return lo <= hi ? [lo, hi] : [0, 1];
}

// ---- episodes tab ---------------------------------------------------------

export type LollipopMark = {
  id: number;
  x: number;
  stemY0: number;
  stemY1: number;
  headY: number;
  color: string;
  duration: number;
};

/**
 * One stem per episode, positioned by start date order, head at the mean
 * intensity; in-season episodes get the highlight colour.
 */
export function lollipopMarks(
  points: LollipopPoint[],
  width: number,
  height: number,
): LollipopMark[] {
  const usable = points.filter((pt) => pt.intensity_mean !== null);
  const ys = usable.map((pt) => pt.intensity_mean as number);
  const yDomain = extent([0, ...ys]);
  const y = linearScale(yDomain, [height, 0]);
  const step = usable.length > 0 ? width / usable.length : width;
  return usable.map((pt, i) => ({
    id: pt.id,
    x: step * (i + 0.5),
    stemY0: y(0),
    stemY1: y(pt.intensity_mean as number),
    headY: y(pt.intensity_mean as number),
    color: pt.in_season ? IN_SEASON_COLOR : OUT_SEASON_COLOR,
    duration: pt.duration,
  }));
}

// ---- calibration tab ------------------------------------------------------

export type CurvePoint = {
  a: number;
  r: number | null;
  p: number | null;
  defined: boolean;
  color: string;
};

export type StageOneCurve = {
  m: number;
  points: CurvePoint[];
};

/** Stage 1: one r-vs-a curve per memory length, significance-coloured. */
export function stageOneCurves(records: MapRecord[]): StageOneCurve[] {
  const byM = new Map<number, MapRecord[]>();
  for (const rec of records) {
    const group = byM.get(rec.m) ?? [];
    group.push(rec);
    byM.set(rec.m, group);
  }
  return [...byM.keys()].sort((x, y) => x - y).map((m) => ({
    m,
    points: (byM.get(m) as MapRecord[])
      .slice()
      .sort((x, y) => x.a - y.a)
      .map((rec) => ({
        a: rec.a,
        r: rec.r,
        p: rec.p,
        defined: rec.defined,
        color: significanceColor(rec.p, rec.defined),
      })),
  }));
}

export type MapCell = {
  c: number;
  d: number;
  r: number | null;
  p: number | null;
  defined: boolean;
  reason: string;
  fill: string;
};

export type MapPanel = {
  m: number;
  b: number;
  cells: MapCell[];
};

/**
 * Stages 2/3 as small multiples: one panel per (m, b) pair, c on the x-axis
 * (stage 3 stacks one row per d inside the panel). Panels are ordered by
 * (m, b) so the grid reads like the correlation-map figures.
 */
export function mapPanels(records: MapRecord[]): MapPanel[] {
  const panels = new Map<string, MapPanel>();
  for (const rec of records) {
    const key = `${rec.m}|${rec.b}`;
    let panel = panels.get(key);
    if (!panel) {
      panel = { m: rec.m, b: rec.b, cells: [] };
      panels.set(key, panel);
    }
    panel.cells.push({
      c: rec.c,
      d: rec.d,
      r: rec.r,
      p: rec.p,
      defined: rec.defined,
      reason: rec.reason,
      fill: rec.defined ? significanceColor(rec.p) : UNDEFINED_FILL,
    });
  }
  const out = [...panels.values()];
  for (const panel of out) {
    panel.cells.sort((x, y) => x.d - y.d || x.c - y.c);
  }
  out.sort((x, y) => x.m - y.m || x.b - y.b);
  return out;
}

export type CellKey = Pick<MapRecord, "m" | "a" | "b" | "c" | "d">;

function axisValues(records: MapRecord[], axis: keyof CellKey): number[] {
  return [...new Set(records.map((rec) => rec[axis]))].sort((x, y) => x - y);
}

/**
 * Grid neighbours of a cell along every varying axis — the hover "what-if"
 * view backing the stability screen (same sign, |r| within 50%).
 */
export function neighborCells(records: MapRecord[], center: CellKey): MapRecord[] {
  const axes: (keyof CellKey)[] = ["m", "a", "b", "c", "d"];
  const byKey = new Map(
    records.map((rec) => [`${rec.m}|${rec.a}|${rec.b}|${rec.c}|${rec.d}`, rec]),
  );
  const out: MapRecord[] = [];
  for (const axis of axes) {
    const values = axisValues(records, axis);
    if (values.length < 2) {
      continue;
    }
    const pos = values.indexOf(center[axis]);
    for (const offset of [-1, 1]) {
      const idx = pos + offset;
      if (pos === -1 || idx < 0 || idx >= values.length) {
        continue;
      }
      const probe = { ...center, [axis]: values[idx] };
      const hit = byKey.get(
        `${probe.m}|${probe.a}|${probe.b}|${probe.c}|${probe.d}`,
      );
      if (hit) {
        out.push(hit);
      }
    }
  }
  return out;
}

/** The visual maximum: the defined cell with the largest |r|. */
export function topCell(records: MapRecord[]): MapRecord | null {
  let best: MapRecord | null = null;
  for (const rec of records) {
    if (!rec.defined || rec.r === null) {
      continue;
    }
    if (best === null || Math.abs(rec.r) > Math.abs(best.r as number)) {
      best = rec;
    }
  }
  return best;
}

// ---- application tab ------------------------------------------------------

export type RegressionLine = {
  x1: number;
  y1: number;
  x2: number;
  y2: number;
  color: string;
};

/**
 * The regression line from the server's slope/intercept, clipped to the
 * scatter's x-extent and coloured by significance.
 */
export function regressionLine(
  scatter: { x: number; y: number }[],
  slope: number,
  intercept: number,
  p: number,
): RegressionLine {
  const [x1, x2] = extent(scatter.map((pt) => pt.x));
  return {
    x1,
    y1: slope * x1 + intercept,
    x2,
    y2: slope * x2 + intercept,
    color: significanceColor(p),
  };
}

export function polylinePath(xs: number[], ys: number[]): string {
  if (xs.length === 0) {
    return "";
  }
  const parts = xs.map(
    (x, i) => `${i === 0 ? "M" : "L"}${x.toFixed(2)},${ys[i].toFixed(2)}`,
  );
  return parts.join(" ");
}
