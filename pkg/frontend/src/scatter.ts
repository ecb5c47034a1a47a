/** View model for one dimension's value-vs-score scatter.
 *
 * The model splits cleanly into data space and pixel space. Everything in
 * data space — points, the top-k hull band, the current range — is carried
 * verbatim from the service payload (single source of truth; the UI does no
 * pruning math). Pixel space is derived purely for rendering, and the
 * mapping is invertible so brush gestures can be converted back into exact
 * data values.
 */

import { boundaryCrowding } from "./rules.js";
import type { HPValue, ScatterHull, ScatterPayload, ScatterPoint, ScatterRange } from "./types.js";

export type AxisKind = "linear" | "log" | "categorical";

export function axisKind(kind: string): AxisKind {
  if (kind === "log_uniform") return "log";
  if (kind === "categorical") return "categorical";
  return "linear";
}

export interface PlotBox {
  width: number;
  height: number;
  padLeft: number;
  padRight: number;
  padTop: number;
  padBottom: number;
}

export const DEFAULT_BOX: PlotBox = {
  width: 420,
  height: 220,
  padLeft: 52,
  padRight: 14,
  padTop: 10,
  padBottom: 30,
};

export interface PixelPoint {
  x: number;
  y: number;
  trialId: number;
  provenance: string;
}

export interface ScatterViewModel {
  payload: ScatterPayload;
  axis: AxisKind;
  /** Data-space overlays, exactly as the service sent them. */
  hullData: ScatterHull | null;
  currentData: ScatterRange | null;
  points: ScatterPoint[];
  crowding: "low" | "high" | null;
  box: PlotBox;
  /** Pixel-space projections for rendering. */
  px: PixelPoint[];
  hullRect: { x0: number; x1: number } | null;
  currentRect: { x0: number; x1: number } | null;
  scoreTicks: Array<{ y: number; label: string }>;
  valueTicks: Array<{ x: number; label: string }>;
  /** Invertible x-axis mapping for numeric dimensions. */
  toPixelX(value: number): number;
  fromPixelX(x: number): number;
  toPixelY(score: number): number;
  categoryAt(x: number): string | null;
}

function span(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!Number.isFinite(lo)) return [0, 1];
  if (lo === hi) return [lo - 0.5, hi + 0.5];
  return [lo, hi];
}

export function buildScatterModel(payload: ScatterPayload, box: PlotBox = DEFAULT_BOX): ScatterViewModel {
  const dim = payload.dimension;
  const axis = axisKind(dim.kind);
  const plotLeft = box.padLeft;
  const plotRight = box.width - box.padRight;
  const plotTop = box.padTop;
  const plotBottom = box.height - box.padBottom;
  const plotW = plotRight - plotLeft;
  const plotH = plotBottom - plotTop;

  const numericPoints = payload.points.filter(
    (p): p is ScatterPoint & { value: number } => typeof p.value === "number" && Number.isFinite(p.score),
  );
  const finitePoints = payload.points.filter((p) => p.value !== null && Number.isFinite(p.score));

  // x domain: the dimension's own bounds; fall back to the point span when
  // the payload carries no bounds (categorical dims have none).
  const categories = dim.categories ?? [];
  let xLo: number;
  let xHi: number;
  if (axis === "categorical") {
    [xLo, xHi] = [0, Math.max(1, categories.length)];
  } else if (dim.low !== null && dim.high !== null && dim.high > dim.low) {
    [xLo, xHi] = [dim.low, dim.high];
  } else {
    [xLo, xHi] = span(numericPoints.map((p) => p.value));
  }

  const tx = axis === "log" ? Math.log : (v: number) => v;
  const txInv = axis === "log" ? Math.exp : (v: number) => v;
  const [uLo, uHi] = [tx(xLo), tx(xHi)];
  const uSpan = uHi - uLo || 1;

  const toPixelX = (value: number): number => plotLeft + ((tx(value) - uLo) / uSpan) * plotW;
  const fromPixelX = (x: number): number => txInv(uLo + ((x - plotLeft) / plotW) * uSpan);

  const categoryIndex = new Map(categories.map((c, i) => [c, i]));
  const categoryX = (c: string): number => {
    const i = categoryIndex.get(c) ?? 0;
    return plotLeft + ((i + 0.5) / Math.max(1, categories.length)) * plotW;
  };
  const categoryAt = (x: number): string | null => {
    if (axis !== "categorical" || categories.length === 0) return null;
    const slot = Math.floor(((x - plotLeft) / plotW) * categories.length);
    return categories[Math.min(categories.length - 1, Math.max(0, slot))] ?? null;
  };

  const [sLo, sHi] = span(finitePoints.map((p) => p.score));
  const sSpan = sHi - sLo || 1;
  const toPixelY = (score: number): number => plotBottom - ((score - sLo) / sSpan) * plotH;

  const px: PixelPoint[] = finitePoints.map((p) => ({
    x: typeof p.value === "number" ? toPixelX(p.value) : categoryX(p.value as string),
    y: toPixelY(p.score),
    trialId: p.trial_id,
    provenance: p.provenance,
  }));

  const numericBand = (range: { low: number | null; high: number | null }): { x0: number; x1: number } | null => {
    if (range.low === null || range.high === null) return null;
    return { x0: toPixelX(range.low), x1: toPixelX(range.high) };
  };

  let hullRect: { x0: number; x1: number } | null = null;
  if (payload.hull && "low" in payload.hull) hullRect = numericBand(payload.hull);

  let currentRect: { x0: number; x1: number } | null = null;
  if (payload.current && axis !== "categorical") currentRect = numericBand(payload.current);

  const scoreTicks = [sLo, (sLo + sHi) / 2, sHi].map((s) => ({
    y: toPixelY(s),
    label: s.toPrecision(3),
  }));

  let valueTicks: Array<{ x: number; label: string }>;
  if (axis === "categorical") {
    valueTicks = categories.map((c) => ({ x: categoryX(c), label: c }));
  } else if (axis === "log") {
    valueTicks = [];
    for (let e = Math.ceil(Math.log10(xLo)); Math.pow(10, e) <= xHi * (1 + 1e-12); e++) {
      const v = Math.pow(10, e);
      if (v >= xLo) valueTicks.push({ x: toPixelX(v), label: `1e${e}` });
    }
    if (valueTicks.length < 2) {
      valueTicks = [xLo, xHi].map((v) => ({ x: toPixelX(v), label: v.toExponential(1) }));
    }
  } else {
    valueTicks = [xLo, (xLo + xHi) / 2, xHi].map((v) => ({
      x: toPixelX(v),
      label: Number.isInteger(v) ? String(v) : v.toPrecision(3),
    }));
  }

  return {
    payload,
    axis,
    hullData: payload.hull,
    currentData: payload.current,
    points: payload.points,
    crowding: boundaryCrowding(dim, payload.hull),
    box,
    px,
    hullRect,
    currentRect,
    scoreTicks,
    valueTicks,
    toPixelX,
    fromPixelX,
    toPixelY,
    categoryAt,
  };
}

/** Convert a pixel brush extent into exact data values for the draft. */
export function brushToRange(
  model: ScatterViewModel,
  x0: number,
  x1: number,
): { low: number; high: number } | null {
  if (model.axis === "categorical") return null;
  const [a, b] = x0 <= x1 ? [x0, x1] : [x1, x0];
  const low = model.fromPixelX(a);
  const high = model.fromPixelX(b);
  return low <= high ? { low, high } : { low: high, high: low };
}

export function isCategoricalValue(value: HPValue | null): value is string {
  return typeof value === "string";
}
