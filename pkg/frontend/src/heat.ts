// Belief-heat helpers: per-object shading for a chosen symbol and diffs
// between consecutive snapshots so only changed cells restyle.

import type { BeliefView } from "./types.js";

/** grounded weight of symbol(object), 0.5 when unknown */
export function heatValue(belief: BeliefView, symbol: string, object: string): number {
  const key = `${symbol}(${object})`;
  const v = belief.grounded_weights[key];
  return v === undefined ? 0.5 : v;
}

/** map weight in [0,1] to a CSS color: blue (false) .. grey .. orange (true) */
export function shadeFor(weight: number): string {
  const w = Math.max(0, Math.min(1, weight));
  const toward = w >= 0.5 ? (w - 0.5) * 2 : (0.5 - w) * 2;
  const base = 200;
  if (w >= 0.5) {
    const r = Math.round(base + (255 - base) * toward);
    const g = Math.round(base - 60 * toward);
    const b = Math.round(base - 160 * toward);
    return `rgb(${r},${g},${b})`;
  }
  const r = Math.round(base - 120 * toward);
  const g = Math.round(base - 60 * toward);
  const b = Math.round(base + (255 - base) * toward);
  return `rgb(${r},${g},${b})`;
}

/** atoms whose grounded weight changed between snapshots */
export function changedWeights(
  before: BeliefView | null,
  after: BeliefView,
): string[] {
  if (before === null) return Object.keys(after.grounded_weights);
  const out: string[] = [];
  const keys = new Set([
    ...Object.keys(before.grounded_weights),
    ...Object.keys(after.grounded_weights),
  ]);
  for (const key of keys) {
    if (before.grounded_weights[key] !== after.grounded_weights[key]) {
      out.push(key);
    }
  }
  return out.sort();
}
