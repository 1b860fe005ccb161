// Canvas renderer: top-down scene with attribute styling and a belief-heat
// ring per object for the symbol picked in the heat selector.

import { heatValue, shadeFor } from "./heat.js";
import type { Snapshot, SceneObjectView } from "./types.js";

export interface Layout {
  cell: number;
  pad: number;
}

export const DEFAULT_LAYOUT: Layout = { cell: 56, pad: 40 };

export function canvasSize(grid: number, layout: Layout = DEFAULT_LAYOUT): number {
  return grid * layout.cell + 2 * layout.pad;
}

/** scene coordinates -> canvas pixels (y flipped: +y points at the viewer) */
export function toPixel(
  x: number, y: number, grid: number, layout: Layout = DEFAULT_LAYOUT,
): [number, number] {
  return [
    layout.pad + (x + 1) * layout.cell,
    layout.pad + (grid - y) * layout.cell,
  ];
}

export function objectAt(
  snapshot: Snapshot, px: number, py: number, layout: Layout = DEFAULT_LAYOUT,
): SceneObjectView | null {
  for (const obj of snapshot.scene.objects) {
    const [ox, oy] = toPixel(obj.x, obj.y, snapshot.scene.grid, layout);
    const radius = obj.shape === "basket" ? layout.cell * 0.48 : layout.cell * 0.3;
    if (Math.abs(px - ox) <= radius && Math.abs(py - oy) <= radius) return obj;
  }
  return null;
}

const CSS_COLOR: Record<string, string> = {
  red: "#d64545", green: "#3e9d4f", blue: "#3a66c9", cyan: "#3bb8c4",
  grey: "#8a8f98", magenta: "#c450b8", yellow: "#d8bb3a",
};

export function drawScene(
  ctx: CanvasRenderingContext2D,
  snapshot: Snapshot,
  heatSymbol: string | null,
  selected: Set<string>,
  correctionTarget: string | null,
  layout: Layout = DEFAULT_LAYOUT,
): void {
  const { grid } = snapshot.scene;
  const size = canvasSize(grid, layout);
  ctx.clearRect(0, 0, size, size);
  ctx.fillStyle = "#f4f1ea";
  ctx.fillRect(0, 0, size, size);

  for (const obj of snapshot.scene.objects) {
    const [x, y] = toPixel(obj.x, obj.y, grid, layout);
    const r = layout.cell * 0.3;
    if (heatSymbol) {
      ctx.beginPath();
      ctx.arc(x, y, r + 8, 0, Math.PI * 2);
      ctx.fillStyle = shadeFor(heatValue(snapshot.belief, heatSymbol, obj.id));
      ctx.fill();
    }
    ctx.fillStyle = CSS_COLOR[obj.color] ?? "#999";
    ctx.strokeStyle = "#2b2b2b";
    ctx.lineWidth = obj.held ? 4 : 1.5;
    ctx.beginPath();
    if (obj.shape === "cube") {
      ctx.rect(x - r, y - r, 2 * r, 2 * r);
    } else if (obj.shape === "rectangle") {
      ctx.rect(x - r * 1.3, y - r * 0.7, 2.6 * r, 1.4 * r);
    } else if (obj.shape === "basket") {
      ctx.rect(x - r * 1.6, y - r * 1.6, 3.2 * r, 3.2 * r);
    } else {
      ctx.arc(x, y, r, 0, Math.PI * 2);
    }
    ctx.fill();
    ctx.stroke();
    if (obj.texture === "dotted") {
      ctx.fillStyle = "#2b2b2b";
      for (const [dx, dy] of [[-0.4, -0.4], [0.4, -0.4], [0, 0], [-0.4, 0.4], [0.4, 0.4]]) {
        ctx.beginPath();
        ctx.arc(x + dx * r, y + dy * r, 2, 0, Math.PI * 2);
        ctx.fill();
      }
    } else if (obj.texture === "star") {
      ctx.fillStyle = "#2b2b2b";
      ctx.font = `${Math.round(r)}px sans-serif`;
      ctx.textAlign = "center";
      ctx.textBaseline = "middle";
      ctx.fillText("*", x, y);
    }
    if (selected.has(obj.id) || correctionTarget === obj.id) {
      ctx.strokeStyle = correctionTarget === obj.id ? "#c43d00" : "#0a63c2";
      ctx.lineWidth = 3;
      ctx.beginPath();
      ctx.arc(x, y, r + 5, 0, Math.PI * 2);
      ctx.stroke();
    }
    ctx.fillStyle = "#2b2b2b";
    ctx.font = "12px sans-serif";
    ctx.textAlign = "center";
    ctx.textBaseline = "top";
    ctx.fillText(obj.id, x, y + r + 8);
  }
}
