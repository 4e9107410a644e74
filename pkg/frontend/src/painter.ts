// Canvas painter for the schematic 2.5D preview: oblique projection of
// the terrain square, the water plane, and one marker per scene instance.
// Layout feedback, not a faithful render; meshes exist in the OBJ export.

import type { Marker, PreviewModel } from "./preview.js";
import { toCss } from "./sky.js";
import type { Color } from "./types.js";

interface Projector {
  (x: number, y: number, z: number): [number, number];
}

function makeProjector(model: PreviewModel, width: number, height: number): Projector {
  const extent = Math.max(model.terrain?.size ?? 0, 20);
  const span = extent * 1.5;
  const k = Math.min(width, height) / span;
  const cx = width / 2;
  const cy = height * 0.58;
  return (x, y, z) => [
    cx + (x - y) * k * 0.5,
    cy + (x + y) * k * 0.25 - z * k * 0.6,
  ];
}

function shade(color: Color, factor: number): Color {
  return [color[0] * factor, color[1] * factor, color[2] * factor];
}

function fillQuad(
  ctx: CanvasRenderingContext2D,
  project: Projector,
  half: number,
  level: number,
  color: string,
): void {
  const corners: Array<[number, number]> = [
    [-half, -half],
    [half, -half],
    [half, half],
    [-half, half],
  ];
  ctx.beginPath();
  corners.forEach(([x, y], i) => {
    const [sx, sy] = project(x, y, level);
    if (i === 0) ctx.moveTo(sx, sy);
    else ctx.lineTo(sx, sy);
  });
  ctx.closePath();
  ctx.fillStyle = color;
  ctx.fill();
}

function drawTerrain(
  ctx: CanvasRenderingContext2D,
  project: Projector,
  model: PreviewModel,
): void {
  const terrain = model.terrain;
  if (!terrain || terrain.size <= 0) return;
  const half = terrain.size / 2;
  fillQuad(ctx, project, half, 0, toCss(terrain.color));
  ctx.strokeStyle = toCss(shade(terrain.color, 0.75));
  ctx.lineWidth = 1;
  const lines = 8;
  for (let i = 0; i <= lines; i += 1) {
    const t = -half + (terrain.size * i) / lines;
    ctx.beginPath();
    let [sx, sy] = project(t, -half, 0);
    ctx.moveTo(sx, sy);
    [sx, sy] = project(t, half, 0);
    ctx.lineTo(sx, sy);
    [sx, sy] = project(-half, t, 0);
    ctx.moveTo(sx, sy);
    [sx, sy] = project(half, t, 0);
    ctx.lineTo(sx, sy);
    ctx.stroke();
  }
}

function drawMarker(
  ctx: CanvasRenderingContext2D,
  project: Projector,
  marker: Marker,
  unit: number,
): void {
  const [sx, sy] = project(marker.x, marker.y, marker.z);
  ctx.fillStyle = toCss(marker.color);
  if (marker.shape === "cone") {
    const h = Math.max(4, marker.scale * unit * 0.6);
    const w = Math.max(3, h * 0.45);
    ctx.beginPath();
    ctx.moveTo(sx, sy - h);
    ctx.lineTo(sx - w / 2, sy);
    ctx.lineTo(sx + w / 2, sy);
    ctx.closePath();
    ctx.fill();
  } else if (marker.shape === "sphere") {
    ctx.beginPath();
    ctx.arc(sx, sy - 2, Math.max(1.5, marker.scale * unit * 0.12), 0, Math.PI * 2);
    ctx.fill();
  }
}

export function paintPreview(canvas: HTMLCanvasElement, model: PreviewModel | null): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  if (!model) {
    ctx.fillStyle = "#11121a";
    ctx.fillRect(0, 0, width, height);
    return;
  }

  ctx.fillStyle = toCss(model.skyColor);
  ctx.fillRect(0, 0, width, height);

  const project = makeProjector(model, width, height);
  drawTerrain(ctx, project, model);

  if (model.water && model.water.side > 0) {
    ctx.globalAlpha = 0.75;
    fillQuad(ctx, project, model.water.side / 2, model.water.level, "rgb(64, 115, 179)");
    ctx.globalAlpha = 1;
  }

  const unit = Math.min(width, height) / Math.max(model.terrain?.size ?? 20, 20);
  const ordered = [...model.markers]
    .filter((m) => m.shape !== "plane")
    .sort((a, b) => a.x + a.y - (b.x + b.y));
  for (const marker of ordered) {
    drawMarker(ctx, project, marker, unit);
  }
}
