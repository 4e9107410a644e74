// Sky tint ramp: background color as a function of the sky node's
// sun_elevation, linearly interpolated between the documented rows.
// Scenes without a sky node use the lowest row.

import type { Color } from "./types.js";

export const SKY_RAMP: ReadonlyArray<readonly [number, Color]> = [
  [-10, [0.05, 0.06, 0.12]],
  [0, [0.35, 0.25, 0.3]],
  [15, [0.8, 0.55, 0.4]],
  [40, [0.55, 0.7, 0.9]],
  [90, [0.4, 0.65, 0.95]],
];

export const NO_SKY_ELEVATION = -10;
const FOG_TINT: Color = [0.85, 0.88, 0.92];
const WHITE: Color = [1, 1, 1];

export function mixColor(a: Color, b: Color, t: number): Color {
  // Two-product form so t=0 and t=1 reproduce the endpoints exactly.
  const u = Math.min(1, Math.max(0, t));
  return [
    a[0] * (1 - u) + b[0] * u,
    a[1] * (1 - u) + b[1] * u,
    a[2] * (1 - u) + b[2] * u,
  ];
}

export function skyTint(sunElevation: number): Color {
  const first = SKY_RAMP[0];
  const last = SKY_RAMP[SKY_RAMP.length - 1];
  if (sunElevation <= first[0]) return [...first[1]];
  if (sunElevation >= last[0]) return [...last[1]];
  for (let i = 1; i < SKY_RAMP.length; i += 1) {
    const [hi, hiColor] = SKY_RAMP[i];
    if (sunElevation > hi) continue;
    const [lo, loColor] = SKY_RAMP[i - 1];
    return mixColor(loColor, hiColor, (sunElevation - lo) / (hi - lo));
  }
  return [...last[1]];
}

export function fogMix(tint: Color, fogDensity: number): Color {
  return mixColor(tint, FOG_TINT, fogDensity);
}

export function whiten(color: Color, coverage: number): Color {
  return mixColor(color, WHITE, coverage);
}

export function toCss(color: Color): string {
  const channel = (v: number) => Math.round(Math.min(1, Math.max(0, v)) * 255);
  return `rgb(${channel(color[0])}, ${channel(color[1])}, ${channel(color[2])})`;
}
