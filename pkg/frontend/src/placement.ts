// Placement math shared by the canvas interactions. Clamping mirrors the
// server's rules so the UI can hint before the round trip, but the server's
// echo is always the value the app keeps.

import type { PlacementSpec } from './types.js';

export interface ObjectDims {
  width: number;
  height: number;
}

export function scaledBox(spec: PlacementSpec, obj: ObjectDims) {
  const w = Math.max(1, Math.round(obj.width * spec.scale));
  const h = Math.max(1, Math.round(obj.height * spec.scale));
  return { x: spec.x, y: spec.y, w, h };
}

export function isValidPlacement(spec: PlacementSpec, obj: ObjectDims): boolean {
  const { x, y, w, h } = scaledBox(spec, obj);
  const [cw, ch] = spec.canvas_size;
  return spec.scale > 0 && x >= 0 && y >= 0 && x + w <= cw && y + h <= ch;
}

/** Shrink scale to fit, then clamp position; same rule as the server. */
export function clampPlacement(spec: PlacementSpec, obj: ObjectDims): PlacementSpec {
  const [cw, ch] = spec.canvas_size;
  const scale = Math.min(Math.max(spec.scale, 1e-6), cw / obj.width, ch / obj.height);
  const w = Math.max(1, Math.round(obj.width * scale));
  const h = Math.max(1, Math.round(obj.height * scale));
  const x = Math.min(Math.max(spec.x, 0), cw - w);
  const y = Math.min(Math.max(spec.y, 0), ch - h);
  return { x, y, scale, canvas_size: spec.canvas_size };
}

/** Pointer drag in screen pixels; zoom maps screen pixels to canvas pixels. */
export function dragMove(
  spec: PlacementSpec,
  dxScreen: number,
  dyScreen: number,
  zoom = 1,
): PlacementSpec {
  return {
    ...spec,
    x: spec.x + Math.round(dxScreen / zoom),
    y: spec.y + Math.round(dyScreen / zoom),
  };
}

/** Resize-handle drag: the factor is newBoxWidth / oldBoxWidth. */
export function resizeByFactor(spec: PlacementSpec, factor: number): PlacementSpec {
  return { ...spec, scale: spec.scale * factor };
}

export function samePlacement(a: PlacementSpec, b: PlacementSpec): boolean {
  return (
    a.x === b.x &&
    a.y === b.y &&
    a.scale === b.scale &&
    a.canvas_size[0] === b.canvas_size[0] &&
    a.canvas_size[1] === b.canvas_size[1]
  );
}
