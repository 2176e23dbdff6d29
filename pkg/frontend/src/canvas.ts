// Canvas state and instant client-side paste preview. The local composite is
// shown while dragging; the authoritative server preview replaces it after
// every committed placement change.

import type { PlacementSpec } from './types.js';
import { scaledBox } from './placement.js';

export interface CanvasState {
  background: HTMLImageElement | null;
  object: HTMLImageElement | null;
  placement: PlacementSpec | null;
  maskOverlay: boolean;
  serverPreviewUrl: string | null;
}

export function initialCanvasState(): CanvasState {
  return {
    background: null,
    object: null,
    placement: null,
    maskOverlay: false,
    serverPreviewUrl: null,
  };
}

/** Draw the quick local approximation: background plus transformed object. */
export function drawLocalPreview(
  ctx: CanvasRenderingContext2D,
  state: CanvasState,
): void {
  const { background, object, placement } = state;
  ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height);
  if (background) {
    ctx.drawImage(background, 0, 0);
  } else if (placement) {
    ctx.fillStyle = '#ffffff';
    ctx.fillRect(0, 0, placement.canvas_size[0], placement.canvas_size[1]);
  }
  if (object && placement) {
    const box = scaledBox(placement, {
      width: object.naturalWidth,
      height: object.naturalHeight,
    });
    ctx.drawImage(object, box.x, box.y, box.w, box.h);
    ctx.strokeStyle = '#2d7ff9';
    ctx.lineWidth = 2;
    ctx.strokeRect(box.x + 0.5, box.y + 0.5, box.w - 1, box.h - 1);
    // resize handle, bottom-right
    ctx.fillStyle = '#2d7ff9';
    ctx.fillRect(box.x + box.w - 6, box.y + box.h - 6, 6, 6);
  }
}

export type HitZone = 'handle' | 'object' | 'outside';

export function hitTest(state: CanvasState, px: number, py: number): HitZone {
  if (!state.object || !state.placement) return 'outside';
  const box = scaledBox(state.placement, {
    width: state.object.naturalWidth,
    height: state.object.naturalHeight,
  });
  const inHandle =
    px >= box.x + box.w - 10 && px <= box.x + box.w + 4 &&
    py >= box.y + box.h - 10 && py <= box.y + box.h + 4;
  if (inHandle) return 'handle';
  const inBox = px >= box.x && px < box.x + box.w && py >= box.y && py < box.y + box.h;
  return inBox ? 'object' : 'outside';
}
