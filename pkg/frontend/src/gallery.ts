// Variant gallery state: which stage, which thumbnails, what is picked.
// "Continue" must stay unreachable until a selection exists whenever k > 1.

import type { StageName } from './types.js';

export interface VariantGalleryState {
  stage: StageName;
  refs: string[];
  selected: number | null;
}

export function emptyGallery(stage: StageName): VariantGalleryState {
  return { stage, refs: [], selected: null };
}

export function galleryFromRefs(
  stage: StageName,
  refs: string[],
  selected: number | null = null,
): VariantGalleryState {
  // k = 1 auto-selects, matching the server's behavior
  if (refs.length === 1 && selected === null) {
    selected = 0;
  }
  return { stage, refs: [...refs], selected };
}

export function selectVariant(
  state: VariantGalleryState,
  index: number,
): VariantGalleryState {
  if (index < 0 || index >= state.refs.length) {
    throw new RangeError(`variant index ${index} out of range [0, ${state.refs.length})`);
  }
  return { ...state, selected: index };
}

export function canContinue(state: VariantGalleryState): boolean {
  if (state.refs.length === 0) return false;
  if (state.refs.length === 1) return true;
  return state.selected !== null;
}

export function selectedRef(state: VariantGalleryState): string | null {
  return state.selected === null ? null : state.refs[state.selected];
}
