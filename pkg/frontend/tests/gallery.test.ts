import { describe, expect, it } from 'vitest';

import {
  canContinue,
  emptyGallery,
  galleryFromRefs,
  selectVariant,
  selectedRef,
} from '../src/gallery';

describe('variant gallery', () => {
  it('continue is unreachable without a selection when k > 1', () => {
    const gallery = galleryFromRefs('compose', ['a', 'b', 'c']);
    expect(gallery.selected).toBeNull();
    expect(canContinue(gallery)).toBe(false);
  });

  it('selection enables continue', () => {
    const gallery = selectVariant(galleryFromRefs('compose', ['a', 'b', 'c']), 2);
    expect(canContinue(gallery)).toBe(true);
    expect(selectedRef(gallery)).toBe('c');
  });

  it('k = 1 auto-selects and can continue immediately', () => {
    const gallery = galleryFromRefs('refine', ['only']);
    expect(gallery.selected).toBe(0);
    expect(canContinue(gallery)).toBe(true);
  });

  it('empty gallery can never continue', () => {
    expect(canContinue(emptyGallery('compose'))).toBe(false);
  });

  it('out-of-range selection throws', () => {
    const gallery = galleryFromRefs('compose', ['a', 'b']);
    expect(() => selectVariant(gallery, 2)).toThrow(RangeError);
    expect(() => selectVariant(gallery, -1)).toThrow(RangeError);
  });

  it('server-provided selection is preserved on restore', () => {
    const gallery = galleryFromRefs('compose', ['a', 'b', 'c'], 1);
    expect(gallery.selected).toBe(1);
    expect(canContinue(gallery)).toBe(true);
  });
});
