import { describe, expect, it } from 'vitest';

import { canSubmit, emptySlots, missingSlots, setSlot, toWire } from '../src/promptForm';

describe('prompt form', () => {
  it('three filled slots allow submission', () => {
    let slots = emptySlots();
    slots = setSlot(slots, 'productType', 'bicycle');
    slots = setSlot(slots, 'color', 'red');
    slots = setSlot(slots, 'place', 'a city street');
    expect(canSubmit(slots)).toBe(true);
    expect(toWire(slots)).toEqual({
      product_type: 'bicycle',
      color: 'red',
      place: 'a city street',
    });
  });

  it('clearing a slot disables submission', () => {
    let slots = setSlot(setSlot(setSlot(emptySlots(), 'productType', 'bike'), 'color', 'red'), 'place', 'street');
    expect(canSubmit(slots)).toBe(true);
    slots = setSlot(slots, 'color', '   ');
    expect(canSubmit(slots)).toBe(false);
    expect(missingSlots(slots)).toEqual(['color']);
  });

  it('reports every missing slot', () => {
    expect(missingSlots(emptySlots())).toEqual(['productType', 'color', 'place']);
  });
});
