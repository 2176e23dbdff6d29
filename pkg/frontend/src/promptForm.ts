// Prompt-slot form state. The rendered template string always comes from
// the server; the form only decides when submission is allowed.

export interface PromptSlots {
  productType: string;
  color: string;
  place: string;
}

export function emptySlots(): PromptSlots {
  return { productType: '', color: '', place: '' };
}

export function setSlot(slots: PromptSlots, key: keyof PromptSlots, value: string): PromptSlots {
  return { ...slots, [key]: value };
}

export function missingSlots(slots: PromptSlots): (keyof PromptSlots)[] {
  const out: (keyof PromptSlots)[] = [];
  if (!slots.productType.trim()) out.push('productType');
  if (!slots.color.trim()) out.push('color');
  if (!slots.place.trim()) out.push('place');
  return out;
}

export function canSubmit(slots: PromptSlots): boolean {
  return missingSlots(slots).length === 0;
}

export function toWire(slots: PromptSlots) {
  return {
    product_type: slots.productType.trim(),
    color: slots.color.trim(),
    place: slots.place.trim(),
  };
}
