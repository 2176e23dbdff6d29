// Single-page client: upload assets, drag the object into place, fill the
// prompt slots, run stages with k variants, pick at each pause, download the
// result. The session id lives in the URL hash so a reload restores the
// whole flow from the server.

import { ApiClient, ApiError } from './api.js';
import { drawLocalPreview, hitTest, initialCanvasState } from './canvas.js';
import type { CanvasState } from './canvas.js';
import { canContinue, galleryFromRefs, selectVariant } from './gallery.js';
import type { VariantGalleryState } from './gallery.js';
import { clampPlacement, dragMove, isValidPlacement, resizeByFactor } from './placement.js';
import { pollJob } from './polling.js';
import { canSubmit, emptySlots, setSlot, toWire } from './promptForm.js';
import type { PromptSlots } from './promptForm.js';
import type { PlacementSpec, SessionView, StageName } from './types.js';

const api = new ApiClient('');

interface AppState {
  session: SessionView | null;
  canvas: CanvasState;
  slots: PromptSlots;
  gallery: VariantGalleryState | null;
  busy: string | null;
  warning: string | null;
  showIntermediate: boolean;
}

const state: AppState = {
  session: null,
  canvas: initialCanvasState(),
  slots: emptySlots(),
  gallery: null,
  busy: null,
  warning: null,
  showIntermediate: false,
};

function $(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
}

function canvasEl(): HTMLCanvasElement {
  return $('canvas') as HTMLCanvasElement;
}

async function loadImageFromBytes(bytes: ArrayBuffer): Promise<HTMLImageElement> {
  const blob = new Blob([bytes], { type: 'image/png' });
  const url = URL.createObjectURL(blob);
  try {
    const img = new Image();
    await new Promise<void>((resolve, reject) => {
      img.onload = () => resolve();
      img.onerror = () => reject(new Error('image decode failed'));
      img.src = url;
    });
    return img;
  } finally {
    // object URL stays alive while the element uses it; revoke on next tick
    setTimeout(() => URL.revokeObjectURL(url), 10_000);
  }
}

// --- session lifecycle -------------------------------------------------------

async function ensureSession(): Promise<SessionView> {
  if (state.session) return state.session;
  const fromHash = window.location.hash.replace(/^#/, '');
  if (fromHash) {
    try {
      state.session = await api.getSession(fromHash);
      await restoreFromSession();
      return state.session;
    } catch {
      window.location.hash = '';
    }
  }
  state.session = await api.createSession({});
  window.location.hash = state.session.id;
  return state.session;
}

async function refreshSession(): Promise<SessionView> {
  if (!state.session) return ensureSession();
  state.session = await api.getSession(state.session.id);
  return state.session;
}

/** Rebuild every panel from the server's view of the session. */
async function restoreFromSession(): Promise<void> {
  const session = state.session;
  if (!session) return;
  if (session.assets.object) {
    state.canvas.object = await loadImageFromBytes(
      await api.fetchAsset(session.id, session.assets.object),
    );
  }
  if (session.assets.background) {
    state.canvas.background = await loadImageFromBytes(
      await api.fetchAsset(session.id, session.assets.background),
    );
  }
  if (session.placement) {
    state.canvas.placement = session.placement;
  }
  const ps = session.prompt_spec;
  if (ps && ps.product_type) {
    state.slots = {
      productType: ps.product_type ?? '',
      color: ps.color ?? '',
      place: ps.place ?? '',
    };
  }
  if (session.pending_stage && session.variants[session.pending_stage]) {
    state.gallery = galleryFromRefs(
      session.pending_stage,
      session.variants[session.pending_stage] ?? [],
      session.selections[session.pending_stage] ?? null,
    );
  }
  render();
}

// --- placement ---------------------------------------------------------------

async function commitPlacement(spec: PlacementSpec): Promise<void> {
  const session = await ensureSession();
  try {
    const response = await api.putPlacement(session.id, spec);
    state.canvas.placement = response.placement;
    state.canvas.serverPreviewUrl = api.assetUrl(session.id, response.preview_ref);
    state.warning = null;
  } catch (err) {
    if (err instanceof ApiError) {
      const clamped = err.clampedPlacement();
      if (clamped) {
        state.warning = 'placement left the canvas; snapped back to the nearest fit';
        const response = await api.putPlacement(session.id, clamped);
        state.canvas.placement = response.placement;
        state.canvas.serverPreviewUrl = api.assetUrl(session.id, response.preview_ref);
      } else {
        state.warning = String(err.detail ?? err.message);
      }
    } else {
      throw err;
    }
  }
  await refreshSession();
  render();
}

function wireCanvasInteractions(): void {
  const canvas = canvasEl();
  let drag: { mode: 'move' | 'resize'; lastX: number; lastY: number; startW: number } | null =
    null;

  canvas.addEventListener('pointerdown', (ev) => {
    if (!state.canvas.placement || !state.canvas.object) return;
    const rect = canvas.getBoundingClientRect();
    const px = ev.clientX - rect.left;
    const py = ev.clientY - rect.top;
    const zone = hitTest(state.canvas, px, py);
    if (zone === 'outside') return;
    const obj = state.canvas.object;
    drag = {
      mode: zone === 'handle' ? 'resize' : 'move',
      lastX: ev.clientX,
      lastY: ev.clientY,
      startW: Math.round(obj.naturalWidth * state.canvas.placement.scale),
    };
    canvas.setPointerCapture(ev.pointerId);
  });

  canvas.addEventListener('pointermove', (ev) => {
    if (!drag || !state.canvas.placement || !state.canvas.object) return;
    const spec = state.canvas.placement;
    if (drag.mode === 'move') {
      state.canvas.placement = dragMove(spec, ev.clientX - drag.lastX, ev.clientY - drag.lastY);
      drag.lastX = ev.clientX;
      drag.lastY = ev.clientY;
    } else {
      const currentW = Math.round(state.canvas.object.naturalWidth * spec.scale);
      const newW = Math.max(4, currentW + (ev.clientX - drag.lastX));
      state.canvas.placement = resizeByFactor(spec, newW / currentW);
      drag.lastX = ev.clientX;
      drag.lastY = ev.clientY;
    }
    renderCanvas();
    renderPlacementReadout();
  });

  canvas.addEventListener('pointerup', async (ev) => {
    if (!drag || !state.canvas.placement || !state.canvas.object) return;
    drag = null;
    canvas.releasePointerCapture(ev.pointerId);
    const obj = {
      width: state.canvas.object.naturalWidth,
      height: state.canvas.object.naturalHeight,
    };
    let spec = state.canvas.placement;
    if (!isValidPlacement(spec, obj)) {
      spec = clampPlacement(spec, obj);
      state.warning = 'placement left the canvas; snapped back to the nearest fit';
    }
    await commitPlacement(spec);
  });
}

// --- stages ------------------------------------------------------------------

async function runStage(stage: StageName): Promise<void> {
  const session = await ensureSession();
  const k = Number(($('kSelect') as HTMLSelectElement).value);
  state.busy = `${stage} running...`;
  state.gallery = null;
  render();
  try {
    const ticket = await api.runStage(session.id, stage, k);
    await pollJob((id) => api.getJob(id), ticket.id, {
      onProgress: (t) => {
        state.busy = `${stage}: ${(t.progress * 100).toFixed(0)}%`;
        renderStatus();
      },
    });
    await refreshSession();
    const variants = await api.listVariants(session.id, stage);
    state.gallery = galleryFromRefs(stage, variants.refs, variants.selected);
  } catch (err) {
    state.warning = err instanceof Error ? err.message : String(err);
  } finally {
    state.busy = null;
  }
  render();
}

async function confirmSelection(): Promise<void> {
  const session = state.session;
  const gallery = state.gallery;
  if (!session || !gallery || !canContinue(gallery)) return;
  if (gallery.refs.length > 1 && gallery.selected !== null) {
    state.session = await api.selectVariant(session.id, gallery.stage, gallery.selected);
  }
  state.gallery = null;
  await refreshSession();
  render();
}

// --- rendering ---------------------------------------------------------------

function renderCanvas(): void {
  const canvas = canvasEl();
  const placement = state.canvas.placement;
  const size: [number, number] = placement
    ? placement.canvas_size
    : state.session?.canvas_size ?? [512, 512];
  if (canvas.width !== size[0] || canvas.height !== size[1]) {
    canvas.width = size[0];
    canvas.height = size[1];
  }
  const ctx = canvas.getContext('2d');
  if (ctx) drawLocalPreview(ctx, state.canvas);
}

function renderPlacementReadout(): void {
  const spec = state.canvas.placement;
  const readout = $('placementReadout');
  if (!spec) {
    readout.textContent = 'no placement yet';
    return;
  }
  readout.textContent = `x=${spec.x} y=${spec.y} scale=${spec.scale.toFixed(3)}`;
  ($('placeX') as HTMLInputElement).value = String(spec.x);
  ($('placeY') as HTMLInputElement).value = String(spec.y);
  ($('placeScale') as HTMLInputElement).value = String(spec.scale);
}

function renderStatus(): void {
  $('status').textContent = state.busy ?? (state.session ? `stage: ${state.session.stage}` : '');
  const warn = $('warning');
  warn.textContent = state.warning ?? '';
  warn.style.display = state.warning ? 'block' : 'none';
}

function renderGallery(): void {
  const container = $('gallery');
  container.innerHTML = '';
  const session = state.session;
  const gallery = state.gallery;
  const continueBtn = $('continueBtn') as HTMLButtonElement;
  if (!session || !gallery) {
    continueBtn.disabled = true;
    return;
  }
  gallery.refs.forEach((ref, i) => {
    const img = document.createElement('img');
    img.src = api.assetUrl(session.id, ref);
    img.className = 'thumb' + (gallery.selected === i ? ' selected' : '');
    img.title = `variant ${i}`;
    img.onclick = () => {
      state.gallery = selectVariant(gallery, i);
      renderGallery();
    };
    container.appendChild(img);
  });
  continueBtn.disabled = !canContinue(gallery);
}

function renderStageButtons(): void {
  const session = state.session;
  const stage = session?.stage ?? 'created';
  const pending = session?.pending_stage ?? null;
  ($('colorizeBtn') as HTMLButtonElement).disabled =
    pending !== null || stage !== 'placed';
  ($('composeBtn') as HTMLButtonElement).disabled =
    pending !== null || !(stage === 'placed' || stage === 'colorized');
  ($('refineBtn') as HTMLButtonElement).disabled =
    pending !== null || stage !== 'composed';
}

async function renderResult(): Promise<void> {
  const session = state.session;
  const panel = $('resultPanel');
  if (!session || session.stage !== 'done') {
    panel.style.display = 'none';
    return;
  }
  panel.style.display = 'block';
  try {
    const result = await api.getResult(session.id);
    const composeRefs = session.variants.compose ?? [];
    const composeIdx = session.selections.compose ?? 0;
    const intermediateRef = composeRefs[composeIdx];
    const shown =
      state.showIntermediate && intermediateRef ? intermediateRef : result.image_ref;
    ($('resultImage') as HTMLImageElement).src = api.assetUrl(session.id, shown);
    ($('resultLabel') as HTMLElement).textContent = state.showIntermediate
      ? 'before refinement (intermediate composition)'
      : 'after refinement (final)';
    ($('downloadLink') as HTMLAnchorElement).href = api.assetUrl(session.id, result.image_ref);
    $('manifestDump').textContent = JSON.stringify(result.manifest, null, 2);
  } catch {
    panel.style.display = 'none';
  }
}

function render(): void {
  renderCanvas();
  renderPlacementReadout();
  renderStatus();
  renderGallery();
  renderStageButtons();
  void renderResult();
  const promptBtn = $('promptBtn') as HTMLButtonElement;
  promptBtn.disabled = !canSubmit(state.slots);
}

// --- wiring ------------------------------------------------------------------

function wireControls(): void {
  ($('objectInput') as HTMLInputElement).addEventListener('change', async (ev) => {
    const file = (ev.target as HTMLInputElement).files?.[0];
    if (!file) return;
    const session = await ensureSession();
    const bytes = await file.arrayBuffer();
    await api.uploadAsset(session.id, 'object', bytes);
    state.canvas.object = await loadImageFromBytes(bytes);
    await refreshSession();
    render();
  });

  ($('backgroundInput') as HTMLInputElement).addEventListener('change', async (ev) => {
    const file = (ev.target as HTMLInputElement).files?.[0];
    if (!file) return;
    const session = await ensureSession();
    const bytes = await file.arrayBuffer();
    const up = await api.uploadAsset(session.id, 'background', bytes);
    state.canvas.background = await loadImageFromBytes(bytes);
    if (up.canvas_size && state.canvas.placement) {
      state.canvas.placement.canvas_size = up.canvas_size;
    }
    await refreshSession();
    render();
  });

  $('applyPlacement').addEventListener('click', async () => {
    const session = await ensureSession();
    const canvasSize =
      state.canvas.placement?.canvas_size ?? session.canvas_size ?? [512, 512];
    await commitPlacement({
      x: Number(($('placeX') as HTMLInputElement).value),
      y: Number(($('placeY') as HTMLInputElement).value),
      scale: Number(($('placeScale') as HTMLInputElement).value),
      canvas_size: canvasSize as [number, number],
    });
  });

  for (const key of ['productType', 'color', 'place'] as const) {
    $(`slot_${key}`).addEventListener('input', (ev) => {
      state.slots = setSlot(state.slots, key, (ev.target as HTMLInputElement).value);
      ($('promptBtn') as HTMLButtonElement).disabled = !canSubmit(state.slots);
    });
  }

  $('promptBtn').addEventListener('click', async () => {
    const session = await ensureSession();
    const response = await api.putPrompt(session.id, toWire(state.slots));
    $('promptPreview').textContent = response.prompt;
    await refreshSession();
    render();
  });

  $('colorizeBtn').addEventListener('click', () => void runStage('colorize'));
  $('composeBtn').addEventListener('click', () => void runStage('compose'));
  $('refineBtn').addEventListener('click', () => void runStage('refine'));
  $('continueBtn').addEventListener('click', () => void confirmSelection());

  $('toggleRefined').addEventListener('click', () => {
    state.showIntermediate = !state.showIntermediate;
    void renderResult();
  });

  $('maskToggle').addEventListener('change', (ev) => {
    state.canvas.maskOverlay = (ev.target as HTMLInputElement).checked;
    renderCanvas();
  });

  wireCanvasInteractions();
}

window.addEventListener('DOMContentLoaded', () => {
  wireControls();
  void ensureSession().then(() => restoreFromSession());
});
